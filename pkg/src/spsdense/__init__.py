"""Floors of rational powers, residue blocks, discrepancy and totient means."""

from .numeric import (
    BudgetExceeded,
    DomainError,
    Enclosure,
    ExponentC,
    FloorPowerResult,
    PrecisionExhausted,
    TaylorCoefficients,
    WindowStatus,
    floor_pow,
    frac_scaled,
    gamma_coeff,
    taylor_expand,
)

__version__ = "0.1.0"
