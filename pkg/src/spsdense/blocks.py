"""Residues of floor(n**c) mod R and arithmetic-progression blocks.

A block witness for ``(c, R, H, r)`` is an ``m >= 1`` with
``floor((m+h)**c) == r + h (mod R)`` for ``h = 1..H``.  Searches scan ``m``
upward and report the smallest witness; "not found" only ever means "not in
the scanned range".
"""

from __future__ import annotations

import itertools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .numeric import (
    DomainError,
    ExponentC,
    WindowStatus,
    floor_pow,
    floor_power_int,
    floor_scaled,
    frac_below,
    frac_in_window,
    gamma_coeff,
)

DEFAULT_SEARCH_LIMIT = 10**7
_CHUNK = 1 << 16


@dataclass(frozen=True)
class BlockQuery:
    c: ExponentC
    R: int
    H: int
    r: int
    search_limit: int = DEFAULT_SEARCH_LIMIT

    def __post_init__(self):
        object.__setattr__(self, "c", ExponentC.of(self.c))
        if self.R < 1:
            raise DomainError("modulus must be >= 1")
        if self.H < 1:
            raise DomainError("block length must be >= 1")
        if not 0 <= self.r < self.R:
            raise DomainError(f"residue must satisfy 0 <= r < {self.R}")
        if self.search_limit < self.H + 1:
            raise DomainError("search limit must be at least H + 1")

    def to_dict(self) -> dict:
        return {"c": str(self.c), "R": self.R, "H": self.H, "r": self.r, "search_limit": self.search_limit}


@dataclass(frozen=True)
class BlockWitness:
    m: int
    verified: bool
    per_h: tuple[tuple[int, int], ...]

    def to_dict(self) -> dict:
        return {"m": self.m, "verified": self.verified, "per_h": [list(t) for t in self.per_h]}


@dataclass(frozen=True)
class BlockSearchResult:
    query: BlockQuery
    witness: BlockWitness | None

    @property
    def found(self) -> bool:
        return self.witness is not None

    def to_dict(self) -> dict:
        out = {"query": self.query.to_dict(), "found": self.found}
        if self.witness is not None:
            out.update(self.witness.to_dict())
        return out


def residue_sequence(c: ExponentC, R: int, n_from: int, n_to: int) -> list[int]:
    """floor(n**c) mod R for n in [n_from, n_to]."""
    c = ExponentC.of(c)
    if R < 1 or not 1 <= n_from <= n_to:
        raise DomainError("need R >= 1 and 1 <= n_from <= n_to")
    return [floor_power_int(n, c) % R for n in range(n_from, n_to + 1)]


def verify_block(c: ExponentC, R: int, H: int, r: int, m: int) -> BlockWitness:
    """Recheck a candidate witness through fresh certified floors."""
    c = ExponentC.of(c)
    per_h = tuple((h, floor_pow(m + h, c).floor_value % R) for h in range(1, H + 1))
    ok = all(res == (r + h) % R for h, res in per_h)
    return BlockWitness(m, ok, per_h)


def _scan_chunk(args) -> dict[int, int]:
    """First witness per residue among m in [lo, hi); residues=None means all."""
    num, den, R, H, lo, hi, wanted = args
    c = ExponentC(num, den)
    floors = [floor_power_int(n, c) % R for n in range(lo + 1, hi + H + 1)]
    found: dict[int, int] = {}
    targets = None if wanted is None else set(wanted)
    for i in range(hi - lo):
        r = (floors[i] - 1) % R
        if r in found or (targets is not None and r not in targets):
            continue
        if all(floors[i + h - 1] == (r + h) % R for h in range(2, H + 1)):
            found[r] = lo + i
            if targets is not None and len(found) == len(targets):
                break
            if targets is None and len(found) == R:
                break
    return found


def _search(c: ExponentC, R: int, H: int, residues, limit: int, workers: int) -> dict[int, int]:
    wanted = None if residues is None else tuple(sorted(set(residues)))
    need = R if wanted is None else len(wanted)
    found: dict[int, int] = {}
    bounds = [(lo, min(lo + _CHUNK, limit + 1)) for lo in range(1, limit + 1, _CHUNK)]

    def absorb(hits: dict[int, int]) -> bool:
        for r, m in hits.items():
            if r not in found:
                found[r] = m
        return len(found) >= need

    def job(lo, hi):
        rest = wanted if wanted is None else tuple(r for r in wanted if r not in found)
        if wanted is None and found:
            rest = tuple(r for r in range(R) if r not in found)
        return (c.numerator, c.denominator, R, H, lo, hi, rest)

    if workers <= 1:
        for lo, hi in bounds:
            if absorb(_scan_chunk(job(lo, hi))):
                break
        return found
    # chunks are merged in ascending order, so the minimum per residue wins
    with ProcessPoolExecutor(max_workers=workers) as pool:
        for start in range(0, len(bounds), workers):
            batch = bounds[start : start + workers]
            for hits in pool.map(_scan_chunk, [job(lo, hi) for lo, hi in batch]):
                if absorb(hits):
                    return found
    return found


def find_ap_block(q: BlockQuery, workers: int = 1) -> BlockSearchResult:
    """Smallest m <= q.search_limit whose next H floors run r+1, ..., r+H mod R."""
    hits = _search(q.c, q.R, q.H, (q.r,), q.search_limit, workers)
    if q.r not in hits:
        return BlockSearchResult(q, None)
    return BlockSearchResult(q, verify_block(q.c, q.R, q.H, q.r, hits[q.r]))


def find_ap_blocks_all(
    c: ExponentC, R: int, H: int, search_limit: int = DEFAULT_SEARCH_LIMIT, workers: int = 1
) -> dict[int, BlockWitness]:
    """Smallest witness for every residue r mod R found within the limit, re-verified."""
    c = ExponentC.of(c)
    BlockQuery(c, R, H, 0, search_limit)
    hits = _search(c, R, H, None, search_limit, workers)
    return {r: verify_block(c, R, H, r, m) for r, m in sorted(hits.items())}


def missing_block_scan(c: ExponentC, R: int, H: int, n_to: int, max_blocks: int = 10**6) -> set[tuple[int, ...]]:
    """Length-H residue blocks that never occur among floor(n**c) mod R, n <= n_to."""
    c = ExponentC.of(c)
    if n_to < H or H < 1 or R < 1:
        raise DomainError("need n_to >= H >= 1 and R >= 1")
    if R**H > max_blocks:
        raise DomainError(f"{R}**{H} blocks exceed the enumeration budget {max_blocks}")
    seq = residue_sequence(c, R, 1, n_to)
    seen = {tuple(seq[i : i + H]) for i in range(n_to - H + 1)}
    return set(itertools.product(range(R), repeat=H)) - seen


# ---------------------------------------------------------------------------
# The sufficient condition system for a block at m
# ---------------------------------------------------------------------------


def cond_i_holds(m: int, c: ExponentC, H: int) -> bool:
    """m**(1-{c}) > 4 (cH)**(c+1), compared exactly after raising to the d-th power."""
    c = ExponentC.of(c)
    d = c.denominator
    k = d - c.numerator % d  # m**(1-{c}) = m**(k/d)
    cH = c.value * H
    rhs = Fraction(4) ** d * cH ** (c.numerator + d)
    return m**k > rhs


@dataclass(frozen=True)
class FracgameReport:
    m: int
    c: ExponentC
    R: int
    H: int
    r: int
    cond_i: bool
    cond_ii: WindowStatus
    cond_iii: WindowStatus
    cond_iv: dict[int, WindowStatus] = field(default_factory=dict)
    conclusion_holds: bool = False

    @property
    def all_conditions(self) -> bool:
        return (
            self.cond_i
            and self.cond_ii.accepted
            and self.cond_iii.accepted
            and all(s.accepted for s in self.cond_iv.values())
        )

    @property
    def endpoint_hit(self) -> bool:
        statuses = [self.cond_ii, self.cond_iii, *self.cond_iv.values()]
        return any(s in (WindowStatus.AT_LOWER, WindowStatus.AT_UPPER) for s in statuses)

    def to_dict(self) -> dict:
        return {
            "m": self.m,
            "c": str(self.c),
            "R": self.R,
            "H": self.H,
            "r": self.r,
            "cond_i": self.cond_i,
            "cond_ii": self.cond_ii.accepted,
            "cond_ii_status": self.cond_ii.value,
            "cond_iii": self.cond_iii.accepted,
            "cond_iii_status": self.cond_iii.value,
            "cond_iv": {str(k): v.accepted for k, v in self.cond_iv.items()},
            "cond_iv_status": {str(k): v.value for k, v in self.cond_iv.items()},
            "all_conditions": self.all_conditions,
            "conclusion_holds": self.conclusion_holds,
        }


def check_fracgame(m: int, c: ExponentC, R: int, H: int, r: int) -> FracgameReport:
    """Evaluate the four window conditions at m and the block congruence itself."""
    c = ExponentC.of(c)
    if m < 1 or R < 1 or H < 1 or not 0 <= r < R:
        raise DomainError("need m, R, H >= 1 and 0 <= r < R")
    cv = c.value
    ci = cond_i_holds(m, c, H)
    cii = frac_in_window(1, m, cv, R, Fraction(r, R), Fraction(r, R) + Fraction(1, 4 * R))
    ciii = frac_in_window(cv, m, cv - 1, R, Fraction(1, R), Fraction(1, R) + Fraction(1, 4 * R * H))
    civ = {}
    for ell in range(2, c.floor_c + 1):
        g = gamma_coeff(c, ell)
        civ[ell] = frac_in_window(g, m, cv - ell, R, 0, Fraction(1, 1) / (4 * cv * R * H**ell))
    conclusion = all(floor_power_int(m + h, c) % R == (r + h) % R for h in range(1, H + 1))
    return FracgameReport(m, c, R, H, r, ci, cii, ciii, civ, conclusion)


@dataclass
class FracgameScan:
    """Tally of an exhaustive scan over (R, H, m); r is implied by condition (ii)."""

    c: ExponentC
    m_max: int
    instances: dict[tuple[int, int], int] = field(default_factory=dict)
    counterexamples: list[tuple[int, int, int, int]] = field(default_factory=list)

    @property
    def total_instances(self) -> int:
        return sum(self.instances.values())

    def to_dict(self) -> dict:
        return {
            "c": str(self.c),
            "m_max": self.m_max,
            "instances_with_all_conditions": {f"R={R},H={H}": v for (R, H), v in sorted(self.instances.items())},
            "total_instances": self.total_instances,
            "counterexamples": [list(t) for t in self.counterexamples],
        }


def fracgame_scan(c: ExponentC, R_values, H_values, m_max: int) -> FracgameScan:
    """Exhaustive check of the condition system over all (R, H, r, m <= m_max).

    A window ``[r/R, (r+u)/R)`` for ``{x/R}`` holds iff ``floor(x) == r (mod R)``
    and ``{x} < u``.  Condition (ii) therefore pins ``r = floor(m**c) mod R``;
    every other residue fails it, so each (R, H, m) carries at most one live
    instance and the scan stays linear in m.
    """
    c = ExponentC.of(c)
    R_values, H_values = list(R_values), list(H_values)
    H_max = max(H_values)
    cv = c.value
    ms = range(1, m_max + 1)
    floors = np.array([floor_power_int(n, c) for n in range(1, m_max + H_max + 1)], dtype=object)
    A = floors[:m_max]
    frac_a = np.array([frac_below(1, m, cv, Fraction(1, 4)) for m in ms])
    B = np.array([floor_pow_scaled_int(cv, m, cv - 1) for m in ms], dtype=object)
    lower_terms = {
        ell: (gamma_coeff(c, ell), np.array([floor_pow_scaled_int(gamma_coeff(c, ell), m, cv - ell) for m in ms], dtype=object))
        for ell in range(2, c.floor_c + 1)
    }
    scan = FracgameScan(c, m_max)
    m_arr = np.arange(1, m_max + 1)
    for H in H_values:
        threshold = _cond_i_threshold(c, H, m_max)
        ci = m_arr >= threshold
        frac_b = np.array([frac_below(cv, m, cv - 1, Fraction(1, 4 * H)) if ok else False for m, ok in zip(ms, ci)])
        frac_l = {
            ell: np.array(
                [frac_below(g, m, cv - ell, 1 / (4 * cv * H**ell)) if ok else False for m, ok in zip(ms, ci)]
            )
            for ell, (g, _) in lower_terms.items()
        }
        base = ci & frac_a & frac_b
        for f in frac_l.values():
            base = base & f
        for R in R_values:
            if R < 2:
                # window [1/R, ...) leaves [0, 1) when R = 1
                scan.instances[(R, H)] = 0
                continue
            mask = base & np.array([b % R == 1 for b in B], dtype=bool)
            for ell, (_, G) in lower_terms.items():
                mask &= np.array([g % R == 0 for g in G], dtype=bool)
            idx = np.nonzero(mask)[0]
            scan.instances[(R, H)] = len(idx)
            for i in idx:
                m = int(i) + 1
                r = int(A[i]) % R
                if not all(int(floors[m + h - 1]) % R == (r + h) % R for h in range(1, H + 1)):
                    scan.counterexamples.append((m, R, H, r))
    return scan


def floor_pow_scaled_int(coeff, m: int, e) -> int:
    """floor(coeff * m**e) for non-negative coeff and e."""
    return floor_scaled(coeff, m, e, 0)


def _cond_i_threshold(c: ExponentC, H: int, m_max: int) -> int:
    """Smallest m (capped at m_max + 1) satisfying condition (i)."""
    lo, hi = 1, m_max + 1
    if not cond_i_holds(m_max, c, H):
        return m_max + 1
    while lo < hi:
        mid = (lo + hi) // 2
        if cond_i_holds(mid, c, H):
            hi = mid
        else:
            lo = mid + 1
    return lo


def block_threshold_data(c: ExponentC, H: int, R_values, search_limit: int = DEFAULT_SEARCH_LIMIT) -> dict[int, int | None]:
    """For each R, the smallest m carrying the block (1, ..., H) mod R (r = 0)."""
    out = {}
    for R in R_values:
        res = find_ap_block(BlockQuery(c, R, H, 0, search_limit))
        out[R] = res.witness.m if res.found else None
    return out
