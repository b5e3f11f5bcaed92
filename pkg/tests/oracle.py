"""Independent reference implementations the library is checked against.

Nothing here imports spsdense; each routine is the slow, obvious version.
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction

import mpmath
import numpy as np


def mp_floor_pow(m: int, num: int, den: int, dps: int = 250) -> int:
    """floor(m**(num/den)) from a `dps`-digit evaluation, snapping exact integers."""
    with mpmath.workdps(dps):
        x = mpmath.power(mpmath.mpf(m), mpmath.mpf(num) / den)
        k = int(mpmath.nint(x))
        if abs(x - k) < mpmath.mpf(10) ** (-(dps - 30)):
            return k
        return int(mpmath.floor(x))


def mp_frac(x_expr, dps: int = 60) -> mpmath.mpf:
    with mpmath.workdps(dps):
        x = x_expr()
        return x - mpmath.floor(x)


def grid_discrepancy(points: list[tuple[Fraction, ...]]) -> Fraction:
    """sup over half-open boxes of |count/N - volume|, by enumerating the critical grid.

    Over-counts come from closed boxes [a, b] and under-counts from open boxes
    (a, b), with every endpoint in {0, 1} or a point coordinate.  All boxes
    are evaluated at once: per axis a (pairs x points) membership matrix,
    combined across axes with einsum.
    """
    N = len(points)
    s = len(points[0])
    grids = [sorted({Fraction(0), Fraction(1)} | {p[i] for p in points}) for i in range(s)]
    den = math.lcm(*[g.denominator for g in itertools.chain(*grids)])
    exact_ints = den**s * N < 2**62
    dtype = np.int64 if exact_ints else object
    closed_m, open_m, lengths = [], [], []
    for i, g in enumerate(grids):
        ints = [int(x * den) for x in g]
        col = np.array([int(p[i] * den) for p in points], dtype=dtype)
        lo = np.array([a for a in ints for b in ints if a <= b], dtype=dtype)
        hi = np.array([b for a in ints for b in ints if a <= b], dtype=dtype)
        closed_m.append(((col[None, :] >= lo[:, None]) & (col[None, :] <= hi[:, None])).astype(np.int64))
        open_m.append(((col[None, :] > lo[:, None]) & (col[None, :] < hi[:, None])).astype(np.int64))
        lengths.append(hi - lo)
    letters = "abc"[:s]
    spec = ",".join(f"{ch}z" for ch in letters) + "->" + letters
    closed = np.einsum(spec, *closed_m)
    opened = np.einsum(spec, *open_m)
    vol = lengths[0]
    for ln in lengths[1:]:
        vol = np.multiply.outer(vol, ln)
    K = den**s
    over = closed.astype(dtype) * K - N * vol
    under = N * vol - opened.astype(dtype) * K
    best = max(int(over.max()), int(under.max()), 0)
    return Fraction(best, N * K)


def sieve_phi(n: int) -> np.ndarray:
    """phi(0..n) by the multiplicative sieve."""
    phi = np.arange(n + 1, dtype=np.int64)
    for p in range(2, n + 1):
        if phi[p] == p:
            phi[p::p] -= phi[p::p] // p
    return phi


def count_phi(n: int) -> int:
    return sum(1 for k in range(1, n + 1) if math.gcd(k, n) == 1)


def brute_crt(pairs: list[tuple[int, int]]) -> int | None:
    M = math.prod(m for _, m in pairs)
    for r in range(M):
        if all(r % m == a % m for a, m in pairs):
            return r
    return None


def trial_primes(n: int) -> list[int]:
    out = []
    d = 2
    while d * d <= n:
        if n % d == 0:
            out.append(d)
            while n % d == 0:
                n //= d
        d += 1
    if n > 1:
        out.append(n)
    return out
