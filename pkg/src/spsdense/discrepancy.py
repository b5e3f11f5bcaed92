"""Discrepancy of point sets, the Erdos-Turan-Koksma bound and Weyl sums.

Exact discrepancy is taken over *all* half-open boxes in [0, 1)^s, not only
anchored ones.  The supremum splits into two one-sided problems:

* over-count: a box can be shrunk onto the bounding box of the points it
  holds, so it suffices to look at closed boxes whose faces carry points;
* under-count: a box can be grown until every face touches a point or the
  unit cube, so open boxes with faces on point coordinates or {0, 1} suffice.

Outer coordinates are enumerated as intervals; the innermost coordinate is a
one-dimensional max-gain scan.  All arithmetic is on integers after scaling
the coordinates by their common denominator, so results are exact rationals.
"""

from __future__ import annotations

import itertools
import math
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce
from typing import Sequence

import mpmath
import numpy as np

from .numeric import (
    DEFAULT_START_BITS,
    BudgetExceeded,
    DomainError,
    ExponentC,
    floor_scaled,
    frac_scaled,
    gamma_coeff,
    gamma_list,
)

# N**(2s-1) inner steps; N = 512 in the plane is about 1.3e8
EXACT_WORK_BUDGET = 1.5e8


class DiscrepancyBudgetExceeded(BudgetExceeded):
    pass


@dataclass(frozen=True)
class PointSet:
    """N points of [0, 1)^s with exact rational coordinates."""

    s: int
    points: tuple[tuple[Fraction, ...], ...]

    def __post_init__(self):
        if self.s < 1:
            raise DomainError("dimension must be >= 1")
        if not self.points:
            raise DomainError("a point set needs at least one point")
        pts = tuple(tuple(Fraction(x) for x in p) for p in self.points)
        for p in pts:
            if len(p) != self.s:
                raise DomainError(f"point {p} is not {self.s}-dimensional")
            if any(not 0 <= x < 1 for x in p):
                raise DomainError(f"point {p} leaves [0, 1)^{self.s}")
        object.__setattr__(self, "points", pts)

    @classmethod
    def of(cls, points: Sequence[Sequence]) -> "PointSet":
        pts = [tuple(p) if isinstance(p, (list, tuple)) else (p,) for p in points]
        return cls(len(pts[0]) if pts else 0, tuple(pts))

    @property
    def N(self) -> int:
        return len(self.points)

    def as_array(self) -> np.ndarray:
        return np.array([[float(x) for x in p] for p in self.points], dtype=float)

    def to_dict(self) -> dict:
        return {"s": self.s, "N": self.N, "points": [[str(x) for x in p] for p in self.points]}


# ---------------------------------------------------------------------------
# Exact discrepancy
# ---------------------------------------------------------------------------


def _scaled(X: PointSet) -> tuple[list[tuple[int, ...]], int]:
    D = reduce(math.lcm, (x.denominator for p in X.points for x in p), 1)
    return [tuple(int(x * D) for x in p) for p in X.points], D


def _over_scan(vals: list[int], P: int, K: int) -> int:
    """max over closed [u_i, u_j] of K*count - P*(u_j - u_i); vals sorted."""
    best = None
    g_min = None
    count = 0
    i = 0
    n = len(vals)
    while i < n:
        u = vals[i]
        g = K * count - P * u  # candidate left end at u
        if g_min is None or g < g_min:
            g_min = g
        j = i
        while j < n and vals[j] == u:
            j += 1
        count += j - i
        f = K * count - P * u
        if best is None or f - g_min > best:
            best = f - g_min
        i = j
    return best if best is not None else 0


def _under_scan(vals: list[int], P: int, K: int, D: int) -> int:
    """max over open (g_i, g_j) with g in {0, D} U vals of P*(g_j - g_i) - K*count."""
    best = 0
    count_le = 0  # points <= current grid value
    n = len(vals)
    i = 0
    while i < n and vals[i] == 0:
        i += 1
    count_le = i
    h_min = -K * count_le  # grid value 0
    while i < n:
        u = vals[i]
        j = i
        while j < n and vals[j] == u:
            j += 1
        f = P * u - K * count_le  # right end at u: strictly-less count
        if f - h_min > best:
            best = f - h_min
        count_le += j - i
        h = P * u - K * count_le
        if h < h_min:
            h_min = h
        i = j
    f = P * D - K * count_le
    return max(best, f - h_min)


def _over(pts, dim: int, s: int, P: int, K: int) -> int:
    if dim == s - 1:
        return _over_scan(sorted(p[dim] for p in pts), P, K)
    coords = sorted({p[dim] for p in pts})
    best = 0
    for a_idx, a in enumerate(coords):
        for b in coords[a_idx:]:
            inside = [p for p in pts if a <= p[dim] <= b]
            best = max(best, _over(inside, dim + 1, s, P * (b - a), K))
    return best


def _under(pts, dim: int, s: int, P: int, K: int, D: int) -> int:
    if dim == s - 1:
        return _under_scan(sorted(p[dim] for p in pts), P, K, D)
    grid = sorted({0, D} | {p[dim] for p in pts})
    best = 0
    for a_idx, a in enumerate(grid):
        for b in grid[a_idx + 1 :]:
            inside = [p for p in pts if a < p[dim] < b]
            best = max(best, _under(inside, dim + 1, s, P * (b - a), K, D))
    return best


def exact_work(X: PointSet) -> float:
    return float(X.N) ** (2 * X.s - 1)


def exact_discrepancy(X: PointSet, *, allow_estimate: bool = False, seed: int = 0) -> Fraction:
    """Supremum over boxes prod [a_i, b_i) of |count/N - volume|, as an exact rational.

    Inputs past the exact-mode budget raise unless ``allow_estimate`` is set,
    in which case a sampled lower bound is returned instead.
    """
    if X.s > 3 or exact_work(X) > EXACT_WORK_BUDGET:
        if allow_estimate:
            return discrepancy_lower_bound(X, seed=seed)
        raise DiscrepancyBudgetExceeded(
            f"exact discrepancy for s={X.s}, N={X.N} is over budget; "
            "pass allow_estimate=True for a sampled lower bound"
        )
    pts, D = _scaled(X)
    N, s = X.N, X.s
    K = D**s
    over = _over(pts, 0, s, N, K)
    under = _under(pts, 0, s, N, K, D)
    return Fraction(max(over, under, 0), N * K)


def box_gap(X: PointSet, a: Sequence, b: Sequence) -> Fraction:
    """max(closed-count gap, open-count gap) for the box with corners a <= b."""
    a = [Fraction(x) for x in a]
    b = [Fraction(x) for x in b]
    vol = math.prod(bi - ai for ai, bi in zip(a, b))
    closed = sum(all(ai <= x <= bi for ai, x, bi in zip(a, p, b)) for p in X.points)
    opened = sum(all(ai < x < bi for ai, x, bi in zip(a, p, b)) for p in X.points)
    return max(Fraction(closed, X.N) - vol, vol - Fraction(opened, X.N))


def discrepancy_lower_bound(X: PointSet, trials: int = 20000, seed: int = 0) -> Fraction:
    """Best gap over randomly drawn critical-grid boxes; a lower bound on D_N."""
    rng = random.Random(seed)
    pts, D = _scaled(X)
    N, s = X.N, X.s
    K = D**s
    dtype = np.int64 if D < 2**62 else object
    arr = np.array(pts, dtype=dtype).reshape(N, s)
    grids = [sorted({0, D} | {p[i] for p in pts}) for i in range(s)]
    best = 0
    for _ in range(trials):
        closed = np.ones(N, dtype=bool)
        opened = np.ones(N, dtype=bool)
        vol = 1
        for i, g in enumerate(grids):
            lo, hi = sorted((rng.choice(g), rng.choice(g)))
            col = arr[:, i]
            closed &= (col >= lo) & (col <= hi)
            opened &= (col > lo) & (col < hi)
            vol *= hi - lo
        best = max(best, int(closed.sum()) * K - N * vol, N * vol - int(opened.sum()) * K)
    return Fraction(best, N * K)


# ---------------------------------------------------------------------------
# Erdos-Turan-Koksma
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EtksParams:
    K: int
    s: int

    def __post_init__(self):
        if self.K < 1:
            raise DomainError("K must be a positive integer")
        if self.s < 1:
            raise DomainError("dimension must be >= 1")

    def lattice(self) -> list[tuple[int, ...]]:
        """All k in Z^s with 0 < max|k_i| <= K."""
        rng = range(-self.K, self.K + 1)
        return [k for k in itertools.product(rng, repeat=self.s) if any(k)]

    @staticmethod
    def weight(k: Sequence[int]) -> int:
        return math.prod(max(1, abs(x)) for x in k)


def trig_sums(X: PointSet, ks: Sequence[Sequence[int]]) -> dict[tuple[int, ...], float]:
    """|N^-1 sum_n e(k . x_n)| for each k."""
    pts = X.as_array()
    kk = np.array(ks, dtype=float).reshape(len(ks), X.s)
    phases = 2 * np.pi * (pts @ kk.T)
    mags = np.abs(np.exp(1j * phases).sum(axis=0)) / X.N
    return {tuple(int(v) for v in k): float(mag) for k, mag in zip(ks, mags)}


@dataclass
class EtksResult:
    bound: float
    K: int
    s: int
    sums: dict[tuple[int, ...], float] = field(repr=False)

    def to_dict(self) -> dict:
        return {
            "bound": self.bound,
            "K": self.K,
            "s": self.s,
            "sums": [{"k": list(k), "abs_mean": v} for k, v in sorted(self.sums.items())],
        }


def etks_bound(X: PointSet, P: EtksParams | int, sums: dict | None = None) -> EtksResult:
    """(3/2)^s (2/(K+1) + sum_k |mean e(k.x)| / r(k)) over 0 < |k|_inf <= K."""
    if isinstance(P, int):
        P = EtksParams(P, X.s)
    if P.s != X.s:
        raise DomainError("EtksParams dimension does not match the point set")
    lattice = P.lattice()
    table = dict(sums or {})
    missing = [k for k in lattice if k not in table]
    if missing:
        table.update(trig_sums(X, missing))
    tail = math.fsum(table[k] / EtksParams.weight(k) for k in lattice)
    bound = 1.5**X.s * (2 / (P.K + 1) + tail)
    return EtksResult(bound, P.K, X.s, {k: table[k] for k in lattice})


# ---------------------------------------------------------------------------
# The point set of scaled Taylor terms
# ---------------------------------------------------------------------------


def build_taylor_pointset(c: ExponentC, R: int, budget_N: int, tol: Fraction = Fraction(1, 10**12)) -> PointSet:
    """x_n = ({gamma_l (N+n)**(c-l) / R})_{l=0..floor(c)} for n = 1..N.

    Coordinates are the lower ends of enclosures of width <= tol, i.e. exact
    dyadic rationals within tol of the true fractional parts.
    """
    c = ExponentC.of(c)
    if budget_N < 1 or R < 1:
        raise DomainError("need budget_N >= 1 and R >= 1")
    gammas = gamma_list(c)
    pts = []
    for n in range(1, budget_N + 1):
        t = budget_N + n
        pts.append(tuple(frac_scaled(g, t, c.value - ell, R, tol).lo for ell, g in enumerate(gammas)))
    return PointSet(c.dimension, tuple(pts))


# ---------------------------------------------------------------------------
# Weyl sums S(N; k, R)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExpSumSpec:
    c: ExponentC
    N: int
    R: int
    k: tuple[int, ...]

    def __post_init__(self):
        c = ExponentC.of(self.c)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "k", tuple(int(x) for x in self.k))
        if self.N < 1 or self.R < 1:
            raise DomainError("need N >= 1 and R >= 1")
        if len(self.k) != c.dimension:
            raise DomainError(f"k needs {c.dimension} entries (l = 0..{c.floor_c})")

    @property
    def coefficients(self) -> list[Fraction]:
        """a_l = k_l gamma_l / R."""
        return [kl * g / self.R for kl, g in zip(self.k, gamma_list(self.c))]


@dataclass(frozen=True)
class ExpSumResult:
    spec: ExpSumSpec
    value: complex
    error_bound: float
    value_mp: mpmath.mpc | None = None

    @property
    def abs(self) -> float:
        return abs(self.value)

    @property
    def ratio(self) -> float:
        """|S| / N**(1 - theta)."""
        return self.abs / self.spec.N ** (1 - self.spec.c.theta)

    def to_dict(self) -> dict:
        return {
            "c": str(self.spec.c),
            "N": self.spec.N,
            "R": self.spec.R,
            "k": list(self.spec.k),
            "re": self.value.real,
            "im": self.value.imag,
            "abs": self.abs,
            "ratio": self.ratio,
            "error_bound": self.error_bound,
        }


_SUM_CHUNK = 4096
_FLOAT_BITS = 52
_FLOAT_TERM_ERR = 4e-15


def _sum_chunk(args):
    """Partial sums of e(phase) over n in [lo, hi) for several k vectors."""
    num, den, R, ks, lo, hi, bits, dps = args
    c = ExponentC(num, den)
    gammas = gamma_list(c)
    mask = (1 << bits) - 1
    used = [ell for ell in range(len(gammas)) if any(k[ell] for k in ks)]
    table = {
        ell: [floor_scaled(gammas[ell] / R, n, c.value - ell, bits) & mask for n in range(lo, hi)] for ell in used
    }
    out = []
    for k in ks:
        phase = [0] * (hi - lo)
        for ell in used:
            if k[ell]:
                col = table[ell]
                kl = k[ell]
                phase = [(p + kl * f) & mask for p, f in zip(phase, col)]
        if dps is None:
            t = np.array(phase, dtype=np.float64) * (2 * math.pi / (1 << bits))
            out.append((math.fsum(np.cos(t)), math.fsum(np.sin(t))))
        else:
            with mpmath.workdps(dps):
                scale = mpmath.mpf(2) / (1 << bits)
                re = mpmath.fsum(mpmath.cospi(p * scale) for p in phase)
                im = mpmath.fsum(mpmath.sinpi(p * scale) for p in phase)
                out.append((re, im))
    return out


def exp_sums(
    c: ExponentC, N: int, R: int, ks: Sequence[Sequence[int]], tol: float = 1e-9, workers: int = 1
) -> list[ExpSumResult]:
    """S(N; k, R) = sum_{N < n <= 2N} e(R^-1 sum_l k_l gamma_l n**(c-l)) for each k.

    Phases are exact dyadic truncations of the fractional parts.  The
    summation is chunked at a fixed size and the chunks are combined in
    order, so the result does not depend on ``workers``.
    """
    c = ExponentC.of(c)
    specs = [ExpSumSpec(c, N, R, tuple(k)) for k in ks]
    if tol <= 0:
        raise DomainError("tol must be positive")
    weight = max([sum(abs(x) for x in sp.k) for sp in specs] + [1])
    float_err = N * (2 * math.pi * weight * 2.0**-_FLOAT_BITS + _FLOAT_TERM_ERR)
    if float_err <= tol:
        bits, dps, err = _FLOAT_BITS, None, float_err
    else:
        bits = math.ceil(math.log2(8 * math.pi * weight * N / tol)) + 1
        dps = max(20, math.ceil(-math.log10(tol / (4 * N))) + 5)
        err = N * 2 * math.pi * weight * 2.0**-bits + N * 10.0 ** (-dps + 2)
    nonzero = [tuple(sp.k) for sp in specs if any(sp.k)]
    jobs = [
        (c.numerator, c.denominator, R, nonzero, lo, min(lo + _SUM_CHUNK, 2 * N + 1), bits, dps)
        for lo in range(N + 1, 2 * N + 1, _SUM_CHUNK)
    ]
    if nonzero:
        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                parts = list(pool.map(_sum_chunk, jobs))
        else:
            parts = [_sum_chunk(j) for j in jobs]
    results: list[ExpSumResult] = []
    idx = {k: i for i, k in enumerate(nonzero)}
    for sp in specs:
        if not any(sp.k):
            results.append(ExpSumResult(sp, complex(N, 0), 0.0, mpmath.mpc(N)))
            continue
        i = idx[tuple(sp.k)]
        if dps is None:
            re = math.fsum(p[i][0] for p in parts)
            im = math.fsum(p[i][1] for p in parts)
            results.append(ExpSumResult(sp, complex(re, im), err))
        else:
            with mpmath.workdps(dps):
                re = mpmath.fsum(p[i][0] for p in parts)
                im = mpmath.fsum(p[i][1] for p in parts)
                results.append(ExpSumResult(sp, complex(float(re), float(im)), err, mpmath.mpc(re, im)))
    return results


def exp_sum(spec: ExpSumSpec, tol: float = 1e-9, workers: int = 1) -> ExpSumResult:
    return exp_sums(spec.c, spec.N, spec.R, [spec.k], tol, workers)[0]


# ---------------------------------------------------------------------------
# Theoretical bounds (unit absolute constants)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class KusminLandauResult:
    applicable: bool
    delta: float | None
    bound: float | None
    note: str = "up to an absolute constant (taken as 1)"

    def to_dict(self) -> dict:
        return {"method": "kusmin-landau", "applicable": self.applicable, "delta": self.delta, "bound": self.bound, "note": self.note}


def kusmin_landau_from_delta(delta: float) -> float:
    if delta <= 0:
        raise DomainError("delta must be positive")
    return 1 / delta


def kusmin_landau_bound(c: ExponentC, a, N: int) -> KusminLandauResult:
    """Bound for sum_{N<n<=2N} e(a n**{c}) from ||f'|| >= delta, f' = a{c} t**({c}-1).

    f' is monotone on [N, 2N], so its range is spanned by the endpoint values;
    the bound is inapplicable when that range contains an integer.
    """
    c = ExponentC.of(c)
    if a == 0:
        raise DomainError("coefficient must be non-zero")
    if N < 1:
        raise DomainError("N must be positive")
    with mpmath.workdps(50):
        fc = mpmath.mpf(c.frac_c.numerator) / c.frac_c.denominator
        a_mp = mpmath.mpf(Fraction(a).numerator) / Fraction(a).denominator
        ends = [a_mp * fc * mpmath.power(t, fc - 1) for t in (N, 2 * N)]
        lo, hi = min(ends), max(ends)
        if mpmath.floor(lo) != mpmath.floor(hi) or lo == mpmath.floor(lo):
            return KusminLandauResult(False, None, None)
        j = mpmath.floor(lo)
        delta = min(lo - j, j + 1 - hi)
        return KusminLandauResult(True, float(delta), float(1 / delta))


@dataclass(frozen=True)
class VdcParams:
    q: int
    lam: float
    alpha: float

    def __post_init__(self):
        if self.q < 0:
            raise DomainError("q must be non-negative")
        if self.lam <= 0:
            raise DomainError("lambda must be positive")
        if self.alpha < 1:
            raise DomainError("alpha must be >= 1")

    @property
    def Q(self) -> int:
        return 2**self.q


def vdc_terms(P: VdcParams, N: int) -> tuple[float, float, float]:
    Q, lam, alpha = P.Q, P.lam, P.alpha
    return (
        N * (alpha**2 * lam) ** (1 / (4 * Q - 2)),
        N ** (1 - 1 / (2 * Q)) * alpha ** (1 / (2 * Q)),
        N ** (((Q - 1) / Q) ** 2) * lam ** (-1 / (2 * Q)),
    )


def vdc_bound(P: VdcParams, N: int) -> float:
    """Three-term van der Corput bound with the absolute constant set to 1."""
    return math.fsum(vdc_terms(P, N))


def weyl_sum_target(c: ExponentC, N: int) -> float:
    """N**(1 - theta), the uniform target for the Weyl sums."""
    return N ** (1 - ExponentC.of(c).theta)


def _falling(e: Fraction, j: int) -> Fraction:
    out = Fraction(1)
    for i in range(j):
        out *= e - i
    return out


def estimate_vdc_params(spec: ExpSumSpec, samples: int = 16) -> VdcParams | None:
    """lambda, alpha for f(t) = sum_l a_l t**(c-l) from its (q+2)-th derivative on [N, 2N].

    q = floor(c) - l0 - 1 with l0 the first non-zero coefficient.  Returns
    None when l0 = floor(c) (Kusmin-Landau case) or the derivative changes
    sign at a sample point.
    """
    c = spec.c
    a = spec.coefficients
    nz = [ell for ell, x in enumerate(a) if x != 0]
    if not nz:
        return None
    l0 = nz[0]
    q = c.floor_c - l0 - 1
    if q < 0:
        return None
    j = q + 2
    with mpmath.workdps(40):
        ts = [mpmath.mpf(spec.N) * (1 + mpmath.mpf(i) / (samples + 1)) for i in range(samples + 2)]
        vals = []
        for t in ts:
            v = mpmath.mpf(0)
            for ell in nz:
                e = c.value - ell
                coef = a[ell] * _falling(e, j)
                v += mpmath.mpf(coef.numerator) / coef.denominator * mpmath.power(t, mpmath.mpf(e.numerator) / e.denominator - j)
            vals.append(v)
        if any(v == 0 for v in vals) or len({mpmath.sign(v) for v in vals}) > 1:
            return None
        mags = [abs(v) for v in vals]
        lam = min(mags)
        return VdcParams(q, float(lam), max(1.0, float(max(mags) / lam)))


def exp_sum_bound(spec: ExpSumSpec) -> dict:
    """Theoretical bound for |S(N; k, R)| (unit constants), labelled by method."""
    a = spec.coefficients
    nz = [ell for ell, x in enumerate(a) if x != 0]
    if not nz:
        return {"method": "trivial", "bound": float(spec.N)}
    if nz[0] == spec.c.floor_c:
        kl = kusmin_landau_bound(spec.c, a[nz[0]], spec.N)
        out = kl.to_dict()
        out["bound"] = min(kl.bound, float(spec.N)) if kl.applicable else float(spec.N)
        return out
    P = estimate_vdc_params(spec)
    if P is None:
        return {"method": "trivial", "bound": float(spec.N)}
    return {
        "method": "van-der-corput",
        "q": P.q,
        "lambda": P.lam,
        "alpha": P.alpha,
        "bound": vdc_bound(P, spec.N),
        "note": "up to an absolute constant (taken as 1)",
    }


def exp_sum_table(c: ExponentC, N: int, R: int, K: int, tol: float = 1e-9, workers: int = 1) -> list[dict]:
    """Rows (k, |S|, |S|/N^(1-theta), theoretical bound) for 0 < |k|_inf <= K."""
    c = ExponentC.of(c)
    ks = EtksParams(K, c.dimension).lattice()
    rows = []
    for res in exp_sums(c, N, R, ks, tol, workers):
        row = res.to_dict()
        row["target"] = weyl_sum_target(c, N)
        row["theory"] = exp_sum_bound(res.spec)["bound"]
        rows.append(row)
    return rows


@dataclass
class DiscrepancyReport:
    points: PointSet
    discrepancy: Fraction
    exact: bool
    etks: EtksResult | None = None

    def to_dict(self) -> dict:
        out = {
            "s": self.points.s,
            "N": self.points.N,
            "discrepancy": str(self.discrepancy),
            "discrepancy_float": float(self.discrepancy),
            "exact": self.exact,
        }
        if self.etks is not None:
            out["etks"] = self.etks.to_dict()
        return out


def discrepancy_report(X: PointSet, K: int | None = None, allow_estimate: bool = False) -> DiscrepancyReport:
    exact = X.s <= 3 and exact_work(X) <= EXACT_WORK_BUDGET
    d = exact_discrepancy(X, allow_estimate=allow_estimate)
    return DiscrepancyReport(X, d, exact, etks_bound(X, K) if K else None)
