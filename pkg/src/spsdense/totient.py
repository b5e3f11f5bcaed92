"""Euler's totient along floor(m**c), partial sums mod 1, and the window build.

The window construction picks, for h = 1..H, disjoint sets of primes P_h
(all > H) with 2/H <= (phi(h)/h)(phi(P_h)/P_h) <= 3/H, then the modulus
R = H! * prod_{H < p <= L} p and a residue r with r = -h mod P_h and
r = 0 mod R/(P_1...P_H).  Families are consecutive runs of primes taken
greedily.  Once a run would pass ``enumeration_cap`` the remaining families
are described as prime ranges ``(e^A, e^B]`` whose products are certified
with explicit Mertens bounds instead of being enumerated.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Sequence

import gmpy2
import mpmath
import numpy as np

from .numeric import DomainError, ExponentC, floor_power_int
from .primes import FactorizationBudgetExceeded, factorize, next_prime, primes_up_to

FIXED_BITS = 128


def euler_phi(n: int, rho_budget: int = 10**7) -> int:
    """phi(n) = n prod_{p | n} (1 - 1/p)."""
    if n < 1:
        raise DomainError("phi needs a positive integer")
    out = n
    for p in factorize(n, rho_budget):
        out = out // p * (p - 1)
    return out


def phi_ratio(n: int) -> Fraction:
    return Fraction(euler_phi(n), n)


# ---------------------------------------------------------------------------
# Partial sums
# ---------------------------------------------------------------------------


def _split_sum(nums: Sequence[int], dens: Sequence[int], lo: int, hi: int) -> tuple[gmpy2.mpz, gmpy2.mpz]:
    if hi - lo == 1:
        return gmpy2.mpz(nums[lo]), gmpy2.mpz(dens[lo])
    mid = (lo + hi) // 2
    p1, q1 = _split_sum(nums, dens, lo, mid)
    p2, q2 = _split_sum(nums, dens, mid, hi)
    return p1 * q2 + p2 * q1, q1 * q2


def _exact_sum(nums: Sequence[int], dens: Sequence[int]) -> Fraction:
    if not nums:
        return Fraction(0)
    p, q = _split_sum(nums, dens, 0, len(nums))
    g = gmpy2.gcd(p, q)
    return Fraction(int(p // g), int(q // g))


def _phi_block(args) -> list[int]:
    num, den, lo, hi = args
    c = ExponentC(num, den)
    return [euler_phi(floor_power_int(m, c)) for m in range(lo, hi)]


@dataclass
class TotientSeries:
    """S_n = sum_{m <= n} phi(floor(m**c)) / floor(m**c) for n <= n_max.

    Floors and totients are stored exactly; S_n is rebuilt exactly on demand.
    ``fixed[n-1]`` is a running floor-sum with S_n in
    [fixed/2**bits, (fixed + n)/2**bits), used to screen candidates cheaply.
    """

    c: ExponentC
    n_max: int
    floors: list[int]
    phis: list[int]
    fixed: list[int] = field(repr=False)
    final: Fraction = field(repr=False)
    bits: int = FIXED_BITS

    def increment(self, n: int) -> Fraction:
        return Fraction(self.phis[n - 1], self.floors[n - 1])

    def partial(self, n: int) -> Fraction:
        if not 1 <= n <= self.n_max:
            raise DomainError(f"n must lie in [1, {self.n_max}]")
        if n == self.n_max:
            return self.final
        return _exact_sum(self.phis[:n], self.floors[:n])

    def frac(self, n: int) -> Fraction:
        s = self.partial(n)
        return s - math.floor(s)

    def frac_floats(self) -> np.ndarray:
        mask = (1 << self.bits) - 1
        return np.array([(t & mask) / (1 << self.bits) for t in self.fixed], dtype=float)

    def iter_partials(self) -> Iterator[tuple[int, Fraction]]:
        """Stream (n, S_n) exactly."""
        acc = gmpy2.mpq(0)
        for n in range(1, self.n_max + 1):
            acc += gmpy2.mpq(self.phis[n - 1], self.floors[n - 1])
            yield n, Fraction(int(acc.numerator), int(acc.denominator))

    def rows(self) -> Iterator[dict]:
        for n, s in self.iter_partials():
            f = s - math.floor(s)
            yield {
                "n": n,
                "floor": self.floors[n - 1],
                "phi": self.phis[n - 1],
                "increment": str(self.increment(n)),
                "S_num": s.numerator,
                "S_den": s.denominator,
                "frac": f"{float(f):.15g}",
            }


def partial_sums(c: ExponentC, n_max: int, workers: int = 1) -> TotientSeries:
    """Totient means along floor(m**c) for m = 1..n_max, exactly."""
    c = ExponentC.of(c)
    if n_max < 1:
        raise DomainError("n_max must be >= 1")
    floors = [floor_power_int(m, c) for m in range(1, n_max + 1)]
    blocks = [(c.numerator, c.denominator, lo, min(lo + 8192, n_max + 1)) for lo in range(1, n_max + 1, 8192)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            phis = [x for part in pool.map(_phi_block, blocks) for x in part]
    else:
        phis = [x for b in blocks for x in _phi_block(b)]
    fixed = []
    acc = 0
    for ph, fl in zip(phis, floors):
        acc += (ph << FIXED_BITS) // fl
        fixed.append(acc)
    final = _exact_sum(phis, floors)
    return TotientSeries(c, n_max, floors, phis, fixed, final)


def _as_fraction(x) -> Fraction:
    # floats are read as the decimal they print as, so 0.3 means 3/10
    return Fraction(repr(x)) if isinstance(x, float) else Fraction(x)


def circle_distance(x, t) -> float | Fraction:
    d = (x - t) % 1
    return min(d, 1 - d)


@dataclass(frozen=True)
class DensityWitness:
    n: int
    frac: Fraction
    target: Fraction
    eps: Fraction

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "frac": str(self.frac),
            "frac_float": float(self.frac),
            "target": float(self.target),
            "eps": float(self.eps),
            "distance": float(circle_distance(self.frac, self.target)),
        }


def density_probe(series: TotientSeries, t, eps) -> DensityWitness | None:
    """Smallest n <= n_max with circle distance ||{S_n} - t|| < eps, confirmed exactly."""
    t, eps = _as_fraction(t), _as_fraction(eps)
    if eps <= 0:
        raise DomainError("eps must be positive")
    fl = series.frac_floats()
    d = np.abs((fl - float(t)) % 1.0)
    d = np.minimum(d, 1.0 - d)
    # fixed-point error is ~n 2**-128, float error ~1e-16; 1e-9 is ample slack
    candidates = np.nonzero(d < float(eps) + 1e-9)[0]
    for i in candidates:
        n = int(i) + 1
        f = series.frac(n)
        if circle_distance(f, t) < eps:
            return DensityWitness(n, f, t, eps)
    return None


# ---------------------------------------------------------------------------
# Large-prime products
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MertensQuery:
    n: int
    alpha: Fraction
    C: Fraction

    def __post_init__(self):
        alpha, C = Fraction(self.alpha), Fraction(self.C)
        if self.n < 1:
            raise DomainError("n must be positive")
        if not 0 < alpha <= 1:
            raise DomainError("alpha must lie in (0, 1]")
        if not 0 < C < min(alpha, 1):
            raise DomainError("C must lie in (0, min(alpha, 1))")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "C", C)


@dataclass(frozen=True)
class MertensResult:
    query: MertensQuery
    threshold: float
    primes: tuple[int, ...]
    value: Fraction

    @property
    def satisfied(self) -> bool:
        return self.value >= self.query.C

    def to_dict(self) -> dict:
        return {
            "n": self.query.n,
            "alpha": str(self.query.alpha),
            "C": str(self.query.C),
            "threshold": self.threshold,
            "primes": self.primes,
            "value": str(self.value),
            "value_float": float(self.value),
            "satisfied": self.satisfied,
        }


def large_prime_product(q: MertensQuery, rho_budget: int = 10**7) -> MertensResult:
    """prod over primes p | n with p >= (log n)**alpha of (1 - 1/p)."""
    with mpmath.workdps(50):
        thr = mpmath.log(q.n) ** (mpmath.mpf(q.alpha.numerator) / q.alpha.denominator)
        ps = tuple(p for p in factorize(q.n, rho_budget) if p >= thr)
        threshold = float(thr)
    value = Fraction(1)
    for p in ps:
        value *= Fraction(p - 1, p)
    return MertensResult(q, threshold, ps, value)


def mertens_violations(ns, alpha=Fraction(3, 4), C=Fraction(1, 2)) -> list[MertensResult]:
    out = []
    for n in ns:
        res = large_prime_product(MertensQuery(int(n), alpha, C))
        if not res.satisfied:
            out.append(res)
    return out


# ---------------------------------------------------------------------------
# Certified Mertens products over prime ranges
# ---------------------------------------------------------------------------

_EXACT_PRODUCT_LIMIT = 10**4
_DPS = 60


def _enclose(x: mpmath.mpf) -> tuple[Fraction, Fraction]:
    man, exp = mpmath.mpf(x).man_exp
    f = Fraction(int(man)) * Fraction(2) ** int(exp)
    slack = Fraction(1, 10 ** (_DPS - 10))
    return f - slack * max(1, abs(f)), f + slack * max(1, abs(f))


def _exp_neg_gamma() -> tuple[Fraction, Fraction]:
    with mpmath.workdps(_DPS):
        return _enclose(mpmath.exp(-mpmath.euler))


def _log_int(a: int) -> tuple[Fraction, Fraction]:
    with mpmath.workdps(_DPS):
        return _enclose(mpmath.log(a))


def mertens_bounds_log(L_lo: Fraction, L_hi: Fraction) -> tuple[Fraction, Fraction]:
    """Bounds on prod_{p <= x} (1 - 1/p) for log x in [L_lo, L_hi], x >= 285.

    Uses e^-g/log x (1 -+ 1/log^2 x), a weakened form of the Rosser-Schoenfeld
    inequalities (which have 1/(2 log^2 x)).
    """
    if L_lo < Fraction(566, 100):
        raise DomainError("explicit Mertens bounds need x >= 285")
    g_lo, g_hi = _exp_neg_gamma()
    lo = g_lo / L_hi * (1 - 1 / (L_lo * L_lo))
    hi = g_hi / L_lo * (1 + 1 / (L_lo * L_lo))
    return lo, hi


def mertens_bounds_int(a: int) -> tuple[Fraction, Fraction]:
    """Bounds on prod_{p <= a} (1 - 1/p); exact for small a."""
    if a < _EXACT_PRODUCT_LIMIT:
        v = Fraction(1)
        for p in primes_up_to(a):
            v *= Fraction(int(p) - 1, int(p))
        return v, v
    return mertens_bounds_log(*_log_int(a))


# ---------------------------------------------------------------------------
# Prime families and the window
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PrimeFamily:
    """Primes for index h: an explicit tuple, or every prime in a range.

    Range families hold the primes p with ``lower < p`` (``lower`` an integer)
    or ``lower_log < log p`` and ``log p <= upper_log``.
    """

    h: int
    base: Fraction  # phi(h)/h
    primes: tuple[int, ...] | None = None
    lower: int | None = None
    lower_log: Fraction | None = None
    upper_log: Fraction | None = None
    ratio_bounds: tuple[Fraction, Fraction] = (Fraction(1), Fraction(1))

    @property
    def explicit(self) -> bool:
        return self.primes is not None

    @property
    def product(self) -> int | None:
        """P_h, the product of the family (1 for an empty family)."""
        return math.prod(self.primes) if self.explicit else None

    @property
    def value_bounds(self) -> tuple[Fraction, Fraction]:
        """Enclosure of (phi(h)/h)(phi(P_h)/P_h)."""
        return self.base * self.ratio_bounds[0], self.base * self.ratio_bounds[1]

    def span(self) -> tuple[tuple[str, object], tuple[str, object]] | None:
        """Lower and upper ends as ("int", a) or ("log", L) markers."""
        if self.explicit:
            if not self.primes:
                return None
            return ("int", min(self.primes)), ("int", max(self.primes))
        lower = ("int", self.lower) if self.lower is not None else ("log", self.lower_log)
        return lower, ("log", self.upper_log)

    def to_dict(self) -> dict:
        out = {
            "h": self.h,
            "phi_h_over_h": str(self.base),
            "explicit": self.explicit,
            "value_bounds": [str(x) for x in self.value_bounds],
            "value_bounds_float": [float(x) for x in self.value_bounds],
        }
        if self.explicit:
            out["primes"] = list(self.primes)
            out["P_h"] = str(self.product)
        else:
            out["range"] = {
                "lower": None if self.lower is None else str(self.lower),
                "lower_log": None if self.lower_log is None else str(self.lower_log),
                "upper_log": str(self.upper_log),
                "upper_log_float": float(self.upper_log),
            }
        return out


@dataclass
class WindowConstruction:
    H: int
    families: list[PrimeFamily]
    L: int | None = None
    R: int | None = None
    r: int | None = None
    ledger: dict[str, bool] = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)

    @property
    def materialized(self) -> bool:
        return self.R is not None

    @property
    def ok(self) -> bool:
        return all(self.ledger.values())

    def family(self, h: int) -> PrimeFamily:
        return self.families[h - 1]

    def to_dict(self) -> dict:
        return {
            "H": self.H,
            "families": [f.to_dict() for f in self.families],
            "L": None if self.L is None else str(self.L),
            "R": None if self.R is None else str(self.R),
            "r": None if self.r is None else str(self.r),
            "materialized": self.materialized,
            "ledger": self.ledger,
            "ok": self.ok,
            "notes": self.notes,
        }


def _range_family(h: int, base: Fraction, H: int, lower: int | None, lower_log: Fraction | None) -> PrimeFamily:
    """Prime range above the given lower end with product landing mid-window."""
    if lower is not None:
        la_lo, la_hi = _log_int(lower)
        P_lo_a, P_hi_a = mertens_bounds_int(lower)
    else:
        la_lo = la_hi = lower_log
        P_lo_a, P_hi_a = mertens_bounds_log(lower_log, lower_log)
    target = Fraction(5, 2) / (H * base)  # middle of [2/H, 3/H] over phi(h)/h
    # prod_{a < p <= b} ~ log a / log b, refined by exact P(a) when available
    with mpmath.workdps(_DPS):
        if lower is not None and lower < _EXACT_PRODUCT_LIMIT:
            g = mpmath.exp(-mpmath.euler)
            estimate = g / (mpmath.mpf(P_lo_a.numerator) / P_lo_a.denominator * mpmath.mpf(target.numerator) / target.denominator)
        else:
            estimate = mpmath.mpf(la_hi.numerator) / la_hi.denominator / (mpmath.mpf(target.numerator) / target.denominator)
    upper_log = Fraction(int(mpmath.floor(estimate * 2**32)), 2**32)
    if upper_log <= la_hi:
        raise DomainError(f"family {h} does not need a prime range")
    P_lo_b, P_hi_b = mertens_bounds_log(upper_log, upper_log)
    ratio = (P_lo_b / P_hi_a, P_hi_b / P_lo_a)
    return PrimeFamily(h, base, None, lower, lower_log, upper_log, ratio)


def _greedy_run(base: Fraction, bound: Fraction, start: int, cap: int):
    """Consecutive primes from ``start`` until base * prod(1 - 1/p) <= bound.

    Returns (primes, exact value, next unused prime) or None past ``cap``.
    The running product is tracked in floats and only confirmed exactly near
    the stopping point, since exact products of many primes get huge.
    """
    chosen: list[int] = []
    log_v, target = math.log(base), math.log(bound)
    q = start
    while True:
        if log_v <= target + 1e-9:
            num = math.prod(x - 1 for x in chosen)
            den = math.prod(chosen)
            v = base * Fraction(num, den)
            if v <= bound:
                return chosen, v, q
        if q > cap:
            return None
        chosen.append(q)
        log_v += math.log1p(-1 / q)
        q = next_prime(q)


def build_prime_families(H: int, *, allow_small: bool = False, enumeration_cap: int = 10**6) -> WindowConstruction:
    """Greedy disjoint prime families for h = 1..H, then L, R and r when enumerable.

    H >= 21 guarantees phi(h)/h > 3/H for all h <= H and that the greedy stop
    lands inside [2/H, 3/H]; smaller H needs ``allow_small`` and may fail the
    window, which is recorded in the ledger rather than raised.
    """
    if H < 1:
        raise DomainError("H must be positive")
    if H < 21 and not allow_small:
        raise DomainError("H >= 21 is required (pass allow_small for toy runs)")
    hi_win, lo_win = Fraction(3, H), Fraction(2, H)
    families: list[PrimeFamily] = []
    last = H  # every prime used so far is <= last
    last_log: Fraction | None = None
    ranged = False
    p = next_prime(H)
    for h in range(1, H + 1):
        base = Fraction(euler_phi(h), h)
        if not ranged:
            run = _greedy_run(base, hi_win, p, enumeration_cap)
            if run is not None:
                chosen, v, p = run
                families.append(PrimeFamily(h, base, tuple(chosen), ratio_bounds=(v / base, v / base)))
                if chosen:
                    last = chosen[-1]
                continue
            ranged = True
        if base <= hi_win:
            families.append(PrimeFamily(h, base, ()))
            continue
        fam = _range_family(h, base, H, None if last_log is not None else last, last_log)
        families.append(fam)
        last_log = fam.upper_log
    w = WindowConstruction(H, families)
    _check_families(w)
    if ranged:
        w.notes.append(
            "families past the enumeration cap are prime ranges with certified products; "
            "L, R and r are not materialized"
        )
    else:
        _materialize(w)
    if H < 21:
        w.notes.append("toy mode: H < 21, the block-existence guarantee does not apply at this scale")
    return w


def _below(x: tuple[str, object], y: tuple[str, object], touching_ok: bool) -> bool:
    """Certified x < y (or x <= y when touching_ok) between int and log ends."""
    (kx, vx), (ky, vy) = x, y
    if kx == ky:
        return vx <= vy if touching_ok else vx < vy
    if kx == "int":
        return _log_int(vx)[1] < vy if not touching_ok else _log_int(vx)[1] <= vy
    return vx < _log_int(vy)[0] if not touching_ok else vx <= _log_int(vy)[0]


def _check_families(w: WindowConstruction) -> None:
    H = w.H
    fams = w.families
    disjoint = True
    spans = [f.span() for f in fams]
    for i in range(len(fams)):
        for j in range(i + 1, len(fams)):
            a, b = fams[i], fams[j]
            if a.explicit and b.explicit:
                if set(a.primes) & set(b.primes):
                    disjoint = False
            elif spans[i] is not None and spans[j] is not None:
                if not (_below(spans[i][1], spans[j][0], not b.explicit) or _below(spans[j][1], spans[i][0], not a.explicit)):
                    disjoint = False
    above_H = True
    for f in fams:
        if f.explicit:
            above_H &= all(q > H for q in f.primes)
        elif f.lower is not None:
            above_H &= f.lower >= H
        else:
            above_H &= f.lower_log >= _log_int(H)[1]
    window = all(Fraction(2, H) <= f.value_bounds[0] and f.value_bounds[1] <= Fraction(3, H) for f in fams)
    w.ledger["disjoint_families"] = disjoint
    w.ledger["primes_exceed_H"] = above_H
    w.ledger["window_2H_3H"] = window


def _materialize(w: WindowConstruction) -> None:
    H = w.H
    used = [q for f in w.families for q in f.primes]
    w.L = next_prime(max([H] + used))
    R = math.factorial(H)
    for q in primes_up_to(w.L):
        if int(q) > H:
            R *= int(q)
    w.R = R
    prods = [f.product for f in w.families]
    congruences = [((-h) % P, P) for h, P in enumerate(prods, start=1) if P > 1]
    rest = R // math.prod(prods)
    w.r = crt_residue(congruences, rest).r
    w.ledger["L_exceeds_family_primes"] = all(q < w.L for q in used)
    w.ledger["r_congruences"] = all((w.r + h) % P == 0 for h, P in enumerate(prods, start=1)) and w.r % rest == 0


@dataclass(frozen=True)
class CrtResult:
    r: int
    modulus: int

    def to_dict(self) -> dict:
        return {"r": self.r, "modulus": self.modulus}


def crt_residue(congruences: Sequence[tuple[int, int]], extra_zero_modulus: int = 1) -> CrtResult:
    """Unique r mod prod(m_i) with r = a_i (mod m_i) and r = 0 (mod extra)."""
    system = [(int(a), int(m)) for a, m in congruences]
    if extra_zero_modulus != 1:
        system.append((0, int(extra_zero_modulus)))
    for _, m in system:
        if m < 1:
            raise DomainError(f"modulus {m} must be positive")
    for i in range(len(system)):
        for j in range(i + 1, len(system)):
            if math.gcd(system[i][1], system[j][1]) != 1:
                raise DomainError(f"moduli {system[i][1]} and {system[j][1]} are not coprime")
    r, M = 0, 1
    for a, m in system:
        # r + M t = a (mod m)
        t = (a - r) * pow(M, -1, m) % m if m > 1 else 0
        r, M = r + M * t, M * m
    r %= M
    assert all((r - a) % m == 0 for a, m in system)
    return CrtResult(r, M)


@dataclass
class WindowRow:
    h: int
    n: int
    congruence_ok: bool
    gcd_ok: bool
    phi_ratio: Fraction | None = None
    fundam_ok: bool | None = None
    large_prime_product: Fraction | None = None
    ouf_ok: bool | None = None
    error: str | None = None

    @property
    def ok(self) -> bool:
        """The conclusions; congruence_ok is the hypothesis and reported apart."""
        return self.gcd_ok and bool(self.fundam_ok) and bool(self.ouf_ok)

    def to_dict(self) -> dict:
        return {
            "h": self.h,
            "n": str(self.n),
            "congruence_ok": self.congruence_ok,
            "gcd_ok": self.gcd_ok,
            "phi_ratio": None if self.phi_ratio is None else str(self.phi_ratio),
            "phi_ratio_float": None if self.phi_ratio is None else float(self.phi_ratio),
            "fundam_ok": self.fundam_ok,
            "large_prime_product": None if self.large_prime_product is None else str(self.large_prime_product),
            "ouf_ok": self.ouf_ok,
            "error": self.error,
            "ok": self.ok,
        }


@dataclass
class WindowVerification:
    H: int
    m: int | None
    rows: list[WindowRow]

    @property
    def ok(self) -> bool:
        return all(r.ok for r in self.rows)

    @property
    def congruent(self) -> bool:
        return all(r.congruence_ok for r in self.rows)

    def to_dict(self) -> dict:
        return {
            "H": self.H,
            "m": self.m,
            "congruent": self.congruent,
            "ok": self.ok,
            "rows": [r.to_dict() for r in self.rows],
        }


def verify_window_values(w: WindowConstruction, values: Sequence[int], m: int | None = None, rho_budget: int = 10**7) -> WindowVerification:
    """Check gcd(n_h, R) = h P_h, 1/H <= phi(n_h)/n_h <= 3/H and the large-prime product >= 1/2."""
    if not w.materialized:
        raise DomainError("window is not materialized (families were given as prime ranges)")
    if len(values) != w.H:
        raise DomainError(f"expected {w.H} values, got {len(values)}")
    rows = []
    for h, n in enumerate(values, start=1):
        P = w.family(h).product
        row = WindowRow(h, n, n % w.R == (w.r + h) % w.R, math.gcd(n, w.R) == h * P)
        try:
            fac = factorize(n, rho_budget)
        except FactorizationBudgetExceeded as exc:
            row.error = str(exc)
            rows.append(row)
            continue
        ratio = Fraction(1)
        big = Fraction(1)
        for q in fac:
            ratio *= Fraction(q - 1, q)
            if q > w.L:
                big *= Fraction(q - 1, q)
        row.phi_ratio = ratio
        row.fundam_ok = Fraction(1, w.H) <= ratio <= Fraction(3, w.H)
        row.large_prime_product = big
        row.ouf_ok = big >= Fraction(1, 2)
        rows.append(row)
    return WindowVerification(w.H, m, rows)


def verify_window(w: WindowConstruction, m: int, c: ExponentC, rho_budget: int = 10**7) -> WindowVerification:
    c = ExponentC.of(c)
    values = [floor_power_int(m + h, c) for h in range(1, w.H + 1)]
    return verify_window_values(w, values, m, rho_budget)
