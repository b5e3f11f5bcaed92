"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line."""

import math
import random
import time
from fractions import Fraction

import mpmath
import numpy as np

from oracle import grid_discrepancy, mp_floor_pow, sieve_phi
from spsdense.blocks import find_ap_blocks_all, fracgame_scan
from spsdense.discrepancy import (
    EtksParams,
    PointSet,
    build_taylor_pointset,
    etks_bound,
    exact_discrepancy,
    exp_sums,
    trig_sums,
)
from spsdense.numeric import ExponentC, check_taylor_remainder, congfrac_window, floor_pow, frac, gamma_list
from spsdense.primes import is_prime, next_prime
from spsdense.totient import (
    build_prime_families,
    crt_residue,
    density_probe,
    euler_phi,
    mertens_violations,
    partial_sums,
    verify_window_values,
)

EXPONENTS = ["3/2", "5/2", "7/3", "11/10"]


def test_c01_floor_certification(criterion):
    t0 = time.time()
    mismatches, exact_hits = [], 0
    for cs in EXPONENTS:
        c = ExponentC.parse(cs)
        for m in range(1, 10**4 + 1):
            res = floor_pow(m, c)
            want = mp_floor_pow(m, c.numerator, c.denominator, dps=250)
            if res.floor_value != want or not res.certify():
                mismatches.append((cs, m, res.floor_value, want))
            exact_hits += res.exact_integer
    assert floor_pow(4, "3/2").floor_value == 8 and floor_pow(4, "3/2").exact_integer
    elapsed = time.time() - t0
    ok = not mismatches and elapsed <= 60
    criterion(1, "floor certification vs 250-digit oracle", ok,
              f"4 exponents x 10^4 m, {len(mismatches)} mismatches, {exact_hits} exact powers, {elapsed:.1f}s")
    assert ok, mismatches[:5]


def _rand_frac(rng, lo=-1000, hi=1000):
    den = rng.randrange(1, 10**6)
    return Fraction(rng.randrange(lo * den, hi * den), den)


def test_c02_elementary_identities(criterion):
    rng = random.Random(2024)
    fails = {"multfrac": 0, "sumint": 0, "mult": 0, "congfrac": 0}
    n = 10**4
    for _ in range(n):
        x, ell = _rand_frac(rng), rng.randrange(1, 100)
        if not (math.floor(ell * x) >= ell * math.floor(x) and frac(ell * x) <= ell * frac(x)):
            fails["multfrac"] += 1
    for _ in range(n):
        # integer parts free, fractional parts drawn to sum below 1
        k = rng.randrange(1, 8)
        cuts = sorted(Fraction(rng.randrange(10**6), 10**6) for _ in range(k))
        fr = [b - a for a, b in zip([Fraction(0)] + cuts[:-1], cuts)]
        xs = [rng.randrange(-10**6, 10**6) + f for f in fr]
        if sum(frac(x) for x in xs) < 1 and math.floor(sum(xs)) != sum(math.floor(x) for x in xs):
            fails["sumint"] += 1
    for _ in range(n):
        ell = rng.randrange(1, 100)
        x = rng.randrange(-10**6, 10**6) + Fraction(rng.randrange(10**6), 10**6 * ell)
        if ell * frac(x) < 1 and math.floor(ell * x) != ell * math.floor(x):
            fails["mult"] += 1
    for _ in range(n):
        R = rng.randrange(1, 200)
        r = rng.randrange(R)
        u = Fraction(rng.randrange(1, 10**6 + 1), 10**6)
        # place {x/R} inside [r/R, (r+u)/R)
        y = Fraction(r, R) + Fraction(rng.randrange(10**6), 10**6) * u / R
        x = R * (rng.randrange(0, 10**6) + y)
        if not congfrac_window(x, R, r, u) or not (math.floor(x) % R == r and frac(x) < u):
            fails["congfrac"] += 1
    ok = not any(fails.values())
    criterion(2, "elementary identities on 10^4 rationals each", ok, ", ".join(f"{k}: {v} failures" for k, v in fails.items()))
    assert ok


def test_c03_taylor_remainder(criterion):
    rng = random.Random(3)
    violations = []
    oracle_violations = []
    for _ in range(1000):
        cs = rng.choice(EXPONENTS)
        c = ExponentC.parse(cs)
        m, h = rng.randrange(1, 10**6 + 1), rng.randrange(0, 21)
        if not check_taylor_remainder(m, h, c):
            violations.append((cs, m, h))
        with mpmath.workdps(80):
            cv = mpmath.mpf(c.numerator) / c.denominator
            poly = mpmath.fsum(
                mpmath.mpf(g.numerator) / g.denominator * mpmath.mpf(h) ** ell * mpmath.power(m, cv - ell)
                for ell, g in enumerate(gamma_list(c))
            )
            rem = mpmath.power(m + h, cv) - poly
            bound = mpmath.mpf(h) ** (c.floor_c + 1) * mpmath.power(m, cv - c.floor_c - 1)
            slack = mpmath.power(m + h, cv) * mpmath.mpf(10) ** -70
            if rem < -slack or rem > bound + slack:
                oracle_violations.append((cs, m, h))
    ok = not violations and not oracle_violations
    criterion(3, "Taylor remainder in [0, h^(floor c + 1) m^({c}-1)]", ok,
              f"1000 instances, enclosure route {len(violations)} / 80-digit route {len(oracle_violations)} violations")
    assert ok


def test_c04_condition_system_soundness(criterion):
    t0 = time.time()
    scan = fracgame_scan("3/2", range(1, 51), range(1, 5), 10**5)
    per_H = {H: sum(v for (R, HH), v in scan.instances.items() if HH == H) for H in range(1, 5)}
    ok = not scan.counterexamples and scan.total_instances > 0
    criterion(4, "all four conditions imply the block congruence", ok,
              f"R<=50, H<=4, m<=1e5: {scan.total_instances} instances (by H {per_H}), "
              f"{len(scan.counterexamples)} counterexamples, {time.time() - t0:.1f}s")
    assert ok, scan.counterexamples[:5]


def test_c05_etks_inequality(criterion):
    t0 = time.time()
    rng = random.Random(5)
    violations = []
    for i in range(500):
        s = rng.choice([1, 2])
        N = rng.randrange(1, 65)
        K = rng.randrange(1, 9)
        X = PointSet.of([[Fraction(rng.randrange(2**20), 2**20) for _ in range(s)] for _ in range(N)])
        d = exact_discrepancy(X)
        b = etks_bound(X, K).bound
        if float(d) > b:
            violations.append((i, s, N, K, float(d), b))
    structured = []
    for R in (3, 5, 7):
        X = build_taylor_pointset("3/2", R, 256)
        d = exact_discrepancy(X)
        sums = trig_sums(X, EtksParams(8, X.s).lattice())
        bounds = [etks_bound(X, K, sums).bound for K in range(1, 9)]
        structured.append((R, float(d), min(bounds)))
        if float(d) > min(bounds):
            violations.append(("taylor", R, float(d), min(bounds)))
    elapsed = time.time() - t0
    ok = not violations and elapsed <= 300
    detail = "; ".join(f"R={R}: D={d:.4f} <= {b:.3f}" for R, d, b in structured)
    criterion(5, "exact discrepancy <= ETKS bound", ok,
              f"500 random sets + Taylor-coefficient point sets N=256 ({detail}), {len(violations)} violations, {elapsed:.1f}s")
    assert ok, violations[:5]


def test_c06_exact_discrepancy_vs_grid_oracle(criterion):
    rng = random.Random(6)
    mismatches = []
    cases = 0
    for s, n_max, reps in ((1, 64, 3), (2, 24, 3)):
        for N in range(1, n_max + 1):
            for _ in range(reps):
                den = rng.choice([8, 60, 2**20])
                X = PointSet.of([[Fraction(rng.randrange(den), den) for _ in range(s)] for _ in range(N)])
                cases += 1
                if exact_discrepancy(X) != grid_discrepancy(list(X.points)):
                    mismatches.append((s, N))
    ok = not mismatches
    criterion(6, "exact discrepancy equals critical-grid oracle", ok,
              f"{cases} sets (s=1 N<=64, s=2 N<=24), {len(mismatches)} mismatches")
    assert ok, mismatches[:5]


def test_c07_block_existence(criterion):
    t0 = time.time()
    total = covered = 0
    bad = []
    for H in (1, 2):
        for R in range(2, 21):
            found = find_ap_blocks_all("3/2", R, H, 10**7)
            total += R
            covered += len(found)
            for r, w in found.items():
                # independent floors: floor(n^1.5) = isqrt(n^3)
                if not w.verified or any(math.isqrt((w.m + h) ** 3) % R != (r + h) % R for h in range(1, H + 1)):
                    bad.append((R, H, r, w.m))
    elapsed = time.time() - t0
    coverage = covered / total
    ok = coverage >= 0.9 and not bad and elapsed <= 600
    criterion(7, "block witnesses for c=3/2, H in {1,2}, R in 2..20", ok,
              f"coverage {covered}/{total} = {coverage:.1%}, {len(bad)} failed re-verifications, {elapsed:.1f}s")
    assert ok


def test_c08_exponential_sums(criterion, record_table):
    ks = [(0, 0)] + EtksParams(3, 2).lattice()
    issues = []
    lines = ["N      k        |S|          |S|/N^(1-theta)  float-vs-mp"]
    for N in (10**2, 10**3, 10**4):
        lo = exp_sums("3/2", N, 3, ks, tol=1e-6)
        hi = exp_sums("3/2", N, 3, ks, tol=1e-13)
        if lo[0].value != N or hi[0].value != N:
            issues.append(("k=0", N))
        for a, b in zip(lo[1:], hi[1:]):
            diff = abs(a.value - b.value)
            if a.abs > N + 1e-9 or diff > 1e-6 or b.value_mp is None:
                issues.append((N, a.spec.k, a.abs, diff))
            lines.append(f"{N:<6} {str(a.spec.k):<8} {a.abs:12.6f} {a.ratio:16.6f} {diff:12.2e}")
    record_table("exp-sum ratio table (c=3/2, R=3)", "\n".join(lines))
    ok = not issues
    criterion(8, "exponential sums: |S|<=N, S(0)=N, float and mp paths agree", ok,
              f"3 sizes x {len(ks)} k, {len(issues)} issues; ratio table in report")
    assert ok, issues[:5]


def test_c09_totient_suite(criterion, record_table):
    t0 = time.time()
    table = sieve_phi(10**6)
    phi_bad = [n for n in range(1, 10**6 + 1) if euler_phi(n) != table[n]]
    series = partial_sums("3/2", 10**5)
    # exact value sits in the independent fixed-point enclosure
    T = series.fixed[-1]
    enclosed = Fraction(T, 1 << series.bits) <= series.final < Fraction(T + series.n_max, 1 << series.bits)
    floors_ok = all(series.floors[n - 1] == math.isqrt(n**3) for n in range(1, 10**5 + 1, 97))
    rows, rechecked = [], True
    for i in range(10):
        t = Fraction(i, 10)
        w = density_probe(series, t, Fraction(1, 20))
        if w is None:
            rows.append(f"t={float(t):.1f}: none up to n={series.n_max}")
            continue
        exact = sum((Fraction(int(table[math.isqrt(k**3)]), math.isqrt(k**3)) for k in range(1, w.n + 1)), Fraction(0))
        f = frac(exact)
        d = min((f - t) % 1, (t - f) % 1)
        rechecked &= f == w.frac and d < Fraction(1, 20)
        rows.append(f"t={float(t):.1f}: n={w.n}, {{S_n}}={float(w.frac):.6f}")
    record_table("density probe witnesses (c=3/2, eps=0.05)", "\n".join(rows))
    elapsed = time.time() - t0
    ok = not phi_bad and enclosed and floors_ok and rechecked and elapsed <= 600
    covered = sum("n=" in r and "none" not in r for r in rows)
    criterion(9, "totient sieve, exact partial sums, density witnesses", ok,
              f"phi mismatches {len(phi_bad)} (n<=1e6), S_1e5 exact with {series.final.denominator.bit_length()}-bit "
              f"denominator, coverage {covered}/10, witnesses re-verified {rechecked}, {elapsed:.1f}s")
    assert ok


def _crt_numpy(pairs):
    M = math.prod(m for _, m in pairs)
    r = np.arange(M, dtype=np.int64)
    mask = np.ones(M, dtype=bool)
    for a, m in pairs:
        mask &= r % m == a % m
    hits = np.nonzero(mask)[0]
    return int(hits[0]) if len(hits) else None


def test_c10_window_machinery(criterion):
    t0 = time.time()
    family_fail = []
    for H in range(21, 61):
        w = build_prime_families(H)
        if not w.ok:
            family_fail.append((H, w.ledger))
        for f in w.families:
            lo, hi = f.value_bounds
            if not (Fraction(2, H) <= lo <= hi <= Fraction(3, H)):
                family_fail.append((H, f.h))

    rng = random.Random(10)
    crt_bad = 0
    for _ in range(60):
        mods, M = [], 1
        for _ in range(rng.randrange(1, 5)):
            m = rng.randrange(2, 200)
            if all(math.gcd(m, x) == 1 for x in mods) and M * m <= 10**6:
                mods.append(m)
                M *= m
        pairs = [(rng.randrange(-10**4, 10**4), m) for m in mods]
        if crt_residue(pairs).r != _crt_numpy(pairs):
            crt_bad += 1

    synth_ok, perturb_caught, perturb_total = True, 0, 0
    for H in (4, 5, 6):
        w = build_prime_families(H, allow_small=True)
        for _ in range(3):
            q = next_prime(w.L + rng.randrange(1, 10**6))
            good = [h * w.family(h).product * q for h in range(1, H + 1)]
            synth_ok &= verify_window_values(w, good).ok
            # perturbation 1: a prime from another family
            donors = [f for f in w.families if f.primes]
            other = rng.choice(donors)
            h = rng.choice([g for g in range(1, H + 1) if g != other.h])
            bad = list(good)
            bad[h - 1] *= other.primes[0]
            perturb_total += 1
            perturb_caught += not verify_window_values(w, bad).rows[h - 1].gcd_ok
            # perturbation 2: enough primes just above L to push the large-prime product below 1/2;
            # that needs primes up to about L^2, so only the smallest window is affordable
            if w.L > 100:
                continue
            bad = list(good)
            extra, p, prod = 1, w.L, Fraction(1)
            while prod >= Fraction(1, 2):
                p = next_prime(p)
                extra *= p
                prod *= Fraction(p - 1, p)
            bad[h - 1] *= extra
            rep = verify_window_values(w, bad)
            perturb_total += 1
            perturb_caught += not rep.rows[h - 1].ouf_ok and not rep.ok

    ns = [rng.randrange(10**5, 10**6 + 1) for _ in range(10**4)]
    violations = mertens_violations(ns, alpha=Fraction(3, 4), C=Fraction(1, 2))
    elapsed = time.time() - t0
    ok = not family_fail and crt_bad == 0 and synth_ok and perturb_caught == perturb_total and not violations
    criterion(10, "window machinery", ok,
              f"families H=21..60 certified ({len(family_fail)} failures), CRT {crt_bad}/60 mismatches, "
              f"synthetic pass {synth_ok}, perturbations caught {perturb_caught}/{perturb_total}, "
              f"large-prime product violations {len(violations)}/10^4 in [1e5,1e6], {elapsed:.1f}s")
    assert ok
