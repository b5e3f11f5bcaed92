"""Prime sieving, primality and factorization with an explicit budget."""

from __future__ import annotations

import math
from functools import lru_cache

import gmpy2
import numpy as np

from .numeric import BudgetExceeded, DomainError

TRIAL_LIMIT = 10**6
# Miller-Rabin with the first 13 prime bases is deterministic below this bound
_MR_DETERMINISTIC = 3317044064679887385961981
_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41)


class FactorizationBudgetExceeded(BudgetExceeded):
    def __init__(self, n: int, cofactor: int):
        super().__init__(f"could not split cofactor {cofactor} of {n} within budget")
        self.n = n
        self.cofactor = cofactor


def primes_up_to(n: int) -> np.ndarray:
    """All primes <= n (Eratosthenes on a byte array)."""
    if n < 2:
        return np.zeros(0, dtype=np.int64)
    sieve = np.ones(n + 1, dtype=bool)
    sieve[:2] = False
    sieve[4::2] = False
    for p in range(3, math.isqrt(n) + 1, 2):
        if sieve[p]:
            sieve[p * p :: 2 * p] = False
    return np.nonzero(sieve)[0]


@lru_cache(maxsize=1)
def _small_primes() -> tuple[int, ...]:
    return tuple(int(p) for p in primes_up_to(TRIAL_LIMIT))


def is_prime(n: int) -> bool:
    """Deterministic below 3.3e24; BPSW beyond (no known counterexample)."""
    if n < 2:
        return False
    for p in _MR_BASES:
        if n % p == 0:
            return n == p
    if n >= _MR_DETERMINISTIC:
        return bool(gmpy2.is_bpsw_prp(n))
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in _MR_BASES:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def next_prime(n: int) -> int:
    """Smallest prime > n."""
    return int(gmpy2.next_prime(n)) if n >= 2 else 2


def _brent(n: int, budget: int, seed: int = 1) -> int | None:
    """Pollard-Brent rho; a non-trivial factor of composite n or None."""
    if n % 2 == 0:
        return 2
    for c in range(seed, seed + 8):
        y, r, q, g = 2, 1, 1, 1
        steps = 0
        x = ys = y
        while g == 1:
            x = y
            for _ in range(r):
                y = (y * y + c) % n
            k = 0
            while k < r and g == 1:
                ys = y
                for _ in range(min(128, r - k)):
                    y = (y * y + c) % n
                    q = q * abs(x - y) % n
                g = math.gcd(q, n)
                k += 128
            r *= 2
            steps += r
            if steps > budget:
                return None
        if g == n:
            g = 1
            while g == 1:
                ys = (ys * ys + c) % n
                g = math.gcd(abs(x - ys), n)
        if g != n:
            return g
    return None


def factorize(n: int, rho_budget: int = 10**7) -> dict[int, int]:
    """Prime factorization {p: e}; raises FactorizationBudgetExceeded if stuck."""
    if n < 1:
        raise DomainError("factorize needs a positive integer")
    out: dict[int, int] = {}
    m = n
    for p in _small_primes():
        if p * p > m:
            break
        if m % p == 0:
            e = 0
            while m % p == 0:
                m //= p
                e += 1
            out[p] = e
    if m == 1:
        return out
    stack = [m]
    while stack:
        x = stack.pop()
        if x == 1:
            continue
        # every prime below the trial limit is gone, so small x is prime
        if x < TRIAL_LIMIT * TRIAL_LIMIT or is_prime(x):
            out[x] = out.get(x, 0) + 1
            continue
        root, exact = gmpy2.iroot(x, 2)
        if exact:
            stack.extend([int(root), int(root)])
            continue
        f = _brent(x, rho_budget)
        if f is None:
            raise FactorizationBudgetExceeded(n, x)
        stack.extend([f, x // f])
    return dict(sorted(out.items()))


def prime_factors(n: int, rho_budget: int = 10**7) -> list[int]:
    return list(factorize(n, rho_budget))
