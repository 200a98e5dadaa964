"""Prime sieves and factorization tables.

Everything here is plain numpy; the arrays are built once per run and shared.
Sizes are desk scale (limits up to a few times 10**7), so a flat boolean
sieve beats anything segmented.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import NotPrime, TooLargeToFactor


def primes_up_to(limit: int) -> np.ndarray:
    """All primes p <= limit as an int64 array (empty for limit < 2)."""
    if limit < 2:
        return np.empty(0, dtype=np.int64)
    mask = np.ones(limit + 1, dtype=bool)
    mask[:2] = False
    for p in range(2, math.isqrt(limit) + 1):
        if mask[p]:
            mask[p * p :: p] = False
    return np.nonzero(mask)[0].astype(np.int64)


def primes_in_interval(lo, hi) -> np.ndarray:
    """Primes p with lo < p <= hi."""
    ps = primes_up_to(int(math.floor(hi)))
    return ps[ps > lo]


def spf_array(limit: int) -> np.ndarray:
    """Smallest-prime-factor table, spf[n] for 0 <= n <= limit.

    spf[0] = 0 and spf[1] = 1 by convention; spf[n] = n exactly when n is
    prime.  int32 is enough for any table we build.
    """
    spf = np.zeros(limit + 1, dtype=np.int32)
    if limit >= 1:
        spf[1] = 1
    for p in range(2, math.isqrt(limit) + 1):
        if spf[p] == 0:
            sl = spf[p::p]
            spf[p::p] = np.where(sl == 0, p, sl)
    # whatever is still untouched has no factor <= sqrt(limit), hence prime
    left = np.nonzero(spf == 0)[0]
    spf[left] = left.astype(np.int32)
    if limit >= 0:
        spf[0] = 0
    return spf


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n < 4:
        return True
    if n % 2 == 0:
        return False
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


def factorize(n: int, max_trial: int = 10**7):
    """Factor n > 0 into a sorted list of (prime, exponent) pairs.

    Trial division only; raises TooLargeToFactor when a composite cofactor
    survives division by everything <= max_trial.  Desk-scale inputs are
    smooth, so this never triggers in practice.
    """
    if n <= 0:
        raise ValueError("factorize expects a positive integer")
    out = []
    m = n
    p = 2
    while p * p <= m and p <= max_trial:
        if m % p == 0:
            e = 0
            while m % p == 0:
                m //= p
                e += 1
            out.append((p, e))
        p += 1 if p == 2 else 2
    if m > 1:
        if m > max_trial and not is_prime(m):
            raise TooLargeToFactor(f"composite cofactor {m} exceeds trial bound")
        out.append((m, 1))
    return out


def squarefree_mask(limit: int) -> np.ndarray:
    """Boolean array sf[0..limit], sf[n] true iff n is squarefree (sf[0] false)."""
    sf = np.ones(limit + 1, dtype=bool)
    sf[0] = False
    for p in range(2, math.isqrt(limit) + 1):
        sf[p * p :: p * p] = False
    return sf


def require_prime(p: int) -> None:
    if not is_prime(p):
        raise NotPrime(f"{p} is not prime")
