"""Elliptic curve reduction data and normalized Hecke eigenvalues.

Curves are taken from a small built-in registry (plain-text records
``label a1 a2 a3 a4 a6 N eps reduction_types``) or parsed from a user file
in the same format.  Reduction types at bad primes are part of the record;
no conductor or Tate-style computation happens here.

Eigenvalues are stored in the analytic normalization, |a(p)| <= 2 at good
primes, so every downstream formula can use them without rescaling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, Mapping

import numpy as np

from .errors import BadReduction, GoodReduction, NotPrime, OverBound
from .primes import factorize, is_prime, primes_up_to, spf_array

REDUCTION_KINDS = ("split", "nonsplit", "additive")

# naive point counting is O(p); this keeps a single call from running away
POINT_COUNT_MAX_P = 200_000


@dataclass(frozen=True)
class EllipticCurve:
    """Integral Weierstrass model plus precomputed reduction data.

    reduction maps each prime dividing the conductor to one of
    "split", "nonsplit", "additive".
    """

    label: str
    a1: int
    a2: int
    a3: int
    a4: int
    a6: int
    N: int
    eps_global: int
    reduction: Mapping[int, str]

    def __post_init__(self):
        if self.discriminant == 0:
            raise ValueError(f"{self.label}: singular model")
        if self.eps_global not in (-1, +1):
            raise ValueError(f"{self.label}: eps_global must be +1 or -1")
        if self.N < 1:
            raise ValueError(f"{self.label}: conductor must be positive")
        bad = {p for p, _ in factorize(self.N)}
        if set(self.reduction) != bad:
            raise ValueError(
                f"{self.label}: reduction data covers {sorted(self.reduction)}, "
                f"conductor has prime divisors {sorted(bad)}"
            )
        for p, kind in self.reduction.items():
            if kind not in REDUCTION_KINDS:
                raise ValueError(f"{self.label}: unknown reduction kind {kind!r}")

    @property
    def b_invariants(self):
        a1, a2, a3, a4, a6 = self.a1, self.a2, self.a3, self.a4, self.a6
        b2 = a1 * a1 + 4 * a2
        b4 = 2 * a4 + a1 * a3
        b6 = a3 * a3 + 4 * a6
        b8 = a1 * a1 * a6 + 4 * a2 * a6 - a1 * a3 * a4 + a2 * a3 * a3 - a4 * a4
        return b2, b4, b6, b8

    @property
    def c_invariants(self):
        b2, b4, b6, _ = self.b_invariants
        c4 = b2 * b2 - 24 * b4
        c6 = -(b2 ** 3) + 36 * b2 * b4 - 216 * b6
        return c4, c6

    @property
    def discriminant(self) -> int:
        b2, b4, b6, b8 = self.b_invariants
        return -b2 * b2 * b8 - 8 * b4 ** 3 - 27 * b6 * b6 + 9 * b2 * b4 * b6

    @property
    def N0(self) -> int:
        """lcm of the conductor with 8; the modulus all twist residues live in."""
        return math.lcm(self.N, 8)

    def is_good(self, p: int) -> bool:
        return self.N % p != 0


# ---------------------------------------------------------------------------
# registry

_REGISTRY_TEXT = """\
# label a1 a2 a3 a4 a6 N eps reduction_types
11a1 0 -1 1 -10 -20 11 +1 11:split
37a1 0 0 1 -1 0 37 -1 37:split
27a1 0 0 1 0 -7 27 +1 3:additive
"""


def _parse_line(line: str) -> EllipticCurve:
    parts = line.split()
    if len(parts) != 9:
        raise ValueError(f"malformed registry record: {line!r}")
    label = parts[0]
    a1, a2, a3, a4, a6, N = (int(t) for t in parts[1:7])
    eps = int(parts[7])
    reduction: Dict[int, str] = {}
    for item in parts[8].split(","):
        p_str, kind = item.split(":")
        reduction[int(p_str)] = kind
    return EllipticCurve(label, a1, a2, a3, a4, a6, N, eps, reduction)


def parse_registry(text: str) -> Dict[str, EllipticCurve]:
    out: Dict[str, EllipticCurve] = {}
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        curve = _parse_line(line)
        out[curve.label] = curve
    return out


def load_registry(path) -> Dict[str, EllipticCurve]:
    """Parse a user-supplied registry file (same record format as built-ins)."""
    with open(path, "r", encoding="utf-8") as fh:
        return parse_registry(fh.read())


_BUILTIN = parse_registry(_REGISTRY_TEXT)


def curve_by_label(label: str) -> EllipticCurve:
    try:
        return _BUILTIN[label]
    except KeyError:
        raise KeyError(
            f"unknown curve {label!r}; built-ins: {sorted(_BUILTIN)}"
        ) from None


def builtin_labels():
    return sorted(_BUILTIN)


# ---------------------------------------------------------------------------
# point counting and eigenvalues

def _ap_unnormalized(curve: EllipticCurve, p: int) -> int:
    """Trace of Frobenius p + 1 - #E(F_p) at a good prime, by direct count."""
    if p == 2:
        count = 1  # point at infinity
        for x in range(2):
            for y in range(2):
                lhs = y * y + curve.a1 * x * y + curve.a3 * y
                rhs = x ** 3 + curve.a2 * x * x + curve.a4 * x + curve.a6
                if (lhs - rhs) % 2 == 0:
                    count += 1
        return 3 - count
    # odd p: complete the square, #E = 1 + p + sum_x chi(4x^3+b2 x^2+2b4 x+b6)
    b2, b4, b6, _ = curve.b_invariants
    x = np.arange(p, dtype=np.int64)
    f = (4 * x ** 3 + (b2 % p) * x * x + ((2 * b4) % p) * x + b6) % p
    chi = np.full(p, -1, dtype=np.int64)
    chi[(x * x) % p] = 1
    chi[0] = 0
    return int(-chi[f].sum())


def ap_good(curve: EllipticCurve, p: int) -> float:
    """Normalized eigenvalue (p + 1 - #E(F_p)) / sqrt(p) at a good prime."""
    if not is_prime(p):
        raise NotPrime(f"{p} is not prime")
    if not curve.is_good(p):
        raise BadReduction(f"{p} divides the conductor of {curve.label}")
    if p > POINT_COUNT_MAX_P:
        raise OverBound(f"p={p} exceeds point-count limit {POINT_COUNT_MAX_P}")
    return _ap_unnormalized(curve, p) / math.sqrt(p)


def ap_bad(curve: EllipticCurve, p: int) -> float:
    """Normalized eigenvalue at a prime dividing the conductor.

    Split multiplicative reduction gives +1/sqrt(p), non-split -1/sqrt(p),
    additive 0.
    """
    if curve.is_good(p):
        raise GoodReduction(f"{p} does not divide the conductor of {curve.label}")
    kind = curve.reduction[p]
    if kind == "split":
        return 1.0 / math.sqrt(p)
    if kind == "nonsplit":
        return -1.0 / math.sqrt(p)
    return 0.0


@dataclass(frozen=True)
class HeckeTable:
    """Normalized a(p) for all p <= bound.  Built once, then read-only."""

    curve: EllipticCurve
    ap: Mapping[int, float]
    bound: int

    def __getitem__(self, p: int) -> float:
        try:
            return self.ap[p]
        except KeyError:
            raise OverBound(f"prime {p} beyond table bound {self.bound}") from None


def hecke_table(curve: EllipticCurve, bound: int) -> HeckeTable:
    ap: Dict[int, float] = {}
    for p in primes_up_to(bound):
        p = int(p)
        ap[p] = ap_bad(curve, p) if not curve.is_good(p) else ap_good(curve, p)
    return HeckeTable(curve, ap, bound)


def hecke_an(table: HeckeTable, n: int) -> float:
    """Multiplicative extension of the table to arbitrary n.

    Good prime powers follow the degree-two recursion
    a(p^(k+1)) = a(p) a(p^k) - a(p^(k-1)); bad prime powers are a(p)^k.
    """
    if n < 1:
        raise ValueError("n must be a positive integer")
    if n == 1:
        return 1.0
    out = 1.0
    for p, e in factorize(n):
        if p > table.bound:
            raise OverBound(f"prime factor {p} of {n} beyond table bound {table.bound}")
        u = table[p]
        if not table.curve.is_good(p):
            out *= u ** e
            continue
        prev, cur = 1.0, u
        for _ in range(e - 1):
            prev, cur = cur, u * cur - prev
        out *= cur
    return out


def an_array(table: HeckeTable, limit: int) -> np.ndarray:
    """a(n) for 0 <= n <= limit as float64 (index 0 unused, set to 0).

    Sieve over smallest prime factors; one multiply per composite plus a
    correction term when p^2 | n at a good prime.
    """
    if limit > table.bound:
        raise OverBound(f"need primes up to {limit}, table stops at {table.bound}")
    A = np.zeros(limit + 1, dtype=np.float64)
    if limit >= 1:
        A[1] = 1.0
    spf = spf_array(limit)
    good = curve_goodness_mask(table.curve, limit)
    ap = table.ap
    for n in range(2, limit + 1):
        p = int(spf[n])
        m = n // p
        if m == 1:
            A[n] = ap[n]
        elif m % p != 0:
            A[n] = A[p] * A[m]
        elif good[p]:
            A[n] = A[p] * A[m] - A[m // p]
        else:
            A[n] = A[p] * A[m]
    return A


def curve_goodness_mask(curve: EllipticCurve, limit: int) -> np.ndarray:
    """good[p] true iff p is a good prime; only prime indices are meaningful."""
    good = np.ones(limit + 1, dtype=bool)
    for p in curve.reduction:
        if p <= limit:
            good[p] = False
    return good
