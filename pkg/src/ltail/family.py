"""Quadratic twist families: characters, root numbers, discriminant enumeration.

A family is cut out of the fundamental discriminants by four constraints:
a fixed sign, a residue class modulo N0 = lcm(N, 8), a forced squarefree
divisor, and a height cap.  Coprimality to 2N makes every member odd, so
only the d = 1 mod 4 branch of fundamentality ever occurs in families;
is_fundamental still implements both branches.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .ec import EllipticCurve
from .errors import (
    ConstraintViolation,
    EmptyFamilyWarning,
    NotCoprime,
    ZeroInput,
)
from .primes import factorize, squarefree_mask


def kronecker(d: int, n: int) -> int:
    """Kronecker symbol (d|n), total in both arguments.

    Completely multiplicative in n, zero exactly when gcd(d, n) > 1, and
    computed by the usual reciprocity reduction, so arbitrary magnitudes
    are fine.
    """
    d = int(d)
    n = int(n)
    if n == 0:
        return 1 if d in (1, -1) else 0
    if d % 2 == 0 and n % 2 == 0:
        return 0
    result = 1
    if n < 0:
        n = -n
        if d < 0:
            result = -1
    t = 0
    while n % 2 == 0:
        n //= 2
        t += 1
    if t:
        if d % 2 == 0:
            return 0
        if t % 2 == 1 and d % 8 in (3, 5):
            result = -result
    # n now odd and positive; run the Jacobi reduction
    a = d % n
    while n > 1:
        if a == 0:
            return 0
        t = 0
        while a % 2 == 0:
            a //= 2
            t += 1
        if t % 2 == 1 and n % 8 in (3, 5):
            result = -result
        if a % 4 == 3 and n % 4 == 3:
            result = -result
        a, n = n % a, a
    return result


def _is_squarefree(m: int) -> bool:
    return all(e == 1 for _, e in factorize(abs(m)))


def is_fundamental(d: int) -> bool:
    """Whether d is a fundamental discriminant (d = 1 allowed).

    Residues are mathematical residues in {0,..,3}, so negative d work:
    -15 = 1 mod 4.
    """
    if d == 0:
        raise ZeroInput("0 is not a discriminant")
    if d % 4 == 1:
        return _is_squarefree(d)
    if d % 4 == 0:
        m = d // 4
        return m % 4 in (2, 3) and _is_squarefree(m)
    return False


def root_number(curve: EllipticCurve, d: int) -> int:
    """Sign of the functional equation for the twist by d."""
    if math.gcd(d, 2 * curve.N) != 1:
        raise NotCoprime(f"d={d} shares a factor with 2N={2 * curve.N}")
    return curve.eps_global * kronecker(d, -curve.N)


def chi_prime_table(p: int) -> np.ndarray:
    """(d|p) as an int8 table indexed by a residue of d.

    Odd p: index d mod p (Legendre values via the square table).
    p = 2: index d mod 8 (the 2-rule only depends on d mod 8).
    """
    if p == 2:
        return np.array([0, 1, 0, -1, 0, -1, 0, 1], dtype=np.int8)
    r = np.arange(p, dtype=np.int64)
    table = np.full(p, -1, dtype=np.int8)
    table[(r * r) % p] = 1
    table[0] = 0
    return table


@dataclass(frozen=True)
class FamilyConstraints:
    """Defining data of one twist family.

    sign is the common sign of every member, residue the class mod N0
    (odd, = 1 mod 4, invertible), divisor a forced squarefree divisor
    coprime to N0, X the height cap on |d|.
    """

    curve: EllipticCurve
    sign: int
    residue: int
    divisor: int
    X: float

    def __post_init__(self):
        N0 = self.curve.N0
        if self.sign not in (-1, +1):
            raise ConstraintViolation("sign must be +1 or -1")
        if not (0 < self.residue < N0):
            raise ConstraintViolation(f"residue must lie in [1, {N0 - 1}]")
        if math.gcd(self.residue, N0) != 1:
            raise ConstraintViolation("residue must be invertible mod N0")
        if self.residue % 4 != 1:
            raise ConstraintViolation("residue must be 1 mod 4")
        if self.divisor < 1 or not _is_squarefree(self.divisor):
            raise ConstraintViolation("divisor must be a positive squarefree integer")
        if math.gcd(self.divisor, N0) != 1:
            raise ConstraintViolation("divisor must be coprime to N0")
        if not self.X > 0:
            raise ConstraintViolation("height cap must be positive")
        rep = self.residue if self.sign > 0 else self.residue - N0
        if root_number(self.curve, rep) != +1:
            raise ConstraintViolation(
                "residue class has functional-equation sign -1; "
                "central values vanish identically there"
            )


@dataclass(frozen=True)
class TwistFamily:
    constraints: FamilyConstraints
    discriminants: np.ndarray  # int64, ascending |d|

    def __len__(self):
        return len(self.discriminants)

    def __iter__(self):
        return iter(self.discriminants)


def enumerate_family(constraints: FamilyConstraints) -> TwistFamily:
    """All admissible discriminants up to the height cap, ascending |d|.

    Walks the residue class, then filters squarefree, coprime-to-2N,
    divisor, and root-number conditions with numpy masks.  An empty result
    is legal and only warns.
    """
    curve = constraints.curve
    N0 = curve.N0
    a, v, X = constraints.residue, constraints.divisor, int(constraints.X)
    if constraints.sign > 0:
        cands = np.arange(a, X + 1, N0, dtype=np.int64)
    else:
        cands = np.arange(a - N0, -X - 1, -N0, dtype=np.int64)
    if cands.size:
        absd = np.abs(cands)
        keep = squarefree_mask(int(absd.max()))[absd]
        for q, _ in factorize(curve.N):
            keep &= absd % q != 0
        keep &= absd % v == 0
        cands = cands[keep]
        # root number per member; class membership makes these constant in
        # practice, but we filter rather than assume
        eps = np.array([root_number(curve, int(d)) for d in cands], dtype=np.int64)
        cands = cands[eps == +1]
    if cands.size == 0:
        warnings.warn(
            f"no admissible discriminant with |d| <= {X}", EmptyFamilyWarning
        )
    return TwistFamily(constraints, cands)


def family_by_address(curve, sign=+1, residue=1, divisor=1, X=1000.0):
    """Convenience constructor mirroring the CLI addressing tuple."""
    return enumerate_family(FamilyConstraints(curve, sign, residue, divisor, X))


def admissible_residues(curve: EllipticCurve, sign: int = +1):
    """Residue classes mod N0 whose (sign-adjusted) members have sign +1."""
    N0 = curve.N0
    out = []
    for a in range(1, N0, 4):
        if math.gcd(a, N0) != 1:
            continue
        rep = a if sign > 0 else a - N0
        if root_number(curve, rep) == +1:
            out.append(a)
    return out


def union_families(curve: EllipticCurve, X: float, divisor: int = 1,
                   signs=(+1, -1)):
    """Every admissible residue class at the given signs, one family each.

    Returns (families, merged) where merged collects all discriminants
    sorted by |d| (stable, so ties keep class order).  Empty classes are
    silently dropped; the warning is only useful for a single family.
    """
    fams = []
    for sign in signs:
        for a in admissible_residues(curve, sign):
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", EmptyFamilyWarning)
                fams.append(
                    enumerate_family(
                        FamilyConstraints(curve, sign, a, divisor, X)
                    )
                )
    parts = [f.discriminants for f in fams if len(f)]
    if parts:
        merged = np.concatenate(parts)
        merged = merged[np.argsort(np.abs(merged), kind="stable")]
    else:
        merged = np.zeros(0, dtype=np.int64)
    return fams, merged
