"""Sparse Dirichlet-polynomial algebra over quadratic characters.

A polynomial is a finite coefficient map n -> c(n) representing
sum_n c(n) chi_d(n) / sqrt(n); the 1/sqrt(n) is implicit and never stored.
Coefficients may be exact (int/Fraction) or float; the combinatorial
operations preserve exactness so algebra tests can run without rounding.
Support and omega metadata are validated at construction, so a violating
polynomial cannot exist.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Mapping, Optional, Tuple

from .errors import (
    LengthExceeded,
    NotPrimeSupported,
    OmegaViolation,
    SupportViolation,
    TableTooSmall,
)
from .family import kronecker
from .primes import factorize, is_prime, primes_in_interval
from . import schedule as _schedule


@dataclass(frozen=True)
class DirichletPoly:
    """Immutable coefficient map with optional support/omega metadata.

    support_interval restricts every prime factor of every index to a
    half-open range (low, high]; omega_bound caps Omega(n) counted with
    multiplicity.  Index 1 is always admissible.
    """

    coeffs: Mapping[int, object]
    support_interval: Optional[Tuple[float, float]] = None
    omega_bound: Optional[int] = None

    def __post_init__(self):
        for n, _ in self.coeffs.items():
            if not isinstance(n, int) or n < 1:
                raise ValueError(f"index {n!r} is not a positive integer")
            if n == 1:
                continue
            if self.support_interval is None and self.omega_bound is None:
                continue
            fac = factorize(n)
            if self.support_interval is not None:
                low, high = self.support_interval
                for p, _e in fac:
                    if not low < p <= high:
                        raise SupportViolation(
                            f"index {n} has prime factor {p} outside "
                            f"({low:g}, {high:g}]"
                        )
            if self.omega_bound is not None:
                omega = sum(e for _p, e in fac)
                if omega > self.omega_bound:
                    raise OmegaViolation(
                        f"index {n} has Omega={omega} > bound {self.omega_bound}"
                    )

    def length(self) -> int:
        """Largest index carried (1 for the zero and constant polynomials)."""
        return max(self.coeffs) if self.coeffs else 1

    def __len__(self):
        return len(self.coeffs)


ZERO = DirichletPoly({})
ONE = DirichletPoly({1: 1})


def prime_sum_poly(table, interval) -> DirichletPoly:
    """The segment sum: c(p) = a(p) over primes in (low, high]."""
    low, high = interval
    if high > table.bound:
        raise TableTooSmall(
            f"interval end {high:g} beyond eigenvalue table bound {table.bound}"
        )
    coeffs = {int(p): table.ap[int(p)] for p in primes_in_interval(low, high)}
    return DirichletPoly(coeffs, support_interval=(float(low), float(high)), omega_bound=1)


def _require_prime_support(P: DirichletPoly):
    for n in P.coeffs:
        if not is_prime(n):
            raise NotPrimeSupported(f"index {n} is not prime")


def truncated_exp(P: DirichletPoly, K: int) -> DirichletPoly:
    """Coefficients of sum_{r<=K} (-P)^r / r! for prime-supported P.

    For an index n = prod p^e with Omega(n) <= K the coefficient is the
    exact multinomial prod_p (-a(p))^e / e!; exact inputs give exact
    outputs.  The term count is binomial(#primes + K, K), so callers keep
    supports modest and use evaluate_truncated_exp for family sweeps.
    """
    if K < 0:
        raise ValueError("truncation degree must be >= 0")
    _require_prime_support(P)
    items = [(p, P.coeffs[p]) for p in sorted(P.coeffs)]
    out: Dict[int, object] = {}

    def build(i, room, index, coeff):
        if i == len(items):
            out[index] = out.get(index, 0) + coeff
            return
        p, a = items[i]
        build(i + 1, room, index, coeff)
        c = coeff
        idx = index
        for e in range(1, room + 1):
            idx *= p
            c = c * (-a) / e  # running product accumulates the 1/e!
            build(i + 1, room - e, idx, c)

    build(0, K, 1, Fraction(1) if _all_exact(P) else 1.0)
    return DirichletPoly(out, support_interval=P.support_interval, omega_bound=K)


def _all_exact(P: DirichletPoly) -> bool:
    return all(
        isinstance(c, (int, Fraction)) and not isinstance(c, float)
        for c in P.coeffs.values()
    )


def add(A: DirichletPoly, B: DirichletPoly) -> DirichletPoly:
    coeffs: Dict[int, object] = dict(A.coeffs)
    for n, c in B.coeffs.items():
        coeffs[n] = coeffs.get(n, 0) + c
    return DirichletPoly(
        coeffs,
        support_interval=_union_support(A, B),
        omega_bound=_max_or_none(A.omega_bound, B.omega_bound),
    )


def multiply(A: DirichletPoly, B: DirichletPoly) -> DirichletPoly:
    """Dirichlet convolution; metadata unioned (omega bounds add)."""
    coeffs: Dict[int, object] = {}
    for m, cm in A.coeffs.items():
        for n, cn in B.coeffs.items():
            k = m * n
            coeffs[k] = coeffs.get(k, 0) + cm * cn
    omega = None
    if A.omega_bound is not None and B.omega_bound is not None:
        omega = A.omega_bound + B.omega_bound
    return DirichletPoly(coeffs, support_interval=_union_support(A, B), omega_bound=omega)


def _union_support(A, B):
    sa, sb = A.support_interval, B.support_interval
    if sa is None or sb is None:
        return None
    # degenerate factors (constants) should not widen the union
    if not A.coeffs or set(A.coeffs) == {1}:
        return sb
    if not B.coeffs or set(B.coeffs) == {1}:
        return sa
    return (min(sa[0], sb[0]), max(sa[1], sb[1]))


def _max_or_none(a, b):
    if a is None or b is None:
        return None
    return max(a, b)


def evaluate(P: DirichletPoly, d: int) -> float:
    """sum_n c(n) kronecker(d, n) / sqrt(n), accumulated in fixed order."""
    terms = []
    for n in sorted(P.coeffs):
        chi = kronecker(d, n)
        if chi:
            terms.append(float(P.coeffs[n]) * chi / math.sqrt(n))
    return math.fsum(terms)


def truncexp_value(x: float, K: int) -> float:
    """T_K(x) = sum_{r<=K} x^r / r! by Horner's rule."""
    acc = 1.0
    for r in range(K, 0, -1):
        acc = 1.0 + acc * x / r
    return acc


def truncexp_remainder_bound(x: float, K: int) -> float:
    """Rigorous bound on |exp(x) - T_K(x)| for |x| < K + 2.

    Geometric majorant of the dropped tail:
    |x|^(K+1)/(K+1)! * 1/(1 - |x|/(K+2)).
    """
    ax = abs(x)
    if ax >= K + 2:
        return math.inf
    lead = ax ** (K + 1) / math.factorial(K + 1)
    return lead / (1.0 - ax / (K + 2))


def evaluate_truncated_exp(P: DirichletPoly, K: int, d: int) -> float:
    """Pointwise value of truncated_exp(P, K) at d without building it.

    Exact identity, not an approximation: the coefficient map of the
    truncated exponential evaluates to T_K applied to -P(d) because the
    character and the implicit 1/sqrt(n) are completely multiplicative.
    """
    _require_prime_support(P)
    return truncexp_value(-evaluate(P, d), K)


def mollifier_value(increments, degrees) -> float:
    """prod_j T_{K_j}(-P_j(d)) from per-segment increment values."""
    out = 1.0
    for x, K in zip(increments, degrees):
        out *= truncexp_value(-float(x), int(K))
    return out


def well_factorable(sched, factors: Mapping[int, DirichletPoly]) -> DirichletPoly:
    """Product of per-segment twist factors with budget validation.

    Each factor j must be supported on segment j's prime interval and obey
    its omega budget; the expanded product must stay within the length
    budget X**length_exp.
    """
    product = ONE
    for j in sorted(factors):
        F = factors[j]
        low, high = _schedule.prime_interval(sched, j)
        for n in F.coeffs:
            if n == 1:
                continue
            fac = factorize(n)
            for p, _e in fac:
                if not low < p <= high:
                    raise SupportViolation(
                        f"segment {j} factor index {n} has prime {p} outside "
                        f"({low:g}, {high:g}]"
                    )
            omega = sum(e for _p, e in fac)
            budget = _schedule.omega_budget(sched, j)
            if omega > budget:
                raise OmegaViolation(
                    f"segment {j} factor index {n} has Omega={omega} > {budget}"
                )
        product = multiply(product, F)
    budget = _schedule.twist_length_budget(sched)
    if product.length() > budget:
        raise LengthExceeded(
            f"twist length {product.length()} exceeds budget {budget:g}"
        )
    return product


@dataclass(frozen=True)
class SquarefreeDecomp:
    n: int
    sf: int
    sq: int
    parities: Mapping[int, int]


def squarefree_decomp(n: int) -> SquarefreeDecomp:
    """n = sf * sq**2 with sf squarefree; parities are the exponent parities."""
    if n < 1:
        raise ValueError("n must be >= 1")
    sf = 1
    sq = 1
    parities: Dict[int, int] = {}
    for p, e in factorize(n):
        parities[p] = e % 2
        if e % 2:
            sf *= p
        sq *= p ** (e // 2)
    return SquarefreeDecomp(n, sf, sq, parities)


def to_csv(P: DirichletPoly) -> str:
    """`n,c(n)` rows sorted by n; exact rationals render as p/q."""
    lines = ["n,c"]
    for n in sorted(P.coeffs):
        c = P.coeffs[n]
        if isinstance(c, float):
            lines.append(f"{n},{c:.17g}")
        else:
            lines.append(f"{n},{c}")
    return "\n".join(lines) + "\n"
