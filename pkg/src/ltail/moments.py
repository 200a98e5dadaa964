"""Moment estimators over twist families and their reference formulas.

Three layers live here.  Twisted first moments: weighted sums of central
values against a character value at a fixed index, with a least-squares
extraction of the leading constant over square indices.  Mollified square
moments: the empirical family average of L times a mollifier times a twist
squared, against the exact squarefree-cell bound it is compared to.  Walk
moments: even moments of partial-sum differences against the factorial
bound, bucketed conditional second moments, and the Euler beta factors
whose cancellation drives the off-diagonal suppression.

Every reference value is published for ratio reporting, never asserted as
a proven bound.  Summation uses fsum or numpy pairwise reduction so reruns
are bit-stable.
"""

import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import quad
from scipy.optimize import least_squares

from . import schedule as _schedule
from .dpoly import DirichletPoly, ONE, evaluate, multiply, prime_sum_poly
from .ec import HeckeTable, hecke_an
from .errors import (
    BadTheta,
    ConstraintViolation,
    EmptyFamily,
    IndexOutOfRange,
    InsufficientData,
    NotWellFactorable,
    ROutOfRange,
    SupportViolation,
)
from .family import TwistFamily, kronecker
from .primes import factorize, require_prime
from .walk import WalkTrace


# ---------------------------------------------------------------------------
# smoothing weights


@dataclass(frozen=True)
class SmoothingWeight:
    """Cutoff weight applied at |d|/X, with its total integral stored."""

    kind: str
    evaluator: Callable[[float], float]
    integral: float

    def __call__(self, u: float) -> float:
        return self.evaluator(u)


def _sharp(u: float) -> float:
    return 1.0 if 0.0 < u <= 1.0 else 0.0


def _bump(u: float) -> float:
    # smooth, compactly supported in [1/2, 1], peak value 1/e at u = 3/4
    t = (u - 0.75) / 0.25
    if not -1.0 < t < 1.0:
        return 0.0
    return math.exp(-1.0 / (1.0 - t * t))


def smoothing_weight(kind: str) -> SmoothingWeight:
    if kind == "sharp":
        return SmoothingWeight("sharp", _sharp, 1.0)
    if kind == "bump":
        integral, err = quad(_bump, 0.5, 1.0, epsabs=1e-13, epsrel=1e-13)
        if err > 1e-10:
            raise ArithmeticError(f"weight integral error {err:g} too large")
        return SmoothingWeight("bump", _bump, integral)
    raise ValueError(f"unknown weight kind {kind!r}")


# ---------------------------------------------------------------------------
# twisted first moments


def _check_twist_index(family: TwistFamily, n: int) -> None:
    v = family.constraints.divisor
    N = family.constraints.curve.N
    if n < 1:
        raise ConstraintViolation(f"twist index must be positive, got {n}")
    if math.gcd(n, v) != 1:
        raise ConstraintViolation(f"index {n} shares a factor with divisor {v}")
    # powers of two are fine: every member is odd.  The conductor is not.
    if math.gcd(n * v, N) != 1:
        raise ConstraintViolation(
            f"index times divisor shares a factor with the conductor {N}"
        )


def first_twisted_moment(family: TwistFamily, cache, n: int,
                         weight: SmoothingWeight) -> float:
    """Weighted family sum of the central value against chi_d(n)."""
    _check_twist_index(family, n)
    X = family.constraints.X
    terms = []
    for d in family.discriminants:
        d = int(d)
        row = cache.get(d)
        terms.append(row.value * kronecker(d, n) * weight(abs(d) / X))
    return math.fsum(terms)


def leading_term_fit(family: TwistFamily, cache, squares: Sequence[int],
                     weight: Optional[SmoothingWeight] = None):
    """Constant in front of the square-index moments, by bounded least squares.

    Model: moment(n) = c * prod_{p | n} g_p with each per-prime factor g_p
    confined to [1 - 5/p, 1 + 5/p].  Returns (c, residuals) aligned with
    the input squares.
    """
    if len(squares) == 0:
        raise InsufficientData("no square indices supplied")
    for n in squares:
        if n < 1 or math.isqrt(n) ** 2 != n:
            raise ConstraintViolation(f"index {n} is not a positive square")
    weight = weight or smoothing_weight("sharp")
    data = np.array([
        first_twisted_moment(family, cache, int(n), weight) for n in squares
    ])
    primes = sorted({p for n in squares for p, _ in factorize(int(n))})
    masks = np.array([
        [1.0 if n % p == 0 else 0.0 for p in primes] for n in squares
    ])

    def model(x):
        c = x[0]
        if primes:
            return c * np.prod(np.where(masks > 0, x[1:], 1.0), axis=1)
        return np.full(len(squares), c)

    x0 = np.concatenate([[data[0] if data[0] != 0 else 1.0],
                         np.ones(len(primes))])
    lo = np.concatenate([[-np.inf], [1.0 - 5.0 / p for p in primes]])
    hi = np.concatenate([[np.inf], [1.0 + 5.0 / p for p in primes]])
    fit = least_squares(lambda x: model(x) - data, x0, bounds=(lo, hi),
                        xtol=1e-14, ftol=1e-14, gtol=1e-14)
    return float(fit.x[0]), model(fit.x) - data


# ---------------------------------------------------------------------------
# mollified square moments


def _squarefree_part(n: int) -> int:
    out = 1
    for p, e in factorize(n):
        if e % 2:
            out *= p
    return out


def mollified_square_bound(sched, twist: DirichletPoly, r: int) -> float:
    """Exact squarefree-cell bound for the mollified square moment.

    Groups the support of the twist by squarefree part, takes the signed
    inner sum over coefficient pairs in each cell with the local density
    product over primes dividing either index, then sums absolute cell
    values and scales by the segment's log^(-1/2).  Depends only on the
    expanded coefficients, so any factorization of the same polynomial
    gives the same value.
    """
    if not 1 <= r <= sched.R:
        raise IndexOutOfRange(f"segment {r} outside 1..{sched.R}")
    budget = _schedule.twist_length_budget(sched)
    if twist.length() > budget:
        raise NotWellFactorable(
            f"twist length {twist.length()} exceeds budget {budget:g}"
        )
    support = sorted(twist.coeffs)
    cells = {}
    for u1 in support:
        q1 = _squarefree_part(u1)
        for u2 in support:
            if _squarefree_part(u2) != q1:
                continue
            c = float(twist.coeffs[u1]) * float(twist.coeffs[u2])
            if c == 0.0:
                continue
            dens = 1.0
            for p in {p for p, _ in factorize(u1)} | {p for p, _ in factorize(u2)}:
                dens *= 1.0 - 1.0 / p
            cells.setdefault(q1, []).append(c * dens / math.sqrt(u1 * u2))
    total = math.fsum(abs(math.fsum(v)) for _q, v in sorted(cells.items()))
    return total / math.sqrt(math.log(sched.Xj[r]))


def _member_values(factor, ds) -> np.ndarray:
    """Per-member values of a twist factor.

    Accepts an already-evaluated array (the only viable route for huge
    truncated-exponential mollifiers, via the multiplicative shortcut) or
    a small polynomial to fold directly.
    """
    if isinstance(factor, DirichletPoly):
        return np.array([evaluate(factor, int(d)) for d in ds])
    arr = np.asarray(factor, dtype=np.float64)
    if arr.shape != (len(ds),):
        raise ValueError(f"need {len(ds)} member values, got shape {arr.shape}")
    return arr


def mollified_square_empirical(family: TwistFamily, cache, M, Q) -> float:
    """Family average of L(1/2) * M(d) * Q(d)^2 under the uniform measure.

    M and Q are polynomials or per-member value arrays aligned with the
    family order.
    """
    ds = family.discriminants
    if ds.size == 0:
        raise EmptyFamily("no members to average over")
    mvals = _member_values(M, ds)
    qvals = _member_values(Q, ds)
    L = np.array([cache.get(int(d)).value for d in ds])
    return float(math.fsum(L * mvals * qvals * qvals) / ds.size)


def square_diagonal_prediction(family: TwistFamily, Q: DirichletPoly) -> float:
    """Diagonal-only model for the family mean of Q(d)^2.

    Keeps coefficient pairs with square product; each contributes with the
    empirical density of members coprime to the product's radical, since
    the character is 1 there and 0 elsewhere.
    """
    ds = family.discriminants
    if ds.size == 0:
        raise EmptyFamily("no members to predict over")
    absd = np.abs(ds)
    support = sorted(Q.coeffs)
    terms = []
    for n1 in support:
        for n2 in support:
            if _squarefree_part(n1 * n2) != 1:
                continue
            c = float(Q.coeffs[n1]) * float(Q.coeffs[n2])
            if c == 0.0:
                continue
            rad = 1
            for p, _ in factorize(n1 * n2):
                rad *= p
            dens = float(np.mean(np.gcd(absd, rad) == 1)) if rad > 1 else 1.0
            terms.append(c * dens / math.sqrt(n1 * n2))
    return math.fsum(terms)


# ---------------------------------------------------------------------------
# walk moments


def multinomial(n: int, parts: Sequence[int]) -> int:
    if any(c < 0 for c in parts) or sum(parts) != n:
        raise ValueError(f"parts {parts} do not compose {n}")
    out = math.factorial(n)
    for c in parts:
        out //= math.factorial(c)
    return out


def difference_power_poly(table: HeckeTable, sched, j: int, k: int,
                          r: int) -> DirichletPoly:
    """(S_k - S_j)^r as an explicit coefficient map.

    The coefficient at n = prod p_i^{c_i} is the multinomial of (c_i)
    times prod a(p_i)^{c_i}; support is products of exactly r primes from
    the open-closed interval between the two segment edges.
    """
    if not 0 <= j <= k <= sched.R:
        raise IndexOutOfRange(f"need 0 <= j <= k <= {sched.R}, got {j},{k}")
    if r < 0:
        raise ValueError("power must be nonnegative")
    base = prime_sum_poly(table, (sched.Xj[j], sched.Xj[k]))
    out = ONE
    for _ in range(r):
        out = multiply(out, base)
    return out


def walk_moment_bound(sched, j: int, k: int, r: int,
                      slack: float = 2.0) -> float:
    """Factorial reference bound for the 2r-th moment of S_k - S_j."""
    if not 1 <= j < k <= sched.R:
        raise IndexOutOfRange(f"need 1 <= j < k <= {sched.R}, got {j},{k}")
    if r < 0:
        raise ValueError("moment order must be nonnegative")
    cap = 100.0 * sched.l[k] ** 2
    if r > cap:
        raise ROutOfRange(f"order {r} exceeds cap {cap:g} at segment {k}")
    factor = math.factorial(2 * r) // (2 ** r * math.factorial(r))
    base = sched.n[k] - sched.n[j] + slack / math.log(sched.Xj[j])
    return factor * base ** r


def _partials_matrix(traces) -> np.ndarray:
    if isinstance(traces, np.ndarray):
        return traces
    return np.array([t.partials for t in traces])


def walk_moment_empirical(traces, j: int, k: int, r: int) -> float:
    """Family average of |S_k - S_j|^(2r) from computed traces."""
    mat = _partials_matrix(traces)
    if mat.shape[0] == 0:
        raise EmptyFamily("no traces to average over")
    R = mat.shape[1] - 1
    if not 0 <= j <= k <= R:
        raise IndexOutOfRange(f"need 0 <= j <= k <= {R}, got {j},{k}")
    return float(np.mean(np.abs(mat[:, k] - mat[:, j]) ** (2 * r)))


def conditional_moment_check(sched, r: int, traces: Sequence[WalkTrace],
                             Q: DirichletPoly, w: float, width: float = 1.0,
                             flags=None) -> Tuple[float, float]:
    """Bucketed conditional second moment of a next-segment twist.

    lhs is the family mean of Q(d)^2 restricted to walks with S_r in
    [w, w + width) (and inside the barrier through r when flags are
    given); rhs is the Gaussian reference shape E[Q^2] exp(-w^2/2n_r)
    divided by sqrt(n_r).  Both are returned for ratio reporting.
    """
    if not 1 <= r < sched.R:
        raise IndexOutOfRange(f"segment {r} outside 1..{sched.R - 1}")
    low, high = _schedule.prime_interval(sched, r + 1)
    for n in Q.coeffs:
        if n == 1:
            continue
        for p, _ in factorize(int(n)):
            if not low < p <= high:
                raise SupportViolation(
                    f"index {n} has prime {p} outside segment {r + 1}"
                )
    if len(traces) == 0:
        raise EmptyFamily("no traces to condition on")
    qsq = np.array([evaluate(Q, t.d) ** 2 for t in traces])
    S = np.array([t.partials[r] for t in traces])
    inside = (S >= w) & (S < w + width)
    if flags is not None:
        inside &= np.array([f.G[r] for f in flags])
    n_r = sched.n[r]
    lhs = float(np.mean(qsq * inside))
    rhs = float(np.mean(qsq)) * math.exp(-w * w / (2.0 * n_r)) / math.sqrt(n_r)
    return lhs, rhs


# ---------------------------------------------------------------------------
# Euler beta factors


def theta_defaults(p: int, twisted_start: int = 1) -> Tuple[float, ...]:
    """Default local weights: unit at the trivial exponent, 1 - 1/p beyond.

    twisted_start is the parity of the first twist exponent; at 0 the
    leading twisted weight coincides with the leading pure one.
    """
    require_prime(p)
    t4 = 1.0 - 1.0 / p
    t3 = t4 if twisted_start == 1 else 1.0
    return (1.0, t4, t3, t4, t4)


def _check_theta(theta) -> Tuple[float, ...]:
    if len(theta) != 5:
        raise BadTheta(f"need 5 weights, got {len(theta)}")
    t1, t2, t3, t4, t5 = (float(t) for t in theta)
    if not (t1 >= t2 > 0.0):
        raise BadTheta(f"need theta1 >= theta2 > 0, got {t1}, {t2}")
    if not (t3 >= t4 > 0.0):
        raise BadTheta(f"need theta3 >= theta4 > 0, got {t3}, {t4}")
    if t1 - t2 < t3 - t4:
        raise BadTheta("pure gap must dominate the twisted gap")
    if t2 < t4:
        raise BadTheta("deep pure weight must dominate the deep twisted one")
    if not t5 > 0.0:
        raise BadTheta(f"odd-exponent weight must be positive, got {t5}")
    return (t1, t2, t3, t4, t5)


def beta_factor(table: HeckeTable, p: int, parity: int, theta,
                terms: int = 8, tail: bool = False) -> float:
    """Truncated Euler factor of the twisted-moment coefficient at p.

    Two series in x = a(p)/sqrt(p): even-index terms weighted by the pure
    or twisted local constants, minus odd-index terms weighted by the
    common odd-exponent constant.  parity selects which exponent class the
    factor sits at; tail selects the deep-exponent variant whose leading
    weight is the generic one.  Successive terms fall geometrically (x^2
    is at most 4/p), so the truncation error is below the last kept term.
    """
    t1, t2, t3, t4, t5 = _check_theta(theta)
    require_prime(p)
    if parity not in (0, 1):
        raise ValueError(f"parity must be 0 or 1, got {parity}")
    if terms < 3:
        raise ValueError(f"need at least 3 series terms, got {terms}")
    x = hecke_an(table, p) / math.sqrt(p)
    lead = (t3 if parity else t1) if not tail else (t4 if parity else t2)
    deep = t4 if parity else t2
    first = []
    for i in range(terms):
        g = lead if i == 0 else deep
        first.append(g * x ** (2 * i + parity) / math.factorial(2 * i))
    second = []
    for i in range(1, terms):
        second.append(t5 * x ** (2 * i - parity) / math.factorial(2 * i - 1))
    return math.fsum(first) - math.fsum(second)


@dataclass(frozen=True)
class BetaFactors:
    """The three Euler factor values the suppression argument compares."""

    p: int
    theta: Tuple[float, ...]
    beta_even: float
    beta_odd: float
    beta_even_tail: float


def beta_factors(table: HeckeTable, p: int, theta=None,
                 terms: int = 8) -> BetaFactors:
    theta = tuple(theta) if theta is not None else theta_defaults(p)
    return BetaFactors(
        p,
        _check_theta(theta),
        beta_factor(table, p, 0, theta, terms),
        beta_factor(table, p, 1, theta, terms),
        beta_factor(table, p, 0, theta, terms, tail=True),
    )


# ---------------------------------------------------------------------------
# report rows


@dataclass(frozen=True)
class MomentRow:
    quantity: str
    params: str
    empirical: float
    reference: float

    @property
    def ratio(self) -> float:
        if self.reference == 0.0:
            return math.inf if self.empirical else 0.0
        return self.empirical / self.reference


def render_moment_csv(rows: List[MomentRow]) -> str:
    out = ["quantity,params,empirical,reference,ratio"]
    for row in rows:
        out.append(
            f"{row.quantity},{row.params},{row.empirical:.17g},"
            f"{row.reference:.17g},{row.ratio:.17g}"
        )
    return "\n".join(out) + "\n"
