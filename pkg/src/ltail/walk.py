"""Random-walk observables for twist families.

The running object is the partial-sum sequence S_0..S_R of character-weighted
prime sums, one increment per schedule segment.  On top of it sit the barrier
events (staying below the upper rail, above the lower rail), the large-value
event H for the log of the central value, the exact decomposition of H by
first exit segment, and the Gaussian reference tail the counts are compared
against.

Per-discriminant traces go through a HeckeTable; family sweeps read the
shared coefficient bank and loop in compiled code.  Counting is integer
exact, only the reference columns are floating point.
"""

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from .errors import BadVariance, EmptyFamily, NonFundamental, TableTooSmall
from .family import TwistFamily, is_fundamental, kronecker
from .ec import EllipticCurve, HeckeTable, hecke_an
from .lcentral import BANK
from .primes import primes_up_to
from .schedule import WalkSchedule, prime_interval
from ._kernels import _prime_chi_sums


@dataclass(frozen=True)
class WalkTrace:
    """Increment and partial-sum arrays for one discriminant.

    Slot j of increments is the step over segment j (slot 0 is zero
    padding), partials[r] = S_r with the S_0 = 0 convention.
    """

    d: int
    increments: np.ndarray
    partials: np.ndarray


@dataclass(frozen=True)
class EventFlags:
    in_H: bool
    A: np.ndarray
    B: np.ndarray
    G: np.ndarray
    first_exit: Optional[int]


def trace(table: HeckeTable, sched: WalkSchedule, d: int) -> WalkTrace:
    """Walk increments for d by direct prime sums over the segments."""
    if not is_fundamental(d):
        raise NonFundamental(f"d={d} is not a fundamental discriminant")
    top = int(math.floor(sched.Xj[sched.R]))
    if table.bound < top:
        raise TableTooSmall(
            f"walk needs eigenvalues to {top}, table stops at {table.bound}"
        )
    ps = primes_up_to(top) if top >= 2 else np.zeros(0, dtype=np.int64)
    increments = np.zeros(sched.R + 1)
    for j in range(1, sched.R + 1):
        lo, hi = prime_interval(sched, j)
        acc = 0.0
        for p in ps:
            if lo < p <= hi:
                chi = kronecker(d, int(p))
                if chi:
                    acc += hecke_an(table, int(p)) * chi / math.sqrt(p)
        increments[j] = acc
    partials = np.cumsum(increments)
    return WalkTrace(int(d), increments, partials)


def family_partials(curve: EllipticCurve, sched: WalkSchedule, ds) -> np.ndarray:
    """Partial-sum matrix, one row per twist, through the coefficient bank."""
    ds = np.ascontiguousarray(ds, dtype=np.int64)
    top = int(math.floor(sched.Xj[sched.R]))
    ent = BANK.ensure(curve, max(top, 16))
    increments = np.zeros((ds.size, sched.R + 1))
    if ds.size and top >= 2:
        block = np.empty(ds.size)
        for j in range(1, sched.R + 1):
            lo, hi = prime_interval(sched, j)
            ps = primes_up_to(int(math.floor(hi)))
            ps = np.ascontiguousarray(ps[ps > lo], dtype=np.int64)
            if ps.size == 0:
                continue
            coefp = ent.apn[ps] / np.sqrt(ps.astype(np.float64))
            _prime_chi_sums(ds, ps, coefp, block)
            increments[:, j] = block
    return np.cumsum(increments, axis=1)


def _h_scale(sched: WalkSchedule, d: int, h_uses_d: bool) -> float:
    if not h_uses_d:
        return sched.loglogX
    # per-member variant; floored so tiny |d| stays in the log domain
    return math.log(max(math.log(max(abs(d), 2)), 1.0))


def _flags_from_row(sched: WalkSchedule, partials, logL: float, d: int,
                    h_uses_d: bool) -> EventFlags:
    R = sched.R
    A = np.zeros(R + 1, dtype=bool)
    B = np.zeros(R + 1, dtype=bool)
    G = np.zeros(R + 1, dtype=bool)
    A[0] = B[0] = G[0] = True
    for r in range(1, R + 1):
        A[r] = A[r - 1] and partials[r] < sched.Ubar[r]
        B[r] = B[r - 1] and partials[r] > sched.Lbar[r]
        G[r] = A[r] and B[r]
    first_exit: Optional[int] = None
    for r in range(1, R + 1):
        if not G[r]:
            first_exit = r
            break
    in_H = logL >= sched.V - 0.5 * _h_scale(sched, d, h_uses_d)
    return EventFlags(bool(in_H), A, B, G, first_exit)


def classify(trace_: WalkTrace, sched: WalkSchedule, logL: float,
             h_uses_d: bool = False) -> EventFlags:
    """Barrier events and H membership for one walked discriminant."""
    return _flags_from_row(sched, trace_.partials, logL, trace_.d, h_uses_d)


def family_flags(sched: WalkSchedule, partials: np.ndarray, logLs, ds,
                 h_uses_d: bool = False) -> List[EventFlags]:
    ds = np.asarray(ds)
    logLs = np.asarray(logLs, dtype=np.float64)
    if not (partials.shape[0] == logLs.size == ds.size):
        raise ValueError("partials, logLs and ds must be aligned")
    return [
        _flags_from_row(sched, partials[i], float(logLs[i]), int(ds[i]), h_uses_d)
        for i in range(ds.size)
    ]


# ---------------------------------------------------------------------------
# decomposition by first exit


@dataclass(frozen=True)
class DecompositionRow:
    r: int
    count: int
    probability: float
    reference_bound: float


@dataclass
class DecompositionReport:
    """Exit-segment decomposition of the large-value count.

    Rows r = 0..R-1 count members of H whose walk left the barrier between
    segments r and r+1; the row r = R counts members that stayed inside
    throughout.  The counts sum to count_H exactly, by construction.
    """

    family_size: int
    count_H: int
    rows: List[DecompositionRow]

    @property
    def prob_H(self) -> float:
        return self.count_H / self.family_size

    def render(self) -> str:
        out = ["r,count,probability,reference_bound"]
        for row in self.rows:
            out.append(
                f"{row.r},{row.count},{row.probability:.17g},"
                f"{row.reference_bound:.17g}"
            )
        return "\n".join(out) + "\n"

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.render())


def reference_exit_bound(sched: WalkSchedule, r: int) -> float:
    """Predicted shape for the exit-at-r piece, unit leading constant.

    The shared prefactor is the Gaussian tail e^(-V^2/loglog X) spread by
    alpha*sqrt(loglog X); pieces that exit before the last segment pay an
    extra e^(-kappa*s*sigma2) with the variance remaining after segment
    r+1.  Published as a reference column, never asserted as a bound.
    """
    ll = sched.loglogX
    base = math.exp(-sched.V ** 2 / ll) / (sched.alpha * math.sqrt(ll))
    if r == sched.R:
        return base
    return base * math.exp(-sched.kappa * sched.s_param * sched.sigma2[r + 1])


def empirical_decomposition(family: TwistFamily, flags: Sequence[EventFlags],
                            sched: WalkSchedule) -> DecompositionReport:
    """Exact counts of H split by first exit segment, under uniform measure."""
    size = len(flags)
    if size == 0:
        raise EmptyFamily("no members to decompose")
    if family.discriminants.size != size:
        raise ValueError(
            f"{size} flag sets for {family.discriminants.size} family members"
        )
    R = sched.R
    count_H = sum(1 for f in flags if f.in_H)
    rows = []
    for r in range(R):
        c = sum(1 for f in flags if f.in_H and f.G[r] and not f.G[r + 1])
        rows.append(
            DecompositionRow(r, c, c / size, reference_exit_bound(sched, r))
        )
    c_last = sum(1 for f in flags if f.in_H and f.G[R])
    rows.append(
        DecompositionRow(R, c_last, c_last / size, reference_exit_bound(sched, R))
    )
    return DecompositionReport(size, count_H, rows)


# ---------------------------------------------------------------------------
# reference tails and exponents


def gaussian_tail(V: float, variance: float) -> float:
    """The unnormalized Gaussian tail integral the counts are tested against.

    Closed form of int_V^inf exp(-y^2/(2 variance)) dy / sqrt(variance);
    the kernel is deliberately not a probability density, so V = 0 gives
    sqrt(pi/2) rather than 1/2.
    """
    if not variance > 0:
        raise BadVariance(f"variance={variance} must be positive")
    return math.sqrt(math.pi / 2.0) * math.erfc(V / math.sqrt(2.0 * variance))


def markov_exponent(v: float, gap: float) -> int:
    """Moment order used against a jump of size v over variance gap.

    Ceil of v^2/(2 gap), floored at 1 so the Markov step always has a
    moment to use; monotone in |v|.
    """
    if not gap > 0:
        raise BadVariance(f"variance gap {gap} must be positive")
    return max(1, int(math.ceil(v * v / (2.0 * gap))))
