"""Barrier schedule: segment lengths, variance ladder, and barrier lines.

The asymptotic constants behind the schedule (the 1e5-scale exponents and
thresholds) make every desk-size height cap degenerate by design, so all of
them are configuration with asymptotic defaults.  Desk experiments pass
explicit overrides, and every report downstream prints the constants in
force.  Segment count R is capped so the segment lengths l_j stay strictly
decreasing and every iterated logarithm involved actually exists.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .errors import AlphaOutOfRange, DegenerateSchedule, IndexOutOfRange

# asymptotic defaults; any run at reachable X must override most of these
ASYMPTOTIC_S_NUMERATOR = 1e5  # s = numerator / (1 - 2 alpha)
ASYMPTOTIC_R_CONST = 1e5  # R: largest with log_{R+2} X > r_const - log alpha
ASYMPTOTIC_TRUNC_EXP = 1e5  # segment truncation degree (l_j - l_{j+1})**trunc_exp
ASYMPTOTIC_A1_TRUNC = 20  # first-segment degree = a1_trunc * ceil(loglog X)
ASYMPTOTIC_OMEGA_EXP = 1e4  # omega budget 10 * (l_j - l_{j+1})**omega_exp
ASYMPTOTIC_LENGTH_EXP = 1e-3  # twist length budget X**length_exp

_DEGREE_CAP = 10**9


@dataclass(frozen=True)
class ScheduleOverrides:
    """Effective-constant overrides; None keeps the asymptotic default."""

    s_param: Optional[float] = None
    r_const: Optional[float] = None
    trunc_exp: Optional[float] = None
    a1_trunc: Optional[float] = None
    l1: Optional[int] = None
    V: Optional[float] = None
    omega_bound: Optional[int] = None
    length_exp: Optional[float] = None


def desk_overrides(**replacements) -> ScheduleOverrides:
    """Preset tuned so the full pipeline at X in [1e5, 1e6] runs in minutes."""
    base = dict(
        s_param=2.0,
        r_const=-2.0,
        trunc_exp=2.0,
        a1_trunc=4.0,
        l1=4,
        omega_bound=8,
        length_exp=2.0,
    )
    base.update(replacements)
    return ScheduleOverrides(**base)


@dataclass(frozen=True)
class EffectiveConstants:
    """Resolved configuration actually used to build a schedule."""

    s_param: float
    r_const: float
    trunc_exp: float
    a1_trunc: float
    omega_bound: Optional[int]
    omega_exp: float
    length_exp: float

    def as_dict(self):
        return {
            "s_param": self.s_param,
            "r_const": self.r_const,
            "trunc_exp": self.trunc_exp,
            "a1_trunc": self.a1_trunc,
            "omega_bound": self.omega_bound,
            "omega_exp": self.omega_exp,
            "length_exp": self.length_exp,
        }


@dataclass(frozen=True)
class WalkSchedule:
    """Immutable barrier geometry for one (X, alpha) pair.

    Arrays are indexed by segment: l has slots 0..R+1 (slots 0 and R+1 are
    carried for completeness, no operation branches on them), Xj/n/sigma2
    have slots 0..R with the X_0 = 0, n_0 = 0 convention, and the barrier
    arrays use sentinel -inf/+inf at slot 0 so cumulative event recursions
    start from the full set.
    """

    X: float
    alpha: float
    V: float
    kappa: float
    s_param: float
    R: int
    l: np.ndarray
    Xj: np.ndarray
    n: np.ndarray
    sigma2: np.ndarray
    Lbar: np.ndarray
    Ubar: np.ndarray
    constants: EffectiveConstants

    @property
    def loglogX(self) -> float:
        return math.log(math.log(self.X))


def iterated_log(x, k: int):
    """log applied k times; None when an intermediate value leaves the domain."""
    v = float(x)
    for _ in range(k):
        if v <= 0:
            return None
        v = math.log(v)
    return v


def _guarded_power(base: float, exponent: float) -> float:
    # base > 0; returns inf instead of overflowing
    if exponent * math.log(base) > 700.0:
        return math.inf
    return base ** exponent


def build_schedule(X, alpha, overrides: Optional[ScheduleOverrides] = None) -> WalkSchedule:
    """Assemble the full schedule, capping R at the last usable segment.

    Raises DegenerateSchedule instead of fabricating intervals whenever the
    constants in force leave no room for even one segment.
    """
    ov = overrides or ScheduleOverrides()
    if not 0 < alpha < 0.5:
        raise AlphaOutOfRange(f"alpha={alpha} outside (0, 1/2)")
    if X < math.e ** math.e:
        raise DegenerateSchedule(f"X={X} below e^e; no segment fits")
    ll = math.log(math.log(X))
    s = ov.s_param if ov.s_param is not None else ASYMPTOTIC_S_NUMERATOR / (1 - 2 * alpha)
    r_const = ov.r_const if ov.r_const is not None else ASYMPTOTIC_R_CONST
    trunc_exp = ov.trunc_exp if ov.trunc_exp is not None else ASYMPTOTIC_TRUNC_EXP
    a1_trunc = ov.a1_trunc if ov.a1_trunc is not None else ASYMPTOTIC_A1_TRUNC
    constants = EffectiveConstants(
        s_param=s,
        r_const=r_const,
        trunc_exp=trunc_exp,
        a1_trunc=a1_trunc,
        omega_bound=ov.omega_bound,
        omega_exp=ASYMPTOTIC_OMEGA_EXP,
        length_exp=ov.length_exp if ov.length_exp is not None else ASYMPTOTIC_LENGTH_EXP,
    )

    # R from its defining inequality, then capped by usability below
    threshold = r_const - math.log(alpha)
    R = 0
    for cand in range(1, 64):
        t = iterated_log(X, cand + 2)
        if t is None or not t > threshold:
            break
        R = cand
    if R < 1:
        raise DegenerateSchedule(
            f"no segment satisfies the depth inequality at X={X:g} "
            f"(r_const={r_const:g}, alpha={alpha:g}); pass desk overrides"
        )

    l1 = float(ov.l1) if ov.l1 is not None else 2.0 * math.ceil(ll ** 2)
    lengths = [l1]
    for j in range(2, R + 1):
        base = iterated_log(X, j + 1)  # > 0 since one more log exists
        power = _guarded_power(base, s) if base is not None else math.inf
        lj = math.inf if math.isinf(power) else 2.0 * math.ceil(power)
        if not lj < lengths[-1]:
            break  # strict decrease ends; cap R here
        lengths.append(lj)
    R = len(lengths)

    Xj = np.zeros(R + 1)
    for j in range(1, R + 1):
        Xj[j] = X ** (1.0 / lengths[j - 1])
    if Xj[1] < math.e:
        raise DegenerateSchedule(
            f"first segment endpoint {Xj[1]:.3f} below e; variance ladder "
            f"would clamp (l1={l1:g} too large for X={X:g})"
        )

    # carried slots: l_0 from the first-segment truncation structure,
    # l_{R+1} by the same formula as interior lengths where it exists
    l0 = l1 + (2.0 * math.ceil(ll ** 2)) ** (1.0 / trunc_exp)
    tail_base = iterated_log(X, R + 2)
    if tail_base is not None and tail_base > 0:
        power = _guarded_power(tail_base, s)
        l_next = math.inf if math.isinf(power) else 2.0 * math.ceil(power)
    else:
        l_next = 2.0
    l = np.array([l0] + lengths + [l_next])

    n = np.zeros(R + 1)
    for r in range(1, R + 1):
        n[r] = math.log(math.log(max(Xj[r], math.e)))
    sigma2 = ll - n
    V = ov.V if ov.V is not None else alpha * ll
    kappa = V / ll
    Lbar = kappa * n - s * sigma2
    Ubar = kappa * n + s * sigma2
    Lbar[0] = -math.inf
    Ubar[0] = math.inf
    return WalkSchedule(
        X=float(X),
        alpha=float(alpha),
        V=float(V),
        kappa=float(kappa),
        s_param=float(s),
        R=R,
        l=l,
        Xj=Xj,
        n=n,
        sigma2=sigma2,
        Lbar=Lbar,
        Ubar=Ubar,
        constants=constants,
    )


def prime_interval(sched: WalkSchedule, j: int) -> Tuple[float, float]:
    """Half-open prime range (low, high] of segment j; segment 1 starts at 1."""
    if not 1 <= j <= sched.R:
        raise IndexOutOfRange(f"segment {j} outside 1..{sched.R}")
    low = 1.0 if j == 1 else float(sched.Xj[j - 1])
    return low, float(sched.Xj[j])


def barriers(sched: WalkSchedule, r: int) -> Tuple[float, float]:
    if not 1 <= r <= sched.R:
        raise IndexOutOfRange(f"segment {r} outside 1..{sched.R}")
    return float(sched.Lbar[r]), float(sched.Ubar[r])


def segment_degree(sched: WalkSchedule, j: int) -> int:
    """Truncation degree for the segment-j mollifier factor, always even.

    Segment 1 uses the a1_trunc * ceil(loglog X) rule; later segments use
    the (l_j - l_{j+1})**trunc_exp rule floored at 2.
    """
    if not 1 <= j <= sched.R:
        raise IndexOutOfRange(f"segment {j} outside 1..{sched.R}")
    c = sched.constants
    if j == 1:
        deg = c.a1_trunc * math.ceil(sched.loglogX)
    else:
        gap = float(sched.l[j] - sched.l[j + 1])
        deg = _guarded_power(gap, c.trunc_exp) if gap > 0 else 0.0
    if not deg < _DEGREE_CAP:
        raise DegenerateSchedule(
            f"segment {j} truncation degree overflows under trunc_exp="
            f"{c.trunc_exp:g}; pass desk overrides"
        )
    k = max(2, math.ceil(deg))
    return k + (k % 2)


def omega_budget(sched: WalkSchedule, j: int) -> int:
    """Allowed Omega(n) for segment-j twist factors under the constants in force."""
    if not 1 <= j <= sched.R:
        raise IndexOutOfRange(f"segment {j} outside 1..{sched.R}")
    c = sched.constants
    if c.omega_bound is not None:
        return int(c.omega_bound)
    gap = float(sched.l[j] - sched.l[j + 1])
    budget = 10.0 * _guarded_power(gap, c.omega_exp) if gap > 0 else 0.0
    if not budget < _DEGREE_CAP:
        raise DegenerateSchedule(
            f"segment {j} omega budget overflows under omega_exp="
            f"{c.omega_exp:g}; pass desk overrides"
        )
    return int(budget)


def twist_length_budget(sched: WalkSchedule) -> float:
    """Largest admissible index in a well-factorable twist, X**length_exp."""
    return sched.X ** sched.constants.length_exp
