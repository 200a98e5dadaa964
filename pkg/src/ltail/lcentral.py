"""Central values of the twisted series, with rigorous tails and a cache.

The completed function (Q/1)^s Gamma(s + 1/2) L(s) with Q = sqrt(N)|d|/(2 pi)
turns the central value into an exponentially weighted sum,

    L(1/2) = (1 + eps) * sum_{n >= 1} a(n)/sqrt(n) * chi_d(n) * exp(-n/Q),

where eps is the sign of the twist.  The weight exp(-n/Q) is the collapse of
a Mellin integral with kernel Gamma(1 + u)/u; the tests confirm that collapse
against direct complex quadrature before anything downstream trusts it.

Truncation is honest: |a(n)| is at most the divisor count, and the divisor
count is at most sqrt(3 n) (the worst ratio sits at n = 12), so the dropped
mass after M terms is inside the geometric series
2 sqrt(3) q^(M+1) / (1 - q) with q = exp(-1/Q).  Every stored value carries
that bound, and the cache refuses rows whose bound is not comfortably below
the stored value's scale.

Off-center evaluations split the defining integral at a point other than the
symmetric one, so the two-sum representation is not an algebraic identity and
comparing s with 1 - s genuinely probes the coefficient data.

Concurrency: evaluations are pure given the session coefficient bank; the
cache file is a single-writer append log, and readers take whole-file
snapshots.  Parallel sweeps should partition d-ranges and merge afterwards.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Tuple

import numpy as np
import scipy.special as sc

from ._kernels import SQRT3, _an_fill, _ap_batch, _chi_vec, _series_sweep
from .ec import EllipticCurve, HeckeTable, ap_bad, hecke_an
from .errors import (
    CacheMiss,
    ConstraintViolation,
    NonFundamental,
    TableTooSmall,
    WrongSign,
)
from .family import TwistFamily, is_fundamental, kronecker, root_number
from .primes import spf_array

NEG_INFINITY = float("-inf")

# below this a value counts as numerically vanishing
VALUE_FLOOR = 1e-12

# direct O(p) counting up to here; order search above
NAIVE_AP_MAX = 30_000

# split point of the off-center representation; must not be 1, at 1 the
# s vs 1-s comparison degenerates to an identity
FE_SPLIT = 1.25

_TWO_PI = 2.0 * math.pi


def conductor_scale(curve: EllipticCurve, d: int) -> float:
    """Q = sqrt(N) |d| / (2 pi); exp(-n/Q) is the series weight."""
    return math.sqrt(curve.N) * abs(d) / _TWO_PI


def _check_rel_tol(rel_tol: float):
    if not 0.0 < rel_tol < 1.0:
        raise ValueError(f"rel_tol must lie in (0, 1), got {rel_tol}")


def truncation_point(Q: float, rel_tol: float) -> int:
    """Smallest series length making the geometric tail bound < rel_tol.

    Stronger than the dynamic rule rel_tol * (|partial sum| + 1), so the
    closed form can be used without tracking the partial sum.
    """
    one_minus = -math.expm1(-1.0 / Q)
    M = math.ceil(Q * math.log(2.0 * SQRT3 / (rel_tol * one_minus))) + 1
    return max(int(M), 8)


def tail_bound(Q: float, M: int) -> float:
    one_minus = -math.expm1(-1.0 / Q)
    return 2.0 * SQRT3 * math.exp(-(M + 1.0) / Q) / one_minus


# ---------------------------------------------------------------------------
# contract evaluation path: explicit table, one twist


def central_value(curve: EllipticCurve, table: HeckeTable, d: int,
                  rel_tol: float = 1e-8) -> float:
    """L(1/2) for the twist by d, truncated with a rigorous geometric tail.

    Returns exactly 0.0 when the twist sign is -1; the (1 + eps) prefactor
    kills the sum before any numerics happen.
    """
    _check_rel_tol(rel_tol)
    if not is_fundamental(d):
        raise NonFundamental(f"d={d} is not a fundamental discriminant")
    if root_number(curve, d) == -1:
        return 0.0
    Q = conductor_scale(curve, d)
    M = truncation_point(Q, rel_tol)
    if M > table.bound:
        raise TableTooSmall(
            f"series for d={d} needs coefficients to {M}, "
            f"table stops at {table.bound}"
        )
    S = 0.0
    for n in range(1, M + 1):
        s = kronecker(d, n)
        if s == 0:
            continue
        S += hecke_an(table, n) / math.sqrt(n) * s * math.exp(-n / Q)
    return 2.0 * S


# ---------------------------------------------------------------------------
# session coefficient bank: dense a(n)/sqrt(n) arrays, grown on demand


@dataclass
class _BankEntry:
    limit: int
    apn: np.ndarray    # normalized a(p) at prime indices, zero elsewhere
    coefq: np.ndarray  # a(n)/sqrt(n), index 0 unused


class CoefficientBank:
    """Per-curve coefficient arrays shared by every family-scale sweep.

    Growth is incremental in coarse blocks: prime values already counted
    are kept, only the new range is filled.  Not thread safe; one bank
    per process.
    """

    def __init__(self):
        self._spf = np.zeros(0, dtype=np.int32)
        self._entries: Dict[str, _BankEntry] = {}

    def spf(self, limit: int) -> np.ndarray:
        if self._spf.size < limit + 1:
            self._spf = spf_array(limit)
        return self._spf

    def ensure(self, curve: EllipticCurve, limit: int) -> _BankEntry:
        ent = self._entries.get(curve.label)
        if ent is not None and ent.limit >= limit:
            return ent
        # growth in coarse blocks so repeated small bumps do not rebuild
        if limit <= (1 << 16):
            alloc = 1 << 16
        else:
            alloc = ((limit + (1 << 20) - 1) >> 20) << 20
        spf = self.spf(alloc)
        apn = np.zeros(alloc + 1, dtype=np.float64)
        old = 0
        if ent is not None:
            apn[: ent.limit + 1] = ent.apn
            old = ent.limit
        idx = np.arange(max(old + 1, 2), alloc + 1, dtype=np.int64)
        ps = idx[spf[idx] == idx]
        mask = np.ones(ps.size, dtype=bool)
        for q in curve.reduction:
            mask &= ps != q
        good = np.ascontiguousarray(ps[mask])
        if good.size:
            tr = _ap_batch(
                good, curve.a1, curve.a2, curve.a3, curve.a4, curve.a6,
                *curve.b_invariants[:3], *curve.c_invariants, NAIVE_AP_MAX,
            )
            apn[good] = tr / np.sqrt(good.astype(np.float64))
        for q in curve.reduction:
            if old < q <= alloc:
                apn[q] = ap_bad(curve, q)
        badp = np.array(sorted(curve.reduction), dtype=np.int64)
        coefq = _an_fill(alloc, spf, apn, badp)
        roots = np.sqrt(np.arange(alloc + 1, dtype=np.float64))
        roots[0] = 1.0
        coefq /= roots
        ent = _BankEntry(alloc, apn, coefq)
        self._entries[curve.label] = ent
        return ent


BANK = CoefficientBank()


# ---------------------------------------------------------------------------
# family-scale evaluation


def family_central_values(curve: EllipticCurve, ds, rel_tol: float = 1e-8):
    """Central values for an array of twists in one compiled pass.

    Returns (values, n_maxs, tail_bounds) aligned with ds.  Twists with
    sign -1 get exact zeros and zero tails without touching the series.
    """
    _check_rel_tol(rel_tol)
    ds = np.ascontiguousarray(ds, dtype=np.int64)
    values = np.zeros(ds.size, dtype=np.float64)
    nmaxs = np.zeros(ds.size, dtype=np.int64)
    tails = np.zeros(ds.size, dtype=np.float64)
    if ds.size == 0:
        return values, nmaxs, tails
    for d in ds:
        if not is_fundamental(int(d)):
            raise NonFundamental(f"d={int(d)} is not a fundamental discriminant")
    eps = np.array([root_number(curve, int(d)) for d in ds], dtype=np.int64)
    plus = np.nonzero(eps == 1)[0]
    if plus.size:
        sub = np.ascontiguousarray(ds[plus])
        Qmax = conductor_scale(curve, int(np.abs(sub).max()))
        ent = BANK.ensure(curve, truncation_point(Qmax, rel_tol))
        v, m, t = _series_sweep(
            sub, math.sqrt(curve.N), rel_tol, ent.coefq,
            BANK.spf(ent.limit), ent.limit,
        )
        values[plus] = v
        nmaxs[plus] = m
        tails[plus] = t
    return values, nmaxs, tails


def log_central(curve: EllipticCurve, d: int, rel_tol: float = 1e-8) -> float:
    """log L(1/2) for a sign +1 twist; NEG_INFINITY for vanishing values."""
    if not is_fundamental(d):
        raise NonFundamental(f"d={d} is not a fundamental discriminant")
    if root_number(curve, d) != 1:
        raise WrongSign(f"twist by d={d} has sign -1; log is undefined there")
    values, _, _ = family_central_values(curve, np.array([d]), rel_tol)
    return log_of_value(float(values[0]))


def log_of_value(value: float) -> float:
    """log with the numerically-vanishing floor applied."""
    if value <= VALUE_FLOOR:
        return NEG_INFINITY
    return math.log(value)


# ---------------------------------------------------------------------------
# off-center probe


def _fe_truncation(Q: float, rel_tol: float) -> int:
    # the completed value carries prefactors up to Q^2 in the crude tail
    # estimate, hence the doubled log(Q) term
    c = math.log(1.0 / rel_tol) + 2.0 * math.log(Q + 4.0) + 6.0
    return max(16, int(math.ceil(FE_SPLIT * Q * c)))


def completed_value(curve: EllipticCurve, d: int, s: float,
                    rel_tol: float = 1e-7) -> float:
    """The completed function at s, from the split-integral representation.

    Valid for 1/4 < s < 3/4.  The split sits at FE_SPLIT rather than the
    symmetric point, so this value genuinely depends on the coefficient
    data satisfying the reflection property; it is not forced to match its
    mirror by construction.
    """
    _check_rel_tol(rel_tol)
    if not is_fundamental(d):
        raise NonFundamental(f"d={d} is not a fundamental discriminant")
    if not 0.25 < s < 0.75:
        raise ValueError(f"s={s} outside the supported strip (1/4, 3/4)")
    eps = root_number(curve, d)
    Q = conductor_scale(curve, d)
    M = _fe_truncation(Q, rel_tol)
    ent = BANK.ensure(curve, M)
    chi = _chi_vec(d, M, BANK.spf(ent.limit))
    n = np.arange(1, M + 1, dtype=np.float64)
    cq = ent.coefq[1 : M + 1] * chi[1:]
    a1 = s + 0.5
    a2 = 1.5 - s
    g1 = sc.gammaincc(a1, n * (FE_SPLIT / Q)) * sc.gamma(a1)
    g2 = sc.gammaincc(a2, n / (FE_SPLIT * Q)) * sc.gamma(a2)
    sum1 = float(np.sum(cq * np.power(n, 0.5 - s) * g1))
    sum2 = float(np.sum(cq * np.power(n, s - 0.5) * g2))
    return Q ** s * sum1 + eps * Q ** (1.0 - s) * sum2


def functional_equation_check(curve: EllipticCurve, d: int,
                              delta: float) -> float:
    """|completed(1/2 + delta) - eps * completed(1/2 - delta)|.

    delta = 0 is the degenerate same-point comparison and is allowed; it
    returns exactly 0 for sign +1 twists.
    """
    if not 0.0 <= delta < 0.25:
        raise ValueError(f"delta={delta} outside [0, 1/4)")
    eps = root_number(curve, d)
    upper = completed_value(curve, d, 0.5 + delta)
    lower = completed_value(curve, d, 0.5 - delta)
    return abs(upper - eps * lower)


# ---------------------------------------------------------------------------
# persistent cache


@dataclass(frozen=True)
class CacheRow:
    value: float
    n_max: int
    tail_bound: float


@dataclass
class CentralValueCache:
    """Central values for one family, with storage-time sanity gates."""

    curve_label: str
    family: Tuple[int, int, int, float]  # (sign, residue, divisor, X)
    rows: Dict[int, CacheRow] = field(default_factory=dict)

    def put(self, d: int, value: float, n_max: int, tail_bound: float):
        value = float(value)
        tail_bound = float(tail_bound)
        if value < -tail_bound:
            raise ConstraintViolation(
                f"d={d}: value {value:.6g} below -tail_bound {-tail_bound:.6g}"
            )
        if not tail_bound < 1e-6 * max(value, 1.0):
            raise ConstraintViolation(
                f"d={d}: tail bound {tail_bound:.6g} too large for cache storage"
            )
        self.rows[int(d)] = CacheRow(value, int(n_max), tail_bound)

    def get(self, d: int) -> CacheRow:
        try:
            return self.rows[int(d)]
        except KeyError:
            raise CacheMiss(f"no cached value for d={d}") from None

    def __len__(self):
        return len(self.rows)

    def __contains__(self, d):
        return int(d) in self.rows

    def header(self) -> str:
        s, a, v, X = self.family
        return (
            f"# curve={self.curve_label} sign={s:+d} residue={a} "
            f"divisor={v} X={X:.17g}"
        )

    def save(self, path):
        """Full rewrite, atomic via rename; use append_rows for log-style adds."""
        path = Path(path)
        tmp = path.with_suffix(path.suffix + ".tmp")
        with open(tmp, "w", encoding="utf-8") as fh:
            fh.write(self.header() + "\n")
            fh.write("d,value,n_max,tail_bound\n")
            for d in sorted(self.rows, key=lambda t: (abs(t), t)):
                fh.write(_render_row(d, self.rows[d]))
        os.replace(tmp, path)

    def append_rows(self, path, ds):
        """Append the listed twists to an existing file (header if new)."""
        path = Path(path)
        fresh = not path.exists()
        with open(path, "a", encoding="utf-8") as fh:
            if fresh:
                fh.write(self.header() + "\n")
                fh.write("d,value,n_max,tail_bound\n")
            for d in ds:
                fh.write(_render_row(int(d), self.rows[int(d)]))

    @classmethod
    def load(cls, path) -> "CentralValueCache":
        path = Path(path)
        with open(path, "r", encoding="utf-8") as fh:
            head = fh.readline().strip()
            fields = dict(
                item.split("=", 1) for item in head.lstrip("# ").split()
            )
            label = fields["curve"]
            family = (
                int(fields["sign"]),
                int(fields["residue"]),
                int(fields["divisor"]),
                float(fields["X"]),
            )
            cache = cls(label, family)
            fh.readline()  # column row
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                d_s, v_s, m_s, t_s = line.split(",")
                cache.put(int(d_s), float(v_s), int(m_s), float(t_s))
        return cache


def _render_row(d: int, row: CacheRow) -> str:
    return f"{d},{row.value:.17g},{row.n_max},{row.tail_bound:.17g}\n"


def cache_dir() -> Path:
    return Path(os.environ.get("LTAIL_CACHE_DIR", ".ltail-cache"))


def cache_filename(constraints) -> str:
    sign_tag = "p" if constraints.sign > 0 else "m"
    return (
        f"{constraints.curve.label}_{sign_tag}{constraints.residue}"
        f"_v{constraints.divisor}_X{int(constraints.X)}.csv"
    )


def cached_family_values(family: TwistFamily, rel_tol: float = 1e-8,
                         directory=None):
    """Values for every family member, through the persistent cache.

    Only cache-grade tolerances are accepted here; loose statistical
    sweeps must call family_central_values directly and skip the cache.
    Returns (values, cache) with values aligned to family.discriminants.
    """
    if not rel_tol <= 1e-6:
        raise ValueError("cache-grade evaluation needs rel_tol <= 1e-6")
    cons = family.constraints
    base = Path(directory) if directory is not None else cache_dir()
    path = base / cache_filename(cons)
    key = (cons.sign, cons.residue, cons.divisor, float(cons.X))
    if path.exists():
        cache = CentralValueCache.load(path)
        if cache.curve_label != cons.curve.label or cache.family != key:
            raise ConstraintViolation(
                f"cache file {path} addresses a different family"
            )
    else:
        cache = CentralValueCache(cons.curve.label, key)
    ds = family.discriminants
    missing = np.array([int(x) for x in ds if int(x) not in cache.rows],
                       dtype=np.int64)
    if missing.size:
        v, m, t = family_central_values(cons.curve, missing, rel_tol)
        for i, dd in enumerate(missing):
            cache.put(int(dd), float(v[i]), int(m[i]), float(t[i]))
        base.mkdir(parents=True, exist_ok=True)
        cache.save(path)
    values = np.array([cache.rows[int(x)].value for x in ds], dtype=np.float64)
    return values, cache
