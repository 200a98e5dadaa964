"""Report rows and verification suites behind the command-line runner.

Tail rows put an empirical exceedance probability next to two references:
the variance-scale Gaussian integral and the bare log-power decay.  The
verify_* functions re-run each module's load-bearing invariants and
return named margins (nonnegative margin = pass); the runner prints them
and folds failures into its exit code.  Nothing here claims an asymptotic
statement is verified; rows publish ratios and flag band violations only.
"""

import math
import time
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from . import dpoly
from .ec import curve_by_label, hecke_an, hecke_table
from .errors import AlphaOutOfRange
from .family import admissible_residues, family_by_address
from .lcentral import VALUE_FLOOR
from .moments import beta_factors, walk_moment_bound, walk_moment_empirical
from .primes import primes_up_to
from .quadform import (
    RankStructured,
    check_dominance,
    dense_forms,
    random_dominated_pair,
    rank_structured_eval,
    sym_form,
    tensor_dominance_test,
)
from .schedule import WalkSchedule, build_schedule, desk_overrides
from .walk import family_partials, gaussian_tail


@dataclass(frozen=True)
class TailReport:
    """One family tail measurement at a single alpha.

    family is the (sign, residue, divisor) address; a union over signs
    and residues is written (0, 0, divisor).  empirical_prob is exactly
    count_H / family_size; ratio compares it against gaussian_rhs.  The
    fractional columns carry the alpha-th moment and its predicted decay
    shape.
    """

    X: float
    alpha: float
    V: float
    family: Tuple[int, int, int]
    count_H: int
    family_size: int
    empirical_prob: float
    gaussian_rhs: float
    ratio: float
    logpower_rhs: float
    frac_moment: float
    frac_reference: float


def tail_threshold(sched: WalkSchedule) -> float:
    """Exceedance threshold on log L defining the tail event."""
    return sched.V - 0.5 * sched.loglogX


def tail_report(sched: WalkSchedule, family_key, values) -> TailReport:
    """Measure the tail event and fractional moment on central values."""
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise ValueError("no central values supplied")
    logs = np.log(np.maximum(values, VALUE_FLOOR))
    count = int(np.sum(logs >= tail_threshold(sched)))
    size = int(values.size)
    emp = count / size
    rhs = gaussian_tail(sched.V, sched.loglogX)
    logX = math.log(sched.X)
    alpha = sched.alpha
    frac = float(np.mean(np.power(np.maximum(values, 0.0), alpha)))
    return TailReport(
        X=sched.X,
        alpha=alpha,
        V=sched.V,
        family=tuple(int(x) for x in family_key),
        count_H=count,
        family_size=size,
        empirical_prob=emp,
        gaussian_rhs=rhs,
        ratio=emp / rhs,
        logpower_rhs=logX ** (-alpha * alpha / 2.0),
        frac_moment=frac,
        frac_reference=logX ** ((alpha * alpha - alpha) / 2.0),
    )


TAIL_HEADER = (
    "X,alpha,V,sign,residue,divisor,count_H,family_size,empirical_prob,"
    "gaussian_rhs,ratio,logpower_rhs,frac_moment,frac_reference,"
    "s_param,r_const,trunc_exp,a1_trunc,omega_bound,omega_exp,length_exp"
)


def render_tail_csv(rows: Sequence[TailReport], constants) -> str:
    """Deterministic CSV; every row repeats the effective constants."""
    cdict = constants.as_dict()
    const_cols = ",".join(
        "%s" % ("" if cdict[k] is None else "%.17g" % cdict[k])
        for k in ("s_param", "r_const", "trunc_exp", "a1_trunc",
                  "omega_bound", "omega_exp", "length_exp")
    )
    lines = [TAIL_HEADER]
    for t in rows:
        lines.append(
            "%.17g,%.17g,%.17g,%d,%d,%d,%d,%d,%.17g,%.17g,%.17g,%.17g,"
            "%.17g,%.17g,%s"
            % (t.X, t.alpha, t.V, t.family[0], t.family[1], t.family[2],
               t.count_H, t.family_size, t.empirical_prob, t.gaussian_rhs,
               t.ratio, t.logpower_rhs, t.frac_moment, t.frac_reference,
               const_cols)
        )
    return "\n".join(lines) + "\n"


def check_alpha_grid(alphas) -> None:
    for a in alphas:
        if not 0.0 < a < 0.5:
            raise AlphaOutOfRange(f"alpha={a} outside (0, 1/2)")


# ---------------------------------------------------------------------------
# verification suites


@dataclass(frozen=True)
class CheckResult:
    """Named invariant outcome; margin >= 0 means the invariant held."""

    name: str
    margin: float
    passed: bool


def _result(name: str, margin: float) -> CheckResult:
    m = float(margin) + 0.0  # drop negative zero
    return CheckResult(name, m, bool(m >= 0.0))


def _brute_force_ap(curve, p: int) -> int:
    """Unnormalized a(p) by exhaustive point counting over F_p."""
    if p == 2 or p == 3:
        count = 1
        for x in range(p):
            for y in range(p):
                lhs = (y * y + curve.a1 * x * y + curve.a3 * y) % p
                rhs = (x ** 3 + curve.a2 * x * x + curve.a4 * x
                       + curve.a6) % p
                if lhs == rhs:
                    count += 1
        return p + 1 - count
    # odd p: complete the square, count y-roots through the residue table
    x = np.arange(p, dtype=np.int64)
    rhs = (pow_mod(x, 3, p) + curve.a2 * x * x + curve.a4 * x
           + curve.a6) % p
    disc = ((curve.a1 * x + curve.a3) ** 2 + 4 * rhs) % p
    sq = np.full(p, -1, dtype=np.int64)
    sq[(x * x) % p] = 1
    sq[0] = 0
    count = 1 + int(np.sum(1 + sq[disc]))
    return p + 1 - count


def pow_mod(x: np.ndarray, e: int, m: int) -> np.ndarray:
    out = np.ones_like(x)
    base = x % m
    while e:
        if e & 1:
            out = (out * base) % m
        base = (base * base) % m
        e >>= 1
    return out


def verify_ecarith() -> List[CheckResult]:
    """Hecke eigenvalues against exhaustive point counting, p <= 2000."""
    out = []
    for label in ("11a1", "37a1"):
        curve = curve_by_label(label)
        table = hecke_table(curve, 2048)
        mismatches = 0
        worst_norm = 0.0
        for p in primes_up_to(2000):
            p = int(p)
            a_norm = hecke_an(table, p)
            if curve.is_good(p):
                want = _brute_force_ap(curve, p)
                got = int(round(a_norm * math.sqrt(p)))
                if got != want or abs(a_norm * math.sqrt(p) - want) > 1e-9:
                    mismatches += 1
            worst_norm = max(worst_norm, abs(a_norm))
        out.append(_result(f"hecke_pointcount_{label}", -float(mismatches)))
        out.append(_result(f"hasse_bound_{label}", 2.0 - worst_norm))
    return out


def verify_family(X: float = 1e5) -> List[CheckResult]:
    """Enumeration invariants of the canonical twist family."""
    from .family import is_fundamental, root_number

    curve = curve_by_label("11a1")
    fam = family_by_address(curve, X=X)
    ds = fam.discriminants
    out = [_result("family_nonempty", float(ds.size - 1))]
    bad_fund = sum(0 if is_fundamental(int(d)) else 1 for d in ds)
    out.append(_result("family_fundamental", -float(bad_fund)))
    out.append(_result("family_odd", -float(np.sum(ds % 2 == 0))))
    out.append(_result(
        "family_residue_class", -float(np.sum(ds % curve.N0 != 1))
    ))
    bad_sign = sum(
        0 if root_number(curve, int(d)) == +1 else 1 for d in ds
    )
    out.append(_result("family_root_number", -float(bad_sign)))
    both = admissible_residues(curve, +1) + admissible_residues(curve, -1)
    out.append(_result("family_class_count", float(len(set(both)) - 20)))
    return out


def verify_dpoly(seed: int = 5) -> List[CheckResult]:
    """Mollifier algebra: exact factorization, positivity, Taylor bound."""
    from fractions import Fraction

    out = []
    K = 6
    PA = dpoly.DirichletPoly({3: Fraction(1, 2)})
    PB = dpoly.DirichletPoly({5: Fraction(-2, 3), 7: Fraction(1, 5)})
    lhs = dpoly.truncated_exp(dpoly.add(PA, PB), K)
    rhs = dpoly.multiply(dpoly.truncated_exp(PA, K),
                         dpoly.truncated_exp(PB, K))
    bad = 0
    for n, c in lhs.coeffs.items():
        omega = sum(e for _, e in dpoly.factorize(n))
        if omega <= K and rhs.coeffs.get(n) != c:
            bad += 1
    out.append(_result("dpoly_exp_product_exact", -float(bad)))

    table = hecke_table(curve_by_label("11a1"), 64)
    P = dpoly.prime_sum_poly(table, (1.0, 31.7))
    rng = np.random.default_rng(seed)
    worst_pos = math.inf
    for _ in range(1000):
        d = int(rng.integers(1, 10 ** 6))
        Keven = int(rng.choice([2, 4, 6, 8, 12]))
        worst_pos = min(worst_pos, dpoly.evaluate_truncated_exp(P, Keven, d))
    out.append(_result("dpoly_even_truncation_positive", worst_pos))

    worst_gap = -math.inf
    checked = 0
    for _ in range(300):
        d = int(rng.integers(1, 10 ** 6))
        x = dpoly.evaluate(P, d)
        if abs(x) > 3.0:
            continue
        checked += 1
        gap = abs(dpoly.evaluate_truncated_exp(P, 12, d) - math.exp(-x))
        worst_gap = max(
            gap - dpoly.truncexp_remainder_bound(x, 12) - 1e-15, worst_gap
        )
    out.append(_result("dpoly_taylor_remainder", -worst_gap))
    out.append(_result("dpoly_taylor_samples", float(checked - 100)))
    return out


def verify_moments(X: float = 1e6) -> List[CheckResult]:
    """Euler-factor ordering and walk moments at the desk schedule."""
    out = []
    curve = curve_by_label("11a1")
    table = hecke_table(curve, 1024)
    worst_const = 0.0
    order_bad = 0
    for p in primes_up_to(1000):
        p = int(p)
        if p < 11:
            continue
        bf = beta_factors(table, p)
        if not bf.beta_even >= bf.beta_even_tail >= 0.0:
            order_bad += 1
        worst_const = max(
            worst_const, abs(bf.beta_odd / bf.beta_even_tail) * p ** 1.5
        )
    out.append(_result("beta_ordering", -float(order_bad)))
    out.append(_result("beta_ratio_constant", 10.0 - worst_const))

    sched = build_schedule(X, 0.3, desk_overrides())
    fam = family_by_address(curve, X=X)
    partials = family_partials(curve, sched, fam.discriminants)
    worst_ratio = 0.0
    for r in (1, 2, 3):
        emp = walk_moment_empirical(partials, 1, sched.R, r)
        worst_ratio = max(
            worst_ratio, emp / walk_moment_bound(sched, 1, sched.R, r)
        )
    out.append(_result("walk_moment_ratio", 2.0 - worst_ratio))
    return out


def verify_quadform(instances: int = 10000, factor_sets: int = 1000,
                    seed: int = 2) -> List[CheckResult]:
    """Closed forms, tensor dominance, and the planted counterexample."""
    out = []
    rng = np.random.default_rng(seed)
    worst_closed = 0.0
    for _ in range(instances):
        dim = int(rng.integers(1, 7))
        t4 = float(rng.uniform(0, 2))
        gap = float(rng.uniform(0, 1))
        t2 = t4 + float(rng.uniform(0, 1))
        t1 = t2 + gap + float(rng.uniform(0, 1))
        rs = RankStructured(dim, int(rng.integers(dim)), (t1, t2),
                            (t4 + gap, t4))
        x = rng.normal(size=dim)
        y = rng.normal(size=dim)
        Zxx, Zyy, Rxy = rank_structured_eval(rs, x, y)
        dZ, dR = dense_forms(rs)
        scale = max(1.0, abs(Zxx), abs(Zyy), abs(Rxy))
        worst_closed = max(
            worst_closed,
            abs(dZ.apply(x, x) - Zxx) / scale,
            abs(dZ.apply(y, y) - Zyy) / scale,
            abs(dR.apply(x, y) - Rxy) / scale,
        )
    out.append(_result("quadform_closed_vs_dense", 1e-12 - worst_closed))

    worst_margin = math.inf
    for _ in range(factor_sets):
        nfac = int(rng.integers(2, 4))
        pairs = [random_dominated_pair(rng, int(rng.integers(2, 5)))
                 for _ in range(nfac)]
        rep = tensor_dominance_test([p[0] for p in pairs],
                                    [p[1] for p in pairs],
                                    samples=4, seed=int(rng.integers(2 ** 31)))
        worst_margin = min(worst_margin, rep.worst_sample_margin,
                           rep.eig_margin)
        if not rep.passed:
            worst_margin = min(worst_margin, -1.0)
    out.append(_result("quadform_tensor_margin", worst_margin + 1e-9))

    eye = sym_form(np.eye(2))
    planted = tensor_dominance_test(
        [eye, eye],
        [sym_form(np.diag([1.0, -1.0])), sym_form(np.diag([1.5, 0.0]))],
        samples=16, seed=seed,
    )
    out.append(_result("quadform_counterexample_detected",
                       1.0 if not planted.passed else -1.0))
    out.append(_result("quadform_pairwise_boundary",
                       1.0 if check_dominance(eye, sym_form(np.diag([1.0, -1.0])))
                       else -1.0))
    return out


SUITES = {
    "ecarith": verify_ecarith,
    "family": verify_family,
    "dpoly": verify_dpoly,
    "moments": verify_moments,
    "quadform": verify_quadform,
}


def run_suites(names) -> List[Tuple[str, List[CheckResult], float]]:
    """Run the requested suites; returns (name, results, seconds) triples."""
    out = []
    for name in names:
        t0 = time.time()
        results = SUITES[name]()
        out.append((name, results, time.time() - t0))
    return out
