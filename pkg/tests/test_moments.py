"""Tests for twisted first moments, mollified squares, and walk moments.

Numeric targets were frozen from independent loops before the module was
written: direct fsum of cached central values against Kronecker symbols,
exact Fraction arithmetic for the squarefree-cell bounds, quadrature for
the bump-weight integral, and plain numpy reductions for walk moments.
"""

import math
from fractions import Fraction

import numpy as np
import pytest
from scipy.integrate import quad

from ltail.dpoly import (
    DirichletPoly,
    ONE,
    evaluate,
    multiply,
    truncexp_value,
)
from ltail.ec import curve_by_label, hecke_an, hecke_table
from ltail.errors import (
    BadTheta,
    ConstraintViolation,
    CacheMiss,
    EmptyFamily,
    IndexOutOfRange,
    InsufficientData,
    NotWellFactorable,
    ROutOfRange,
    SupportViolation,
)
from ltail.family import family_by_address
from ltail.lcentral import CentralValueCache, family_central_values
from ltail.moments import (
    BetaFactors,
    MomentRow,
    beta_factor,
    beta_factors,
    conditional_moment_check,
    difference_power_poly,
    first_twisted_moment,
    leading_term_fit,
    mollified_square_bound,
    mollified_square_empirical,
    multinomial,
    render_moment_csv,
    smoothing_weight,
    square_diagonal_prediction,
    theta_defaults,
    walk_moment_bound,
    walk_moment_empirical,
)
from ltail.primes import primes_up_to
from ltail.schedule import build_schedule, desk_overrides, prime_interval
from ltail.walk import family_partials, trace

E11 = curve_by_label("11a1")


@pytest.fixture(scope="module")
def desk():
    return build_schedule(1e6, 0.3, desk_overrides())


@pytest.fixture(scope="module")
def table11():
    return hecke_table(E11, 1100)


@pytest.fixture(scope="module")
def fam_cached():
    fam = family_by_address(E11, X=5000.0)
    vals, nmaxs, tails = family_central_values(E11, fam.discriminants,
                                               rel_tol=1e-9)
    cache = CentralValueCache("11a1", (1, 1, 1, 5000.0))
    for d, v, nm, t in zip(fam.discriminants, vals, nmaxs, tails):
        cache.put(int(d), float(v), int(nm), float(t))
    return fam, cache


@pytest.fixture(scope="module")
def fam_walk(desk):
    fam = family_by_address(E11, X=30000.0)
    partials = family_partials(E11, desk, fam.discriminants)
    return fam, partials


# ---------------------------------------------------------------------------
# smoothing weights


def test_sharp_weight_values():
    w = smoothing_weight("sharp")
    assert w.integral == 1.0
    assert w(0.5) == 1.0 and w(1.0) == 1.0
    assert w(0.0) == 0.0 and w(1.0001) == 0.0


def test_bump_weight_shape():
    w = smoothing_weight("bump")
    assert w(0.75) == pytest.approx(math.exp(-1.0), rel=1e-15)
    assert w(0.5) == 0.0 and w(1.0) == 0.0
    assert w(0.49) == 0.0 and w(1.01) == 0.0
    for u in np.linspace(0.51, 0.99, 25):
        assert 0.0 < w(u) <= 1.0


def test_bump_integral_frozen():
    w = smoothing_weight("bump")
    assert w.integral == pytest.approx(0.11099845404201984, abs=1e-10)
    ref, err = quad(w.evaluator, 0.5, 1.0)
    assert err < 1e-6
    assert w.integral == pytest.approx(ref, abs=1e-8)


def test_unknown_weight_kind():
    with pytest.raises(ValueError):
        smoothing_weight("triangle")


# ---------------------------------------------------------------------------
# twisted first moments


def test_total_mass_frozen(fam_cached):
    fam, cache = fam_cached
    s1 = first_twisted_moment(fam, cache, 1, smoothing_weight("sharp"))
    assert s1 == pytest.approx(26.192464502922626, rel=1e-12)


def test_square_index_ratios(fam_cached):
    fam, cache = fam_cached
    sharp = smoothing_weight("sharp")
    s1 = first_twisted_moment(fam, cache, 1, sharp)
    # every member is odd, so the character at 4 is identically one
    assert first_twisted_moment(fam, cache, 4, sharp) == s1
    s9 = first_twisted_moment(fam, cache, 9, sharp)
    assert s9 / s1 == pytest.approx(0.7482242635887496, rel=1e-12)
    assert first_twisted_moment(fam, cache, 25, sharp) / s1 == pytest.approx(
        0.7425726490260988, rel=1e-12
    )


def test_index_nine_drops_multiples_of_three(fam_cached):
    # independent recomputation: chi_d(9) is 1 unless 3 | d
    fam, cache = fam_cached
    s1 = first_twisted_moment(fam, cache, 1, smoothing_weight("sharp"))
    s9 = first_twisted_moment(fam, cache, 9, smoothing_weight("sharp"))
    want = math.fsum(
        cache.get(int(d)).value for d in fam.discriminants if d % 3 != 0
    )
    assert s9 == pytest.approx(want, rel=1e-12)
    assert s9 < s1


def test_bump_weighted_moment_frozen(fam_cached):
    fam, cache = fam_cached
    bump = smoothing_weight("bump")
    sb1 = first_twisted_moment(fam, cache, 1, bump)
    assert sb1 == pytest.approx(3.191186468707711, rel=1e-12)
    sb9 = first_twisted_moment(fam, cache, 9, bump)
    assert sb9 / sb1 == pytest.approx(0.6997764613691768, rel=1e-12)


@pytest.mark.parametrize("bad_n", [0, -4, 11, 33])
def test_twisted_moment_rejects_bad_index(fam_cached, bad_n):
    fam, cache = fam_cached
    with pytest.raises(ConstraintViolation):
        first_twisted_moment(fam, cache, bad_n, smoothing_weight("sharp"))


def test_twisted_moment_rejects_divisor_overlap():
    fam5 = family_by_address(E11, X=3000.0, divisor=5)
    cache = CentralValueCache("11a1", (1, 1, 5, 3000.0))
    with pytest.raises(ConstraintViolation):
        first_twisted_moment(fam5, cache, 5, smoothing_weight("sharp"))


def test_twisted_moment_cache_miss(fam_cached):
    fam, _ = fam_cached
    empty = CentralValueCache("11a1", (1, 1, 1, 5000.0))
    with pytest.raises(CacheMiss):
        first_twisted_moment(fam, empty, 1, smoothing_weight("sharp"))


# ---------------------------------------------------------------------------
# leading constant fit


def test_fit_single_datum_is_exact(fam_cached):
    fam, cache = fam_cached
    c, res = leading_term_fit(fam, cache, [1])
    s1 = first_twisted_moment(fam, cache, 1, smoothing_weight("sharp"))
    assert c == pytest.approx(s1, rel=1e-12)
    assert abs(res[0]) < 1e-9 * c


def test_fit_four_squares(fam_cached):
    fam, cache = fam_cached
    c, res = leading_term_fit(fam, cache, [1, 4, 9, 25])
    assert c == pytest.approx(26.192464502922626, rel=1e-8)
    assert res.shape == (4,)
    # per-prime factors absorb the density defects, residuals well under
    # the acceptance knob
    assert np.max(np.abs(res)) < 0.2 * c
    assert np.max(np.abs(res)) < 1e-6 * c


def test_fit_rejects_empty(fam_cached):
    fam, cache = fam_cached
    with pytest.raises(InsufficientData):
        leading_term_fit(fam, cache, [])


@pytest.mark.parametrize("bad", [[2], [1, 8], [-4]])
def test_fit_rejects_nonsquare(fam_cached, bad):
    fam, cache = fam_cached
    with pytest.raises(ConstraintViolation):
        leading_term_fit(fam, cache, bad)


# ---------------------------------------------------------------------------
# squarefree-cell bound


def test_bound_trivial_twist(desk):
    got = mollified_square_bound(desk, ONE, 1)
    assert got == 1.0 / math.sqrt(math.log(desk.Xj[1]))


def test_bound_single_prime(desk):
    p = 41
    got = mollified_square_bound(desk, DirichletPoly({p: 1}), 1)
    want = (1.0 / p) * (1.0 - 1.0 / p) / math.sqrt(math.log(desk.Xj[1]))
    assert got == pytest.approx(want, rel=1e-15)


def test_bound_cancellation_pair(desk):
    # hand enumeration of the four coefficient pairs in the q = 1 cell
    p, q = 41, 43
    P = DirichletPoly({p * p: 1, q * q: -1})
    got = mollified_square_bound(desk, P, 2)
    inner = (
        Fraction(1, p * p) * (1 - Fraction(1, p))
        + Fraction(1, q * q) * (1 - Fraction(1, q))
        - 2 * Fraction(1, p * q) * (1 - Fraction(1, p)) * (1 - Fraction(1, q))
    )
    want = abs(float(inner)) / math.sqrt(math.log(desk.Xj[2]))
    assert got == pytest.approx(want, rel=1e-13)


def test_bound_ignores_factorization(desk):
    F1 = DirichletPoly({1: 1.0, 3: 0.25, 7: -0.5})
    F2 = DirichletPoly({1: 1.0, 37: 0.125, 53: 0.375})
    A = multiply(F1, F2)
    B = multiply(F2, F1)
    C = DirichletPoly(dict(A.coeffs))
    vals = {mollified_square_bound(desk, P, 1) for P in (A, B, C)}
    assert len(vals) == 1


def test_bound_index_range(desk):
    with pytest.raises(IndexOutOfRange):
        mollified_square_bound(desk, ONE, 0)
    with pytest.raises(IndexOutOfRange):
        mollified_square_bound(desk, ONE, desk.R + 1)


def test_bound_length_budget(desk):
    fat = DirichletPoly({10 ** 13: 1.0})
    with pytest.raises(NotWellFactorable):
        mollified_square_bound(desk, fat, 1)


# ---------------------------------------------------------------------------
# empirical mollified square


def test_empirical_mean_of_l(fam_cached):
    fam, cache = fam_cached
    got = mollified_square_empirical(fam, cache, ONE, ONE)
    want = math.fsum(
        cache.get(int(d)).value for d in fam.discriminants
    ) / len(fam.discriminants)
    assert got == pytest.approx(want, rel=1e-14)


def test_empirical_small_family_pointwise(fam_cached):
    fam, cache = fam_cached
    sub = family_by_address(E11, X=100.0)
    assert sub.discriminants.size == 2
    Q = DirichletPoly({3: 0.5})
    got = mollified_square_empirical(sub, cache, ONE, Q)
    want = math.fsum(
        cache.get(int(d)).value * evaluate(Q, int(d)) ** 2
        for d in sub.discriminants
    ) / 2.0
    assert got == pytest.approx(want, rel=1e-14)


def test_empirical_accepts_member_arrays(fam_cached):
    fam, cache = fam_cached
    m = np.ones(len(fam.discriminants))
    got = mollified_square_empirical(fam, cache, m, ONE)
    want = mollified_square_empirical(fam, cache, ONE, ONE)
    assert got == want


def test_empirical_rejects_misaligned(fam_cached):
    fam, cache = fam_cached
    with pytest.raises(ValueError):
        mollified_square_empirical(fam, cache, np.ones(3), ONE)


def test_diagonal_dominance(fam_walk):
    # random well-factorable twist: off-diagonal character sums average out
    fam, _ = fam_walk
    rng = np.random.default_rng(3)
    F1 = DirichletPoly(
        {1: 1.0, **{p: float(rng.normal(0, 0.3)) for p in [3, 7, 13, 29]}}
    )
    F2 = DirichletPoly(
        {1: 1.0, **{p: float(rng.normal(0, 0.3)) for p in [37, 53, 89]}}
    )
    Q = multiply(F1, F2)
    emp = float(np.mean([evaluate(Q, int(d)) ** 2 for d in fam.discriminants]))
    diag = square_diagonal_prediction(fam, Q)
    assert abs(emp - diag) <= 0.2 * diag
    assert emp == pytest.approx(1.1928782302585672, rel=1e-10)
    assert diag == pytest.approx(1.174566741193678, rel=1e-10)


def test_cancellation_pair_suppression(fam_walk):
    # signed square pair loses an order of magnitude against unsigned
    fam, _ = fam_walk
    p, q = 41, 43
    Qc = DirichletPoly({p * p: 1.0, q * q: -1.0})
    emp = float(np.mean([evaluate(Qc, int(d)) ** 2 for d in fam.discriminants]))
    absd = np.abs(fam.discriminants)
    nocancel = (
        float(np.mean(np.gcd(absd, p) == 1)) / p ** 2
        + float(np.mean(np.gcd(absd, q) == 1)) / q ** 2
    )
    assert emp <= 0.1 * nocancel


# ---------------------------------------------------------------------------
# walk moments


FROZEN_WALK_RATIOS = {
    1: 0.43865333651353594,
    2: 0.2273752973476035,
    3: 0.12910441125749894,
}


@pytest.mark.parametrize("r", sorted(FROZEN_WALK_RATIOS))
def test_walk_moment_ratio(desk, fam_walk, r):
    _, partials = fam_walk
    emp = walk_moment_empirical(partials, 1, 2, r)
    bound = walk_moment_bound(desk, 1, 2, r)
    ratio = emp / bound
    assert ratio == pytest.approx(FROZEN_WALK_RATIOS[r], rel=1e-10)
    assert ratio <= 2.0


def test_walk_moment_bound_hand_values(desk):
    base = desk.n[2] - desk.n[1] + 2.0 / math.log(desk.Xj[1])
    assert walk_moment_bound(desk, 1, 2, 1) == pytest.approx(base, rel=1e-15)
    assert walk_moment_bound(desk, 1, 2, 2) == pytest.approx(
        3.0 * base ** 2, rel=1e-15
    )
    assert walk_moment_bound(desk, 1, 2, 0) == 1.0


def test_walk_moment_bound_slack_scale(desk):
    loose = walk_moment_bound(desk, 1, 2, 1, slack=4.0)
    tight = walk_moment_bound(desk, 1, 2, 1, slack=2.0)
    assert loose - tight == pytest.approx(2.0 / math.log(desk.Xj[1]), rel=1e-12)


@pytest.mark.parametrize("j,k", [(0, 2), (2, 1), (1, 1), (1, 3)])
def test_walk_moment_bound_index_errors(desk, j, k):
    with pytest.raises(IndexOutOfRange):
        walk_moment_bound(desk, j, k, 1)


def test_walk_moment_bound_order_cap(desk):
    with pytest.raises(ROutOfRange):
        walk_moment_bound(desk, 1, 2, 10 ** 9)


def test_walk_moment_empirical_trivial(fam_walk):
    _, partials = fam_walk
    assert walk_moment_empirical(partials, 1, 1, 3) == 0.0
    assert walk_moment_empirical(partials, 1, 2, 0) == 1.0


def test_walk_moment_empirical_accepts_traces(desk, table11, fam_walk):
    fam, partials = fam_walk
    ds = fam.discriminants[:8]
    traces = [trace(table11, desk, int(d)) for d in ds]
    got = walk_moment_empirical(traces, 1, 2, 1)
    want = float(np.mean(np.abs(partials[:8, 2] - partials[:8, 1]) ** 2))
    assert got == pytest.approx(want, rel=1e-12)


def test_walk_moment_empirical_empty():
    with pytest.raises(EmptyFamily):
        walk_moment_empirical(np.zeros((0, 3)), 1, 2, 1)
    with pytest.raises(IndexOutOfRange):
        walk_moment_empirical(np.zeros((4, 3)), 1, 5, 1)


# ---------------------------------------------------------------------------
# conditional bucket moment


@pytest.fixture(scope="module")
def walk_traces(desk, table11):
    fam = family_by_address(E11, X=30000.0)
    return [trace(table11, desk, int(d)) for d in fam.discriminants[:100]]


def test_conditional_trivial_reduction(desk, walk_traces):
    lhs, rhs = conditional_moment_check(desk, 1, walk_traces, ONE, -0.5)
    S = np.array([t.partials[1] for t in walk_traces])
    want = float(np.mean((S >= -0.5) & (S < 0.5)))
    assert lhs == pytest.approx(want, rel=1e-14)
    assert rhs == pytest.approx(
        math.exp(-0.25 / (2 * desk.n[1])) / math.sqrt(desk.n[1]), rel=1e-14
    )
    assert lhs == pytest.approx(0.23, abs=1e-12)
    assert 0.1 <= lhs / rhs <= 10.0


def test_conditional_empty_bucket(desk, walk_traces):
    lhs, _rhs = conditional_moment_check(desk, 1, walk_traces, ONE, 50.0)
    assert lhs == 0.0


def test_conditional_nontrivial_twist(desk, table11, walk_traces):
    lo, hi = prime_interval(desk, 2)
    ps = [int(p) for p in primes_up_to(int(hi)) if p > lo][:5]
    Q = DirichletPoly({p: hecke_an(table11, p) for p in ps})
    lhs, rhs = conditional_moment_check(desk, 1, walk_traces, Q, -0.5)
    assert 0.0 <= lhs
    assert rhs > 0.0
    assert 0.01 <= lhs / rhs <= 10.0


def test_conditional_flag_restriction(desk, walk_traces):
    class Stub:
        def __init__(self, keep):
            self.G = np.array([True, keep, keep])

    flags = [Stub(i % 2 == 0) for i in range(len(walk_traces))]
    lhs_all, _ = conditional_moment_check(desk, 1, walk_traces, ONE, -0.5)
    lhs_half, _ = conditional_moment_check(desk, 1, walk_traces, ONE, -0.5,
                                           flags=flags)
    assert lhs_half <= lhs_all


def test_conditional_support_violation(desk, walk_traces):
    bad = DirichletPoly({3: 1.0})
    with pytest.raises(SupportViolation):
        conditional_moment_check(desk, 1, walk_traces, bad, 0.0)


def test_conditional_index_and_empty(desk, walk_traces):
    with pytest.raises(IndexOutOfRange):
        conditional_moment_check(desk, 2, walk_traces, ONE, 0.0)
    with pytest.raises(EmptyFamily):
        conditional_moment_check(desk, 1, [], ONE, 0.0)


# ---------------------------------------------------------------------------
# Euler beta factors


def test_theta_defaults_shape():
    t1, t2, t3, t4, t5 = theta_defaults(101)
    assert t1 == 1.0
    assert t2 == t3 == t4 == t5 == 1.0 - 1.0 / 101
    assert theta_defaults(101, twisted_start=0)[2] == 1.0


def test_beta_collapses_when_eigenvalue_zero(table11):
    # a(19) = 0 for this curve: only the constant survives
    assert hecke_an(table11, 19) == 0.0
    th = theta_defaults(19)
    assert beta_factor(table11, 19, 0, th) == th[0]
    assert beta_factor(table11, 19, 1, th) == 0.0


def test_beta_three_term_arithmetic(table11):
    # independent truncation: all-ones weights, three explicit terms
    p = 13
    x = hecke_an(table11, p) / math.sqrt(p)
    th = (1.0, 1.0, 1.0, 1.0, 1.0)
    want = (1.0 + x ** 2 / 2.0 + x ** 4 / 24.0) - (x ** 2 + x ** 4 / 6.0)
    assert beta_factor(table11, p, 0, th, terms=3) == pytest.approx(
        want, rel=1e-15
    )
    assert want == pytest.approx(1.0 - x ** 2 / 2.0, abs=x ** 4)


def test_beta_frozen_values(table11):
    bf = beta_factors(table11, 101)
    assert isinstance(bf, BetaFactors)
    assert bf.beta_even == pytest.approx(0.9998058629406862, rel=1e-13)
    assert bf.beta_odd == pytest.approx(2.5627147381863946e-06, rel=1e-13)
    assert bf.beta_even_tail == pytest.approx(0.9899048728416763, rel=1e-13)


def test_beta_ordering_and_ratio_sweep(table11):
    # suppression of odd-parity factors at the three-halves power scale
    worst = 0.0
    for p in primes_up_to(1000):
        p = int(p)
        if p < 11:
            continue
        bf = beta_factors(table11, p)
        assert bf.beta_even >= bf.beta_even_tail >= 0.0
        worst = max(worst, abs(bf.beta_odd / bf.beta_even_tail) * p ** 1.5)
    assert worst <= 3.0


@pytest.mark.parametrize("theta", [
    (0.5, 1.0, 0.9, 0.9, 0.9),
    (1.0, 0.9, 0.95, 0.96, 0.9),
    (1.0, 0.99, 1.0, 0.9, 0.9),
    (1.0, 0.9, 1.0, 0.95, 0.9),
    (1.0, 0.9, 0.9, 0.9, 0.0),
    (1.0, 0.0, 0.9, 0.9, 0.9),
])
def test_beta_rejects_bad_theta(table11, theta):
    with pytest.raises(BadTheta):
        beta_factor(table11, 13, 0, theta)


def test_beta_rejects_bad_parity_and_terms(table11):
    th = theta_defaults(13)
    with pytest.raises(ValueError):
        beta_factor(table11, 13, 2, th)
    with pytest.raises(ValueError):
        beta_factor(table11, 13, 0, th, terms=2)


# ---------------------------------------------------------------------------
# multinomials and power coefficients


def _compositions(total, parts):
    if parts == 1:
        yield (total,)
        return
    for head in range(total + 1):
        for rest in _compositions(total - head, parts - 1):
            yield (head,) + rest


@pytest.mark.parametrize("r", [1, 2, 3, 4])
@pytest.mark.parametrize("t", [1, 2, 3, 4])
def test_split_multinomial_identity(r, t):
    # a 2r-multinomial equals the sum over balanced splits of products of
    # two r-multinomials
    for f in _compositions(2 * r, t):
        lhs = multinomial(2 * r, f)
        rhs = 0
        for c in _compositions(r, t):
            if all(ci <= fi for ci, fi in zip(c, f)):
                cc = tuple(fi - ci for ci, fi in zip(c, f))
                if sum(cc) == r:
                    rhs += multinomial(r, c) * multinomial(r, cc)
        assert lhs == rhs, (f, r, t)


def test_multinomial_rejects_bad_parts():
    with pytest.raises(ValueError):
        multinomial(4, (3, 2))
    with pytest.raises(ValueError):
        multinomial(4, (-1, 5))


def test_power_poly_coefficients(desk, table11):
    P2 = difference_power_poly(table11, desk, 1, 2, 2)
    a37 = hecke_an(table11, 37)
    a41 = hecke_an(table11, 41)
    assert P2.coeffs[37 * 41] == pytest.approx(2.0 * a37 * a41, rel=1e-15)
    assert P2.coeffs[37 * 37] == pytest.approx(a37 * a37, rel=1e-15)
    lo, hi = prime_interval(desk, 2)
    for n in list(P2.coeffs)[:50]:
        parts = []
        m = n
        for p in primes_up_to(int(hi)):
            p = int(p)
            while m % p == 0:
                parts.append(p)
                m //= p
        assert m == 1 and len(parts) == 2
        assert all(lo < p <= hi for p in parts)


def test_power_poly_trivial_cases(desk, table11):
    assert difference_power_poly(table11, desk, 1, 2, 0).coeffs == {1: 1}
    with pytest.raises(IndexOutOfRange):
        difference_power_poly(table11, desk, 1, 3, 1)


# ---------------------------------------------------------------------------
# report rows


def test_moment_row_ratio():
    assert MomentRow("a", "b", 2.0, 4.0).ratio == 0.5
    assert MomentRow("a", "b", 1.0, 0.0).ratio == math.inf
    assert MomentRow("a", "b", 0.0, 0.0).ratio == 0.0


def test_render_moment_csv():
    rows = [MomentRow("walk", "r=1", 0.5, 1.25)]
    text = render_moment_csv(rows)
    lines = text.splitlines()
    assert lines[0] == "quantity,params,empirical,reference,ratio"
    assert lines[1] == "walk,r=1,0.5,1.25,0.40000000000000002"
    assert render_moment_csv(rows) == text
