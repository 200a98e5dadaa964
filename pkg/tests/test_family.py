"""Family enumeration and character tests.

Brute-force filters and textbook symbol identities serve as oracles; the
expected memberships are frozen where small enough to list.
"""

import math

import numpy as np
import pytest

from ltail import ec, family
from ltail.errors import ConstraintViolation, EmptyFamilyWarning, NotCoprime, ZeroInput


@pytest.fixture(scope="module")
def e11():
    return ec.curve_by_label("11a1")


@pytest.fixture(scope="module")
def e37():
    return ec.curve_by_label("37a1")


# ---------------------------------------------------------------------------
# kronecker symbol


@pytest.mark.parametrize("d", [-7, -1, 1, 2, 5, 12, 101])
def test_kronecker_at_one(d):
    assert family.kronecker(d, 1) == 1


def test_kronecker_two_rule():
    assert family.kronecker(5, 2) == -1
    # full mod-8 pattern for odd d
    want = {1: 1, 3: -1, 5: -1, 7: 1}
    for d in range(-40, 41):
        if d % 2:
            assert family.kronecker(d, 2) == want[d % 8]


def test_kronecker_shared_factor_vanishes():
    assert family.kronecker(5, 5) == 0
    assert family.kronecker(12, 9) == 0
    assert family.kronecker(4, 2) == 0


def test_kronecker_matches_legendre_tables():
    for p in (3, 7, 11, 13):
        table = family.chi_prime_table(p)
        for d in range(-60, 61):
            assert family.kronecker(d, p) == table[d % p]
    t2 = family.chi_prime_table(2)
    for d in range(-60, 61):
        assert family.kronecker(d, 2) == t2[d % 8]


def test_kronecker_multiplicative_in_n():
    rng = np.random.default_rng(7)
    for _ in range(1000):
        d = int(rng.integers(-3000, 3000))
        m = int(rng.integers(1, 400))
        n = int(rng.integers(1, 400))
        assert family.kronecker(d, m * n) == family.kronecker(d, m) * family.kronecker(
            d, n
        )


def test_kronecker_zero_iff_common_factor():
    rng = np.random.default_rng(8)
    for _ in range(500):
        d = int(rng.integers(-500, 500))
        n = int(rng.integers(1, 500))
        if d == 0:
            continue
        assert (family.kronecker(d, n) == 0) == (math.gcd(d, n) > 1)


@pytest.mark.parametrize("d", [5, 13, 21, 89])
def test_kronecker_periodicity(d):
    # for positive d the symbol is periodic in n with period dividing 4d
    for n in range(1, 200):
        assert family.kronecker(d, n) == family.kronecker(d, n + 4 * d)


# ---------------------------------------------------------------------------
# fundamentality


@pytest.mark.parametrize(
    "d,want",
    [
        (1, True),
        (5, True),
        (8, True),
        (9, False),
        (12, True),
        (13, True),
        (-3, True),
        (-4, True),
        (-8, True),
        (-15, True),
        (-9, False),
        (4, False),
        (25, False),
        (45, False),
    ],
)
def test_is_fundamental(d, want):
    assert family.is_fundamental(d) is want


def test_is_fundamental_zero_rejected():
    with pytest.raises(ZeroInput):
        family.is_fundamental(0)


def test_negative_residue_convention():
    # python % is already the mathematical residue; freeze that assumption
    assert -15 % 4 == 1
    assert family.is_fundamental(-15)


# ---------------------------------------------------------------------------
# root numbers


def test_root_number_trivial_twist(e11, e37):
    assert family.root_number(e11, 1) == +1
    assert family.root_number(e37, 1) == -1


def test_root_number_frozen_value(e11):
    # chi_13(-11) = (13|-1)(13|11) = (13|11) = -1 since 2 is not a square mod 11
    assert family.kronecker(13, 11) == -1
    assert family.root_number(e11, 13) == -1


def test_root_number_not_coprime(e11):
    with pytest.raises(NotCoprime):
        family.root_number(e11, 22)
    with pytest.raises(NotCoprime):
        family.root_number(e11, 4)


# ---------------------------------------------------------------------------
# enumeration


def brute_force_family(curve, sign, a, v, X):
    out = []
    for ad in range(1, int(X) + 1):
        d = sign * ad
        if math.gcd(d, 2 * curve.N) != 1:
            continue
        if not family.is_fundamental(d):
            continue
        if d % v != 0 or d % curve.N0 != a % curve.N0:
            continue
        if family.root_number(curve, d) != +1:
            continue
        out.append(d)
    return out


def test_enumerate_small_family_frozen(e11):
    fam = family.family_by_address(e11, sign=+1, residue=1, divisor=1, X=500)
    assert list(fam.discriminants) == [1, 89, 177, 265, 353]
    assert list(fam.discriminants) == brute_force_family(e11, +1, 1, 1, 500)


def test_enumerate_matches_brute_force(e11, e37):
    # chi_d(-1) flips with the sign of d, so the admissible residue classes
    # differ between the positive and negative branches
    for curve, sign, a, v in [
        (e11, +1, 1, 1),
        (e11, -1, 57, 1),
        (e11, +1, 1, 3),
        (e37, +1, 5, 1),
        (e37, -1, 1, 1),
    ]:
        fam = family.family_by_address(curve, sign=sign, residue=a, divisor=v, X=2000)
        assert list(fam.discriminants) == brute_force_family(curve, sign, a, v, 2000)


def test_enumerate_prefix_monotone(e11):
    small = family.family_by_address(e11, X=500).discriminants
    large = family.family_by_address(e11, X=1500).discriminants
    assert list(large[: len(small)]) == list(small)


def test_enumerate_all_root_numbers_positive(e11):
    fam = family.family_by_address(e11, X=3000)
    for d in fam:
        assert family.root_number(e11, int(d)) == +1


def test_enumerate_empty_warns(e11):
    with pytest.warns(EmptyFamilyWarning):
        fam = family.family_by_address(e11, X=0.5)
    assert len(fam) == 0


def test_count_scaling(e11):
    n1 = len(family.family_by_address(e11, X=10**5))
    n2 = len(family.family_by_address(e11, X=2 * 10**5))
    assert n1 > 100
    assert abs(n2 / (2 * n1) - 1) < 0.25


def test_constraints_validation(e11):
    with pytest.raises(ConstraintViolation):
        family.FamilyConstraints(e11, 0, 1, 1, 100.0)
    with pytest.raises(ConstraintViolation):
        family.FamilyConstraints(e11, +1, 3, 1, 100.0)  # 3 mod 4 residue
    with pytest.raises(ConstraintViolation):
        family.FamilyConstraints(e11, +1, 33, 1, 100.0)  # shares 11 with N0
    with pytest.raises(ConstraintViolation):
        family.FamilyConstraints(e11, +1, 1, 4, 100.0)  # divisor not squarefree
    with pytest.raises(ConstraintViolation):
        family.FamilyConstraints(e11, +1, 1, 1, -5.0)


def test_constraints_reject_odd_sign_class(e11):
    # a = 57 is 1 mod 4 and invertible mod 88 but sits in a residue class
    # where the twisted functional equation has sign -1
    assert family.kronecker(57, 11) == -1
    with pytest.raises(ConstraintViolation):
        family.FamilyConstraints(e11, +1, 57, 1, 100.0)
