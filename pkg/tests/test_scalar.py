import itertools
from fractions import Fraction

import pytest

from balfact.errors import NotFound, UnsupportedField, VerificationError
from balfact.fields import QQ, field_of_order, is_square, prime_powers
from balfact.scalar import (
    PROVENANCES,
    ScalarCertificate,
    balanced_factor,
    certificate_problem,
    char2_even_factor,
    char3_three_factor,
    decide_balanced,
    decide_nonpower,
    even_k_factor,
    find_paired_square,
    four_factor,
    is_power_tuple,
    odd_k_factor,
    oracle_search,
    oracle_targets,
    parametrized_odd_factor,
    rational_distinct_family,
    verify_scalar_certificate,
    zero_rule,
)

SMALL_Q = prime_powers(16)


def naive_targets(F, k):
    """Plain itertools scan: which elements are products of balanced k-tuples."""
    balanced, nonpower = set(), set()
    for t in itertools.product(F.elements(), repeat=k - 1):
        last = -sum(t, F.zero)
        full = t + (last,)
        prod = F.one
        for x in full:
            prod = prod * x
        balanced.add(prod.value)
        if not is_power_tuple(full):
            nonpower.add(prod.value)
    return balanced, nonpower


def values(cert):
    return tuple(f.value for f in cert.factors)


# -- deciders -------------------------------------------------------------------

def test_decide_balanced_examples():
    assert decide_balanced(7, 3) is False
    assert decide_balanced(5, 3) is True
    assert decide_balanced(2, 4) is True


def test_decide_nonpower_examples():
    assert decide_nonpower(5, 3) is True
    assert decide_nonpower(4, 4) is True
    assert decide_nonpower(3, 4) is False


@pytest.mark.parametrize("q,k", [(q, k) for q in (2, 3, 4, 5, 7) for k in range(2, 6)])
def test_vectorised_oracle_matches_naive_scan(q, k):
    F = field_of_order(q)
    balanced, nonpower = oracle_targets(F, k)
    nb, nn = naive_targets(F, k)
    assert set(balanced.nonzero()[0].tolist()) == nb
    # the vectorised scan stops once every element has a non-power witness
    assert set(nonpower.nonzero()[0].tolist()) <= nn
    if nonpower.all():
        assert nn == set(range(q))
    else:
        assert set(nonpower.nonzero()[0].tolist()) == nn


# -- four factors ------------------------------------------------------------------

def test_four_factor_rational_example():
    cert = four_factor(QQ, QQ(1))
    assert [f.value for f in cert.factors] == [Fraction(2, 3), Fraction(-3, 2),
                                               Fraction(3, 2), Fraction(-2, 3)]


def test_four_factor_gf7_examples():
    F = field_of_order(7)
    assert values(four_factor(F, F(1))) == (3, 2, 5, 4)
    cert = four_factor(F, F(2))
    assert cert.provenance == "four-factor-shifted"
    y = cert.witness.y
    assert (F(2) * y ** 4).value not in (2, 6, 0)
    assert verify_scalar_certificate(cert)


@pytest.mark.parametrize("q", [5, 2, 4, 3, 9])
def test_four_factor_refuses(q):
    F = field_of_order(q)
    with pytest.raises(UnsupportedField):
        four_factor(F, F.one)


@pytest.mark.parametrize("q", [7, 11, 13])
def test_four_factor_scale_equivariance(q):
    """Rescaling x by y^4 and the factors by y gives another certificate."""
    F = field_of_order(q)
    for x in F.elements():
        cert = four_factor(F, x)
        for y in F.elements()[1:]:
            scaled = ScalarCertificate(F, x * y ** 4, 4, tuple(f * y for f in cert.factors),
                                       cert.nonpower, "scaled")
            assert verify_scalar_certificate(scaled)


def test_rational_family():
    certs = rational_distinct_family(1, 3)
    assert len({c.factors for c in certs}) == 3
    assert all(verify_scalar_certificate(c) for c in certs)
    with pytest.raises(ValueError):
        rational_distinct_family(0, 3)


# -- case formulas ---------------------------------------------------------------

def test_odd_k_examples():
    F7 = field_of_order(7)
    assert values(odd_k_factor(F7, F7(1), 5)) == (6, 4, 4, 2, 5)
    F3 = field_of_order(3)
    cert = odd_k_factor(F3, F3(2), 5)
    assert cert.nonpower and verify_scalar_certificate(cert)
    F4 = field_of_order(4)
    with pytest.raises(UnsupportedField):
        odd_k_factor(F4, F4.one, 5)


def test_parametrized_odd_examples():
    cert = parametrized_odd_factor(QQ, QQ(1), QQ(1), 5)
    assert sorted(f.value for f in cert.factors) == sorted(
        Fraction(v) for v in (-1, Fraction(1, 2), Fraction(1, 2), 2, -2))
    assert verify_scalar_certificate(parametrized_odd_factor(QQ, QQ(1), QQ(2), 7))
    F7 = field_of_order(7)
    assert verify_scalar_certificate(parametrized_odd_factor(F7, F7(3), F7(2), 9))
    cert = parametrized_odd_factor(QQ, QQ(Fraction(3, 5)), QQ(Fraction(-2, 7)), 2017)
    assert cert.k == 2017 and verify_scalar_certificate(cert)


def test_even_k_examples():
    F7 = field_of_order(7)
    cert = even_k_factor(F7, F7(3), 6)
    assert values(cert) == (6, 3, 6, 6, 6, 1)
    assert cert.witness.c == F7(1) and cert.witness.b == F7(5)
    F5 = field_of_order(5)
    assert verify_scalar_certificate(even_k_factor(F5, F5(2), 6))


def test_even_k_gf3_fallback():
    F3 = field_of_order(3)
    with pytest.raises(NotFound) as info:
        even_k_factor(F3, F3(1), 6)
    assert info.value.proven
    # at k = 8 the sign flip makes c = 1 admissible again
    cert = even_k_factor(F3, F3(1), 8)
    assert cert.provenance == "even-length-formula" and cert.nonpower


def test_char2_examples():
    F4 = field_of_order(4)
    alpha = F4.generator
    assert char2_even_factor(F4, alpha, 4).factors == (alpha + 1, alpha + 1, F4.one, F4.one)
    cert = char2_even_factor(F4, F4.one, 4)
    assert cert.nonpower and verify_scalar_certificate(cert)
    F2 = field_of_order(2)
    with pytest.raises(UnsupportedField):
        char2_even_factor(F2, F2.one, 4)


def test_paired_square():
    F9 = field_of_order(9)
    u, pi = find_paired_square(F9)
    assert u == F9.one and pi * pi == u + 1
    F27 = field_of_order(27)
    u, pi = find_paired_square(F27)
    assert u != F27.one and is_square(u)[0] and pi * pi == u + 1
    with pytest.raises(UnsupportedField):
        find_paired_square(field_of_order(3))


def test_char3_examples():
    F9 = field_of_order(9)
    cert = char3_three_factor(F9, F9.one)
    assert cert.nonpower and verify_scalar_certificate(cert)
    assert oracle_search(F9, F9.one, 3, require_nonpower=True) is not None
    with pytest.raises(ValueError):
        char3_three_factor(F9, F9.zero)
    F27 = field_of_order(27)
    for a in F27.elements()[1:]:
        assert char3_three_factor(F27, a).nonpower


def test_char3_discriminant_identity():
    F = field_of_order(81)
    for a in F.elements()[1:20]:
        w = char3_three_factor(F, a).witness
        assert w.D == w.y * (w.y - w.b) ** 3
        assert w.b ** 3 == a


def test_zero_rule_examples():
    assert values(zero_rule(field_of_order(5), 3)) == (4, 1, 0)
    assert values(zero_rule(field_of_order(7), 5)) == (6, 1, 0, 0, 0)
    assert values(zero_rule(field_of_order(2), 4)) == (1, 1, 0, 0)


# -- dispatcher and oracle ------------------------------------------------------------

def test_balanced_factor_examples():
    F5 = field_of_order(5)
    cert = balanced_factor(F5, F5(2), 3, require_nonpower=True)
    assert cert.provenance == "exhaustive-search" and cert.nonpower
    F7 = field_of_order(7)
    with pytest.raises(NotFound) as info:
        balanced_factor(F7, F7.one, 2)
    assert info.value.proven
    F2 = field_of_order(2)
    with pytest.raises(NotFound):
        balanced_factor(F2, F2.one, 3, require_nonpower=True)


def test_oracle_examples():
    F2 = field_of_order(2)
    assert [x.value for x in oracle_search(F2, F2.one, 2)] == [1, 1]
    F3 = field_of_order(3)
    assert oracle_search(F3, F3.one, 6, require_nonpower=True) is None
    found = oracle_search(F3, F3.one, 8, require_nonpower=True)
    assert sorted(x.value for x in found) == [1, 1, 1, 1, 2, 2, 2, 2]


@pytest.mark.parametrize("q", SMALL_Q)
def test_dispatcher_sound_and_complete(q):
    """Every (a, k) either gets a verified certificate or a proof matching the oracle."""
    F = field_of_order(q)
    for k in range(2, 7):
        balanced, nonpower = oracle_targets(F, k)
        for a in F.elements():
            for strict, mask in ((False, balanced), (True, nonpower)):
                try:
                    cert = balanced_factor(F, a, k, require_nonpower=strict)
                except NotFound as exc:
                    assert exc.proven
                    assert not mask[a.value] or (strict and not nonpower.all())
                    assert oracle_search(F, a, k, require_nonpower=strict) is None
                    continue
                assert verify_scalar_certificate(cert)
                assert cert.provenance in PROVENANCES
                assert not strict or cert.nonpower


def test_power_tuple_impossible_when_char_does_not_divide_k():
    """A balanced power tuple (x, ..., x) has k x = 0, so x = 0 unless p | k:
    every certificate for a nonzero target is then automatically non-power."""
    for q in (3, 4, 5, 7, 9):
        F = field_of_order(q)
        for k in range(2, 9):
            if k % F.p == 0:
                continue
            assert all(x.is_zero() for x in F.elements() if (x * k).is_zero())
            for a in F.elements()[1:]:
                try:
                    cert = balanced_factor(F, a, k)
                except NotFound:
                    continue
                assert cert.nonpower


def test_certificate_problems():
    F7 = field_of_order(7)
    one = F7.one
    good = ScalarCertificate(F7, one, 4, tuple(F7(v) for v in (3, 2, 5, 4)), True, "x")
    assert verify_scalar_certificate(good)
    ones = ScalarCertificate(F7, one, 4, (one,) * 4, False, "x")
    assert certificate_problem(ones) == "sum mismatch"
    short = ScalarCertificate(F7, one, 5, good.factors, True, "x")
    assert certificate_problem(short) == "length mismatch"
    wrong = ScalarCertificate(F7, F7(2), 4, good.factors, True, "x")
    assert certificate_problem(wrong) == "product mismatch"


def test_determinism():
    F = field_of_order(13)
    for a in F.elements():
        assert balanced_factor(F, a, 5) == balanced_factor(F, a, 5)
        assert oracle_search(F, a, 3) == oracle_search(F, a, 3)


def test_verification_error_is_assertion():
    assert issubclass(VerificationError, AssertionError)
