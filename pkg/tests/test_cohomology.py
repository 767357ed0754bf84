from __future__ import annotations

import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from morsetrunc.cohomology import (
    ChiProfile,
    CohomSpec,
    bott_h,
    chi_profile_sum,
    gg_rank,
    gg_rank_enumerated,
    h_product,
    h_profile,
    sym_power_chi,
    sym_power_summands,
    twist_multidegree,
)
from morsetrunc.errors import IndivisibleTwist, QOutOfRange

F = Fraction
P1 = CohomSpec((1,))


def binom_poly(n: int, d: int) -> int:
    """``binom(n + d, n)`` as the polynomial ``prod (d + k) / n!`` in d."""
    return math.prod(d + k for k in range(1, n + 1)) // math.factorial(n)


# -- Bott formula ----------------------------------------------------------


@pytest.mark.parametrize("n, d, q, value", [(2, 2, 0, 6), (2, -4, 2, 3), (1, -1, 0, 0), (1, -1, 1, 0), (3, 0, 0, 1)])
def test_bott_examples(n, d, q, value):
    assert bott_h(n, d, q) == value


def test_bott_monomial_count_oracle():
    # h^0(P^n, O(d)) counts degree-d monomials in n+1 variables
    for n in range(1, 4):
        for d in range(0, 6):
            count = sum(1 for e in itertools.product(range(d + 1), repeat=n + 1) if sum(e) == d)
            assert bott_h(n, d, 0) == count


def test_bott_q_out_of_range():
    with pytest.raises(QOutOfRange):
        bott_h(2, 0, 3)
    with pytest.raises(QOutOfRange):
        bott_h(2, 0, -1)


def test_serre_duality():
    for n in range(1, 5):
        for d in range(-20, 21):
            for q in range(n + 1):
                assert bott_h(n, d, q) == bott_h(n, -d - n - 1, n - q)


def test_euler_characteristic_is_binomial_polynomial():
    for n in range(1, 5):
        for d in range(-10, 11):
            prof = ChiProfile(tuple(bott_h(n, d, q) for q in range(n + 1)))
            assert prof.chi_truncated(n) * (-1) ** n == binom_poly(n, d)
            assert prof.euler == binom_poly(n, d)


# -- products and sums -----------------------------------------------------


@pytest.mark.parametrize(
    "factors, md, q, value",
    [((1, 1), (1, 1), 0, 4), ((1, 1), (1, -2), 1, 2), ((2, 3), (0, 0), 0, 1), ((1, 1), (-2, -2), 2, 1)],
)
def test_h_product_examples(factors, md, q, value):
    assert h_product(CohomSpec(factors), md, q) == value


def test_h_product_errors():
    spec = CohomSpec((1, 1))
    with pytest.raises(QOutOfRange):
        h_product(spec, (0, 0), 3)
    with pytest.raises(ValueError):
        h_product(spec, (0,), 0)
    with pytest.raises(ValueError):
        CohomSpec((0,))


@settings(max_examples=60, deadline=None)
@given(
    factors=st.lists(st.integers(1, 3), min_size=1, max_size=3),
    data=st.data(),
)
def test_kunneth_euler_multiplicative(factors, data):
    md = data.draw(st.lists(st.integers(-6, 6), min_size=len(factors), max_size=len(factors)))
    prof = ChiProfile(h_profile(CohomSpec(tuple(factors)), md))
    assert prof.euler == math.prod(binom_poly(n, d) for n, d in zip(factors, md))


def test_chi_profile_sum_example():
    prof = chi_profile_sum(P1, [((d,), 1) for d in (4, 2, 0, -2, -4)])
    assert prof.h == (9, 4)
    assert prof.chi == (9, -5)
    assert prof.chi_truncated(1) == -5


def test_chi_profile_sum_empty_and_linear():
    spec = CohomSpec((2,))
    assert chi_profile_sum(spec, []).h == (0, 0, 0)
    single = chi_profile_sum(spec, [((-5,), 1)])
    assert chi_profile_sum(spec, [((-5,), 3)]) == single.scaled(3)
    with pytest.raises(ValueError):
        chi_profile_sum(spec, [((0,), -1)])


@settings(max_examples=60, deadline=None)
@given(h=st.lists(st.integers(0, 50), min_size=1, max_size=6))
def test_chi_recursion(h):
    prof = ChiProfile(tuple(h))
    for i in range(1, len(h)):
        assert prof.chi_truncated(i) == h[i] - prof.chi_truncated(i - 1)
    assert prof.chi == tuple(prof.chi_truncated(i) for i in range(len(h)))


# -- symmetric powers ------------------------------------------------------


def test_sym_power_m4():
    prof = sym_power_chi(P1, [(1,), (-1,)], (1, 1), 4)
    assert prof.h[0] == 9 and prof.chi_truncated(1) == -5


@pytest.mark.parametrize("m", [2, 4, 8])
def test_sym_power_closed_form(m):
    prof = sym_power_chi(P1, [(1,), (-1,)], (1, 1), m)
    assert prof.h[0] == (m // 2 + 1) ** 2
    assert prof.chi_truncated(1) == -m - 1


def test_sym_power_m0_is_structure_sheaf():
    prof = sym_power_chi(CohomSpec((1, 2)), [(1, 0), (0, -3)], (2, 3), 0)
    assert prof.h == (1, 0, 0, 0)


def test_sym_power_summands_with_twist():
    counts = sym_power_summands([(1,), (-1,)], (1, 1), 2, twist=((1,), F(1, 2)))
    assert counts == {(3,): 1, (1,): 1, (-1,): 1}


def test_twist_divisibility():
    assert twist_multidegree(4, F(1, 2), (1, -2)) == (2, -4)
    with pytest.raises(IndivisibleTwist):
        twist_multidegree(3, F(1, 2), (1,))
    with pytest.raises(IndivisibleTwist):
        sym_power_chi(P1, [(1,)], (1,), 1, twist=((1,), F(1, 2)))


def test_sym_power_shape_errors():
    with pytest.raises(ValueError):
        sym_power_chi(P1, [(1,)], (1, 1), 2)
    with pytest.raises(ValueError):
        sym_power_chi(P1, [(1, 1)], (1,), 2)


# -- jet ranks -------------------------------------------------------------


@pytest.mark.parametrize("n, k, m, value", [(1, 2, 2, 2), (2, 1, 2, 3), (1, 1, 5, 1), (2, 2, 0, 1)])
def test_gg_rank_examples(n, k, m, value):
    assert gg_rank(n, k, m) == value


@settings(max_examples=60, deadline=None)
@given(n=st.integers(1, 3), k=st.integers(1, 4), m=st.integers(0, 14))
def test_gg_rank_dp_matches_enumeration(n, k, m):
    assert gg_rank(n, k, m) == gg_rank_enumerated(n, k, m)


# for kn - 1 >= 5 the lower-order terms still bias the fit by more than 0.1 at m = 2^10
@pytest.mark.parametrize("n, k", [(1, 2), (2, 2), (1, 3), (1, 4)])
def test_gg_rank_growth_exponent(n, k):
    ms = np.array([2**e for e in range(6, 11)], dtype=float)
    ranks = np.array([gg_rank(n, k, int(m)) for m in ms], dtype=float)
    slope = np.polyfit(np.log(ms), np.log(ranks), 1)[0]
    assert abs(slope - (k * n - 1)) < 0.1


def test_gg_rank_errors():
    with pytest.raises(ValueError):
        gg_rank(0, 1, 1)
    with pytest.raises(ValueError):
        gg_rank(1, 1, -1)
