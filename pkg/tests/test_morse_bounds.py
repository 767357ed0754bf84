from __future__ import annotations

import csv
import io
import json
import math
from fractions import Fraction

import pytest

from morsetrunc.cohomology import CohomSpec
from morsetrunc.errors import LevelOutOfRange, NonPolynomialTail
from morsetrunc.morse_bounds import (
    AsymptoticTrace,
    BoundReport,
    asymptotic_trace,
    bounds_csv,
    comparison_leading,
    harmonic_over_log,
    integral_bound_leading,
    integral_prefactor,
    is_monotone_decreasing,
    leading_coefficient,
    morse_rhs_leading,
    sym_power_grid_period,
    twisted_integral_bound_leading,
    verify_integral_bound,
    verify_morse,
    volume_lower_bound,
    weak_morse_rhs_leading,
)
from morsetrunc.strat_tree import BundleCombo, Edge, MarkedTree, TreeNode, flag_tree, product_flag_tree, siu_tree
from morsetrunc.upsilon import UpsilonSpec

F = Fraction
FG = BundleCombo.parse("F+G")
P1 = CohomSpec((1,))
P2 = CohomSpec((2,))


def one_edge(**marks) -> MarkedTree:
    return MarkedTree(1, tuple(marks), TreeNode((Edge({k: F(v) for k, v in marks.items()}, TreeNode()),)))


# -- right-hand sides ------------------------------------------------------


@pytest.mark.parametrize(
    "tree, combo, i, value",
    [
        (siu_tree(2, 2, 1), FG, 1, F(0)),
        (siu_tree(2, 2, 1), FG, 0, F(2)),
        (flag_tree(2, 1), None, 0, F(1, 2)),
    ],
)
def test_morse_rhs_examples(tree, combo, i, value):
    assert morse_rhs_leading(tree, i, combo) == value


def test_morse_rhs_level_checked():
    with pytest.raises(LevelOutOfRange):
        morse_rhs_leading(flag_tree(2, 1), 3)


def test_weak_rhs_uses_single_index():
    assert weak_morse_rhs_leading(siu_tree(2, 2, 1), 1, FG) == F(4, 2)


def test_leading_coefficient_of_polynomial():
    vals = [F(m**3, 6) - 2 * m**2 + 7 for m in range(1, 12)]
    assert leading_coefficient(vals, 3) == F(1, 6)
    # step 2 samples of the same cubic
    vals2 = [F(m**3, 6) - 2 * m**2 + 7 for m in range(2, 30, 2)]
    assert leading_coefficient(vals2, 3, step=2) == F(1, 6)


def test_leading_coefficient_rejects_non_polynomial():
    with pytest.raises(NonPolynomialTail):
        leading_coefficient([2**m for m in range(12)], 2)
    with pytest.raises(NonPolynomialTail):
        leading_coefficient([1, 2, 3], 2)


def test_integral_prefactor():
    # gcd/prod(a) * C(n+r-1, r-1) / (n+r-1)! with the level sign
    assert integral_prefactor(1, (1, 1), 0) == F(1)
    assert integral_prefactor(1, (1, 1), 1) == F(-1)
    assert integral_prefactor(2, (2, 4), 0) == F(2, 8) * 3 / 6


def test_integral_bound_examples():
    assert integral_bound_leading(UpsilonSpec(one_edge(L1=1, L2=-1), 0), (1, 1)).value == F(1, 4)
    assert integral_bound_leading(UpsilonSpec(one_edge(L1=1, L2=-1), 1), (1, 1)).value == 0
    zero = product_flag_tree([2], {"A": [0], "B": [0]})
    assert integral_bound_leading(UpsilonSpec(zero, 2), (1, 3)).value == 0


def test_twisted_bound_examples():
    tree = one_edge(L1=1, N=1)
    assert twisted_integral_bound_leading(tree, (1,), 0, "N").value == 2
    neg = one_edge(L1=1, N=-2)
    assert twisted_integral_bound_leading(neg, (1,), 0, "N").value == 0
    assert twisted_integral_bound_leading(neg, (1,), 1, "N").value == 1  # (-1)^1 * (-1)


def test_zero_twist_reduces_to_untwisted():
    tree = product_flag_tree([1, 1], {"L1": [1, -1], "L2": [-2, 1], "N": [0, 0]})
    for i in range(3):
        twisted = twisted_integral_bound_leading(tree, (1, 2), i, "N", F(3, 2)).value
        plain = integral_bound_leading(UpsilonSpec(tree, i, ("L1", "L2")), (1, 2)).value
        assert twisted == plain


def test_comparison_and_volume():
    assert comparison_leading(1, 1, 2, 1) == pytest.approx(math.log(2) / 2)
    assert comparison_leading(1, 1, 2, 0) == 0
    assert comparison_leading(2, 2, 3, 2) == pytest.approx(2 * comparison_leading(2, 2, 3, 1))
    assert volume_lower_bound(1, 2, 1) == pytest.approx(math.log(2) / 2)
    assert volume_lower_bound(2, 5, 0) == 0
    assert is_monotone_decreasing([volume_lower_bound(2, k, 1) for k in range(3, 12)])
    with pytest.raises(ValueError):
        comparison_leading(1, 1, 1, 1)


# -- Morse checks ----------------------------------------------------------


def test_verify_morse_examples():
    siu = siu_tree(2, 2, 1)
    rep = verify_morse(P2, (1,), siu, 1, combo=FG)
    assert (rep.lhs, rep.rhs, rep.verdict) == (F(-1, 2), F(0), "holds")
    rep = verify_morse(P2, (1,), flag_tree(2, 1), 0)
    assert rep.lhs == rep.rhs == F(1, 2) and rep.margin == 0
    rep = verify_morse(P2, (1,), siu, 2, combo=FG)
    assert rep.lhs == rep.rhs == F(1, 2) and rep.extra["equality"] and rep.holds


def test_verify_morse_dimension_mismatch():
    with pytest.raises(ValueError):
        verify_morse(P1, (1,), flag_tree(2, 1), 0)


@pytest.mark.parametrize("n", [1, 2, 3])
@pytest.mark.parametrize("d", [-3, -1, 0, 2])
def test_riemann_roch_on_flag_and_siu_trees(n, d):
    spec = CohomSpec((n,))
    for tree, combo in ((flag_tree(n, d), None), (siu_tree(n, max(d, 0) + 1, max(d, 0) + 1 - d), FG)):
        rep = verify_morse(spec, (d,), tree, n, combo=combo)
        assert rep.margin == 0 and rep.holds


def test_riemann_roch_on_product_flag_tree():
    spec = CohomSpec((1, 2))
    tree = product_flag_tree([1, 2], {"L": [2, -1]})
    rep = verify_morse(spec, (2, -1), tree, 3)
    assert rep.margin == 0


def test_weak_morse_reported():
    for i in range(3):
        rep = verify_morse(P2, (1,), siu_tree(2, 3, 2), i, combo=FG)
        assert rep.extra["weak_holds"]


def test_nonpolynomial_tail_on_short_range():
    with pytest.raises(NonPolynomialTail):
        verify_morse(CohomSpec((3,)), (1,), flag_tree(3, 1), 0, m_range=(1, 4))


# -- integral bound checks -------------------------------------------------


@pytest.mark.parametrize(
    "bundles, values, period",
    [([(1,), (-1,)], (F(1, 4), F(0)), 2), ([(2,), (-1,)], (F(2, 3), F(-1, 2)), 3)],
)
def test_verify_integral_bound_p1(bundles, values, period):
    for i, value in enumerate(values):
        rep = verify_integral_bound(P1, bundles, (1, 1), i)
        assert rep.rhs == rep.lhs == value
        assert rep.holds and rep.extra["grid_period"] == period


def test_verify_twisted_integral_bound():
    rep = verify_integral_bound(P1, [(1,), (-1,)], (1, 1), 0, twist=((1,), F(1, 2)), m_range=(1, 80))
    assert rep.tag == "twisted_integral"
    assert rep.rhs == rep.lhs == F(9, 16)


@pytest.mark.parametrize("d", [-2, 1, 3])
def test_rank_one_degenerates_to_morse(d):
    for i in range(3):
        integral = verify_integral_bound(P2, [(d,)], (1,), i)
        morse = verify_morse(P2, (d,), flag_tree(2, d), i)
        assert (integral.rhs, integral.lhs) == (morse.rhs, morse.lhs)


def test_verify_integral_bound_p1xp1():
    spec = CohomSpec((1, 1))
    got = [verify_integral_bound(spec, [(1, -1), (-1, 2)], (1, 2), i, m_range=(1, 120)) for i in range(3)]
    assert [r.rhs for r in got] == [F(1, 864), F(1, 8), F(-1, 8)]
    assert all(r.margin == 0 for r in got)
    assert got[0].extra["grid_period"] == 12


def test_verify_integral_bound_monte_carlo_band():
    rep = verify_integral_bound(P1, [(1,), (-1,)], (1, 1), 0, method="monte_carlo", samples=200_000)
    assert rep.verdict == "inconclusive"  # the bound is attained, so the margin sits inside the band
    assert abs(rep.margin) < 4 * rep.stderr


def test_grid_period():
    assert sym_power_grid_period([(1,), (-1,)], (1, 1)) == 2
    assert sym_power_grid_period([(1,), (-1,)], (1, 1), F(1, 2)) == 4
    assert sym_power_grid_period([(5,)], (3,)) == 3  # H_m is empty unless 3 | m


# -- asymptotic trace ------------------------------------------------------


def test_asymptotic_trace_toy():
    tree = one_edge(d=1)
    trace = asymptotic_trace(tree, 0, [4, 8], samples=200_000, seed=3)
    assert trace.target == 1
    for k, value, err in trace.rows:
        assert abs(value - harmonic_over_log(k)) < 4 * err


def test_asymptotic_trace_constant_shift():
    tree = one_edge(d=0, p=2)
    trace = asymptotic_trace(tree, 0, [4, 16], samples=1000, twist="p")
    assert trace.target == 2
    for k, value, err in trace.rows:
        # the edge form is the constant (H_k/k) p, so the scaled value is p H_k / log k exactly
        assert value == pytest.approx(2 * harmonic_over_log(k)) and err < 1e-12


def test_asymptotic_trace_level_out_of_range():
    trace = asymptotic_trace(one_edge(d=1), 3, [4, 8], samples=10)
    assert [v for _, v, _ in trace.rows] == [0.0, 0.0]


def test_asymptotic_trace_thread_independent():
    tree = product_flag_tree([1, 1], {"A": [1, -1], "B": [-1, 2]})
    runs = [asymptotic_trace(tree, 1, [3, 5], samples=100_000, seed=8, threads=t).rows for t in (1, 4)]
    assert runs[0] == runs[1]


def test_asymptotic_trace_rejects_bad_k():
    with pytest.raises(ValueError):
        asymptotic_trace(one_edge(d=1), 0, [1, 4])
    with pytest.raises(ValueError):
        asymptotic_trace(one_edge(d=1), 0, [8, 4])


# -- serialization ---------------------------------------------------------


def test_bound_report_json_and_csv():
    rep = verify_morse(P2, (1,), siu_tree(2, 2, 1), 1, combo=FG)
    data = json.loads(json.dumps(rep.to_json()))
    assert data["tag"] == "morse" and data["rhs"] == "0" and data["lhs"] == "-1/2"
    assert data["verdict"] == "holds" and data["m_range"] == [1, 40]
    rows = list(csv.reader(io.StringIO(bounds_csv([rep]))))
    assert rows[0] == ["tag", "level", "rhs", "lhs", "margin", "verdict"]
    assert rows[1] == ["morse", "1", "0", "-1/2", "1/2", "holds"]


def test_trace_json_and_csv():
    trace = AsymptoticTrace(((4, 1.5, 0.01),), F(1), 0, 10, 42)
    assert trace.to_json()["rows"] == [{"k": 4, "scaled": 1.5, "stderr": 0.01}]
    assert json.loads(trace.dumps())["target"] == "1"
    rows = list(csv.reader(io.StringIO(trace.to_csv())))
    assert rows[0] == ["k", "scaled", "stderr"] and rows[1] == ["4", "1.5", "0.01"]
    assert trace.residuals == [0.5]


def test_verdict_states():
    rep = BoundReport("integral", 0, 1.0, 0.5, 0.5, "holds")
    assert rep.holds
    assert not BoundReport("integral", 0, 1.0, 0.5, 0.5, "inconclusive").holds
