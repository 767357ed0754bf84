"""Acceptance criteria, one test each, every test printing a PASS/FAIL line."""

from __future__ import annotations

import itertools
import math
import random
import time
from fractions import Fraction

import pytest

from conftest import random_tree
from morsetrunc.cohomology import CohomSpec
from morsetrunc.morse_bounds import asymptotic_trace, harmonic_over_log, verify_integral_bound, verify_morse
from morsetrunc.prob_annex import closed_moments, verify_moments, verify_variance_bound
from morsetrunc.simplex import WeightedSimplex, ehrhart_ratio
from morsetrunc.strat_tree import (
    BundleCombo,
    Edge,
    Insertion,
    MarkedTree,
    TreeNode,
    flag_tree,
    pullback_bg,
    refine,
    refinement_invariance_check,
    siu_tree,
    truncated_chern_inductive,
    truncated_chern_paths,
)

pytestmark = pytest.mark.acceptance

F = Fraction
FG = BundleCombo.parse("F+G")
SAMPLES = 1_000_000


@pytest.fixture
def verdict(capsys):
    def emit(label: str, ok: bool, detail: str) -> None:
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} {label}: {detail}")
        assert ok, detail

    return emit


def test_criterion_1_path_induction_equivalence(verdict):
    rng = random.Random(20240601)
    start = time.perf_counter()
    mismatches = 0
    for _ in range(500):
        tree = random_tree(rng, rng.randint(0, 5), fanout=4, bound=10)
        if truncated_chern_paths(tree) != truncated_chern_inductive(tree):
            mismatches += 1
    elapsed = time.perf_counter() - start
    verdict(
        "criterion 1",
        mismatches == 0 and elapsed < 10,
        f"500 random trees, {mismatches} mismatches, {elapsed:.2f}s (limit 10s)",
    )


def test_criterion_2_siu_binomial_reproduction(verdict):
    start = time.perf_counter()
    bad = []
    for n, a, b in itertools.product(range(0, 5), range(1, 5), range(1, 5)):
        vec = truncated_chern_paths(siu_tree(n, a, b), FG)
        expected = tuple(F((-1) ** j * math.comb(n, j) * a ** (n - j) * b**j) for j in range(n + 1))
        if vec.by_index != expected:
            bad.append((n, a, b))
    elapsed = time.perf_counter() - start
    verdict("criterion 2", not bad and elapsed < 1, f"80 (n,a,b) cases, {len(bad)} mismatches, {elapsed:.3f}s (limit 1s)")


def test_criterion_3_morse_on_projective_space(verdict):
    failures = []
    checked = 0
    for n, a, b in itertools.product(range(1, 4), range(1, 4), range(1, 4)):
        spec = CohomSpec((n,))
        trees = [(siu_tree(n, a, b), FG), (flag_tree(n, a - b), None)]
        for tree, combo in trees:
            for i in range(n + 1):
                rep = verify_morse(spec, (a - b,), tree, i, m_range=(1, 40), combo=combo)
                checked += 1
                ok = rep.margin == 0 if i == n else rep.margin >= 0
                if not ok or not rep.holds:
                    failures.append((n, a, b, i, str(rep.lhs), str(rep.rhs)))
    verdict(
        "criterion 3",
        not failures,
        f"{checked} exact checks (siu and flag trees, n<=3, a,b<=3), {len(failures)} failures",
    )


def test_criterion_4_integral_bound_on_p1(verdict):
    start = time.perf_counter()
    spec = CohomSpec((1,))
    reps = [verify_integral_bound(spec, [(1,), (-1,)], (1, 1), i, method="exact") for i in (0, 1)]
    elapsed = time.perf_counter() - start
    ok = (
        reps[0].lhs == reps[0].rhs == F(1, 4)
        and reps[1].lhs == reps[1].rhs == 0
        and elapsed < 1
    )
    verdict(
        "criterion 4",
        ok,
        f"level 0: lhs {reps[0].lhs} rhs {reps[0].rhs}; level 1: lhs {reps[1].lhs} rhs {reps[1].rhs}; {elapsed:.3f}s",
    )


def test_criterion_5_annex_moments(verdict):
    start = time.perf_counter()
    worst = 0.0
    count = 0
    closed_ok = True
    for k, r in ((2, 2), (4, 3), (8, 2)):
        for rep in verify_moments(k, r, samples=SAMPLES, seed=42):
            worst = max(worst, abs(rep.z_score))
            count += 1
        # closed forms feeding the reports
        for j in range(1, k + 1):
            cm = closed_moments(k, r, j)
            closed_ok &= cm["E[Y_j]"] == F(1, j * k)
            closed_ok &= cm["E[Y_j^2]"] == F(r + 1, j * j * k * (k * r + 1))
    elapsed = time.perf_counter() - start
    verdict(
        "criterion 5",
        worst <= 4 and closed_ok and elapsed < 60,
        f"{count} moments at 1e6 samples, max |z| = {worst:.2f} (band 4), {elapsed:.1f}s (limit 60s)",
    )


def test_criterion_6_variance_bound(verdict):
    details = []
    ok = True
    for k in (2, 4, 8):
        rep = verify_variance_bound(k, 2, (1, -1), samples=SAMPLES, seed=42)
        ok &= rep.verdict == "holds" and rep.extra["margin_sigmas"] > 4
        details.append(f"k={k} margin {rep.extra['margin']:.4g} ({rep.extra['margin_sigmas']:.0f} sigma)")
    verdict("criterion 6", ok, "; ".join(details))


def test_criterion_7_asymptotic_averaging(verdict):
    tree = MarkedTree(1, ("d",), TreeNode((Edge({"d": F(1)}, TreeNode()),)))
    ks = [4, 8, 16, 32]
    trace = asymptotic_trace(tree, 0, ks, samples=SAMPLES, seed=42)
    within = all(abs(v - harmonic_over_log(k)) <= 4 * s for k, v, s in trace.rows)
    res = trace.residuals
    monotone = all(b < a for a, b in zip(res, res[1:]))
    rows = ", ".join(f"k={k}: {v:.4f}" for k, v, _ in trace.rows)
    verdict(
        "criterion 7",
        within and monotone and trace.target == 1,
        f"{rows}; within 4 sigma of H_k/log k: {within}; residual decreasing: {monotone}",
    )


def test_criterion_8_volume_and_lattice_identities(verdict):
    identity_bad = 0
    total = 0
    for r in range(1, 5):
        for weights in itertools.product(range(1, 6), repeat=r):
            ws = WeightedSimplex(weights)
            rhs = ws.fundamental_domain_volume() * F(ws.gcd, math.factorial(r - 1) * math.prod(weights))
            identity_bad += ws.volume() != rhs
            total += 1
    worst = 0.0
    for r in range(1, 4):
        for weights in itertools.product(range(1, 6), repeat=r):
            g = math.gcd(*weights)
            m = 1000 - 1000 % g
            worst = max(worst, abs(ehrhart_ratio(weights, m) - 1))
    verdict(
        "criterion 8",
        identity_bad == 0 and worst < 0.05,
        f"volume identity exact on {total} weight vectors ({identity_bad} failures); "
        f"max Ehrhart deviation at m~1000 for r<=3: {worst:.4f} (limit 0.05)",
    )


def test_bloch_gieseker_leaf_duplication(verdict):
    rng = random.Random(7)
    bad = 0
    for _ in range(200):
        tree = random_tree(rng, rng.randint(1, 4), ("A", "B"), fanout=3)
        degree = rng.randint(1, 4)
        combo = BundleCombo({"A": F(rng.randint(-3, 3)), "B": F(rng.randint(-3, 3), 2)})
        lifted = truncated_chern_paths(pullback_bg(tree, degree), combo)
        bad += lifted != truncated_chern_paths(tree, combo).scaled(degree)
    verdict("BG multiplicativity", bad == 0, f"200 random trees and covering degrees, {bad} failures")


def test_refinement_invariance(verdict):
    rng = random.Random(11)
    bad = 0
    for _ in range(200):
        n = rng.randint(1, 4)
        tree = random_tree(rng, n, ("A", "B"), fanout=3)
        insertions = []
        for _ in range(rng.randint(1, 3)):
            node, parent = tree.root, []
            depth = rng.randint(0, n - 1)
            for _ in range(depth):
                idx = rng.randrange(len(node.children))
                parent.append(idx)
                node = node.children[idx].child
            branch = TreeNode()
            for _ in range(n - depth - 1):
                branch = TreeNode((Edge({"A": F(rng.randint(-5, 5)), "B": F(rng.randint(-5, 5))}, branch),))
            insertions.append(Insertion(tuple(parent), Edge({"A": F(0), "B": F(0)}, branch)))
        refined = refine(tree, insertions)
        combos = [BundleCombo.single("A"), BundleCombo.single("B"), BundleCombo({"A": F(1), "B": F(-2, 3)})]
        bad += not refinement_invariance_check(tree, refined, combos)
    verdict("refinement invariance", bad == 0, f"200 random trees with zero-marked grafts, {bad} failures")
