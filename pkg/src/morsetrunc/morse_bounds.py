"""Leading coefficients of the Morse-type upper bounds and their empirical checks.

Right-hand sides come from tree data (truncated Chern numbers or the
integral of the path functional).  Left-hand sides come from the exact
cohomology of products of projective spaces: the relevant truncated Euler
characteristic is eventually a polynomial in ``m`` along a suitable grid,
and its top coefficient is read off from exact finite differences.
"""

from __future__ import annotations

import itertools
import json
import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce

import numpy as np

from .cohomology import CohomSpec, h_profile, sym_power_chi
from .errors import NonPolynomialTail
from .mc import DEFAULT_SHARD_SIZE, sharded_moments
from .prob_annex import SIGMA_BAND, DeltaKSampler, harmonic
from .reporting import csv_text, json_value
from .simplex import exact_det, validate_weights
from .strat_tree import (
    BundleCombo,
    MarkedTree,
    check_level,
    product_flag_tree,
    truncated_chern_paths,
)
from .upsilon import IntegralResult, UpsilonSpec, upsilon_batch, upsilon_integral

BOUND_COLUMNS = ("tag", "level", "rhs", "lhs", "margin", "verdict")
TRACE_COLUMNS = ("k", "scaled", "stderr")
STABLE_TAIL = 3


@dataclass(frozen=True)
class BoundReport:
    """One bound checked at one level.

    ``margin = rhs - lhs``.  Exact comparisons hold iff the margin is
    non-negative (zero where equality is asserted); Monte Carlo right-hand
    sides use a band of four standard errors.
    """

    tag: str
    level: int
    rhs: Fraction | float
    lhs: Fraction | float | None
    margin: Fraction | float | None
    verdict: str | None
    m_range: tuple[int, int] | None = None
    stderr: float = 0.0
    extra: dict = field(default_factory=dict)

    @property
    def holds(self) -> bool:
        return self.verdict == "holds"

    def to_json(self) -> dict:
        out = {
            "tag": self.tag,
            "level": self.level,
            "rhs": json_value(self.rhs),
            "lhs": json_value(self.lhs),
            "margin": json_value(self.margin),
            "verdict": self.verdict,
            "m_range": list(self.m_range) if self.m_range else None,
            "stderr": self.stderr,
        }
        out.update({k: json_value(v) for k, v in self.extra.items()})
        return out

    def csv_row(self) -> list:
        return [self.tag, self.level, self.rhs, self.lhs, self.margin, self.verdict]


def bounds_csv(reports: Sequence[BoundReport]) -> str:
    return csv_text(BOUND_COLUMNS, (rep.csv_row() for rep in reports))


@dataclass(frozen=True)
class AsymptoticTrace:
    """Rows ``(k, scaled integral, stderr)`` and the limit they should approach."""

    rows: tuple[tuple[int, float, float], ...]
    target: Fraction
    level: int
    samples: int
    seed: int

    @property
    def residuals(self) -> list[float]:
        return [abs(v - float(self.target)) for _, v, _ in self.rows]

    def to_json(self) -> dict:
        return {
            "level": self.level,
            "target": json_value(self.target),
            "samples": self.samples,
            "seed": self.seed,
            "rows": [{"k": k, "scaled": v, "stderr": s} for k, v, s in self.rows],
        }

    def to_csv(self) -> str:
        return csv_text(TRACE_COLUMNS, self.rows)

    def dumps(self) -> str:
        return json.dumps(self.to_json())


def _verdict(margin, sigma: float = 0.0, equality: bool = False) -> str:
    if sigma == 0:
        if equality:
            return "holds" if margin == 0 else "violated"
        return "holds" if margin >= 0 else "violated"
    if margin > SIGMA_BAND * sigma:
        return "holds"
    if margin < -SIGMA_BAND * sigma:
        return "violated"
    return "inconclusive"


# --------------------------------------------------------------------------
# leading coefficients


def morse_rhs_leading(tree: MarkedTree, i: int, combo: BundleCombo | None = None) -> Fraction:
    """``(-1)^i c_1^n_[<=i] / n!``, the coefficient of ``m^n``."""
    vec = truncated_chern_paths(tree, combo)
    n = vec.dimension
    check_level(i, n)
    return (-1) ** i * vec.cumulative[i] / math.factorial(n)


def weak_morse_rhs_leading(
    tree: MarkedTree, i: int, combo: BundleCombo | None = None
) -> Fraction:
    """``(-1)^i c_1^n_[i] / n!``, the bound on ``h^i``."""
    vec = truncated_chern_paths(tree, combo)
    n = vec.dimension
    check_level(i, n)
    return (-1) ** i * vec.by_index[i] / math.factorial(n)


def leading_coefficient(values: Sequence, degree: int, step: int = 1) -> Fraction:
    """Coefficient of ``m^degree`` from values on an arithmetic grid of spacing ``step``.

    The last ``STABLE_TAIL`` differences of order ``degree`` must agree,
    otherwise the data is not yet polynomial of that degree.
    """
    diffs = [Fraction(v) for v in values]
    for _ in range(degree):
        diffs = [b - a for a, b in zip(diffs, diffs[1:])]
    if len(diffs) < STABLE_TAIL:
        raise NonPolynomialTail(
            f"{len(values)} grid points are too few for degree {degree}; widen m_range"
        )
    tail = diffs[-STABLE_TAIL:]
    if any(x != tail[0] for x in tail):
        raise NonPolynomialTail(
            f"differences of order {degree} did not stabilize; widen m_range"
        )
    return tail[0] / (math.factorial(degree) * Fraction(step) ** degree)


def integral_prefactor(n: int, weights: Sequence[int], level: int) -> Fraction:
    """``(-1)^i gcd(a)/prod(a) * C(n+r-1, r-1) / (n+r-1)!``."""
    a = validate_weights(weights)
    r = len(a)
    g = reduce(math.gcd, a)
    return (
        (-1) ** level
        * Fraction(g, math.prod(a))
        * math.comb(n + r - 1, r - 1)
        / math.factorial(n + r - 1)
    )


def integral_bound_leading(
    spec: UpsilonSpec,
    weights: Sequence[int],
    method: str = "exact",
    seed: int = 42,
    samples: int = 1_000_000,
    threads: int | None = None,
) -> IntegralResult:
    """Coefficient of ``m^{n+r-1}`` in the integral bound.

    The value and stderr are those of the ``dP``-mean times
    ``integral_prefactor``; the raw mean is kept under ``extra["integral"]``.
    """
    res = upsilon_integral(spec, weights, method, seed, samples, threads)
    factor = integral_prefactor(spec.n, weights, spec.level)
    value = factor * res.value if res.is_exact else float(factor) * res.value
    return IntegralResult(
        value,
        res.method,
        abs(float(factor)) * res.stderr,
        res.samples,
        res.seed,
        {"integral": json_value(res.value)},
    )


def twisted_integral_bound_leading(
    tree: MarkedTree,
    weights: Sequence[int],
    level: int,
    twist: str,
    twist_scale: object = 1,
    bundles: Sequence[str] | None = None,
    method: str = "exact",
    seed: int = 42,
    samples: int = 1_000_000,
    threads: int | None = None,
) -> IntegralResult:
    """Integral bound with the edge forms shifted by ``twist_scale * p``."""
    spec = UpsilonSpec(tree, level, tuple(bundles or ()), twist, Fraction(twist_scale))
    return integral_bound_leading(spec, weights, method, seed, samples, threads)


def comparison_leading(n: int, r: int, k: int, c: object) -> float:
    """``(log k)^n / (n! (k!)^r) * c``, coefficient of ``m^{n+kr-1}/(n+kr-1)!``."""
    if k < 2:
        raise ValueError("k must be >= 2")
    log_term = math.log(k) ** n
    return log_term / (math.factorial(n) * math.factorial(k) ** r) * float(c)


def volume_lower_bound(n: int, k: int, vol: float) -> float:
    """``(log k)^n / (k!)^n * vol``; the ``O(1/log k)`` correction is not included."""
    if k < 2:
        raise ValueError("k must be >= 2")
    if vol < 0:
        raise ValueError("volume must be non-negative")
    return math.log(k) ** n / math.factorial(k) ** n * float(vol)


# --------------------------------------------------------------------------
# empirical checks against the cohomology oracle


def _truncated_chi_series(spec: CohomSpec, multidegree, i: int, ms: Sequence[int]):
    chis, hs = [], []
    for m in ms:
        prof = h_profile(spec, [m * d for d in multidegree])
        chi = sum((-1) ** (i + q) * prof[q] for q in range(i + 1))
        chis.append(chi)
        hs.append(prof[i])
    return chis, hs


def verify_morse(
    spec: CohomSpec,
    multidegree: Sequence[int],
    tree: MarkedTree,
    i: int,
    m_range: tuple[int, int] = (1, 40),
    combo: BundleCombo | None = None,
) -> BoundReport:
    """Leading coefficient of the truncated Euler characteristic of ``L^m``
    against ``morse_rhs_leading``; at ``i = n`` equality is required."""
    n = spec.dimension
    vec = truncated_chern_paths(tree, combo)
    if vec.dimension != n:
        raise ValueError(f"tree has dimension {vec.dimension}, space has {n}")
    check_level(i, n)
    rhs = (-1) ** i * vec.cumulative[i] / math.factorial(n)
    weak_rhs = (-1) ** i * vec.by_index[i] / math.factorial(n)
    ms = list(range(m_range[0], m_range[1] + 1))
    chis, hs = _truncated_chi_series(spec, multidegree, i, ms)
    lhs = leading_coefficient(chis, n)
    weak_lhs = leading_coefficient(hs, n)
    margin = rhs - lhs
    equality = i == n
    return BoundReport(
        "morse",
        i,
        rhs,
        lhs,
        margin,
        _verdict(margin, equality=equality),
        tuple(m_range),
        extra={
            "equality_required": equality,
            "equality": margin == 0,
            "weak_rhs": weak_rhs,
            "weak_lhs": weak_lhs,
            "weak_holds": weak_lhs <= weak_rhs,
        },
    )


def sym_power_grid_period(
    bundles: Sequence[Sequence[int]],
    weights: Sequence[int],
    twist_scale: object | None = None,
) -> int:
    """Grid spacing on which the symmetric-power data is a polynomial in ``m``.

    Chamber vertices of the summand polytope solve ``r`` of the constraints
    ``a.l = m``, ``l_i = 0``, ``D_j . l = const`` (``D_j`` the factor-``j`` degree
    row); their denominators divide the corresponding determinants.  The
    twist denominator enters because ``m * scale`` must be integral.
    """
    a = validate_weights(weights)
    r = len(a)
    f = len(bundles[0]) if bundles else 0
    rows = [tuple(1 if c == i else 0 for c in range(r)) for i in range(r)]
    rows += [tuple(bundles[l][j] for l in range(r)) for j in range(f)]
    period = 1
    for subset in itertools.combinations(rows, r - 1):
        det = exact_det([list(a), *[list(x) for x in subset]])
        if det:
            period = math.lcm(period, abs(int(det)))
    if twist_scale is not None:
        period *= Fraction(twist_scale).denominator
    return period


def verify_integral_bound(
    spec: CohomSpec,
    bundles: Sequence[Sequence[int]],
    weights: Sequence[int],
    level: int,
    tree: MarkedTree | None = None,
    m_range: tuple[int, int] = (1, 64),
    twist: tuple[Sequence[int], object] | None = None,
    method: str = "exact",
    seed: int = 42,
    samples: int = 1_000_000,
    threads: int | None = None,
) -> BoundReport:
    """Leading coefficient of the truncated Euler characteristic of the weighted
    symmetric power (optionally twisted) against the integral bound.

    Without an explicit tree, the coordinate-flag tree of the product is used
    with labels ``L1..Lr`` and ``N`` for the twist.
    """
    a = validate_weights(weights)
    r = len(a)
    if len(bundles) != r:
        raise ValueError(f"{len(bundles)} bundles for {r} weights")
    n = spec.dimension
    check_level(level, n)
    labels = tuple(f"L{l + 1}" for l in range(r))
    scale = Fraction(twist[1]) if twist else None
    if tree is None:
        degs = {lab: list(md) for lab, md in zip(labels, bundles)}
        if twist:
            degs["N"] = list(twist[0])
        tree = product_flag_tree(spec.factors, degs)
    uspec = UpsilonSpec(
        tree, level, labels, "N" if twist else None, scale if scale is not None else 1
    )
    bound = integral_bound_leading(uspec, a, method, seed, samples, threads)
    period = sym_power_grid_period(bundles, a, scale)
    lo = max(m_range[0], 0)
    ms = [m for m in range(lo, m_range[1] + 1) if m % period == 0]
    degree = n + r - 1
    twist_arg = (tuple(twist[0]), scale) if twist else None
    chis = [
        sym_power_chi(spec, bundles, a, m, twist_arg).chi_truncated(level) for m in ms
    ]
    lhs = leading_coefficient(chis, degree, period)
    rhs = bound.value
    margin = rhs - lhs if bound.is_exact else float(rhs) - float(lhs)
    return BoundReport(
        "twisted_integral" if twist else "integral",
        level,
        rhs,
        lhs,
        margin,
        _verdict(margin, bound.stderr),
        tuple(m_range),
        bound.stderr,
        extra={
            "method": bound.method,
            "integral": bound.extra["integral"],
            "grid_period": period,
            "samples": bound.samples,
        },
    )


# --------------------------------------------------------------------------
# large-k behaviour of the integral


def asymptotic_trace(
    tree: MarkedTree,
    j: int,
    k_list: Sequence[int],
    samples: int = 1_000_000,
    seed: int = 42,
    bundles: Sequence[str] | None = None,
    twist: str | None = None,
    threads: int | None = None,
    shard_size: int = DEFAULT_SHARD_SIZE,
) -> AsymptoticTrace:
    """Scaled integrals ``(kr)^n / (log k)^n * E[functional]`` on ``Delta_k``.

    Edge forms are ``sum_{j,l} t_{j,l} d_l + (H_k/(kr)) p``; since ``d_l`` does not
    depend on the block ``j``, only the block sums ``sum_j t_{j,l}`` matter.
    The target is the truncated number of the combined marking
    ``sum_l d_l + p``.  Levels outside ``[0, n]`` give an all-zero trace.
    """
    ks = [int(k) for k in k_list]
    if any(k < 2 for k in ks):
        raise ValueError("every k must be >= 2")
    if any(b <= a for a, b in zip(ks, ks[1:])):
        raise ValueError("k_list must be increasing")
    labels = tuple(bundles) if bundles else tuple(b for b in tree.bundles if b != twist)
    r = len(labels)
    n = tree.dimension
    if not 0 <= j <= n:
        return AsymptoticTrace(tuple((k, 0.0, 0.0) for k in ks), Fraction(0), j, samples, seed)
    all_labels = labels + ((twist,) if twist else ())
    target = truncated_chern_paths(tree, BundleCombo.uniform(all_labels)).cumulative[j]
    rows = []
    for k in ks:
        spec = UpsilonSpec(tree, j, labels, twist, harmonic(k) / (k * r))

        def draw(seq, count, k=k, spec=spec):
            blocks = DeltaKSampler(k, r, seq).draw(count).sum(axis=1)
            return upsilon_batch(spec, blocks)

        mom = sharded_moments(draw, samples, seed, threads, shard_size)
        factor = float(k * r) ** n / math.log(k) ** n
        rows.append((k, factor * float(mom.mean[0]), factor * float(mom.stderr[0])))
    return AsymptoticTrace(tuple(rows), target, j, samples, seed)


def harmonic_over_log(k: int) -> float:
    """``H_k / log k``, the exact trace of the one-edge toy tree."""
    return float(harmonic(k)) / math.log(k)


def is_monotone_decreasing(values: Sequence[float]) -> bool:
    arr = np.asarray(values, dtype=float)
    return bool(np.all(np.diff(arr) < 0))


__all__ = [
    "AsymptoticTrace",
    "BoundReport",
    "asymptotic_trace",
    "bounds_csv",
    "comparison_leading",
    "harmonic_over_log",
    "integral_bound_leading",
    "integral_prefactor",
    "is_monotone_decreasing",
    "leading_coefficient",
    "morse_rhs_leading",
    "sym_power_grid_period",
    "twisted_integral_bound_leading",
    "verify_integral_bound",
    "verify_morse",
    "volume_lower_bound",
    "weak_morse_rhs_leading",
]
