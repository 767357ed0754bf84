"""Moments of uniform points on ``Delta_k`` and the variance estimates built on them.

``Delta_k`` is the weighted simplex whose weights are ``1..k`` each repeated
``r`` times.  A uniform draw is ``X_{j,l} = X'_{j,l} / j`` with ``X'`` uniform
on the standard ``(kr-1)``-simplex.  Block sums are ``Y_j = sum_l X_{j,l}`` and
block directions ``Z^j = X_{j,.} / Y_j``.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import IndexOutOfRange
from .mc import DEFAULT_SHARD_SIZE, sharded_moments
from .reporting import csv_text, json_value
from .simplex import integrate_monomial
from .strat_tree import MarkedTree, validate

SIGMA_BAND = 4.0
MOMENT_COLUMNS = ("name", "closed_form", "mc_estimate", "stderr", "z_score", "verdict")


def harmonic(k: int) -> Fraction:
    return sum((Fraction(1, j) for j in range(1, k + 1)), Fraction(0))


class DeltaKSampler:
    """Uniform draws on ``Delta_k``, returned with shape ``(count, k, r)``."""

    def __init__(self, k: int, r: int, seed: int | np.random.SeedSequence):
        if k < 1 or r < 1:
            raise ValueError("k and r must be >= 1")
        self.k = k
        self.r = r
        self.rng = np.random.Generator(np.random.PCG64(seed))
        self._scale = np.arange(1, k + 1, dtype=float)[None, :, None]

    def draw(self, count: int) -> np.ndarray:
        e = self.rng.standard_exponential((count, self.k, self.r))
        total = e.sum(axis=(1, 2), keepdims=True)
        return e / total / self._scale


@dataclass(frozen=True)
class MomentReport:
    """Closed form against a Monte Carlo estimate; ``z = (mc - closed) / stderr``."""

    name: str
    closed_form: Fraction | float
    mc_estimate: float
    stderr: float
    z_score: float
    verdict: str | None = None
    extra: dict = field(default_factory=dict)

    @classmethod
    def build(
        cls,
        name: str,
        closed_form: Fraction | float,
        mc_estimate: float,
        stderr: float,
        verdict: str | None = None,
        extra: dict | None = None,
    ) -> "MomentReport":
        diff = float(mc_estimate) - float(closed_form)
        if stderr > 0:
            z = diff / float(stderr)
        else:
            z = 0.0 if diff == 0 else math.copysign(math.inf, diff)
        if verdict is None:
            verdict = "holds" if abs(z) <= SIGMA_BAND else "violated"
        return cls(name, closed_form, float(mc_estimate), float(stderr), z, verdict, extra or {})

    @property
    def within_band(self) -> bool:
        return abs(self.z_score) <= SIGMA_BAND

    def to_json(self) -> dict:
        out = {
            "name": self.name,
            "closed_form": json_value(self.closed_form),
            "mc_estimate": self.mc_estimate,
            "stderr": self.stderr,
            "z_score": self.z_score,
            "verdict": self.verdict,
        }
        out.update({k: json_value(v) for k, v in self.extra.items()})
        return out

    def csv_row(self) -> list:
        return [
            self.name,
            self.closed_form,
            self.mc_estimate,
            self.stderr,
            self.z_score,
            self.verdict,
        ]


def moments_csv(reports: Sequence[MomentReport]) -> str:
    return csv_text(MOMENT_COLUMNS, (rep.csv_row() for rep in reports))


# --------------------------------------------------------------------------
# closed forms


def closed_moments(k: int, r: int, j: int, l: int | None = None) -> dict[str, Fraction]:
    """``E[Y_j]``, ``E[Y_j^2]`` and, when ``l`` is given, ``E[Y_j Y_l]``."""
    if k < 1 or r < 1:
        raise IndexOutOfRange("k and r must be >= 1")
    if not 1 <= j <= k:
        raise IndexOutOfRange(f"j={j} outside [1, {k}]")
    out = {
        "E[Y_j]": Fraction(1, j * k),
        "E[Y_j^2]": Fraction(r + 1, j * j * k * (k * r + 1)),
    }
    if l is not None:
        if not 1 <= l <= k or l == j:
            raise IndexOutOfRange(f"l={l} must lie in [1, {k}] and differ from j={j}")
        out["E[Y_jY_l]"] = Fraction(r, j * l * k * (k * r + 1))
    return out


def dirichlet_density_constant(k: int, r: int) -> Fraction:
    """Normalizer of ``prod y_j^(r-1)`` on ``Delta^(k-1)``: ``(kr-1)! / ((r-1)!)^k``."""
    if k < 1 or r < 1:
        raise ValueError("k and r must be >= 1")
    return Fraction(math.factorial(k * r - 1), math.factorial(r - 1) ** k)


def dirichlet_normalization(k: int, r: int) -> Fraction:
    """Total mass of the density above; equals 1."""
    mass = integrate_monomial([r - 1] * (k - 1), r - 1)
    return dirichlet_density_constant(k, r) * mass


def e_s_squared(d: Sequence) -> Fraction:
    """``E[(sum d_l T_l)^2]`` for ``T`` uniform on the standard ``(r-1)``-simplex."""
    dd = [Fraction(x) for x in d]
    r = len(dd)
    if r < 1:
        raise ValueError("d must be non-empty")
    return (sum(dd) ** 2 + sum(x * x for x in dd)) / (r * (r + 1))


def mean_block_form(k: int, d: Sequence, p: object = 0) -> Fraction:
    """``E[A]`` for ``A = sum_{j,l} X_{j,l} d_l + (H_k/(kr)) p``."""
    r = len(d)
    return harmonic(k) / (k * r) * (sum(Fraction(x) for x in d) + Fraction(p))


def variance_block_form(k: int, d: Sequence) -> Fraction:
    """Exact ``Var[sum_{j,l} X_{j,l} d_l]``.

    With ``w_{j,l} = d_l / j`` and ``N = kr`` this is
    ``(N sum w^2 - (sum w)^2) / (N^2 (N + 1))`` (Dirichlet(1,...,1) covariances).
    """
    r = len(d)
    big_n = k * r
    w = [Fraction(x) / j for j in range(1, k + 1) for x in d]
    s1 = sum(w, Fraction(0))
    s2 = sum((x * x for x in w), Fraction(0))
    return (big_n * s2 - s1 * s1) / (big_n * big_n * (big_n + 1))


def variance_bound(k: int, d: Sequence) -> float:
    """``pi^2 / (3 k^2) * E[S^2]``."""
    return math.pi**2 / (3 * k * k) * float(e_s_squared(d))


def sharp_variance_bound(k: int, d: Sequence) -> Fraction:
    """``(2/k^2) * sum_j 1/j^2 * E[S^2]``, the intermediate bound."""
    inv_sq = sum((Fraction(1, j * j) for j in range(1, k + 1)), Fraction(0))
    return Fraction(2, k * k) * inv_sq * e_s_squared(d)


# --------------------------------------------------------------------------
# Monte Carlo checks


def _band_verdict(margin: float, sigma: float) -> str:
    if sigma == 0:
        return "holds" if margin >= 0 else "violated"
    if margin > SIGMA_BAND * sigma:
        return "holds"
    if margin < -SIGMA_BAND * sigma:
        return "violated"
    return "inconclusive"


def verify_moments(
    k: int,
    r: int,
    samples: int = 1_000_000,
    seed: int = 42,
    threads: int | None = None,
    shard_size: int = DEFAULT_SHARD_SIZE,
) -> list[MomentReport]:
    """All first and second block moments against their closed forms."""
    pairs = [(j, l) for j in range(k) for l in range(j + 1, k)]

    def draw(seq, count):
        y = DeltaKSampler(k, r, seq).draw(count).sum(axis=2)
        cols = [y, y * y]
        if pairs:
            a = np.array([p[0] for p in pairs])
            b = np.array([p[1] for p in pairs])
            cols.append(y[:, a] * y[:, b])
        return np.concatenate(cols, axis=1)

    mom = sharded_moments(draw, samples, seed, threads, shard_size)
    reports = []
    for j in range(1, k + 1):
        cf = closed_moments(k, r, j)
        reports.append(
            MomentReport.build(f"E[Y_{j}]", cf["E[Y_j]"], mom.mean[j - 1], mom.stderr[j - 1])
        )
    for j in range(1, k + 1):
        cf = closed_moments(k, r, j)
        c = k + j - 1
        reports.append(
            MomentReport.build(f"E[Y_{j}^2]", cf["E[Y_j^2]"], mom.mean[c], mom.stderr[c])
        )
    for idx, (j0, l0) in enumerate(pairs):
        j, l = j0 + 1, l0 + 1
        cf = closed_moments(k, r, j, l)
        c = 2 * k + idx
        product_of_means = cf["E[Y_j]"] * closed_moments(k, r, l)["E[Y_j]"]
        reports.append(
            MomentReport.build(
                f"E[Y_{j}Y_{l}]",
                cf["E[Y_jY_l]"],
                mom.mean[c],
                mom.stderr[c],
                extra={
                    "product_of_means": product_of_means,
                    "negatively_correlated": cf["E[Y_jY_l]"] <= product_of_means,
                },
            )
        )
    return reports


def verify_marginals(
    k: int,
    r: int,
    samples: int = 1_000_000,
    seed: int = 42,
    threads: int | None = None,
) -> list[MomentReport]:
    """Coordinate means ``E[X_{j,l}] = 1/(j k r)``."""

    def draw(seq, count):
        return DeltaKSampler(k, r, seq).draw(count).reshape(count, k * r)

    mom = sharded_moments(draw, samples, seed, threads)
    out = []
    for j in range(1, k + 1):
        for l in range(1, r + 1):
            c = (j - 1) * r + (l - 1)
            out.append(
                MomentReport.build(
                    f"E[X_{j},{l}]", Fraction(1, j * k * r), mom.mean[c], mom.stderr[c]
                )
            )
    return out


def verify_independence(
    k: int,
    r: int,
    samples: int = 1_000_000,
    seed: int = 42,
    threads: int | None = None,
) -> list[MomentReport]:
    """Sample correlations of ``Z^p_1`` with ``Z^q_1`` and with ``Y_p``.

    Under independence the sample correlation has stderr ``1/sqrt(N)``.
    """
    if r < 2:
        raise ValueError("block directions are constant when r = 1")
    pairs = [("Z", p, q) for p in range(k) for q in range(p + 1, k)]
    pairs += [("Y", p, p) for p in range(k)]

    def draw(seq, count):
        x = DeltaKSampler(k, r, seq).draw(count)
        y = x.sum(axis=2)
        z = x[:, :, 0] / y
        cols = [z, y, z * z, y * y]
        for kind, p, q in pairs:
            other = z[:, q] if kind == "Z" else y[:, q]
            cols.append((z[:, p] * other)[:, None])
        return np.concatenate(cols, axis=1)

    mom = sharded_moments(draw, samples, seed, threads)
    mean = mom.mean
    out = []
    for idx, (kind, p, q) in enumerate(pairs):
        zp_mean, zp_sq = mean[p], mean[2 * k + p]
        if kind == "Z":
            o_mean, o_sq = mean[q], mean[2 * k + q]
            name = f"corr(Z^{p + 1},Z^{q + 1})"
        else:
            o_mean, o_sq = mean[k + q], mean[3 * k + q]
            name = f"corr(Z^{p + 1},Y_{p + 1})"
        cov = mean[4 * k + idx] - zp_mean * o_mean
        corr = cov / math.sqrt((zp_sq - zp_mean**2) * (o_sq - o_mean**2))
        out.append(MomentReport.build(name, Fraction(0), corr, 1 / math.sqrt(samples)))
    return out


def verify_mean_identity(
    k: int,
    d: Sequence,
    p: object = 0,
    samples: int = 1_000_000,
    seed: int = 42,
    threads: int | None = None,
) -> MomentReport:
    """Mean of ``A = sum X_{j,l} d_l + (H_k/(kr)) p`` against ``(H_k/(kr))(sum d + p)``."""
    r = len(d)
    dv = np.array([float(x) for x in d])
    shift = float(harmonic(k) / (k * r) * Fraction(p))

    def draw(seq, count):
        x = DeltaKSampler(k, r, seq).draw(count)
        return x.sum(axis=1) @ dv + shift

    mom = sharded_moments(draw, samples, seed, threads)
    return MomentReport.build(
        "E[A]", mean_block_form(k, d, p), mom.mean[0], mom.stderr[0]
    )


def verify_variance_bound(
    k: int,
    r: int,
    d: Sequence,
    samples: int = 1_000_000,
    seed: int = 42,
    threads: int | None = None,
) -> MomentReport:
    """Empirical ``Var[A]`` against ``pi^2/(3k^2) E[S^2]``.

    The variance is estimated as the mean of ``(A - E[A])^2`` with the exact
    mean, so its stderr is the sample sd of that column over ``sqrt(N)``.
    The report's closed form is the exact variance; the margin to the bound
    decides the verdict.
    """
    if len(d) != r:
        raise ValueError(f"d has {len(d)} entries, expected r={r}")
    dv = np.array([float(x) for x in d])
    mu = float(mean_block_form(k, d))

    def draw(seq, count):
        x = DeltaKSampler(k, r, seq).draw(count)
        a = x.sum(axis=1) @ dv
        return (a - mu) ** 2

    mom = sharded_moments(draw, samples, seed, threads)
    var_hat = float(mom.mean[0])
    sigma = float(mom.stderr[0])
    bound = variance_bound(k, d)
    margin = bound - var_hat
    return MomentReport.build(
        "Var[A]",
        variance_block_form(k, d),
        var_hat,
        sigma,
        verdict=_band_verdict(margin, sigma),
        extra={
            "bound": bound,
            "sharp_bound": sharp_variance_bound(k, d),
            "margin": margin,
            "margin_sigmas": margin / sigma if sigma > 0 else math.inf,
            "k2_var": k * k * var_hat,
        },
    )


def _single_path(tree: MarkedTree) -> list:
    validate(tree)
    edges = []
    node = tree.root
    while not node.is_leaf:
        if len(node.children) != 1:
            raise ValueError("product deviation needs a single-path tree")
        edges.append(node.children[0])
        node = node.children[0].child
    return edges


def product_deviation_rhs(
    second: Sequence[float], variance: Sequence[float], mean: Sequence[float]
) -> float:
    """``sqrt(sum_p prod_{q<p} E[A_q^2] Var(A_p) prod_{s>p} E[A_s]^2)``."""
    n = len(mean)
    total = 0.0
    for p in range(n):
        term = float(variance[p])
        for q in range(p):
            term *= float(second[q])
        for s in range(p + 1, n):
            term *= float(mean[s]) ** 2
        total += term
    return math.sqrt(max(total, 0.0))


def verify_product_deviation(
    tree: MarkedTree,
    k: int,
    j: int,
    samples: int = 1_000_000,
    seed: int = 42,
    bundles: Sequence[str] | None = None,
    twist: str | None = None,
    threads: int | None = None,
) -> MomentReport:
    """``|E[1{index = j} prod A_i] - delta prod E[A_i]|`` against its variance bound.

    ``A_i = sum_{j,l} X_{j,l} d_l^i + (H_k/(kr)) p^i`` on the single path of
    ``tree``; ``delta`` is 1 when ``j`` equals the number of negative combined
    markings ``sum_l d_l^i + p^i``.
    """
    edges = _single_path(tree)
    labels = tuple(bundles) if bundles else tuple(b for b in tree.bundles if b != twist)
    r = len(labels)
    n = len(edges)
    d = [[Fraction(e.markings[lab]) for lab in labels] for e in edges]
    p = [Fraction(e.markings[twist]) if twist else Fraction(0) for e in edges]
    scale = harmonic(k) / (k * r)
    means = [mean_block_form(k, d[i], p[i]) for i in range(n)]
    variances = [variance_block_form(k, d[i]) for i in range(n)]
    seconds = [variances[i] + means[i] ** 2 for i in range(n)]
    j_sigma = sum(1 for i in range(n) if sum(d[i]) + p[i] < 0)
    delta = 1 if j == j_sigma else 0
    target = delta * math.prod((float(m) for m in means), start=1.0)
    dmat = np.array([[float(x) for x in row] for row in d]).reshape(n, r)
    shift = np.array([float(scale * x) for x in p])

    def draw(seq, count):
        s = DeltaKSampler(k, r, seq).draw(count).sum(axis=1)
        a = s @ dmat.T + shift
        index = (a < 0).sum(axis=1)
        g = np.where(index == j, a.prod(axis=1), 0.0)
        return np.column_stack([g, a, a * a])

    mom = sharded_moments(draw, samples, seed, threads)
    lhs = abs(float(mom.mean[0]) - target)
    sigma = float(mom.stderr[0])
    rhs = product_deviation_rhs(seconds, variances, means)
    mc_means = mom.mean[1 : n + 1]
    mc_second = mom.mean[n + 1 : 2 * n + 1]
    rhs_mc = product_deviation_rhs(mc_second, mc_second - mc_means**2, mc_means)
    verdict = "holds" if lhs - rhs <= SIGMA_BAND * sigma else "violated"
    return MomentReport.build(
        f"product_deviation[j={j}]",
        rhs,
        lhs,
        sigma,
        verdict=verdict,
        extra={"rhs_closed": rhs, "rhs_mc": rhs_mc, "j_sigma": j_sigma, "k": k},
    )


__all__ = [
    "DeltaKSampler",
    "MomentReport",
    "closed_moments",
    "dirichlet_density_constant",
    "dirichlet_normalization",
    "e_s_squared",
    "harmonic",
    "mean_block_form",
    "moments_csv",
    "product_deviation_rhs",
    "sharp_variance_bound",
    "variance_block_form",
    "variance_bound",
    "verify_independence",
    "verify_marginals",
    "verify_mean_identity",
    "verify_moments",
    "verify_product_deviation",
    "verify_variance_bound",
]
