"""Piecewise-polynomial path functionals on a weighted simplex.

Given a tree whose edges carry markings ``m_1^s, ..., m_r^s`` (one bundle
label per simplex coordinate) and optionally a twist marking ``p^s`` with a
rational scale ``c``, each edge ``s`` gets the affine form

    A_s(t) = sum_l t_l m_l^s + c p^s.

The functional at level ``i`` sums ``prod_{s in sigma} A_s(t)`` over the
complete paths ``sigma`` having at most ``i`` strictly negative forms.

Exact integration works in barycentric coordinates ``lambda_l = a_l t_l`` of
``Delta_a``, where every form is linear.  The simplex is cut along the zero
sets of the forms by recursive vertex splitting, and on each piece the
gated polynomial is averaged with the Dirichlet moment formula.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import ExactUnsupported, PointOffSimplex, UnknownBundle, ZeroSamples
from .mc import DEFAULT_SHARD_SIZE, sharded_moments
from .simplex import SimplexSampler, barycentric_mean, exact_det, validate_weights
from .strat_tree import MarkedTree, TreeNode, check_level, format_rational, validate

SIMPLEX_TOLERANCE = 1e-12
EXACT_MAX_COORDINATES = 4


@dataclass(frozen=True)
class UpsilonSpec:
    """Tree, ordered coordinate labels, level and optional twist label.

    ``bundles`` defaults to every tree label except the twist.
    """

    tree: MarkedTree
    level: int
    bundles: tuple[str, ...] = ()
    twist: str | None = None
    twist_scale: Fraction = Fraction(1)

    def __post_init__(self) -> None:
        validate(self.tree)
        check_level(self.level, self.tree.dimension)
        bundles = tuple(self.bundles) or tuple(
            b for b in self.tree.bundles if b != self.twist
        )
        object.__setattr__(self, "bundles", bundles)
        object.__setattr__(self, "twist_scale", Fraction(self.twist_scale))
        known = set(self.tree.bundles)
        for lab in bundles + ((self.twist,) if self.twist is not None else ()):
            if lab not in known:
                raise UnknownBundle(f"label {lab!r} is not a bundle of the tree")
        if not bundles:
            raise UnknownBundle("at least one coordinate bundle is required")

    @property
    def r(self) -> int:
        return len(self.bundles)

    @property
    def n(self) -> int:
        return self.tree.dimension

    def with_level(self, level: int) -> "UpsilonSpec":
        return UpsilonSpec(self.tree, level, self.bundles, self.twist, self.twist_scale)

    def edge_form(self, markings) -> tuple[tuple[Fraction, ...], Fraction]:
        """Coefficients on ``t`` and constant term of the edge form."""
        coeffs = tuple(markings[b] for b in self.bundles)
        const = self.twist_scale * markings[self.twist] if self.twist else Fraction(0)
        return coeffs, const


@dataclass(frozen=True)
class IntegralResult:
    """Mean of the functional over ``Delta_a``; ``stderr`` is 0 when exact."""

    value: Fraction | float
    method: str
    stderr: float = 0.0
    samples: int = 0
    seed: int | None = None
    extra: dict = field(default_factory=dict)

    @property
    def is_exact(self) -> bool:
        return self.method == "exact"

    def to_json(self) -> dict:
        value = (
            format_rational(self.value) if isinstance(self.value, Fraction) else self.value
        )
        out = {
            "value": value,
            "value_float": float(self.value),
            "method": self.method,
            "stderr": self.stderr,
            "samples": self.samples,
        }
        if self.seed is not None:
            out["seed"] = self.seed
        out.update(self.extra)
        return out


# --------------------------------------------------------------------------
# pointwise evaluation


def _gated_counts(spec: UpsilonSpec, form_value) -> list:
    """Root sums of path products bucketed by negative count ``0..level``.

    ``form_value(coeffs, const)`` evaluates an edge form; it may return
    scalars or numpy arrays.  Subtrees shared between parents are computed
    once.
    """
    cap = spec.level
    memo: dict[int, list] = {}

    def visit(node: TreeNode) -> list:
        key = id(node)
        if key in memo:
            return memo[key]
        if node.is_leaf:
            out = [1] + [0] * cap
            memo[key] = out
            return out
        acc: list = [0] * (cap + 1)
        for edge in node.children:
            f = form_value(*spec.edge_form(edge.markings))
            sub = visit(edge.child)
            neg = f < 0
            for c in range(cap + 1):
                stay = f * sub[c]
                if c == 0:
                    acc[c] = acc[c] + _where(neg, 0, stay)
                else:
                    acc[c] = acc[c] + _where(neg, f * sub[c - 1], stay)
        memo[key] = acc
        return acc

    return visit(spec.tree.root)


def _where(cond, yes, no):
    if isinstance(cond, np.ndarray):
        return np.where(cond, yes, no)
    return yes if cond else no


def upsilon_value(spec: UpsilonSpec, t: Sequence) -> Fraction | float:
    """Functional at ``t`` with no simplex check (used for homogeneity).

    Exact when every coordinate is an int or Fraction.
    """
    if len(t) != spec.r:
        raise ValueError(f"expected {spec.r} coordinates, got {len(t)}")
    exact = all(isinstance(x, (int, Fraction)) for x in t)
    point = [Fraction(x) for x in t] if exact else [float(x) for x in t]

    def form(coeffs, const):
        if exact:
            return sum((c * x for c, x in zip(coeffs, point)), const)
        return float(sum(float(c) * x for c, x in zip(coeffs, point)) + float(const))

    total = sum(_gated_counts(spec, form))
    return Fraction(total) if exact else float(total)


def check_on_simplex(t: Sequence, weights: Sequence[int]) -> None:
    a = validate_weights(weights)
    if len(t) != len(a):
        raise PointOffSimplex(f"point has {len(t)} coordinates, simplex has {len(a)}")
    if any(x < -SIMPLEX_TOLERANCE for x in t):
        raise PointOffSimplex(f"negative coordinate in {list(t)}")
    if abs(sum(ai * x for ai, x in zip(a, t)) - 1) > SIMPLEX_TOLERANCE:
        raise PointOffSimplex(f"sum a_i t_i != 1 at {list(t)}")


def upsilon_eval(
    spec: UpsilonSpec, t: Sequence, weights: Sequence[int] | None = None
) -> Fraction | float:
    """Functional at a point of ``Delta_a`` (all weights 1 by default)."""
    a = tuple(weights) if weights is not None else (1,) * spec.r
    check_on_simplex(t, a)
    return upsilon_value(spec, t)


def upsilon_batch(spec: UpsilonSpec, points: np.ndarray) -> np.ndarray:
    """Vectorized float evaluation on an ``(N, r)`` array."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != spec.r:
        raise ValueError(f"points must have shape (N, {spec.r})")

    def form(coeffs, const):
        return pts @ np.array([float(c) for c in coeffs]) + float(const)

    counts = _gated_counts(spec, form)
    total = np.zeros(pts.shape[0])
    for c in counts:
        total = total + c
    return total


# --------------------------------------------------------------------------
# exact integration

Poly = dict  # exponent tuple -> Fraction


def _poly_linear(coeffs: Sequence[Fraction]) -> Poly:
    r = len(coeffs)
    out: Poly = {}
    for k, c in enumerate(coeffs):
        if c:
            exp = tuple(1 if j == k else 0 for j in range(r))
            out[exp] = Fraction(c)
    return out


def _poly_mul(p: Poly, q: Poly) -> Poly:
    out: Poly = {}
    for e1, c1 in p.items():
        for e2, c2 in q.items():
            e = tuple(x + y for x, y in zip(e1, e2))
            v = out.get(e, 0) + c1 * c2
            if v:
                out[e] = v
            else:
                out.pop(e, None)
    return out


def _poly_add(p: Poly, q: Poly) -> Poly:
    out = dict(p)
    for e, c in q.items():
        v = out.get(e, 0) + c
        if v:
            out[e] = v
        else:
            out.pop(e, None)
    return out


def _homogeneous_forms(spec: UpsilonSpec, weights: tuple[int, ...]) -> dict[int, tuple]:
    """Edge id -> coefficients of the form in barycentric coordinates.

    On ``Delta_a`` we have ``t_l = lambda_l / a_l`` and ``sum lambda = 1``, so the
    constant term spreads over every coordinate.
    """
    forms: dict[int, tuple] = {}
    for edge in spec.tree.edges():
        coeffs, const = spec.edge_form(edge.markings)
        forms[id(edge)] = tuple(c / a + const for c, a in zip(coeffs, weights))
    return forms


def _dot(u: Sequence[Fraction], v: Sequence[Fraction]) -> Fraction:
    return sum((x * y for x, y in zip(u, v)), Fraction(0))


def _split_cells(
    vertices: list[tuple[Fraction, ...]], forms: list[tuple[Fraction, ...]]
) -> list[list[tuple[Fraction, ...]]]:
    """Cut a simplex until every form has constant sign on each piece."""
    done: list[list[tuple[Fraction, ...]]] = []
    stack = [(vertices, 0)]
    while stack:
        cell, k = stack.pop()
        while k < len(forms):
            vals = [_dot(forms[k], v) for v in cell]
            pos = next((i for i, x in enumerate(vals) if x > 0), None)
            neg = next((i for i, x in enumerate(vals) if x < 0), None)
            if pos is not None and neg is not None:
                break
            k += 1
        if k == len(forms):
            done.append(cell)
            continue
        va, vb = vals[pos], vals[neg]
        w = tuple(
            (va * xb - vb * xa) / (va - vb) for xa, xb in zip(cell[pos], cell[neg])
        )
        left = list(cell)
        left[pos] = w
        right = list(cell)
        right[neg] = w
        # the new vertex zeroes form k, so both halves make progress on it
        stack.append((left, k))
        stack.append((right, k))
    return done


def _cell_mean(
    spec: UpsilonSpec, cell: list[tuple[Fraction, ...]], forms: dict[int, tuple]
) -> Fraction:
    """Mean of the gated path polynomial over one sign-constant cell."""
    r = len(cell)
    centroid = tuple(sum(v[j] for v in cell) / r for j in range(r))
    cap = spec.level
    memo: dict[int, list[Poly]] = {}
    one = {(0,) * r: Fraction(1)}

    def visit(node: TreeNode) -> list[Poly]:
        key = id(node)
        if key in memo:
            return memo[key]
        if node.is_leaf:
            out = [one] + [{} for _ in range(cap)]
            memo[key] = out
            return out
        acc: list[Poly] = [{} for _ in range(cap + 1)]
        for edge in node.children:
            g = forms[id(edge)]
            # pull the form back to the cell's own barycentric coordinates
            lin = _poly_linear([_dot(g, v) for v in cell])
            negative = _dot(g, centroid) < 0
            sub = visit(edge.child)
            for c in range(cap + 1):
                src = c - 1 if negative else c
                if src < 0 or not sub[src] or not lin:
                    continue
                acc[c] = _poly_add(acc[c], _poly_mul(lin, sub[src]))
        memo[key] = acc
        return acc

    total: Poly = {}
    for part in visit(spec.tree.root):
        total = _poly_add(total, part)
    return sum((c * barycentric_mean(e) for e, c in total.items()), Fraction(0))


def _primitive(form: tuple[Fraction, ...]) -> tuple[Fraction, ...] | None:
    lead = next((x for x in form if x != 0), None)
    if lead is None:
        return None
    scale = abs(lead)
    return tuple(x / scale for x in form)


def exact_mean(spec: UpsilonSpec, weights: Sequence[int]) -> Fraction:
    """Exact ``dP``-mean of the functional over ``Delta_a``."""
    a = validate_weights(weights)
    if len(a) != spec.r:
        raise ValueError(f"{len(a)} weights for {spec.r} coordinates")
    forms = _homogeneous_forms(spec, a)
    splitting: list[tuple[Fraction, ...]] = []
    if spec.level < spec.n:
        seen = set()
        for g in forms.values():
            if all(x >= 0 for x in g) or all(x <= 0 for x in g):
                continue
            key = _primitive(g)
            if key not in seen:
                seen.add(key)
                splitting.append(key)
    if splitting and spec.r > EXACT_MAX_COORDINATES:
        raise ExactUnsupported(
            f"{len(splitting)} sign-changing edge forms in {spec.r} coordinates; "
            "use method='monte_carlo'"
        )
    r = spec.r
    base = [tuple(Fraction(int(i == j)) for j in range(r)) for i in range(r)]
    total = Fraction(0)
    for cell in _split_cells(base, splitting):
        vol = abs(exact_det([list(v) for v in cell]))
        if vol:
            total += vol * _cell_mean(spec, cell, forms)
    return total


# --------------------------------------------------------------------------
# integration front-end


def monte_carlo_mean(
    spec: UpsilonSpec,
    weights: Sequence[int],
    samples: int,
    seed: int,
    threads: int | None = None,
    shard_size: int = DEFAULT_SHARD_SIZE,
) -> IntegralResult:
    a = validate_weights(weights)
    if len(a) != spec.r:
        raise ValueError(f"{len(a)} weights for {spec.r} coordinates")
    if samples < 1:
        raise ZeroSamples("samples must be >= 1")

    def draw(seq, count):
        return upsilon_batch(spec, SimplexSampler(a, seq).draw(count))

    mom = sharded_moments(draw, samples, seed, threads, shard_size)
    return IntegralResult(
        float(mom.mean[0]), "monte_carlo", float(mom.stderr[0]), samples, seed
    )


def upsilon_integral(
    spec: UpsilonSpec,
    weights: Sequence[int],
    method: str = "exact",
    seed: int = 42,
    samples: int = 1_000_000,
    threads: int | None = None,
    shard_size: int = DEFAULT_SHARD_SIZE,
) -> IntegralResult:
    """``dP``-mean of the functional over ``Delta_a`` (exact or Monte Carlo)."""
    if method == "exact":
        return IntegralResult(exact_mean(spec, weights), "exact")
    if method == "monte_carlo":
        return monte_carlo_mean(spec, weights, samples, seed, threads, shard_size)
    raise ValueError(f"unknown integration method {method!r}")


def stderr_slope(
    spec: UpsilonSpec,
    weights: Sequence[int],
    sample_counts: Sequence[int],
    seed: int = 42,
) -> float:
    """Log-log slope of Monte Carlo stderr against sample count."""
    errs = [
        monte_carlo_mean(spec, weights, n, seed + i).stderr
        for i, n in enumerate(sample_counts)
    ]
    x = np.log(np.asarray(sample_counts, dtype=float))
    y = np.log(np.asarray(errs))
    return float(np.polyfit(x, y, 1)[0])


__all__ = [
    "IntegralResult",
    "UpsilonSpec",
    "check_on_simplex",
    "exact_mean",
    "monte_carlo_mean",
    "stderr_slope",
    "upsilon_batch",
    "upsilon_eval",
    "upsilon_integral",
    "upsilon_value",
]
