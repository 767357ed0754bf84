"""Marked stratification trees and truncated Chern intersection numbers.

A stratification of an ``n``-dimensional variety is encoded by its rooted
tree: the root is the variety itself, children of a vertex are the
components of the boundary stratum one dimension lower, and leaves (at
depth ``n``) are points.  Each edge carries, for every bundle label, the
multiplicity of the chosen trivialization along the child component.

Two independent routes compute the truncated numbers
``deg c_1(L)^n_[l]``: summing marking products over complete paths grouped
by their number of negative markings, and the level-by-level recursion over
the children of the root.  Everything here is exact (``fractions.Fraction``).
"""

from __future__ import annotations

import json
import math
import re
from collections.abc import Iterator, Mapping, Sequence
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from .errors import (
    DepthMismatch,
    EmptyInternalNode,
    InvalidRefinement,
    LevelOutOfRange,
    MissingMarking,
    TreeFormatError,
    UnknownBundle,
)

_RATIONAL_RE = re.compile(r"^\s*([+-]?\d+)(?:\s*/\s*(\d+))?\s*$")


def parse_rational(value: object) -> Fraction:
    """Parse ``"p/q"``, an integer string, an int or a Fraction.

    Non-canonical forms such as ``"6/4"`` are normalized.  Floats and decimal
    strings are rejected so that no rounding can sneak into a tree.
    """
    if isinstance(value, bool):
        raise TreeFormatError(f"not a rational: {value!r}")
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    if not isinstance(value, str):
        raise TreeFormatError(f"not a rational: {value!r}")
    match = _RATIONAL_RE.match(value)
    if match is None:
        raise TreeFormatError(f"not a rational: {value!r}")
    num = int(match.group(1))
    den = int(match.group(2)) if match.group(2) is not None else 1
    if den == 0:
        raise TreeFormatError(f"zero denominator in {value!r}")
    return Fraction(num, den)


def format_rational(q: Fraction) -> str:
    q = Fraction(q)
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


# --------------------------------------------------------------------------
# data model


@dataclass(frozen=True)
class Edge:
    markings: Mapping[str, Fraction]
    child: "TreeNode"


@dataclass(frozen=True)
class TreeNode:
    children: tuple[Edge, ...] = ()

    @property
    def is_leaf(self) -> bool:
        return not self.children


@dataclass(frozen=True)
class MarkedTree:
    dimension: int
    bundles: tuple[str, ...]
    root: TreeNode

    def __post_init__(self) -> None:
        object.__setattr__(self, "bundles", tuple(self.bundles))

    @property
    def single_label(self) -> str:
        if len(self.bundles) != 1:
            raise UnknownBundle(
                f"expected a single-bundle tree, got bundles {list(self.bundles)}; "
                "combine markings first"
            )
        return self.bundles[0]

    def edges(self) -> Iterator[Edge]:
        stack = [self.root]
        while stack:
            node = stack.pop()
            for edge in node.children:
                yield edge
                stack.append(edge.child)

    def leaf_count(self) -> int:
        return sum(1 for _ in iter_paths(self.root))


def make_edge(markings: Mapping[str, object], child: TreeNode | None = None) -> Edge:
    """Build an edge, coercing markings to Fractions."""
    return Edge(
        {str(k): parse_rational(v) for k, v in markings.items()},
        child if child is not None else TreeNode(),
    )


def make_node(*edges: Edge) -> TreeNode:
    return TreeNode(tuple(edges))


@dataclass(frozen=True)
class BundleCombo:
    """Formal rational linear combination of bundle labels.

    Tensor products of trivializations multiply, so markings add; rational
    coefficients cover fractional trivializations.
    """

    terms: Mapping[str, Fraction] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "terms", {str(k): Fraction(v) for k, v in self.terms.items()}
        )

    @classmethod
    def single(cls, label: str) -> "BundleCombo":
        return cls({label: Fraction(1)})

    @classmethod
    def uniform(cls, labels: Sequence[str], coeff: object = 1) -> "BundleCombo":
        return cls({lab: Fraction(coeff) for lab in labels})

    @classmethod
    def parse(cls, text: str) -> "BundleCombo":
        """Parse expressions like ``"F+G"``, ``"2F - 1/2*G"``, ``"-L1"``."""
        src = text.replace(" ", "")
        if not src:
            return cls({})
        term_re = re.compile(
            r"([+-]?)(\d+(?:/\d+)?)?\*?([A-Za-z_][A-Za-z0-9_]*)"
        )
        terms: dict[str, Fraction] = {}
        pos = 0
        while pos < len(src):
            m = term_re.match(src, pos)
            if m is None or m.end() == pos:
                raise TreeFormatError(f"cannot parse bundle combination {text!r}")
            if pos > 0 and not m.group(1):
                raise TreeFormatError(f"missing operator in {text!r}")
            coeff = parse_rational(m.group(2)) if m.group(2) else Fraction(1)
            if m.group(1) == "-":
                coeff = -coeff
            terms[m.group(3)] = terms.get(m.group(3), Fraction(0)) + coeff
            pos = m.end()
        return cls(terms)

    def label(self) -> str:
        parts = []
        for lab, c in self.terms.items():
            if c == 1:
                parts.append(f"+{lab}")
            elif c == -1:
                parts.append(f"-{lab}")
            else:
                sign = "+" if c > 0 else "-"
                parts.append(f"{sign}{format_rational(abs(c))}*{lab}")
        out = "".join(parts).lstrip("+")
        return out or "trivial"

    def apply(self, markings: Mapping[str, Fraction]) -> Fraction:
        return sum((c * markings[lab] for lab, c in self.terms.items()), Fraction(0))


@dataclass(frozen=True)
class TruncatedChernVector:
    """``by_index[l] = deg c_1^n_[l]`` and ``cumulative[l] = deg c_1^n_[<=l]``."""

    by_index: tuple[Fraction, ...]
    cumulative: tuple[Fraction, ...]

    @classmethod
    def from_by_index(cls, values: Sequence[Fraction]) -> "TruncatedChernVector":
        acc = Fraction(0)
        cum = []
        for v in values:
            acc += v
            cum.append(acc)
        return cls(tuple(Fraction(v) for v in values), tuple(cum))

    @classmethod
    def from_cumulative(cls, values: Sequence[Fraction]) -> "TruncatedChernVector":
        by = [Fraction(values[0])] + [
            Fraction(values[l]) - Fraction(values[l - 1]) for l in range(1, len(values))
        ]
        return cls(tuple(by), tuple(Fraction(v) for v in values))

    @property
    def dimension(self) -> int:
        return len(self.by_index) - 1

    @property
    def total(self) -> Fraction:
        return self.cumulative[-1]

    def at(self, level: int) -> Fraction:
        """Value at index ``level``; zero outside ``[0, n]``."""
        if 0 <= level < len(self.by_index):
            return self.by_index[level]
        return Fraction(0)

    def upto(self, level: int) -> Fraction:
        """Cumulative value; zero below 0 and the full sum above n."""
        if level < 0:
            return Fraction(0)
        return self.cumulative[min(level, len(self.cumulative) - 1)]

    def scaled(self, factor: object) -> "TruncatedChernVector":
        f = Fraction(factor)
        return TruncatedChernVector(
            tuple(f * v for v in self.by_index), tuple(f * v for v in self.cumulative)
        )

    def to_json(self) -> dict:
        return {
            "by_index": [format_rational(v) for v in self.by_index],
            "cumulative": [format_rational(v) for v in self.cumulative],
        }


@dataclass(frozen=True)
class PathRecord:
    """A complete root-to-leaf path with its per-bundle data."""

    edges: tuple[Edge, ...]
    products: Mapping[str, Fraction]
    indices: Mapping[str, int]

    @property
    def index(self) -> int:
        if len(self.indices) != 1:
            raise UnknownBundle("path index is defined for single-bundle trees")
        return next(iter(self.indices.values()))

    @property
    def product(self) -> Fraction:
        if len(self.products) != 1:
            raise UnknownBundle("path product is defined for single-bundle trees")
        return next(iter(self.products.values()))


@dataclass(frozen=True)
class Insertion:
    """Graft ``edge`` below the node reached by following ``parent`` child indices."""

    parent: tuple[int, ...]
    edge: Edge


# --------------------------------------------------------------------------
# validation


def validate(tree: MarkedTree) -> None:
    """Raise unless every leaf sits at depth n and every edge is fully marked."""
    if tree.dimension < 0:
        raise DepthMismatch("dimension must be non-negative")
    if len(set(tree.bundles)) != len(tree.bundles):
        raise TreeFormatError(f"duplicate bundle labels in {list(tree.bundles)}")
    # a childless root of a positive-dimensional tree is an empty internal
    # node; deeper childless nodes are reported as shallow leaves
    if tree.dimension > 0 and tree.root.is_leaf:
        raise EmptyInternalNode("root has no children")
    declared = set(tree.bundles)
    stack: list[tuple[TreeNode, int]] = [(tree.root, 0)]
    while stack:
        node, depth = stack.pop()
        if node.is_leaf:
            if depth != tree.dimension:
                raise DepthMismatch(
                    f"leaf at depth {depth}, expected {tree.dimension}"
                )
            continue
        if depth >= tree.dimension:
            raise DepthMismatch(
                f"node at depth {depth} has children beyond dimension {tree.dimension}"
            )
        for edge in node.children:
            missing = declared - set(edge.markings)
            if missing:
                raise MissingMarking(
                    f"edge at depth {depth + 1} lacks markings for {sorted(missing)}"
                )
            extra = set(edge.markings) - declared
            if extra:
                raise UnknownBundle(f"edge carries undeclared bundles {sorted(extra)}")
            stack.append((edge.child, depth + 1))


# --------------------------------------------------------------------------
# operations


def combine_markings(
    tree: MarkedTree, combo: BundleCombo, label: str | None = None
) -> MarkedTree:
    """Single-bundle tree whose edge markings are ``sum_b combo[b] * marking_b``."""
    unknown = set(combo.terms) - set(tree.bundles)
    if unknown:
        raise UnknownBundle(f"combination uses undeclared bundles {sorted(unknown)}")
    name = label or combo.label()

    def walk(node: TreeNode) -> TreeNode:
        return TreeNode(
            tuple(
                Edge({name: combo.apply(e.markings)}, walk(e.child))
                for e in node.children
            )
        )

    return MarkedTree(tree.dimension, (name,), walk(tree.root))


def _single(tree: MarkedTree, combo: BundleCombo | None) -> tuple[MarkedTree, str]:
    if combo is not None:
        tree = combine_markings(tree, combo)
    validate(tree)
    return tree, tree.single_label


def iter_paths(node: TreeNode) -> Iterator[tuple[Edge, ...]]:
    if node.is_leaf:
        yield ()
        return
    for edge in node.children:
        for rest in iter_paths(edge.child):
            yield (edge,) + rest


def complete_paths(tree: MarkedTree) -> Iterator[PathRecord]:
    """All complete paths with per-bundle marking products and negative counts."""
    validate(tree)
    for edges in iter_paths(tree.root):
        products = {}
        indices = {}
        for lab in tree.bundles:
            prod = Fraction(1)
            neg = 0
            for e in edges:
                m = e.markings[lab]
                prod *= m
                if m < 0:
                    neg += 1
            products[lab] = prod
            indices[lab] = neg
        yield PathRecord(edges, products, indices)


def truncated_chern_paths(
    tree: MarkedTree, combo: BundleCombo | None = None
) -> TruncatedChernVector:
    """Sum of path products grouped by exact number of negative markings.

    A zero marking kills the product and counts as non-negative.
    """
    tree, lab = _single(tree, combo)
    by_index = [Fraction(0)] * (tree.dimension + 1)
    for edges in iter_paths(tree.root):
        prod = Fraction(1)
        neg = 0
        for e in edges:
            m = e.markings[lab]
            prod *= m
            neg += m < 0
        by_index[neg] += prod
    return TruncatedChernVector.from_by_index(by_index)


def truncated_chern_inductive(
    tree: MarkedTree, combo: BundleCombo | None = None
) -> TruncatedChernVector:
    """Cumulative numbers by recursion on the children of the root.

    ``c^k_[<=l] = sum_{m>0} m c^{k-1}_[<=l] + sum_{m<0} m c^{k-1}_[<=l-1]``,
    with ``c^0_[<=l] = 1`` for ``l >= 0`` at a leaf.
    """
    tree, lab = _single(tree, combo)

    def cumulative(node: TreeNode, k: int) -> list[Fraction]:
        # returns c^k_[<=l] for l = 0..k
        if k == 0:
            return [Fraction(1)]
        out = [Fraction(0)] * (k + 1)
        for edge in node.children:
            m = edge.markings[lab]
            if m == 0:
                continue
            sub = cumulative(edge.child, k - 1)
            for l in range(k + 1):
                if m > 0:
                    prev = sub[min(l, k - 1)]
                else:
                    prev = sub[min(l - 1, k - 1)] if l >= 1 else Fraction(0)
                out[l] += m * prev
        return out

    return TruncatedChernVector.from_cumulative(cumulative(tree.root, tree.dimension))


def untruncated_power(tree: MarkedTree, combo: BundleCombo | None = None) -> Fraction:
    """``sum_sigma C_sigma`` over all complete paths, with no index filter."""
    tree, lab = _single(tree, combo)
    total = Fraction(0)
    for edges in iter_paths(tree.root):
        total += math.prod((e.markings[lab] for e in edges), start=Fraction(1))
    return total


def negate_markings(tree: MarkedTree) -> MarkedTree:
    def walk(node: TreeNode) -> TreeNode:
        return TreeNode(
            tuple(
                Edge({k: -v for k, v in e.markings.items()}, walk(e.child))
                for e in node.children
            )
        )

    return MarkedTree(tree.dimension, tree.bundles, walk(tree.root))


def refine(tree: MarkedTree, insertions: Sequence[Insertion]) -> MarkedTree:
    """Graft zero-marked branches onto ``tree``.

    Each insertion's connecting edge must be marked 0 for every bundle; the
    grafted subtree must reach depth n so the result validates.
    """
    validate(tree)

    def graft(node: TreeNode, path: tuple[int, ...], edge: Edge) -> TreeNode:
        if not path:
            return TreeNode(node.children + (edge,))
        head, rest = path[0], path[1:]
        if head < 0 or head >= len(node.children):
            raise InvalidRefinement(f"no child {head} on insertion path")
        children = list(node.children)
        old = children[head]
        children[head] = Edge(old.markings, graft(old.child, rest, edge))
        return TreeNode(tuple(children))

    root = tree.root
    for ins in insertions:
        if set(ins.edge.markings) != set(tree.bundles):
            raise InvalidRefinement(
                "connecting edge must carry a (zero) marking for every bundle"
            )
        nonzero = {k: v for k, v in ins.edge.markings.items() if v != 0}
        if nonzero:
            raise InvalidRefinement(
                f"connecting edge has nonzero markings {nonzero}"
            )
        if len(ins.parent) >= tree.dimension:
            raise InvalidRefinement("cannot graft below a leaf")
        root = graft(root, tuple(ins.parent), ins.edge)
    refined = MarkedTree(tree.dimension, tree.bundles, root)
    validate(refined)
    return refined


def refinement_invariance_check(
    tree: MarkedTree,
    refined: MarkedTree,
    combos: Sequence[BundleCombo] | None = None,
) -> bool:
    """True iff both trees give the same truncated vector for every combo."""
    if combos is None:
        combos = [BundleCombo.single(lab) for lab in tree.bundles]
    for combo in combos:
        if truncated_chern_paths(tree, combo) != truncated_chern_paths(refined, combo):
            return False
    return True


def pullback_bg(tree: MarkedTree, degree: int) -> MarkedTree:
    """Replace every leaf by ``degree`` copies, duplicating its parent edge."""
    if degree < 1:
        raise ValueError("covering degree must be >= 1")
    validate(tree)
    if tree.dimension == 0:
        # the root is the only point and has no edge to duplicate
        if degree > 1:
            raise ValueError("a zero-dimensional tree cannot carry several points")
        return tree

    def walk(node: TreeNode, depth: int) -> TreeNode:
        children: list[Edge] = []
        for e in node.children:
            if depth + 1 == tree.dimension:
                children.extend(Edge(dict(e.markings), TreeNode()) for _ in range(degree))
            else:
                children.append(Edge(dict(e.markings), walk(e.child, depth + 1)))
        return TreeNode(tuple(children))

    return MarkedTree(tree.dimension, tree.bundles, walk(tree.root, 0))


# --------------------------------------------------------------------------
# named constructors


def flag_tree(n: int, d: object, label: str = "L") -> MarkedTree:
    """Hyperplane-flag tree for O(d) on P^n: a single path marked d."""
    return product_flag_tree([n], {label: [d]})


def siu_tree(n: int, a: object, b: object) -> MarkedTree:
    """Binary tree for L = O(F - G): every node has an F-child and a G-child.

    F-edges are marked ``(F: a, G: 0)`` and G-edges ``(F: 0, G: -b)``, so the
    combination ``F+G`` marks them ``a`` and ``-b``.
    """
    a, b = Fraction(a), Fraction(b)

    def build(k: int) -> TreeNode:
        if k == 0:
            return TreeNode()
        sub = build(k - 1)
        return TreeNode(
            (
                Edge({"F": a, "G": Fraction(0)}, sub),
                Edge({"F": Fraction(0), "G": -b}, sub),
            )
        )

    return MarkedTree(n, ("F", "G"), build(n))


def product_flag_tree(
    factors: Sequence[int], bundles: Mapping[str, Sequence[object]]
) -> MarkedTree:
    """Coordinate-hyperplane tree on ``P^{n_1} x ... x P^{n_f}``.

    From a stratum with remaining dimensions ``(k_1, ..., k_f)`` there is one
    child per factor ``j`` with ``k_j > 0``; the edge is marked with the
    ``j``-th entry of every bundle's multidegree (monomial trivializations).
    """
    factors = tuple(int(x) for x in factors)
    if any(x < 0 for x in factors):
        raise ValueError("factor dimensions must be non-negative")
    degs = {lab: tuple(Fraction(x) for x in md) for lab, md in bundles.items()}
    for lab, md in degs.items():
        if len(md) != len(factors):
            raise ValueError(
                f"bundle {lab} has {len(md)} degrees for {len(factors)} factors"
            )
    cache: dict[tuple[int, ...], TreeNode] = {}

    def build(remaining: tuple[int, ...]) -> TreeNode:
        if remaining in cache:
            return cache[remaining]
        children = []
        for j, k in enumerate(remaining):
            if k == 0:
                continue
            nxt = remaining[:j] + (k - 1,) + remaining[j + 1 :]
            children.append(Edge({lab: md[j] for lab, md in degs.items()}, build(nxt)))
        node = TreeNode(tuple(children))
        cache[remaining] = node
        return node

    return MarkedTree(sum(factors), tuple(degs), build(factors))


def parse_builtin(spec: str) -> MarkedTree:
    """Named trees: ``siu:n,a,b``, ``flag:n,d`` or ``product-flag:P1xP2=1:1,2:-1``.

    In the product form each comma-separated bundle is a ``:``-separated
    multidegree; bundles are named ``L1, L2, ...``.
    """
    name, _, args = spec.partition(":")
    try:
        if name == "siu":
            n, a, b = args.split(",")
            return siu_tree(int(n), parse_rational(a), parse_rational(b))
        if name == "flag":
            n, d = args.split(",")
            return flag_tree(int(n), parse_rational(d))
        if name == "product-flag":
            space, _, degs = args.partition("=")
            factors = parse_space(space)
            bundles = {
                f"L{i + 1}": [parse_rational(x) for x in chunk.split(":")]
                for i, chunk in enumerate(degs.split(","))
            }
            return product_flag_tree(factors, bundles)
    except (ValueError, TypeError) as exc:
        raise TreeFormatError(f"bad builtin tree {spec!r}: {exc}") from exc
    raise TreeFormatError(f"unknown builtin tree {spec!r}")


def parse_space(text: str) -> tuple[int, ...]:
    """``"P2"`` -> (2,), ``"P1xP1"`` -> (1, 1)."""
    out = []
    for part in text.lower().split("x"):
        part = part.strip()
        if not part.startswith("p") or not part[1:].isdigit():
            raise TreeFormatError(f"bad projective space {text!r}")
        out.append(int(part[1:]))
    return tuple(out)


# --------------------------------------------------------------------------
# JSON format


def tree_to_dict(tree: MarkedTree) -> dict:
    def node(n: TreeNode) -> dict:
        return {
            "children": [
                {
                    "markings": {
                        lab: format_rational(e.markings[lab])
                        for lab in tree.bundles
                        if lab in e.markings
                    },
                    "child": node(e.child),
                }
                for e in n.children
            ]
        }

    return {"dimension": tree.dimension, "bundles": list(tree.bundles), "root": node(tree.root)}


def tree_from_dict(data: Mapping) -> MarkedTree:
    try:
        dim = data["dimension"]
        bundles = data["bundles"]
        root = data["root"]
    except (KeyError, TypeError) as exc:
        raise TreeFormatError(f"tree JSON missing field: {exc}") from exc
    if not isinstance(dim, int) or isinstance(dim, bool):
        raise TreeFormatError("dimension must be an integer")
    if not isinstance(bundles, list) or not all(isinstance(b, str) for b in bundles):
        raise TreeFormatError("bundles must be a list of strings")
    if len(set(bundles)) != len(bundles):
        raise TreeFormatError(f"duplicate bundle labels in {bundles}")

    def node(obj: object) -> TreeNode:
        if not isinstance(obj, Mapping) or not isinstance(obj.get("children"), list):
            raise TreeFormatError("every node needs a 'children' list")
        edges = []
        for item in obj["children"]:
            if not isinstance(item, Mapping) or "child" not in item:
                raise TreeFormatError("every edge needs 'markings' and 'child'")
            marks = item.get("markings", {})
            if not isinstance(marks, Mapping):
                raise TreeFormatError("markings must be an object")
            edges.append(
                Edge({str(k): parse_rational(v) for k, v in marks.items()}, node(item["child"]))
            )
        return TreeNode(tuple(edges))

    tree = MarkedTree(dim, tuple(bundles), node(root))
    validate(tree)
    return tree


def dumps_tree(tree: MarkedTree, indent: int | None = None) -> str:
    return json.dumps(tree_to_dict(tree), indent=indent)


def loads_tree(text: str) -> MarkedTree:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise TreeFormatError(f"invalid JSON: {exc}") from exc
    return tree_from_dict(data)


def load_tree(path: str | Path) -> MarkedTree:
    return loads_tree(Path(path).read_text(encoding="utf-8"))


def save_tree(tree: MarkedTree, path: str | Path) -> None:
    Path(path).write_text(dumps_tree(tree, indent=2) + "\n", encoding="utf-8")


def check_level(level: int, n: int) -> None:
    if not 0 <= level <= n:
        raise LevelOutOfRange(f"level {level} outside [0, {n}]")


__all__ = [
    "BundleCombo",
    "Edge",
    "Insertion",
    "MarkedTree",
    "PathRecord",
    "TreeNode",
    "TruncatedChernVector",
    "check_level",
    "combine_markings",
    "complete_paths",
    "dumps_tree",
    "flag_tree",
    "format_rational",
    "iter_paths",
    "load_tree",
    "loads_tree",
    "make_edge",
    "make_node",
    "negate_markings",
    "parse_builtin",
    "parse_rational",
    "parse_space",
    "product_flag_tree",
    "pullback_bg",
    "refine",
    "refinement_invariance_check",
    "save_tree",
    "siu_tree",
    "tree_from_dict",
    "tree_to_dict",
    "truncated_chern_inductive",
    "truncated_chern_paths",
    "untruncated_power",
    "validate",
]
