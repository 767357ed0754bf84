from __future__ import annotations

import random
from fractions import Fraction

from hypothesis import strategies as st

from morsetrunc.strat_tree import Edge, MarkedTree, TreeNode


def random_marking(rng: random.Random, bound: int = 10) -> Fraction:
    num = rng.randint(-bound, bound)
    den = rng.randint(1, bound)
    return Fraction(num, den)


def random_tree(
    rng: random.Random,
    n: int,
    labels: tuple[str, ...] = ("L",),
    fanout: int = 4,
    bound: int = 10,
    zero_rate: float = 0.1,
) -> MarkedTree:
    """Random valid tree with every leaf at depth ``n``."""

    def build(k: int) -> TreeNode:
        if k == 0:
            return TreeNode()
        children = []
        for _ in range(rng.randint(1, fanout)):
            marks = {
                lab: Fraction(0) if rng.random() < zero_rate else random_marking(rng, bound)
                for lab in labels
            }
            children.append(Edge(marks, build(k - 1)))
        return TreeNode(tuple(children))

    return MarkedTree(n, labels, build(n))


@st.composite
def marked_trees(draw, max_n: int = 4, labels: tuple[str, ...] = ("L",), fanout: int = 3):
    n = draw(st.integers(0, max_n))
    seed = draw(st.integers(0, 2**32 - 1))
    return random_tree(random.Random(seed), n, labels, fanout)
