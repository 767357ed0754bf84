"""Weighted simplexes ``Delta_a = {t >= 0 : sum a_i t_i = 1}``.

Volumes are returned as exact surds ``q * sqrt(s)``.  Lattice sections
``H_m = {l in N^r : sum a_i l_i = m}`` are enumerated in lexicographic
order.  Uniform sampling goes through the standard simplex: exponential
spacings give ``s`` uniform on ``{s >= 0, sum s = 1}`` and ``t_i = s_i / a_i``
is uniform on ``Delta_a`` because the map is linear.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce

import numpy as np


def validate_weights(weights: Sequence[int]) -> tuple[int, ...]:
    a = tuple(int(x) for x in weights)
    if not a:
        raise ValueError("weight vector must be non-empty")
    if any(x < 1 for x in a):
        raise ValueError(f"weights must be positive integers, got {a}")
    return a


def _squarefree_split(s: int) -> tuple[int, int]:
    """Return ``(k, f)`` with ``s = k**2 * f`` and ``f`` squarefree."""
    if s <= 0:
        raise ValueError("radicand must be positive")
    k, f = 1, 1
    p = 2
    while p * p <= s:
        e = 0
        while s % p == 0:
            s //= p
            e += 1
        k *= p ** (e // 2)
        if e % 2:
            f *= p
        p += 1
    return k, f * s


@dataclass(frozen=True)
class SurdValue:
    """Exact value ``coefficient * sqrt(radicand)`` with squarefree radicand."""

    coefficient: Fraction
    radicand: int = 1

    def __post_init__(self) -> None:
        k, f = _squarefree_split(int(self.radicand))
        object.__setattr__(self, "coefficient", Fraction(self.coefficient) * k)
        object.__setattr__(self, "radicand", f)

    def __mul__(self, other: object) -> "SurdValue":
        if isinstance(other, SurdValue):
            return SurdValue(self.coefficient * other.coefficient, self.radicand * other.radicand)
        if isinstance(other, (int, Fraction)):
            return SurdValue(self.coefficient * other, self.radicand)
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, other: object) -> "SurdValue":
        if isinstance(other, (int, Fraction)):
            return SurdValue(self.coefficient / Fraction(other), self.radicand)
        return NotImplemented

    def _same_radicand(self, other: "SurdValue") -> None:
        if self.radicand != other.radicand and self.coefficient and other.coefficient:
            raise ValueError("surds with different radicands are not comparable exactly")

    def __lt__(self, other: "SurdValue") -> bool:
        self._same_radicand(other)
        return self.coefficient < other.coefficient

    def __le__(self, other: "SurdValue") -> bool:
        self._same_radicand(other)
        return self.coefficient <= other.coefficient

    def __float__(self) -> float:
        return float(self.coefficient) * math.sqrt(self.radicand)

    def __str__(self) -> str:
        c = self.coefficient
        if self.radicand == 1:
            return str(c)
        return f"{c}*sqrt({self.radicand})" if c != 1 else f"sqrt({self.radicand})"


@dataclass(frozen=True)
class LatticeSection:
    m: int
    points: tuple[tuple[int, ...], ...]

    def __len__(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class WeightedSimplex:
    weights: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "weights", validate_weights(self.weights))

    @property
    def r(self) -> int:
        return len(self.weights)

    @property
    def gcd(self) -> int:
        return reduce(math.gcd, self.weights)

    def volume(self) -> SurdValue:
        return simplex_volume(self.weights)

    def fundamental_domain_volume(self) -> SurdValue:
        return fundamental_domain_volume(self.weights)

    def lattice_section(self, m: int) -> LatticeSection:
        return lattice_section(self.weights, m)

    def vertices(self) -> list[tuple[Fraction, ...]]:
        """Vertices ``e_i / a_i``."""
        r = self.r
        return [
            tuple(Fraction(1, a) if j == i else Fraction(0) for j in range(r))
            for i, a in enumerate(self.weights)
        ]

    def sampler(self, seed: int) -> "SimplexSampler":
        return SimplexSampler(self.weights, seed)


def fundamental_domain_volume(weights: Sequence[int]) -> SurdValue:
    """Volume of a fundamental domain of ``{z in Z^r : a.z = 0}``."""
    a = validate_weights(weights)
    return SurdValue(Fraction(1, reduce(math.gcd, a)), sum(x * x for x in a))


def simplex_volume(weights: Sequence[int]) -> SurdValue:
    """Euclidean ``(r-1)``-volume ``sqrt(sum a_i^2) / ((r-1)! prod a_i)``."""
    a = validate_weights(weights)
    den = math.factorial(len(a) - 1) * math.prod(a)
    return SurdValue(Fraction(1, den), sum(x * x for x in a))


def lattice_section(weights: Sequence[int], m: int) -> LatticeSection:
    """All ``l in N^r`` with ``sum a_i l_i = m``, lexicographically ascending."""
    a = validate_weights(weights)
    if m < 0:
        raise ValueError("m must be non-negative")
    r = len(a)
    # suffix gcds let the DFS prune branches whose remainder is unreachable
    suffix_gcd = [0] * (r + 1)
    for i in range(r - 1, -1, -1):
        suffix_gcd[i] = math.gcd(a[i], suffix_gcd[i + 1])
    out: list[tuple[int, ...]] = []
    prefix = [0] * r

    def dfs(i: int, rem: int) -> None:
        if i == r - 1:
            if rem % a[i] == 0:
                prefix[i] = rem // a[i]
                out.append(tuple(prefix))
            return
        for v in range(rem // a[i] + 1):
            rest = rem - v * a[i]
            if rest % suffix_gcd[i + 1]:
                continue
            prefix[i] = v
            dfs(i + 1, rest)

    dfs(0, m)
    return LatticeSection(m, tuple(out))


def lattice_section_count(weights: Sequence[int], m: int) -> int:
    """``card(H_m)`` by the coin-change recursion, without listing points."""
    a = validate_weights(weights)
    if m < 0:
        return 0
    ways = [0] * (m + 1)
    ways[0] = 1
    for w in a:
        for v in range(w, m + 1):
            ways[v] += ways[v - w]
    return ways[m]


def ehrhart_ratio(weights: Sequence[int], m: int) -> float:
    """``card(H_m) (r-1)! prod(a) / gcd(a) / m^(r-1)``; tends to 1."""
    a = validate_weights(weights)
    r = len(a)
    count = lattice_section_count(a, m)
    scale = Fraction(math.factorial(r - 1) * math.prod(a), reduce(math.gcd, a))
    return float(count * scale / Fraction(m) ** (r - 1))


class SimplexSampler:
    """Uniform draws on ``Delta_a`` from an explicit seed.

    A sampler owns its generator; use one instance per worker.
    """

    def __init__(self, weights: Sequence[int], seed: int | np.random.SeedSequence):
        self.weights = np.asarray(validate_weights(weights), dtype=float)
        self.rng = np.random.Generator(np.random.PCG64(seed))

    def draw(self, count: int) -> np.ndarray:
        if count < 0:
            raise ValueError("count must be non-negative")
        r = len(self.weights)
        e = self.rng.standard_exponential((count, r))
        s = e / e.sum(axis=1, keepdims=True)
        return s / self.weights


def sample_uniform(weights: Sequence[int], seed: int, count: int) -> np.ndarray:
    """``count`` i.i.d. uniform points of ``Delta_a`` as a ``(count, r)`` array."""
    return SimplexSampler(weights, seed).draw(count)


def integrate_monomial(exponents: Sequence[int], slack: int = 0) -> Fraction:
    """Exact ``int prod x_i^alpha_i (1 - sum x)^slack dx`` over the standard simplex.

    The domain is ``{x >= 0, sum x <= 1}`` in dimension ``d = len(exponents)``;
    the value is ``prod(alpha_i!) slack! / (|alpha| + slack + d)!``.
    """
    alpha = [int(x) for x in exponents]
    if any(x < 0 for x in alpha) or slack < 0:
        raise ValueError("exponents must be non-negative")
    num = math.prod(math.factorial(x) for x in alpha) * math.factorial(slack)
    return Fraction(num, math.factorial(sum(alpha) + slack + len(alpha)))


def exact_det(rows: Sequence[Sequence[Fraction]]) -> Fraction:
    """Determinant of a square rational matrix by fraction-exact elimination."""
    m = [[Fraction(x) for x in row] for row in rows]
    size = len(m)
    det = Fraction(1)
    for col in range(size):
        pivot = next((i for i in range(col, size) if m[i][col] != 0), None)
        if pivot is None:
            return Fraction(0)
        if pivot != col:
            m[col], m[pivot] = m[pivot], m[col]
            det = -det
        det *= m[col][col]
        for i in range(col + 1, size):
            factor = m[i][col] / m[col][col]
            if factor:
                for j in range(col, size):
                    m[i][j] -= factor * m[col][j]
    return det


def barycentric_mean(exponents: Sequence[int]) -> Fraction:
    """Mean of ``prod mu_k^alpha_k`` for ``mu`` uniform on ``{mu >= 0, sum mu = 1}``."""
    alpha = [int(x) for x in exponents]
    if not alpha:
        raise ValueError("need at least one barycentric coordinate")
    d = len(alpha) - 1
    return integrate_monomial(alpha[:-1], alpha[-1]) * math.factorial(d)


__all__ = [
    "LatticeSection",
    "SimplexSampler",
    "SurdValue",
    "WeightedSimplex",
    "barycentric_mean",
    "ehrhart_ratio",
    "exact_det",
    "fundamental_domain_volume",
    "integrate_monomial",
    "lattice_section",
    "lattice_section_count",
    "sample_uniform",
    "simplex_volume",
    "validate_weights",
]
