"""Line bundle cohomology on products of projective spaces.

``h^q(P^n, O(d))`` has a closed form, and the Kunneth formula extends it to
``P^{n_1} x ... x P^{n_f}``.  Cohomology is additive over direct sums, so
weighted symmetric powers ``S^m(L_1^(a_1) + ... + L_r^(a_r))`` reduce to a
sum over the lattice section ``H_m``.
"""

from __future__ import annotations

import math
from collections import Counter
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from .errors import IndivisibleTwist, QOutOfRange
from .simplex import lattice_section


@dataclass(frozen=True)
class CohomSpec:
    """``X = P^{n_1} x ... x P^{n_f}`` with named line bundles as multidegrees."""

    factors: tuple[int, ...]
    bundles: Mapping[str, tuple[int, ...]] | None = None

    def __post_init__(self) -> None:
        factors = tuple(int(x) for x in self.factors)
        if not factors or any(x < 1 for x in factors):
            raise ValueError(f"factor dimensions must be positive, got {factors}")
        object.__setattr__(self, "factors", factors)
        bundles = {k: tuple(int(x) for x in v) for k, v in (self.bundles or {}).items()}
        for name, md in bundles.items():
            self.check_multidegree(md, name)
        object.__setattr__(self, "bundles", bundles)

    @property
    def dimension(self) -> int:
        return sum(self.factors)

    def check_multidegree(self, md: Sequence[int], name: str = "bundle") -> None:
        if len(md) != len(self.factors):
            raise ValueError(
                f"{name} has {len(md)} degrees for {len(self.factors)} factors"
            )


@lru_cache(maxsize=None)
def bott_h(n: int, d: int, q: int) -> int:
    """``h^q(P^n, O(d))``."""
    if not 0 <= q <= n:
        raise QOutOfRange(f"q={q} outside [0, {n}]")
    if q == 0 and d >= 0:
        return math.comb(n + d, n)
    if q == n and d <= -n - 1:
        return math.comb(-d - 1, n)
    return 0


def _factor_profile(n: int, d: int) -> tuple[int, ...]:
    return tuple(bott_h(n, d, q) for q in range(n + 1))


def h_product(spec: CohomSpec, multidegree: Sequence[int], q: int) -> int:
    """Kunneth sum of ``prod_j h^{q_j}(P^{n_j}, O(d_j))`` over ``sum q_j = q``."""
    if not 0 <= q <= spec.dimension:
        raise QOutOfRange(f"q={q} outside [0, {spec.dimension}]")
    return h_profile(spec, multidegree)[q]


def h_profile(spec: CohomSpec, multidegree: Sequence[int]) -> tuple[int, ...]:
    """All ``h^0..h^n`` of one line bundle."""
    spec.check_multidegree(multidegree)
    return _profile_cached(spec.factors, tuple(int(x) for x in multidegree))


@lru_cache(maxsize=1 << 16)
def _profile_cached(factors: tuple[int, ...], md: tuple[int, ...]) -> tuple[int, ...]:
    # each P^n factor contributes nonzero cohomology in at most one degree,
    # but the convolution is kept general
    acc = [1]
    for n, d in zip(factors, md):
        prof = _factor_profile(n, d)
        out = [0] * (len(acc) + n)
        for i, x in enumerate(acc):
            if x:
                for j, y in enumerate(prof):
                    out[i + j] += x * y
        acc = out
    return tuple(acc)


@dataclass(frozen=True)
class ChiProfile:
    """Cohomology dimensions ``h^0..h^n`` and their truncated Euler characteristics."""

    h: tuple[int, ...]

    @property
    def dimension(self) -> int:
        return len(self.h) - 1

    def chi_truncated(self, i: int) -> int:
        """``sum_{j <= i} (-1)^{i+j} h^j``."""
        if not 0 <= i <= self.dimension:
            raise QOutOfRange(f"level {i} outside [0, {self.dimension}]")
        return sum((-1) ** (i + j) * self.h[j] for j in range(i + 1))

    @property
    def chi(self) -> tuple[int, ...]:
        out = []
        prev = 0
        for x in self.h:
            prev = x - prev
            out.append(prev)
        return tuple(out)

    @property
    def euler(self) -> int:
        return sum((-1) ** j * x for j, x in enumerate(self.h))

    def __add__(self, other: "ChiProfile") -> "ChiProfile":
        if len(self.h) != len(other.h):
            raise ValueError("profiles of different dimensions")
        return ChiProfile(tuple(x + y for x, y in zip(self.h, other.h)))

    def scaled(self, k: int) -> "ChiProfile":
        return ChiProfile(tuple(k * x for x in self.h))

    def to_json(self) -> dict:
        return {"h": list(self.h), "chi_truncated": list(self.chi)}


def chi_profile_sum(
    spec: CohomSpec, summands: Iterable[tuple[Sequence[int], int]]
) -> ChiProfile:
    """Profile of ``sum mult * O(multidegree)``."""
    h = [0] * (spec.dimension + 1)
    for md, mult in summands:
        if mult < 0:
            raise ValueError("multiplicities must be non-negative")
        if mult == 0:
            continue
        for q, x in enumerate(h_profile(spec, md)):
            h[q] += mult * x
    return ChiProfile(tuple(h))


def twist_multidegree(
    m: int, scale: Fraction, twist: Sequence[int]
) -> tuple[int, ...]:
    """``m * scale * N`` as an integer multidegree, or IndivisibleTwist."""
    out = []
    for x in twist:
        v = Fraction(m) * Fraction(scale) * x
        if v.denominator != 1:
            raise IndivisibleTwist(
                f"m={m} times scale {scale} times degree {x} is not an integer"
            )
        out.append(int(v))
    return tuple(out)


def sym_power_summands(
    bundles: Sequence[Sequence[int]],
    weights: Sequence[int],
    m: int,
    twist: tuple[Sequence[int], Fraction] | None = None,
) -> Counter:
    """Multidegree -> multiplicity of the line bundles in the weighted power."""
    if m < 0:
        raise ValueError("m must be non-negative")
    if len(bundles) != len(weights):
        raise ValueError(f"{len(bundles)} bundles for {len(weights)} weights")
    f = len(bundles[0]) if bundles else 0
    shift = (0,) * f
    if twist is not None:
        shift = twist_multidegree(m, twist[1], twist[0])
    counts: Counter = Counter()
    for point in lattice_section(weights, m).points:
        md = list(shift)
        for lj, deg in zip(point, bundles):
            for c in range(f):
                md[c] += lj * deg[c]
        counts[tuple(md)] += 1
    return counts


def sym_power_chi(
    spec: CohomSpec,
    bundles: Sequence[Sequence[int]],
    weights: Sequence[int],
    m: int,
    twist: tuple[Sequence[int], Fraction] | None = None,
) -> ChiProfile:
    """Profile of ``S^m(L_1^(a_1) + ... + L_r^(a_r))``, optionally tensored by
    ``N^(m * scale)`` where ``twist = (N, scale)``."""
    for md in bundles:
        spec.check_multidegree(md)
    if twist is not None:
        spec.check_multidegree(twist[0], "twist")
    summands = sym_power_summands(bundles, weights, m, twist)
    return chi_profile_sum(spec, summands.items())


def gg_rank(n: int, k: int, m: int) -> int:
    """Rank of ``S^m(V^(1) + ... + V^(k))`` for ``dim V = n``.

    Coefficient of ``x^m`` in ``prod_{i=1..k} (1 - x^i)^{-n}``.
    """
    if n < 1 or k < 1:
        raise ValueError("n and k must be >= 1")
    if m < 0:
        raise ValueError("m must be non-negative")
    series = [0] * (m + 1)
    series[0] = 1
    for i in range(1, k + 1):
        # multiply by (1 - x^i)^{-1} n times
        for _ in range(n):
            for v in range(i, m + 1):
                series[v] += series[v - i]
    return series[m]


def gg_rank_enumerated(n: int, k: int, m: int) -> int:
    """Same rank by summing over the lattice section of weights ``1..k``."""
    total = 0
    for point in lattice_section(range(1, k + 1), m).points:
        total += math.prod(math.comb(l + n - 1, n - 1) for l in point)
    return total


__all__ = [
    "ChiProfile",
    "CohomSpec",
    "bott_h",
    "chi_profile_sum",
    "gg_rank",
    "gg_rank_enumerated",
    "h_product",
    "h_profile",
    "sym_power_chi",
    "sym_power_summands",
    "twist_multidegree",
]
