"""Ultrametric geometry of the index set {0, 1, 2, ...} and coupling sequences.

The metric is d(x, y) = min{r : x // n**r == y // n**r}.  Closed balls of
radius r are the contiguous index blocks of length n**r, so two balls of
equal radius are disjoint or identical and every radius-(r+1) ball splits
into exactly n radius-r balls.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "HierGeometry",
    "CouplingSequence",
    "hier_distance",
    "ball_members",
    "ball_start",
    "geometric_couplings",
    "explicit_couplings",
    "spectral_dimension",
]

# A dense matrix of side n**k_max must stay addressable and fit in memory.
MAX_DENSE_SIDE = 4096
MAX_SITES = 1 << 26


def hier_distance(x: int, y: int, n: int) -> int:
    """Smallest r such that x and y share the same base-n quotient at level r."""
    if x < 0 or y < 0:
        raise ValueError("site indices must be nonnegative")
    if n < 2:
        raise ValueError("branching factor must be >= 2")
    r = 0
    while x != y:
        x //= n
        y //= n
        r += 1
    return r


def ball_start(center: int, r: int, n: int) -> int:
    """First site of the radius-r ball containing `center`."""
    return (center // n**r) * n**r


def ball_members(center: int, r: int, n: int) -> np.ndarray:
    """All n**r sites of the closed ball B(center, r), in increasing order."""
    if r < 0:
        raise ValueError("radius must be nonnegative")
    start = ball_start(center, r, n)
    return np.arange(start, start + n**r, dtype=np.int64)


def spectral_dimension(n: int, rho: float) -> float:
    """2 log n / log rho; the regime of interest for Poisson statistics is d < 1."""
    if n < 2:
        raise ValueError("branching factor must be >= 2")
    if rho <= 1.0:
        raise ValueError("decay base rho must exceed 1")
    return 2.0 * math.log(n) / math.log(rho)


@dataclass(frozen=True)
class HierGeometry:
    """Finite ultrametric index space: sites 0 .. n**k_max - 1."""

    n: int
    k_max: int

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("branching factor must be >= 2")
        if self.k_max < 1:
            raise ValueError("k_max must be >= 1")
        if self.n**self.k_max > MAX_SITES:
            raise ValueError(
                f"n**k_max = {self.n}**{self.k_max} exceeds the site cap {MAX_SITES}"
            )

    @property
    def sites(self) -> int:
        return self.n**self.k_max

    def distance(self, x: int, y: int) -> int:
        return hier_distance(x, y, self.n)

    def ball(self, center: int, r: int) -> np.ndarray:
        if r > self.k_max:
            raise ValueError(f"radius {r} exceeds k_max={self.k_max}")
        return ball_members(center, r, self.n)

    def balls_of_radius(self, r: int):
        """Iterate over the start offsets of all radius-r balls."""
        size = self.n**r
        for start in range(0, self.sites, size):
            yield start


@dataclass(frozen=True)
class CouplingSequence:
    """Positive weights p_1..p_k with two-sided geometric bounds C1/rho**r <= p_r <= C2/rho**r.

    lambdas[r] = p_1 + ... + p_r (lambdas[0] = 0) are the flat-band energies of
    the averaging operator built from these couplings; tail(r) is the mass
    beyond level r, normalised so lambdas[r] + tail(r) = 1 for the canonical
    geometric family.
    """

    rho: float
    k_max: int
    p: np.ndarray
    c1: float
    c2: float
    total: float = field(default=1.0)

    def __post_init__(self):
        p = np.asarray(self.p, dtype=np.float64)
        if p.shape != (self.k_max,):
            raise ValueError("p must have length k_max")
        if np.any(p <= 0.0):
            raise ValueError("all couplings p_r must be positive")
        if self.rho <= 1.0:
            raise ValueError("decay base rho must exceed 1")
        r = np.arange(1, self.k_max + 1)
        lo = self.c1 / self.rho**r
        hi = self.c2 / self.rho**r
        if np.any(p < lo * (1 - 1e-12)) or np.any(p > hi * (1 + 1e-12)):
            raise ValueError("couplings violate the two-sided geometric bound")
        object.__setattr__(self, "p", p)

    @property
    def lambdas(self) -> np.ndarray:
        """Partial sums lambda_0 = 0, lambda_r = p_1 + ... + p_r."""
        return np.concatenate(([0.0], np.cumsum(self.p)))

    def lam(self, r: int) -> float:
        return float(np.sum(self.p[:r]))

    def tail(self, r: int) -> float:
        """Coupling mass beyond level r, relative to the normalised total."""
        return float(self.total - np.sum(self.p[:r]))

    def dimension(self, n: int) -> float:
        return spectral_dimension(n, self.rho)


def geometric_couplings(rho: float, k_max: int) -> CouplingSequence:
    """Canonical family p_r = (rho - 1) / rho**r, which sums to 1 over all r.

    Closed forms: lambda_r = 1 - rho**-r and tail(r) = rho**-r.
    """
    if rho <= 1.0:
        raise ValueError("decay base rho must exceed 1")
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    r = np.arange(1, k_max + 1, dtype=np.float64)
    p = (rho - 1.0) / rho**r
    return CouplingSequence(rho=rho, k_max=k_max, p=p, c1=rho - 1.0, c2=rho - 1.0)


def explicit_couplings(p, rho: float, c1: float, c2: float) -> CouplingSequence:
    """User-supplied coupling list, validated against the stated two-sided bound."""
    p = np.asarray(p, dtype=np.float64)
    return CouplingSequence(
        rho=rho, k_max=len(p), p=p, c1=c1, c2=c2, total=float(np.sum(p))
    )
