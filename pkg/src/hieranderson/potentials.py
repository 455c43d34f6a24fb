"""Site-potential distributions: bounded densities with exact sup norms."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = ["PotentialDistribution", "uniform_potential", "cauchy_potential", "gaussian_potential"]


@dataclass(frozen=True)
class PotentialDistribution:
    """i.i.d. site-potential law with a bounded density.

    kind is one of "uniform" (params a, b), "cauchy" (params u = location,
    v = half-width), "gaussian" (params m, s).  density_sup is exact:
    1/(b-a), 1/(pi*v), 1/(s*sqrt(2*pi)) respectively.
    """

    kind: str
    params: tuple[float, ...]

    def __post_init__(self):
        if self.kind == "uniform":
            a, b = self.params
            if not b > a:
                raise ValueError("uniform potential needs b > a")
        elif self.kind == "cauchy":
            _, v = self.params
            if not v > 0:
                raise ValueError("cauchy potential needs v > 0")
        elif self.kind == "gaussian":
            _, s = self.params
            if not s > 0:
                raise ValueError("gaussian potential needs s > 0")
        else:
            raise ValueError(f"unknown potential kind {self.kind!r}")

    @property
    def density_sup(self) -> float:
        if self.kind == "uniform":
            a, b = self.params
            return 1.0 / (b - a)
        if self.kind == "cauchy":
            _, v = self.params
            return 1.0 / (math.pi * v)
        m, s = self.params
        return 1.0 / (s * math.sqrt(2.0 * math.pi))

    @property
    def support(self) -> tuple[float, float] | None:
        """Closed support interval, or None when unbounded."""
        if self.kind == "uniform":
            return self.params
        return None

    def density(self, t):
        t = np.asarray(t, dtype=np.float64)
        if self.kind == "uniform":
            a, b = self.params
            return np.where((t >= a) & (t <= b), 1.0 / (b - a), 0.0)
        if self.kind == "cauchy":
            u, v = self.params
            return v / (math.pi * ((u - t) ** 2 + v**2))
        m, s = self.params
        return np.exp(-0.5 * ((t - m) / s) ** 2) / (s * math.sqrt(2.0 * math.pi))

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.kind == "uniform":
            a, b = self.params
            return rng.uniform(a, b, size)
        if self.kind == "cauchy":
            u, v = self.params
            return u + v * rng.standard_cauchy(size)
        m, s = self.params
        return rng.normal(m, s, size)

    def scaled(self, sigma: float) -> "PotentialDistribution":
        """Law of sigma * omega; used by the lattice model's disorder knob."""
        if sigma <= 0:
            raise ValueError("disorder scale must be positive")
        a, b = self.params
        return PotentialDistribution(self.kind, (sigma * a, sigma * b))


def uniform_potential(a: float = 0.0, b: float = 1.0) -> PotentialDistribution:
    return PotentialDistribution("uniform", (a, b))


def cauchy_potential(u: float = 0.0, v: float = 1.0) -> PotentialDistribution:
    return PotentialDistribution("cauchy", (u, v))


def gaussian_potential(m: float = 0.0, s: float = 1.0) -> PotentialDistribution:
    return PotentialDistribution("gaussian", (m, s))
