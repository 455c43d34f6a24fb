"""Point measures on the line, Poisson sampling, and goodness-of-fit tests.

Counting uses half-open intervals [lo, hi), so counts over a partition add
up exactly.  Atoms are kept with multiplicity; coincident atoms are never
merged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

__all__ = [
    "Interval",
    "IntervalFamily",
    "PointMeasure",
    "CountEnsemble",
    "rescale_spectrum",
    "pair_functional",
    "poisson_kernel",
    "poisson_pmf",
    "sample_poisson_process",
    "grigelionis_toy_array",
    "empirical_char_function",
    "poisson_char_function",
    "chi_square_poisson",
    "ks_exponential",
    "total_variation_poisson",
    "independence_sup_distance",
]


@dataclass(frozen=True)
class Interval:
    """Half-open interval [lo, hi)."""

    lo: float
    hi: float

    def __post_init__(self):
        if not self.hi > self.lo:
            raise ValueError(f"empty interval [{self.lo}, {self.hi})")

    @property
    def length(self) -> float:
        return self.hi - self.lo


@dataclass(frozen=True)
class IntervalFamily:
    """Pairwise-disjoint finite intervals."""

    intervals: tuple[Interval, ...]

    def __post_init__(self):
        ivs = tuple(
            iv if isinstance(iv, Interval) else Interval(*iv) for iv in self.intervals
        )
        by_lo = sorted(ivs, key=lambda iv: iv.lo)
        for a, b in zip(by_lo, by_lo[1:]):
            if b.lo < a.hi:
                raise ValueError(f"intervals [{a.lo},{a.hi}) and [{b.lo},{b.hi}) overlap")
        object.__setattr__(self, "intervals", ivs)

    def __len__(self):
        return len(self.intervals)

    def __iter__(self):
        return iter(self.intervals)

    @property
    def lengths(self) -> np.ndarray:
        return np.array([iv.length for iv in self.intervals])


@dataclass(frozen=True)
class PointMeasure:
    """Finite multiset of real atoms, stored nondecreasing."""

    atoms: np.ndarray

    def __post_init__(self):
        a = np.sort(np.asarray(self.atoms, dtype=np.float64))
        object.__setattr__(self, "atoms", a)

    def count(self, iv: Interval) -> int:
        lo = np.searchsorted(self.atoms, iv.lo, side="left")
        hi = np.searchsorted(self.atoms, iv.hi, side="left")
        return int(hi - lo)

    def counts(self, family: IntervalFamily) -> np.ndarray:
        return np.array([self.count(iv) for iv in family], dtype=np.int64)

    def restrict(self, iv: Interval) -> np.ndarray:
        lo = np.searchsorted(self.atoms, iv.lo, side="left")
        hi = np.searchsorted(self.atoms, iv.hi, side="left")
        return self.atoms[lo:hi]

    @property
    def total(self) -> int:
        return len(self.atoms)


def rescale_spectrum(values: np.ndarray, e: float, scale: float) -> PointMeasure:
    """Point measure of scale * (values - e); the microscopic eigenvalue process."""
    if scale <= 0:
        raise ValueError("scale must be positive")
    return PointMeasure(scale * (np.asarray(values, dtype=np.float64) - e))


def poisson_kernel(z: complex):
    """g_z(t) = Im (t - z)^(-1) = Im z / |t - z|^2, positive for Im z > 0."""
    if z.imag <= 0:
        raise ValueError("poisson kernel needs Im z > 0")

    def g(t):
        t = np.asarray(t, dtype=np.float64)
        return z.imag / ((t - z.real) ** 2 + z.imag**2)

    return g


def pair_functional(pm: PointMeasure, f) -> float:
    """Sum over ordered pairs of distinct atoms of f(t) f(t').

    Computed as (sum f)^2 - sum f^2.  For an indicator of an interval this
    equals count * (count - 1), evaluated here in exact integer arithmetic.
    """
    if isinstance(f, Interval):
        m = pm.count(f)
        return float(m * (m - 1))
    vals = f(pm.atoms)
    s1 = float(np.sum(vals))
    s2 = float(np.sum(vals**2))
    return s1 * s1 - s2


def poisson_pmf(lam: float, r: int | np.ndarray) -> float | np.ndarray:
    """exp(-lam) lam^r / r!."""
    if lam < 0:
        raise ValueError("intensity mass must be nonnegative")
    r = np.asarray(r)
    if np.any(r < 0):
        raise ValueError("counts must be nonnegative")
    if lam == 0.0:
        out = np.where(r == 0, 1.0, 0.0)
    else:
        from scipy.special import gammaln

        out = np.exp(-lam + r * math.log(lam) - gammaln(r + 1.0))
    return float(out) if out.ndim == 0 else out


def sample_poisson_process(lam: float, window: Interval, rng: np.random.Generator) -> PointMeasure:
    """Homogeneous Poisson process of intensity lam restricted to the window."""
    if lam < 0:
        raise ValueError("intensity must be nonnegative")
    count = rng.poisson(lam * window.length)
    atoms = rng.uniform(window.lo, window.hi, count)
    return PointMeasure(atoms)


def grigelionis_toy_array(
    n_k: int, lam: float, window: Interval, rng: np.random.Generator
) -> PointMeasure:
    """Superposition of n_k sparse one-atom components.

    Each component independently drops one uniform atom in the window with
    probability lam * |window| / n_k.  No component can produce two atoms,
    the per-component hit probability tends to zero, and the hit
    probabilities sum to lam * |window|: the superposition converges to a
    Poisson process of intensity lam as n_k grows.
    """
    q = lam * window.length / n_k
    if q > 1.0:
        raise ValueError("n_k too small: per-component probability exceeds 1")
    fired = rng.binomial(n_k, q)
    atoms = rng.uniform(window.lo, window.hi, fired)
    return PointMeasure(atoms)


@dataclass(frozen=True)
class CountEnsemble:
    """Window-count vectors across Monte Carlo realizations."""

    samples: np.ndarray  # (R, m) nonnegative ints
    family: IntervalFamily

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=np.int64)
        if s.ndim != 2:
            raise ValueError("samples must be a 2-d integer array")
        if np.any(s < 0):
            raise ValueError("counts must be nonnegative")
        object.__setattr__(self, "samples", s)

    @property
    def realizations(self) -> int:
        return self.samples.shape[0]

    @classmethod
    def from_measures(cls, measures, family: IntervalFamily) -> "CountEnsemble":
        rows = np.array([pm.counts(family) for pm in measures], dtype=np.int64)
        return cls(samples=rows, family=family)


def empirical_char_function(ce: CountEnsemble, t: np.ndarray) -> complex:
    """Mean of exp(i t . counts) over the ensemble."""
    if ce.realizations == 0:
        raise ValueError("empty ensemble")
    t = np.atleast_1d(np.asarray(t, dtype=np.float64))
    if t.shape[0] != ce.samples.shape[1]:
        raise ValueError("t must have one component per window")
    return complex(np.mean(np.exp(1j * ce.samples @ t)))


def poisson_char_function(lams: np.ndarray, t: np.ndarray) -> complex:
    """prod_s exp(lam_s (e^{i t_s} - 1)): the independent-Poisson limit."""
    lams = np.atleast_1d(np.asarray(lams, dtype=np.float64))
    t = np.atleast_1d(np.asarray(t, dtype=np.float64))
    return complex(np.exp(np.sum(lams * (np.exp(1j * t) - 1.0))))


def _pool_bins(observed: np.ndarray, expected: np.ndarray, min_expected: float = 5.0):
    """Merge adjacent bins until every expected count reaches the floor."""
    obs = list(observed.astype(np.float64))
    exp = list(expected)
    i = 0
    while i < len(exp):
        if exp[i] < min_expected and len(exp) > 1:
            j = i + 1 if i + 1 < len(exp) else i - 1
            exp[j] += exp[i]
            obs[j] += obs[i]
            del exp[i], obs[i]
            if j < i:
                i = j
        else:
            i += 1
    return np.array(obs), np.array(exp)


def chi_square_poisson(ce: CountEnsemble, component: int, lam: float):
    """Pearson test of one window's counts against a Poisson pmf.

    Bins are pooled so each expected count is at least 5; the p-value uses
    the chi-square tail with (bins - 1) degrees of freedom.
    """
    R = ce.realizations
    if R < 200:
        raise ValueError("need at least 200 realizations")
    counts = ce.samples[:, component]
    if lam == 0.0:
        if np.any(counts != 0):
            return float("inf"), 0.0
        return 0.0, 1.0
    rmax = int(max(np.max(counts), math.ceil(lam + 6 * math.sqrt(lam))))
    observed = np.bincount(counts, minlength=rmax + 2)[: rmax + 2].astype(np.float64)
    pmf = poisson_pmf(lam, np.arange(rmax + 1))
    expected = np.concatenate((R * pmf, [R * max(1.0 - pmf.sum(), 0.0)]))
    observed, expected = _pool_bins(observed, expected)
    if len(expected) < 2:
        raise ValueError("too few bins after pooling; increase R")
    stat = float(np.sum((observed - expected) ** 2 / expected))
    dof = len(expected) - 1
    return stat, float(stats.chi2.sf(stat, dof))


def ks_exponential(gaps: np.ndarray, rate: float):
    """One-sample Kolmogorov-Smirnov distance to 1 - exp(-rate x), asymptotic p."""
    gaps = np.asarray(gaps, dtype=np.float64)
    if len(gaps) < 50:
        raise ValueError("need at least 50 gaps")
    if np.any(gaps <= 0):
        raise ValueError("gaps must be positive")
    if rate <= 0:
        raise ValueError("rate must be positive")
    x = np.sort(gaps)
    n = len(x)
    cdf = 1.0 - np.exp(-rate * x)
    d_plus = np.max(np.arange(1, n + 1) / n - cdf)
    d_minus = np.max(cdf - np.arange(0, n) / n)
    d = max(d_plus, d_minus)
    return float(d), float(stats.kstwobign.sf(math.sqrt(n) * d))


def total_variation_poisson(counts: np.ndarray, lam: float) -> float:
    """TV distance between the empirical count pmf and Poisson(lam)."""
    counts = np.asarray(counts, dtype=np.int64)
    rmax = int(max(np.max(counts), math.ceil(lam + 10 * math.sqrt(lam + 1))))
    emp = np.bincount(counts, minlength=rmax + 1) / len(counts)
    pmf = poisson_pmf(lam, np.arange(rmax + 1))
    tail = max(1.0 - pmf.sum(), 0.0)
    return 0.5 * (float(np.sum(np.abs(emp - pmf))) + tail)


def independence_sup_distance(a: np.ndarray, b: np.ndarray) -> float:
    """sup |joint pmf - product of marginals| for two integer count samples."""
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    if a.shape != b.shape:
        raise ValueError("count vectors must have equal length")
    R = len(a)
    na, nb = int(a.max()) + 1, int(b.max()) + 1
    joint = np.zeros((na, nb))
    np.add.at(joint, (a, b), 1.0 / R)
    pa = np.bincount(a, minlength=na) / R
    pb = np.bincount(b, minlength=nb) / R
    return float(np.max(np.abs(joint - np.outer(pa, pb))))
