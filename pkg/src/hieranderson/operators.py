"""Finite-volume Hamiltonians and their spectral primitives.

Two families are assembled as dense real symmetric matrices:

* hierarchical: sum over levels s = 1..trunc of p_s times the averaging
  projection onto radius-s balls, plus the diagonal potential.  The entry at
  sites x != y is sum_{s >= max(d(x,y),1)}^{trunc} p_s n^{-s}; the diagonal
  is omega(x) plus the same sum from s = 1.
* lattice: nearest-neighbour adjacency of a box in 1 or 2 dimensions with
  open (Dirichlet) boundary, plus sigma * omega on the diagonal.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .eigen import EigenSystem, symmetric_eigen
from .geometry import MAX_DENSE_SIDE, CouplingSequence, HierGeometry

__all__ = [
    "Hamiltonian",
    "assemble_hierarchical",
    "assemble_lattice",
    "laplacian_spectrum_closed_form",
    "resolvent_diag",
    "free_green_hier",
    "hier_entry_sums",
]


@dataclass(frozen=True)
class Hamiltonian:
    """Dense symmetric matrix with site labels and model provenance."""

    sites: np.ndarray
    matrix: np.ndarray
    meta: dict
    omega: np.ndarray

    @property
    def side(self) -> int:
        return self.matrix.shape[0]

    def eigen(self, want_vectors: bool = False) -> EigenSystem:
        return symmetric_eigen(self.matrix, want_vectors=want_vectors)


def hier_entry_sums(coup: CouplingSequence, n: int, trunc: int) -> np.ndarray:
    """S[r] = sum_{s=r..trunc} p_s n^{-s} for r = 1..trunc (S[0] unused)."""
    s = np.arange(1, trunc + 1, dtype=np.float64)
    terms = coup.p[:trunc] / n**s
    out = np.zeros(trunc + 2)
    out[1 : trunc + 1] = np.cumsum(terms[::-1])[::-1]
    return out


def assemble_hierarchical(
    geom: HierGeometry,
    coup: CouplingSequence,
    trunc: int,
    omega: np.ndarray,
    k: int,
) -> Hamiltonian:
    """Truncated hierarchical operator plus potential on the ball of radius k.

    With trunc < k the matrix is block diagonal: n**(k - trunc) decoupled
    blocks of side n**trunc.  trunc = 0 drops all couplings (pure diagonal).
    """
    if not 0 <= trunc <= k <= geom.k_max:
        raise ValueError(f"need 0 <= trunc <= k <= k_max, got trunc={trunc}, k={k}, k_max={geom.k_max}")
    n = geom.n
    N = n**k
    omega = np.asarray(omega, dtype=np.float64)
    if omega.shape != (N,):
        raise ValueError(f"omega must have length n**k = {N}, got {omega.shape}")
    if N > MAX_DENSE_SIDE:
        raise ValueError(f"dense side {N} exceeds the cap {MAX_DENSE_SIDE}")
    S = hier_entry_sums(coup, n, trunc)
    x = np.arange(N, dtype=np.int64)
    # level at which two sites first share a ball, capped at trunc+1 (no coupling)
    level = np.full((N, N), trunc + 1, dtype=np.int64)
    for s in range(trunc, 0, -1):
        q = x // n**s
        level[q[:, None] == q[None, :]] = s
    H = S[level]
    np.fill_diagonal(H, omega + S[1])
    meta = {"model": "hierarchical", "n": n, "k": k, "trunc": trunc}
    return Hamiltonian(sites=x, matrix=H, meta=meta, omega=omega)


def assemble_lattice(dims: int, side: int, sigma: float, omega: np.ndarray) -> Hamiltonian:
    """Box adjacency (no wraparound) plus sigma * omega on the diagonal.

    The Dirichlet restriction is the plain submatrix: couplings to sites
    outside the box simply do not appear.
    """
    if dims not in (1, 2):
        raise ValueError("dims must be 1 or 2")
    N = side**dims
    omega = np.asarray(omega, dtype=np.float64)
    if omega.shape != (N,):
        raise ValueError(f"omega must have length side**dims = {N}")
    if N > MAX_DENSE_SIDE:
        raise ValueError(f"dense side {N} exceeds the cap {MAX_DENSE_SIDE}")
    H = np.zeros((N, N))
    if dims == 1:
        idx = np.arange(N - 1)
        H[idx, idx + 1] = 1.0
        H[idx + 1, idx] = 1.0
    else:
        for i in range(N):
            r, c = divmod(i, side)
            if c + 1 < side:
                H[i, i + 1] = H[i + 1, i] = 1.0
            if r + 1 < side:
                H[i, i + side] = H[i + side, i] = 1.0
    np.fill_diagonal(H, sigma * omega)
    meta = {"model": "lattice", "dims": dims, "side": side, "sigma": sigma}
    return Hamiltonian(sites=np.arange(N), matrix=H, meta=meta, omega=omega)


def laplacian_spectrum_closed_form(n: int, k: int, coup: CouplingSequence):
    """Spectrum of the zero-potential operator on n**k sites.

    Returns [(lambda_r, multiplicity)] with lambda_r the coupling partial
    sums: multiplicity n**(k-r) - n**(k-r-1) for r < k and 1 for r = k.
    """
    if k > coup.k_max:
        raise ValueError("k exceeds the coupling sequence length")
    lam = coup.lambdas
    out = [(float(lam[r]), n ** (k - r) - n ** (k - r - 1)) for r in range(k)]
    out.append((float(lam[k]), 1))
    return out


def resolvent_diag(es: EigenSystem, z: complex) -> np.ndarray:
    """Diagonal of (H - z)^(-1); requires eigenvectors, Im z != 0."""
    return es.resolvent_diag(z)


def free_green_hier(coup: CouplingSequence, n: int, w: complex, terms: int) -> complex:
    """Diagonal Green function of the infinite zero-potential operator.

    The spectral measure of a site vector puts mass n**-r (1 - 1/n) at each
    lambda_r; levels beyond `terms` are lumped at the accumulation point 1.
    Exact identity for Cauchy disorder: the averaged resolvent of the full
    model at z equals this function at w = z - u + i v.
    """
    if w.imag == 0.0:
        raise ValueError("spectral parameter must have nonzero imaginary part")
    if terms > coup.k_max:
        raise ValueError("terms exceeds the coupling sequence length")
    lam = coup.lambdas
    r = np.arange(terms + 1, dtype=np.float64)
    mass = n**-r * (1.0 - 1.0 / n)
    g = np.sum(mass / (lam[: terms + 1] - w))
    g += n ** -(terms + 1.0) / (1.0 - w)
    return complex(g)
