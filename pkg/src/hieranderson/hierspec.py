"""Fast spectra of hierarchical Hamiltonians via rank-one level merges.

A radius-s ball couples its n radius-(s-1) sub-balls only through the
all-ones averaging term of strength p_s n^{-s}, so the spectrum at each
level is a rank-one update of the direct sum of sub-spectra.  Solving the
secular equation level by level gives the full spectrum in O(N^2) without
ever forming the matrix, and the intermediate level r spectra are exactly
the block spectra of the truncation-r operator on the same volume.

Cross-checked against the dense eigensolver in the test suite; the dense
path remains the reference implementation and the one used whenever
eigenvectors are required.
"""

from __future__ import annotations

import numpy as np

from . import backend
from .geometry import CouplingSequence

__all__ = ["hierarchical_spectra", "block_spectra"]


def hierarchical_spectra(
    omega: np.ndarray,
    coup: CouplingSequence,
    n: int,
    trunc: int,
    snapshot_level: int | None = None,
):
    """Eigenvalues of the truncation-`trunc` operator on len(omega) sites.

    len(omega) must be a power n**k with trunc <= k.  Returns
    (values, snapshot): values sorted ascending; snapshot, when a level is
    requested, holds the eigenvalues after that level grouped in site order
    by radius-`snapshot_level` block (each block internally sorted).
    """
    omega = np.ascontiguousarray(omega, dtype=np.float64)
    N = omega.shape[0]
    k = 0
    while n**k < N:
        k += 1
    if n**k != N:
        raise ValueError(f"omega length {N} is not a power of n={n}")
    if not 0 <= trunc <= k:
        raise ValueError(f"need 0 <= trunc <= {k}")
    if trunc > coup.k_max:
        raise ValueError("trunc exceeds the coupling sequence length")
    if snapshot_level is not None and not 0 <= snapshot_level <= trunc:
        raise ValueError("snapshot level must lie in [0, trunc]")
    s = np.arange(1, trunc + 1, dtype=np.float64)
    pn = coup.p[:trunc] / n**s
    snap_arg = -1 if snapshot_level is None else snapshot_level
    snap, final = backend.hier_levels(omega, pn, n, trunc, snap_arg)
    values = np.sort(final)
    return (values, None) if snapshot_level is None else (values, snap)


def block_spectra(snapshot: np.ndarray, n: int, level: int) -> np.ndarray:
    """Reshape a level snapshot to (num_blocks, n**level) per-block spectra."""
    bs = n**level
    if snapshot.size % bs:
        raise ValueError("snapshot length is not a multiple of the block size")
    return snapshot.reshape(-1, bs)
