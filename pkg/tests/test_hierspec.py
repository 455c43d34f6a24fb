import numpy as np
import pytest

from hieranderson import backend
from hieranderson.eigen import symmetric_eigen
from hieranderson.geometry import HierGeometry, geometric_couplings
from hieranderson.hierspec import block_spectra, hierarchical_spectra
from hieranderson.operators import assemble_hierarchical, laplacian_spectrum_closed_form


def _dense_spectrum(n, k, coup, trunc, omega):
    geom = HierGeometry(n, k)
    H = assemble_hierarchical(geom, coup, trunc, omega, k)
    return symmetric_eigen(H).values


@pytest.mark.parametrize("n,k,rho", [(2, 5, 8.0), (2, 6, 2.0), (3, 4, 10.0)])
def test_recursion_matches_dense(n, k, rho):
    coup = geometric_couplings(rho, k)
    rng = np.random.default_rng(42)
    omega = rng.uniform(0, 1, n**k)
    fast, _ = hierarchical_spectra(omega, coup, n, k)
    dense = _dense_spectrum(n, k, coup, k, omega)
    assert np.max(np.abs(fast - dense)) < 1e-10


def test_recursion_matches_dense_cauchy_tails():
    n, k = 2, 6
    coup = geometric_couplings(8.0, k)
    rng = np.random.default_rng(7)
    omega = rng.standard_cauchy(n**k)
    fast, _ = hierarchical_spectra(omega, coup, n, k)
    dense = _dense_spectrum(n, k, coup, k, omega)
    scale = np.max(np.abs(omega))
    assert np.max(np.abs(fast - dense)) < 1e-10 * scale


def test_recursion_truncation_blocks():
    n, k, trunc = 2, 5, 3
    coup = geometric_couplings(4.0, k)
    rng = np.random.default_rng(9)
    omega = rng.uniform(0, 1, n**k)
    fast, _ = hierarchical_spectra(omega, coup, n, trunc)
    dense = _dense_spectrum(n, k, coup, trunc, omega)
    assert np.max(np.abs(fast - dense)) < 1e-11


def test_snapshot_equals_block_dense_spectra():
    n, k, r = 2, 5, 3
    coup = geometric_couplings(8.0, k)
    rng = np.random.default_rng(10)
    omega = rng.uniform(0, 1, n**k)
    _, snap = hierarchical_spectra(omega, coup, n, k, snapshot_level=r)
    blocks = block_spectra(snap, n, r)
    bs = n**r
    geom = HierGeometry(n, r)
    for b, blk in enumerate(blocks):
        sub = omega[b * bs : (b + 1) * bs]
        dense = symmetric_eigen(assemble_hierarchical(geom, coup, r, sub, r)).values
        assert np.max(np.abs(np.sort(blk) - dense)) < 1e-11


def test_exact_ties_reproduce_closed_form():
    # zero potential: heavy deflation, exact flat-band multiplicities
    for n, k, rho in ((2, 6, 2.0), (3, 4, 8.0)):
        coup = geometric_couplings(rho, k)
        vals, _ = hierarchical_spectra(np.zeros(n**k), coup, n, k)
        spec = laplacian_spectrum_closed_form(n, k, coup)
        expect = np.sort(np.concatenate([[lam] * m for lam, m in spec]))
        assert np.max(np.abs(vals - expect)) < 1e-14


def test_constant_potential_shift():
    n, k = 2, 5
    coup = geometric_couplings(2.0, k)
    base, _ = hierarchical_spectra(np.zeros(n**k), coup, n, k)
    shifted, _ = hierarchical_spectra(np.full(n**k, 0.37), coup, n, k)
    assert np.max(np.abs(shifted - base - 0.37)) < 1e-13


def test_rank_one_update_against_dense():
    rng = np.random.default_rng(13)
    for trial in range(30):
        N = int(rng.integers(2, 40))
        d = np.sort(rng.normal(0, 1, N))
        z = rng.normal(0, 1, N)
        rho = float(rng.uniform(1e-8, 2.0))
        mu, zout = backend.rank_one_update(d, z**2, rho)
        dense = np.linalg.eigvalsh(np.diag(d) + rho * np.outer(z, z))
        assert np.max(np.abs(mu - dense)) < 1e-12 * max(1.0, np.max(np.abs(dense)))
        # trace identity and interlacing
        assert np.sum(mu) == pytest.approx(np.sum(d) + rho * np.sum(z**2), abs=1e-10)
        assert np.all(mu[:-1] >= d[:-1] - 1e-12)
        assert np.all(mu[: N - 1] <= d[1:] + 1e-12)
        # propagated weights: total mass is conserved
        assert np.sum(zout) == pytest.approx(np.sum(z**2), rel=1e-9)


def test_rank_one_update_weights_match_eigenvectors():
    rng = np.random.default_rng(17)
    N = 12
    d = np.sort(rng.normal(0, 1, N))
    z = rng.normal(0, 1, N)
    rho = 0.3
    mu, zout = backend.rank_one_update(d, z**2, rho)
    w, V = np.linalg.eigh(np.diag(d) + rho * np.outer(z, z))
    overlap = (V.T @ z) ** 2
    assert np.allclose(np.sort(mu), w, atol=1e-12)
    assert np.allclose(zout, overlap, atol=1e-9)


def test_rejects_bad_lengths():
    coup = geometric_couplings(2.0, 4)
    with pytest.raises(ValueError):
        hierarchical_spectra(np.zeros(6), coup, 2, 2)
    with pytest.raises(ValueError):
        hierarchical_spectra(np.zeros(8), coup, 2, 9)
    with pytest.raises(ValueError):
        hierarchical_spectra(np.zeros(8), coup, 2, 3, snapshot_level=4)
