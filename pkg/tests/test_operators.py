import numpy as np
import pytest

from hieranderson.eigen import symmetric_eigen
from hieranderson.geometry import HierGeometry, geometric_couplings, hier_distance
from hieranderson.operators import (
    assemble_hierarchical,
    assemble_lattice,
    free_green_hier,
    hier_entry_sums,
    laplacian_spectrum_closed_form,
    resolvent_diag,
)
from hieranderson.potentials import cauchy_potential, gaussian_potential, uniform_potential


def test_single_level_matrix():
    # n=2, k=1, trunc=1, rho=2 (p_1 = 1/2), omega = 0: p_1 E_1 has entries 1/4
    geom = HierGeometry(2, 1)
    coup = geometric_couplings(2.0, 1)
    H = assemble_hierarchical(geom, coup, 1, np.zeros(2), 1)
    assert np.allclose(H.matrix, [[0.25, 0.25], [0.25, 0.25]], atol=1e-15)


def test_level_two_entry():
    geom = HierGeometry(2, 2)
    coup = geometric_couplings(2.0, 2)
    H = assemble_hierarchical(geom, coup, 2, np.zeros(4), 2)
    # sites 0 and 2 are at distance 2: entry p_2 n^-2 = (1/4)(1/4)
    assert H.matrix[0, 2] == pytest.approx(1.0 / 16.0)
    # sites 0 and 1 at distance 1: p_1/2 + p_2/4
    assert H.matrix[0, 1] == pytest.approx(0.5 / 2 + 0.25 / 4)
    # diagonal: omega + p_1/2 + p_2/4
    assert H.matrix[0, 0] == pytest.approx(0.5 / 2 + 0.25 / 4)


def test_entry_formula_brute_force():
    # oracle: explicit averaging projections
    n, k = 2, 3
    geom = HierGeometry(n, k)
    coup = geometric_couplings(8.0, k)
    rng = np.random.default_rng(2)
    omega = rng.uniform(0, 1, n**k)
    for trunc in (0, 1, 2, 3):
        H = assemble_hierarchical(geom, coup, trunc, omega, k).matrix
        expect = np.diag(omega.copy())
        N = n**k
        for s in range(1, trunc + 1):
            E = np.zeros((N, N))
            for x in range(N):
                for y in range(N):
                    if hier_distance(x, y, n) <= s:
                        E[x, y] = n**-s
            expect += coup.p[s - 1] * E
        assert np.allclose(H, expect, atol=1e-14)
        assert np.array_equal(H, H.T)


def test_block_diagonal_structure():
    n, k, trunc = 2, 3, 2
    geom = HierGeometry(n, k)
    coup = geometric_couplings(2.0, k)
    rng = np.random.default_rng(4)
    H = assemble_hierarchical(geom, coup, trunc, rng.uniform(0, 1, 8), k).matrix
    # cross-block entries vanish: d(x, y) = 3 > trunc for x < 4 <= y
    assert np.all(H[:4, 4:] == 0.0)
    assert np.all(H[4:, :4] == 0.0)
    blocks = 2 ** (k - trunc)
    assert blocks == 2


def test_dimension_mismatch_rejected():
    geom = HierGeometry(2, 2)
    coup = geometric_couplings(2.0, 2)
    with pytest.raises(ValueError):
        assemble_hierarchical(geom, coup, 2, np.zeros(3), 2)
    with pytest.raises(ValueError):
        assemble_hierarchical(geom, coup, 3, np.zeros(4), 2)


def test_lattice_1d():
    H = assemble_lattice(1, 2, 0.0, np.zeros(2))
    assert np.allclose(H.matrix, [[0, 1], [1, 0]])
    H3 = assemble_lattice(1, 3, 1.0, np.array([1.0, 2.0, 3.0]))
    assert np.allclose(H3.matrix, [[1, 1, 0], [1, 2, 1], [0, 1, 3]])


def test_lattice_2d_adjacency():
    H = assemble_lattice(2, 2, 0.0, np.zeros(4)).matrix
    assert np.allclose(np.sum(H, axis=1), 2.0)
    # no wraparound on a 3x3 grid: corner sites have degree 2
    H9 = assemble_lattice(2, 3, 0.0, np.zeros(9)).matrix
    deg = np.sum(H9, axis=1)
    assert sorted(deg.tolist()) == [2, 2, 2, 2, 3, 3, 3, 3, 4]


def test_closed_form_multiplicities():
    coup = geometric_couplings(2.0, 4)
    spec = laplacian_spectrum_closed_form(3, 4, coup)
    assert sum(m for _, m in spec) == 81
    spec2 = laplacian_spectrum_closed_form(2, 1, coup)
    assert spec2 == [(0.0, 1), (0.5, 1)]


def test_spectrum_support_union_of_bands():
    # uniform potential on [a, b]: every eigenvalue lies in some [lambda_r + a, lambda_r + b]
    n, k = 2, 4
    geom = HierGeometry(n, k)
    coup = geometric_couplings(8.0, k)
    a, b = -0.3, 0.7
    rng = np.random.default_rng(8)
    lam = coup.lambdas
    for _ in range(5):
        omega = rng.uniform(a, b, n**k)
        es = symmetric_eigen(assemble_hierarchical(geom, coup, k, omega, k))
        for v in es.values:
            assert any(lam[r] + a - 1e-9 <= v <= lam[r] + b + 1e-9 for r in range(k + 1))


def test_resolvent_diag_examples():
    es = symmetric_eigen(np.array([[0.0]]), want_vectors=True)
    assert resolvent_diag(es, 1j)[0] == pytest.approx(1j)
    es2 = symmetric_eigen(np.diag([1.0, 2.0]), want_vectors=True)
    got = resolvent_diag(es2, 1.0 + 1.0j)
    assert got[0] == pytest.approx(1j)
    assert got[1] == pytest.approx((1 + 1j) / 2)


def test_resolvent_diag_direct_solve_oracle():
    n, k = 2, 2
    geom = HierGeometry(n, k)
    coup = geometric_couplings(2.0, k)
    H = assemble_hierarchical(geom, coup, k, np.zeros(4), k).matrix
    es = symmetric_eigen(H, want_vectors=True)
    z = 0.3 + 0.1j
    got = resolvent_diag(es, z)
    # independent oracle: dense complex linear solves
    A = H - z * np.eye(4)
    for x in range(4):
        rhs = np.zeros(4, dtype=complex)
        rhs[x] = 1.0
        u = np.linalg.solve(A, rhs)
        assert abs(u[x] - got[x]) < 1e-10
    # imaginary part carries the sign of Im z; trace identity
    assert np.all(got.imag > 0)
    assert np.sum(got.imag) == pytest.approx(np.trace(np.linalg.inv(A)).imag)


def test_resolvent_diag_requires_vectors():
    es = symmetric_eigen(np.diag([1.0, 2.0]))
    with pytest.raises(ValueError):
        resolvent_diag(es, 1j)


def test_resolvent_telescoping_bounds():
    # one-step and iterated resolvent-difference norms against coupling tails
    rng = np.random.default_rng(13)
    n, kmax = 2, 5
    geom = HierGeometry(n, kmax)
    coup = geometric_couplings(3.0, kmax)
    pot = uniform_potential(0, 1)
    for trial in range(20):
        k = int(rng.integers(2, kmax + 1))
        r = int(rng.integers(1, k))
        z = complex(rng.uniform(-1, 1), rng.uniform(0.05, 1.0))
        omega = pot.sample(rng, n**k)
        N = n**k
        Hr1 = assemble_hierarchical(geom, coup, r - 1, omega, k).matrix
        Hr = assemble_hierarchical(geom, coup, r, omega, k).matrix
        Hk = assemble_hierarchical(geom, coup, k, omega, k).matrix
        I = np.eye(N)
        Rr1 = np.linalg.inv(Hr1 - z * I)
        Rr = np.linalg.inv(Hr - z * I)
        Rk = np.linalg.inv(Hk - z * I)
        one_step = np.linalg.norm(Rr1 - Rr, 2)
        assert one_step <= coup.p[r - 1] / abs(z.imag) ** 2
        iterated = np.linalg.norm(Rr - Rk, 2)
        assert iterated <= np.sum(coup.p[r:k]) / abs(z.imag) ** 2


def test_truncation_trace_identity():
    # trace(H_k) - trace(H_r) = n^k * sum_{s=r+1..k} p_s n^-s, exactly from the entry sums
    n, k = 3, 3
    geom = HierGeometry(n, k)
    coup = geometric_couplings(4.0, k)
    rng = np.random.default_rng(21)
    omega = rng.uniform(0, 1, n**k)
    for r in range(0, k):
        Hr = assemble_hierarchical(geom, coup, r, omega, k).matrix
        Hk = assemble_hierarchical(geom, coup, k, omega, k).matrix
        expect = n**k * np.sum(coup.p[r:k] / n ** np.arange(r + 1, k + 1, dtype=float))
        assert np.trace(Hk) - np.trace(Hr) == pytest.approx(expect, abs=1e-12)


def test_free_green_examples():
    coup = geometric_couplings(2.0, 20)
    got = free_green_hier(coup, 2, 1j, 0)
    expect = 0.5 / (0.0 - 1j) + 0.5 / (1.0 - 1j)
    assert got == pytest.approx(expect)
    # Herglotz property on a grid
    for e in np.linspace(-1, 2, 7):
        assert free_green_hier(coup, 2, complex(e, 0.3), 12).imag > 0
    with pytest.raises(ValueError):
        free_green_hier(coup, 2, 0.5 + 0j, 5)


def test_free_green_matches_finite_volume_trace():
    n, k = 2, 8
    coup = geometric_couplings(2.0, k)
    geom = HierGeometry(n, k)
    H = assemble_hierarchical(geom, coup, k, np.zeros(n**k), k)
    es = symmetric_eigen(H)
    z = 0.5 + 0.01j
    finite = np.mean(1.0 / (es.values - z))
    infinite = free_green_hier(geometric_couplings(2.0, 30), n, z, 30)
    assert abs(finite - infinite) < 1e-3


def test_potential_distributions():
    u = uniform_potential(0, 2)
    assert u.density_sup == pytest.approx(0.5)
    assert u.density(1.0) == pytest.approx(0.5)
    assert u.density(3.0) == 0.0
    c = cauchy_potential(1.0, 2.0)
    assert c.density_sup == pytest.approx(1.0 / (np.pi * 2.0))
    t = np.array([0.0, 1.0])
    assert np.allclose(c.density(t), 2.0 / (np.pi * ((1.0 - t) ** 2 + 4.0)))
    g = gaussian_potential(0.0, 2.0)
    assert g.density_sup == pytest.approx(1.0 / (2.0 * np.sqrt(2 * np.pi)))
    s = u.scaled(3.0)
    assert s.params == (0.0, 6.0)
    assert s.density_sup == pytest.approx(1.0 / 6.0)
    rng = np.random.default_rng(0)
    x = u.sample(rng, 1000)
    assert np.all((x >= 0) & (x <= 2))
