import numpy as np
import pytest

from neass import (
    BravaisLattice,
    DegenerateLattice,
    KGrid,
    ShapeMismatch,
    bz_mean,
    build_hamiltonian,
    fermi_projection,
    qwz,
    reciprocal_basis,
    square_lattice,
    triangular_lattice,
)
from neass.fiber import fiber_trace

TOL = 1e-12


def duality_oracle(lattice):
    # solve a_i . b_j = 2*pi*delta_ij as a linear system, independently of
    # the closed-form inverse used by the implementation
    A = np.array([lattice.a1, lattice.a2])
    B = np.linalg.solve(A, 2 * np.pi * np.eye(2))
    return B[:, 0], B[:, 1]


def test_reciprocal_square():
    b1, b2 = reciprocal_basis(square_lattice())
    np.testing.assert_allclose(b1, [2 * np.pi, 0], atol=TOL)
    np.testing.assert_allclose(b2, [0, 2 * np.pi], atol=TOL)


def test_reciprocal_triangular():
    lat = triangular_lattice()
    b1, b2 = reciprocal_basis(lat)
    # frozen from the 2x2 linear system a_i . b_j = 2*pi*delta_ij
    np.testing.assert_allclose(b1, [2 * np.pi, -2 * np.pi / np.sqrt(3)], atol=TOL)
    np.testing.assert_allclose(b2, [0, 4 * np.pi / np.sqrt(3)], atol=TOL)
    o1, o2 = duality_oracle(lat)
    np.testing.assert_allclose(b1, o1, atol=TOL)
    np.testing.assert_allclose(b2, o2, atol=TOL)


def test_reciprocal_rectangular():
    lat = BravaisLattice(np.array([2.0, 0.0]), np.array([0.0, 1.0]))
    b1, b2 = reciprocal_basis(lat)
    np.testing.assert_allclose(b1, [np.pi, 0], atol=TOL)
    np.testing.assert_allclose(b2, [0, 2 * np.pi], atol=TOL)


def test_reciprocal_duality_random():
    rng = np.random.default_rng(7)
    for _ in range(10):
        a1 = rng.uniform(-2, 2, 2)
        a2 = rng.uniform(-2, 2, 2)
        if abs(np.linalg.det(np.column_stack([a1, a2]))) < 0.1:
            continue
        lat = BravaisLattice(a1, a2)
        b1, b2 = reciprocal_basis(lat)
        gram = np.array([[a1 @ b1, a1 @ b2], [a2 @ b1, a2 @ b2]])
        np.testing.assert_allclose(gram, 2 * np.pi * np.eye(2), atol=1e-10)


def test_degenerate_lattice_rejected():
    with pytest.raises(DegenerateLattice):
        BravaisLattice(np.array([1.0, 2.0]), np.array([2.0, 4.0]))
    with pytest.raises(DegenerateLattice):
        BravaisLattice(np.array([1.0, 0.0]), np.array([1e-13, 0.0]))


def test_bz_volume_times_cell_area():
    for lat in (square_lattice(), triangular_lattice(), square_lattice(0.37)):
        grid = KGrid(lat, 6, 8)
        assert abs(grid.bz_volume * lat.cell_area - (2 * np.pi) ** 2) < 1e-10


def test_grid_nodes_layout():
    grid = KGrid(triangular_lattice(), 5, 7)
    assert grid.nodes.shape == (5, 7, 2)
    assert grid.size == 35
    np.testing.assert_allclose(grid.nodes[0, 0], [0.0, 0.0], atol=TOL)
    b1, b2 = grid.reciprocal
    np.testing.assert_allclose(grid.nodes[2, 3], 2 / 5 * b1 + 3 / 7 * b2, atol=TOL)
    # each node distinct: reduced coordinates enumerate the torus once
    k1 = grid.reduced(0)
    k2 = grid.reduced(1)
    pairs = {(round(a, 12), round(b, 12)) for a, b in zip(k1.ravel(), k2.ravel())}
    assert len(pairs) == grid.size


@pytest.mark.parametrize("bad", [0, -3, 2.5])
def test_invalid_grid_sizes(bad):
    with pytest.raises(ValueError):
        KGrid(square_lattice(), bad, 4)


def test_bz_mean_constant():
    grid = KGrid(square_lattice(), 4, 4)
    assert bz_mean(np.full(grid.shape, 2.5 + 1j), grid) == 2.5 + 1j


def test_bz_mean_single_mode_is_zero():
    for n1 in (2, 3, 5, 8):
        grid = KGrid(square_lattice(), n1, 3)
        f = np.exp(1j * grid.reduced(0))
        assert abs(bz_mean(f, grid)) < TOL


def test_bz_mean_mixed_mode():
    grid = KGrid(square_lattice(), 4, 4)
    f = 3.0 + np.exp(1j * grid.reduced(0))
    # direct-summation oracle
    expected = f.sum() / 16.0
    assert abs(bz_mean(f, grid) - expected) < TOL
    assert abs(bz_mean(f, grid) - 3.0) < TOL


def test_bz_mean_fourier_exactness():
    # any resolved nonzero mode averages to machine zero; the zero mode
    # returns its coefficient exactly
    rng = np.random.default_rng(3)
    grid = KGrid(triangular_lattice(), 12, 10)
    k1, k2 = grid.reduced(0), grid.reduced(1)
    for _ in range(20):
        r1 = int(rng.integers(-5, 6))
        r2 = int(rng.integers(-4, 5))
        coeff = complex(rng.standard_normal(), rng.standard_normal())
        f = coeff * np.exp(1j * (r1 * k1 + r2 * k2))
        mean = bz_mean(f, grid)
        if (r1 % 12, r2 % 10) == (0, 0):
            assert abs(mean - coeff) < TOL
        else:
            assert abs(mean) < TOL


def test_bz_mean_shape_mismatch():
    grid = KGrid(square_lattice(), 4, 4)
    with pytest.raises(ShapeMismatch):
        bz_mean(np.zeros((4, 5)), grid)


@pytest.mark.parametrize("u", [1.0, 3.0])
def test_grid_doubling_stability(u):
    # smooth model-derived integrand: Tr(H(k) P0(k)) for a gapped catalog
    # point; doubling the grid must not move the average.  The slowest
    # catalog decay (u = 1) needs n = 32 to clear 1e-10; n = 24 sits at 2e-10.
    model = qwz(u)
    means = {}
    for n in (24, 32, 48, 64):
        grid = KGrid(model.lattice, n, n)
        h = build_hamiltonian(model, grid)
        p0, _ = fermi_projection(h, model.mu)
        means[n] = bz_mean(fiber_trace(h @ p0.op), grid)
    assert abs(means[32] - means[64]) < 1e-10
    assert abs(means[24] - means[48]) < 1e-9
