import numpy as np
import pytest

from neass import (
    FiberOperator,
    GapClosed,
    GridTooCoarse,
    HoppingModel,
    KGrid,
    NotHermitian,
    RankInconsistent,
    analytic_velocity,
    build_hamiltonian,
    chern_number_fhs,
    commutator,
    commutator_with_position,
    fermi_projection,
    flat,
    haldane,
    hofstadter,
    hopping_model_from_text,
    qwz,
    random_hopping_model,
    square_lattice,
    sup_fiber_norm,
    trace_per_unit_volume,
)
from neass.models import SIGMA_X, SIGMA_Y, SIGMA_Z

TOL = 1e-12


def fourier_sum_oracle(model, grid):
    """Direct nested-loop evaluation of sum_R e^{i k.R} T_R."""
    out = np.zeros((*grid.shape, model.dim, model.dim), dtype=complex)
    for m1 in range(grid.n1):
        for m2 in range(grid.n2):
            k = grid.nodes[m1, m2]
            for (r1, r2), mat in model.hoppings.items():
                out[m1, m2] += np.exp(1j * k @ model.lattice.vector(r1, r2)) * mat
    return out


# -- Bloch field construction ---------------------------------------------------


def test_flat_model_constant_field():
    model = flat()
    grid = KGrid(model.lattice, 6, 6)
    h = build_hamiltonian(model, grid)
    assert sup_fiber_norm(h - FiberOperator(grid, np.broadcast_to(
        SIGMA_Z, (*grid.shape, 2, 2)).copy())) == 0.0


def test_square_nn_band():
    model = HoppingModel(
        lattice=square_lattice(), dim=1,
        hoppings={(1, 0): np.array([[1.0]]), (0, 1): np.array([[1.0]])},
    )
    grid = KGrid(model.lattice, 8, 8)
    h = build_hamiltonian(model, grid)
    expected = 2 * np.cos(grid.reduced(0)) + 2 * np.cos(grid.reduced(1))
    np.testing.assert_allclose(h.data[..., 0, 0], expected, atol=TOL)
    np.testing.assert_allclose(fourier_sum_oracle(model, grid), h.data, atol=TOL)


def test_qwz_matches_textbook_form():
    model = qwz(0.7)
    grid = KGrid(model.lattice, 12, 12)
    h = build_hamiltonian(model, grid)
    k1, k2 = grid.reduced(0), grid.reduced(1)
    direct = (np.sin(k1)[..., None, None] * SIGMA_X
              + np.sin(k2)[..., None, None] * SIGMA_Y
              + (0.7 + np.cos(k1) + np.cos(k2))[..., None, None] * SIGMA_Z)
    assert sup_fiber_norm(h - FiberOperator(grid, direct)) < TOL


def test_build_hamiltonian_is_hermitian():
    for model in (qwz(1.0), haldane(), hofstadter(1, 3, mu=-1.5)):
        grid = KGrid(model.lattice, 12, 12)
        assert build_hamiltonian(model, grid).hermiticity_defect() < TOL


def test_grid_too_coarse():
    model = HoppingModel(
        lattice=square_lattice(), dim=1, hoppings={(3, 0): np.array([[1.0]])}
    )
    with pytest.raises(GridTooCoarse):
        build_hamiltonian(model, KGrid(model.lattice, 6, 6))
    build_hamiltonian(model, KGrid(model.lattice, 7, 7))  # 2*3 < 7 resolves


def test_hermiticity_closure_fills_partners():
    t = np.array([[0.0, 1.0], [0.5j, 0.0]])
    model = HoppingModel(square_lattice(), 2, {(1, 0): t})
    np.testing.assert_allclose(model.hoppings[(-1, 0)], t.conj().T)


def test_hermiticity_closure_rejects_conflicts():
    t = np.array([[1.0]])
    with pytest.raises(ValueError):
        HoppingModel(square_lattice(), 1, {(1, 0): t, (-1, 0): np.array([[2.0]])})
    with pytest.raises(ValueError):
        HoppingModel(square_lattice(), 1, {(0, 0): np.array([[1j]])})


def test_range_cutoff_enforced():
    with pytest.raises(ValueError):
        HoppingModel(square_lattice(), 1, {(9, 0): np.array([[1.0]])})


# -- velocity ------------------------------------------------------------------


def test_velocity_flat_is_zero():
    model = flat()
    grid = KGrid(model.lattice, 6, 6)
    assert sup_fiber_norm(analytic_velocity(model, grid, "x")) == 0.0


def test_velocity_square_nn():
    model = HoppingModel(
        lattice=square_lattice(), dim=1,
        hoppings={(1, 0): np.array([[1.0]]), (0, 1): np.array([[1.0]])},
    )
    grid = KGrid(model.lattice, 8, 8)
    v = analytic_velocity(model, grid, "x")
    np.testing.assert_allclose(v.data[..., 0, 0], -2 * np.sin(grid.reduced(0)), atol=TOL)


def test_velocity_qwz_term_by_term():
    model = qwz(1.0)
    grid = KGrid(model.lattice, 12, 12)
    v = analytic_velocity(model, grid, "x")
    k1 = grid.reduced(0)
    direct = (np.cos(k1)[..., None, None] * SIGMA_X
              - np.sin(k1)[..., None, None] * SIGMA_Z)
    assert sup_fiber_norm(v - FiberOperator(grid, direct)) < TOL


@pytest.mark.parametrize("builder", [lambda: qwz(1.0), haldane, lambda: hofstadter(1, 3, mu=-1.5)])
def test_velocity_consistent_with_spectral_derivative(builder):
    # i * [H, X] from the FFT route must match the analytic hopping derivative
    model = builder()
    grid = KGrid(model.lattice, 16, 16)
    h = build_hamiltonian(model, grid)
    for axis in ("x", "y"):
        fft_route = 1j * commutator_with_position(h, axis)
        assert sup_fiber_norm(fft_route - analytic_velocity(model, grid, axis)) < 1e-10


# -- Fermi projection -------------------------------------------------------------


def test_fermi_projection_atomic_limit():
    model = flat()
    grid = KGrid(model.lattice, 6, 6)
    h = build_hamiltonian(model, grid)
    p0, gap = fermi_projection(h, 0.0)
    expected = np.broadcast_to(np.diag([0.0, 1.0]), (*grid.shape, 2, 2))
    assert sup_fiber_norm(p0.op - FiberOperator(grid, expected.copy())) < TOL
    assert gap.rank == 1
    assert gap.gap_lower == -1.0 and gap.gap_upper == 1.0
    assert gap.gap_width == 2.0


def test_fermi_projection_qwz(qwz48):
    # eigensolver oracle: gap from an independent nodewise eigenvalue scan
    w = np.linalg.eigvalsh(qwz48.h.data)
    assert qwz48.gap.rank == 1
    assert abs(qwz48.gap.gap_lower - w[..., 0].max()) < TOL
    assert abs(qwz48.gap.gap_upper - w[..., 1].min()) < TOL
    assert qwz48.gap.gap_width > 0
    assert sup_fiber_norm(commutator(qwz48.h, qwz48.p0.op)) < 1e-10
    assert abs(trace_per_unit_volume(qwz48.p0.op) - 1.0) < 1e-10


def test_fermi_projection_gap_closed_at_dirac_point():
    model = qwz(0.0)  # gapless
    grid = KGrid(model.lattice, 8, 8)
    h = build_hamiltonian(model, grid)
    with pytest.raises(GapClosed):
        fermi_projection(h, 0.0)


def test_fermi_projection_mu_outside_spectrum():
    model = flat()
    grid = KGrid(model.lattice, 4, 4)
    h = build_hamiltonian(model, grid)
    with pytest.raises(GapClosed):
        fermi_projection(h, -5.0)
    with pytest.raises(GapClosed):
        fermi_projection(h, 1.0)  # exactly on an eigenvalue


def test_fermi_projection_rank_inconsistent():
    model = HoppingModel(square_lattice(), 1, {(1, 0): np.array([[1.0]])})
    grid = KGrid(model.lattice, 8, 8)
    h = build_hamiltonian(model, grid)  # band 2cos(k1) crosses mu = 0.5
    with pytest.raises(RankInconsistent):
        fermi_projection(h, 0.5)


def test_fermi_projection_requires_hermitian():
    grid = KGrid(square_lattice(), 4, 4)
    data = np.zeros((4, 4, 2, 2), dtype=complex)
    data[..., 0, 1] = 1.0
    with pytest.raises(NotHermitian):
        fermi_projection(FiberOperator(grid, data), 0.0)


# -- catalog physics ---------------------------------------------------------------


def test_haldane_phase_diagram():
    # chirality flips the Chern number; a dominant mass term trivializes it
    for phi, mass, expected in ((np.pi / 2, 0.0, 1), (-np.pi / 2, 0.0, -1), (np.pi / 2, 1.0, 0)):
        model = haldane(t1=1.0, t2=0.1, phi=phi, m_onsite=mass)
        grid = KGrid(model.lattice, 32, 32)
        h = build_hamiltonian(model, grid)
        p0, gap = fermi_projection(h, 0.0)
        assert gap.gap_width > 0.3
        assert chern_number_fhs(p0) == expected


def test_hofstadter_third_flux():
    model = hofstadter(1, 3, mu=-1.5)
    grid = KGrid(model.lattice, 24, 24)
    h = build_hamiltonian(model, grid)
    assert h.dim == 3
    assert model.lattice.cell_area == 3.0
    p0, gap = fermi_projection(h, model.mu)
    assert gap.rank == 1
    # flux-1/3 band edges at -2 and -2*cos(pi/9)... frozen from the spectrum scan
    assert abs(gap.gap_lower - (-2.0)) < 1e-6
    assert abs(trace_per_unit_volume(p0.op) - 1.0 / 3.0) < 1e-10
    assert chern_number_fhs(p0) == -1
    p2, gap2 = fermi_projection(h, 1.5)
    assert gap2.rank == 2
    assert chern_number_fhs(p2) == 1


def test_hofstadter_bloch_matches_harper():
    # at k = 0 the fiber must reproduce the plain Harper matrix
    q, p = 3, 1
    model = hofstadter(p, q, mu=-1.5)
    grid = KGrid(model.lattice, 6, 6)
    h = build_hamiltonian(model, grid)
    harper = np.zeros((q, q), dtype=complex)
    for j in range(q):
        harper[j, (j + 1) % q] += -1.0
        harper[(j + 1) % q, j] += -1.0
        harper[j, j] += -2.0 * np.cos(2 * np.pi * p / q * j)
    np.testing.assert_allclose(np.linalg.eigvalsh(h.data[0, 0]),
                               np.linalg.eigvalsh(harper), atol=TOL)


def test_hofstadter_argument_validation():
    with pytest.raises(ValueError):
        hofstadter(2, 4, mu=0.0)  # not in lowest terms
    with pytest.raises(ValueError):
        hofstadter(0, 3, mu=0.0)
    with pytest.raises(ValueError):
        hofstadter(1, 1, mu=0.0)


def test_random_hopping_model_is_hermitian():
    rng = np.random.default_rng(5)
    model = random_hopping_model(square_lattice(), 3, rng)
    grid = KGrid(model.lattice, 10, 10)
    assert build_hamiltonian(model, grid).hermiticity_defect() < TOL


# -- plain-text loading ----------------------------------------------------------


def test_hopping_model_from_text(tmp_path):
    path = tmp_path / "hoppings.txt"
    path.write_text(
        "# on-site sz plus an x-hop\n"
        "0 0 0 0  1.0  0.0\n"
        "0 0 1 1 -1.0  0.0\n"
        "1 0 0 1  0.0  0.5   # one-sided: closure must fill (-1,0)\n"
        "\n"
    )
    model = hopping_model_from_text(path, square_lattice(), mu=0.0, name="demo")
    assert model.dim == 2
    np.testing.assert_allclose(model.hoppings[(0, 0)], SIGMA_Z)
    np.testing.assert_allclose(model.hoppings[(-1, 0)],
                               model.hoppings[(1, 0)].conj().T)
    grid = KGrid(model.lattice, 8, 8)
    assert build_hamiltonian(model, grid).hermiticity_defect() < TOL


def test_hopping_text_rejects_malformed(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("0 0 0 0 1.0\n")
    with pytest.raises(ValueError):
        hopping_model_from_text(path, square_lattice())
    path.write_text("\n")
    with pytest.raises(ValueError):
        hopping_model_from_text(path, square_lattice())
