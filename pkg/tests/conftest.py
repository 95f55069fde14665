from types import SimpleNamespace

import pytest

from neass import KGrid, build_hamiltonian, fermi_projection, haldane, qwz, square_lattice


def make_setup(model, n1, n2):
    grid = KGrid(model.lattice, n1, n2)
    h = build_hamiltonian(model, grid)
    p0, gap = fermi_projection(h, model.mu)
    return SimpleNamespace(model=model, grid=grid, h=h, p0=p0, gap=gap)


@pytest.fixture(scope="session")
def sq32():
    return KGrid(square_lattice(), 32, 32)


@pytest.fixture(scope="session")
def qwz32():
    return make_setup(qwz(1.0), 32, 32)


@pytest.fixture(scope="session")
def qwz48():
    return make_setup(qwz(1.0), 48, 48)


@pytest.fixture(scope="session")
def qwz64():
    return make_setup(qwz(1.0), 64, 64)


@pytest.fixture(scope="session")
def haldane48():
    return make_setup(haldane(), 48, 48)
