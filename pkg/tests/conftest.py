import numpy as np
import pytest

from graphheat import fem, graph, spectral


@pytest.fixture(scope="session")
def interval_fine():
    """Interval at h=1/512 with 40 modes: the workhorse analytic testbed."""
    g = graph.interval()
    mesh = fem.build_mesh(g, 1 / 512)
    Fm = fem.assemble_form(mesh)
    basis = spectral.eigensolve(Fm, mesh, 40)
    return g, mesh, Fm, basis


@pytest.fixture(scope="session")
def interval_many_modes():
    """Interval with 200 modes for series/regularity work."""
    g = graph.interval()
    mesh = fem.build_mesh(g, 1 / 1024)
    Fm = fem.assemble_form(mesh)
    basis = spectral.eigensolve(Fm, mesh, 200)
    return g, mesh, Fm, basis


@pytest.fixture(scope="session")
def star3_basis():
    g = graph.star_graph(3)
    mesh = fem.build_mesh(g, 1 / 512)
    Fm = fem.assemble_form(mesh)
    basis = spectral.eigensolve(Fm, mesh, 200)
    return g, mesh, Fm, basis


@pytest.fixture(scope="session")
def path2_basis():
    g = graph.path_graph(2)
    mesh = fem.build_mesh(g, 1 / 512)
    Fm = fem.assemble_form(mesh)
    basis = spectral.eigensolve(Fm, mesh, 200)
    return g, mesh, Fm, basis


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
