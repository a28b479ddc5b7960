import numpy as np
import pytest

from graphheat import fem, graph
from graphheat.errors import BrokenSpaceInputError, MeshTooCoarseError


def test_dof_counts():
    assert fem.build_mesh(graph.interval(), 0.5).ndof == 3
    star = graph.star_graph(3)
    assert fem.build_mesh(star, 0.25).ndof == 4 + 3 * 3
    assert fem.build_mesh(star, 0.25, space=fem.BROKEN).ndof == 6 + 9


def test_too_coarse():
    with pytest.raises(MeshTooCoarseError):
        fem.build_mesh(graph.interval(), 1.0)


def test_exact_interval_matrices():
    mesh = fem.build_mesh(graph.interval(), 0.5)
    F = fem.assemble_form(mesh)
    K = F.K.toarray()
    M = F.M.toarray()
    # order dofs as (v0, v1, interior): reindex to grid order 0, mid, 1
    order = [mesh.edge_dofs(0)[i] for i in range(3)]
    Kg = K[np.ix_(order, order)]
    Mg = M[np.ix_(order, order)]
    assert np.allclose(Kg, 2 * np.array([[1, -1, 0], [-1, 2, -1], [0, -1, 1]]))
    assert np.allclose(Mg, np.array([[2, 1, 0], [1, 4, 1], [0, 1, 2]]) / 12)


def test_constants_in_stiffness_kernel():
    mesh = fem.build_mesh(graph.star_graph(4), 0.1)
    F = fem.assemble_form(mesh)
    ones = np.ones(mesh.ndof)
    assert abs(ones @ (F.K @ ones)) < 1e-12


def test_conductance_scaling():
    m1 = fem.build_mesh(graph.interval(c=1.0), 0.25)
    m2 = fem.build_mesh(graph.interval(c=2.0), 0.25)
    F1, F2 = fem.assemble_form(m1), fem.assemble_form(m2)
    assert np.allclose(F2.K.toarray(), 2 * F1.K.toarray())
    assert np.allclose(F2.M.toarray(), F1.M.toarray())


def test_symmetry_exact():
    mesh = fem.build_mesh(graph.path_graph(3, p=0.7), 0.125)
    F = fem.assemble_form(mesh)
    assert (F.K - F.K.T).nnz == 0
    assert (F.M - F.M.T).nnz == 0


def test_mass_norm_of_ones_is_total_length():
    g = graph.star_graph(3, length=0.8)
    mesh = fem.build_mesh(g, 0.05)
    F = fem.assemble_form(mesh)
    assert fem.mass_norm(F.M, np.ones(mesh.ndof)) == pytest.approx(
        np.sqrt(g.total_length), rel=1e-12
    )


def test_vertex_trace_constant_and_mode():
    mesh = fem.build_mesh(graph.interval(), 1 / 256)
    assert np.allclose(fem.vertex_trace(mesh, np.ones(mesh.ndof)), [1, 1])
    u = mesh.sample(lambda e, x: np.sqrt(2) * np.cos(np.pi * x))
    tr = fem.vertex_trace(mesh, u)
    assert np.allclose(tr, [np.sqrt(2), -np.sqrt(2)], atol=1e-10)


def test_vertex_trace_rejects_jumpy_broken():
    g = graph.path_graph(2)
    broken = fem.build_mesh(g, 0.25, space=fem.BROKEN)
    u = broken.sample(lambda e, x: float(e) + 0 * x)  # jump at middle vertex
    with pytest.raises(BrokenSpaceInputError):
        fem.vertex_trace(broken, u)


def test_jump_of_embedded_continuous_is_zero():
    g = graph.star_graph(3)
    broken = fem.build_mesh(g, 0.2, space=fem.BROKEN)
    cont = fem.build_mesh(g, 0.2)
    E = fem.continuous_embedding(broken, cont)
    J, _ = fem.jump_and_flux_operators(broken)
    rng = np.random.default_rng(0)
    u = rng.standard_normal(cont.ndof)
    assert np.max(np.abs(J @ (E @ u))) < 1e-14


def test_flux_of_linear_function():
    mesh = fem.build_mesh(graph.interval(), 1 / 64, space=fem.BROKEN)
    _, Phi = fem.jump_and_flux_operators(mesh)
    u = mesh.sample(lambda e, x: x)
    assert np.allclose(Phi @ u, [1.0, -1.0], atol=1e-12)


def test_flux_of_constant_is_zero():
    mesh = fem.build_mesh(graph.star_graph(3), 0.25, space=fem.BROKEN)
    _, Phi = fem.jump_and_flux_operators(mesh)
    assert np.max(np.abs(Phi @ np.ones(mesh.ndof))) < 1e-12


def test_galerkin_convergence_rate():
    # u = sin(pi x), v = x(1-x): a(u,v) = pi^2 * int sin(pi x) x(1-x) dx = 4/pi
    exact = 4 / np.pi
    errs = []
    for h in (1 / 32, 1 / 64, 1 / 128):
        mesh = fem.build_mesh(graph.interval(), h)
        F = fem.assemble_form(mesh)
        u = mesh.sample(lambda e, x: np.sin(np.pi * x))
        v = mesh.sample(lambda e, x: x * (1 - x))
        errs.append(abs(u @ (F.K @ v) - exact))
    rate = np.log2(errs[0] / errs[1])
    assert 1.7 < rate < 2.3
    assert errs[2] < errs[1] < errs[0]


def test_edge_end_fluxes_of_eigenfunction_vanish():
    mesh = fem.build_mesh(graph.interval(), 1 / 256)
    u = mesh.sample(lambda e, x: np.sqrt(2) * np.cos(np.pi * x))
    fl = fem.edge_end_fluxes(mesh, u, lam=-np.pi**2)
    assert np.max(np.abs(fl)) < 1e-6
