"""Piecewise-linear finite elements on a metric graph.

Two dof layouts are supported:

* ``continuous`` -- one shared dof per vertex plus interior nodes; the
  continuity conditions are built into the dof map.
* ``broken`` -- one dof per edge-end plus interior nodes; edge-end values at a
  shared vertex may differ (needed for jump data).

Assembly uses exact per-cell integration for the per-edge constant
coefficients, so K and M are exactly symmetric.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import BrokenSpaceInputError, MeshTooCoarseError
from .graph import MetricGraph

CONTINUOUS = "continuous"
BROKEN = "broken"


@dataclass(frozen=True)
class FormMatrices:
    """Stiffness-plus-potential matrix K and mass matrix M (CSR)."""

    K: sp.csr_matrix
    M: sp.csr_matrix


class Mesh:
    """Uniform per-edge grid with a global dof map."""

    def __init__(self, graph: MetricGraph, h: float, space: str = CONTINUOUS):
        if space not in (CONTINUOUS, BROKEN):
            raise ValueError(f"unknown space {space!r}")
        if h <= 0:
            raise ValueError("target cell size h must be positive")
        self.graph = graph
        self.h = float(h)
        self.space = space
        self.n_cells = []
        for e in graph.edges:
            ne = math.ceil(e.length / h)
            if ne < 2:
                raise MeshTooCoarseError(
                    f"edge {e.index} ({e.va}-{e.vb}) would get {ne} < 2 cells at h={h}"
                )
            self.n_cells.append(ne)

        n, m = graph.n, graph.m
        interiors = [ne - 1 for ne in self.n_cells]
        if space == CONTINUOUS:
            first_interior = n
        else:
            first_interior = 2 * m
        self._interior_start = []
        pos = first_interior
        for ni in interiors:
            self._interior_start.append(pos)
            pos += ni
        self.ndof = pos

        self._edge_dofs = []
        for e in graph.edges:
            ni = interiors[e.index]
            inner = np.arange(self._interior_start[e.index], self._interior_start[e.index] + ni)
            if space == CONTINUOUS:
                d0 = graph.vertex_index(e.va)
                d1 = graph.vertex_index(e.vb)
            else:
                d0 = 2 * e.index
                d1 = 2 * e.index + 1
            self._edge_dofs.append(np.concatenate(([d0], inner, [d1])).astype(np.int64))

    def edge_dofs(self, e: int) -> np.ndarray:
        """Dof indices along edge ``e`` from coordinate 0 to the edge length."""
        return self._edge_dofs[e]

    def edge_coords(self, e: int) -> np.ndarray:
        return np.linspace(0.0, self.graph.edges[e].length, self.n_cells[e] + 1)

    def cell_size(self, e: int) -> float:
        return self.graph.edges[e].length / self.n_cells[e]

    def end_dof(self, e: int, end: int) -> int:
        dofs = self._edge_dofs[e]
        return int(dofs[0] if end == 0 else dofs[-1])

    def sample(self, func) -> np.ndarray:
        """Dof vector of a function given as ``func(edge_index, x_array)``."""
        u = np.zeros(self.ndof)
        for e in range(self.graph.m):
            u[self.edge_dofs(e)] = func(e, self.edge_coords(e))
        return u

    def edge_values(self, u: np.ndarray) -> list[np.ndarray]:
        """Per-edge nodal value arrays of a dof vector."""
        return [u[self.edge_dofs(e)] for e in range(self.graph.m)]


def build_mesh(graph: MetricGraph, h: float, space: str = CONTINUOUS) -> Mesh:
    return Mesh(graph, h, space)


def assemble_form(mesh: Mesh) -> FormMatrices:
    """Assemble K (stiffness + potential) and M on the mesh's dof map."""
    rows, cols, kvals, mvals = [], [], [], []
    for e in mesh.graph.edges:
        dofs = mesh.edge_dofs(e.index)
        h = mesh.cell_size(e.index)
        ks = e.c / h
        mloc = h / 6.0
        for a in range(len(dofs) - 1):
            i, j = dofs[a], dofs[a + 1]
            # stiffness + potential, exact for constant c, p on the cell
            k00 = ks + e.p * 2.0 * mloc
            k01 = -ks + e.p * mloc
            m00 = 2.0 * mloc
            m01 = mloc
            rows.extend((i, i, j, j))
            cols.extend((i, j, i, j))
            kvals.extend((k00, k01, k01, k00))
            mvals.extend((m00, m01, m01, m00))
    shape = (mesh.ndof, mesh.ndof)
    K = sp.coo_matrix((kvals, (rows, cols)), shape=shape).tocsr()
    M = sp.coo_matrix((mvals, (rows, cols)), shape=shape).tocsr()
    return FormMatrices(K=K, M=M)


def vertex_trace(mesh: Mesh, u: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Vertex-value vector (u(v))_v in canonical vertex order."""
    g = mesh.graph
    if mesh.space == CONTINUOUS:
        return np.asarray(u[: g.n], dtype=float).copy()
    out = np.zeros(g.n)
    for i, v in enumerate(g.vertices):
        vals = np.array([u[mesh.end_dof(ei, end)] for ei, end in g.incident(v)])
        scale = max(1.0, float(np.abs(vals).max()))
        if np.abs(vals - vals[0]).max() > tol * scale:
            raise BrokenSpaceInputError(f"inconsistent end values at vertex {v!r}")
        out[i] = vals[0]
    return out


def continuous_embedding(broken: Mesh, cont: Mesh) -> sp.csr_matrix:
    """Embedding matrix E with (E u_cont) the broken dof vector of u_cont.

    Both meshes must be built on the same graph with the same h.
    """
    if broken.space != BROKEN or cont.space != CONTINUOUS:
        raise ValueError("expected (broken, continuous) mesh pair")
    if broken.graph is not cont.graph or broken.n_cells != cont.n_cells:
        raise ValueError("meshes do not match")
    rows, cols = [], []
    for e in range(broken.graph.m):
        bd = broken.edge_dofs(e)
        cd = cont.edge_dofs(e)
        rows.extend(bd.tolist())
        cols.extend(cd.tolist())
    vals = np.ones(len(rows))
    return sp.coo_matrix((vals, (rows, cols)), shape=(broken.ndof, cont.ndof)).tocsr()


def end_collapse(mesh: Mesh) -> sp.csr_matrix:
    """Matrix R (n x ndof) summing broken end dofs per vertex."""
    if mesh.space != BROKEN:
        raise ValueError("end_collapse requires a broken mesh")
    g = mesh.graph
    rows, cols = [], []
    for i, v in enumerate(g.vertices):
        for ei, end in g.incident(v):
            rows.append(i)
            cols.append(mesh.end_dof(ei, end))
    vals = np.ones(len(rows))
    return sp.coo_matrix((vals, (rows, cols)), shape=(g.n, mesh.ndof)).tocsr()


def jump_and_flux_operators(mesh: Mesh) -> tuple[sp.csr_matrix, sp.csr_matrix]:
    """Continuity-residual operator J and outward weak-flux operator Phi.

    J stacks, vertex by vertex, the consecutive differences of the incident
    edge-end values (the I_v rows).  Phi computes the conductance-weighted
    outward derivative sum per vertex as the lifting -R K u, which reproduces
    the one-sided derivatives exactly whenever (c u')' = p u on the incident
    cells.
    """
    if mesh.space != BROKEN:
        raise ValueError("jump_and_flux_operators requires a broken mesh")
    g = mesh.graph
    rows, cols, vals = [], [], []
    for r, (v, local) in enumerate(g.continuity_rows()):
        ends = g.incident(v)
        ei, end = ends[local]
        rows.append(r)
        cols.append(mesh.end_dof(ei, end))
        vals.append(1.0)
        ei, end = ends[local + 1]
        rows.append(r)
        cols.append(mesh.end_dof(ei, end))
        vals.append(-1.0)
    J = sp.coo_matrix((vals, (rows, cols)), shape=(g.n_continuity_rows(), mesh.ndof)).tocsr()
    K = assemble_form(mesh).K
    Phi = (-end_collapse(mesh) @ K).tocsr()
    return J, Phi


def edge_end_fluxes(mesh: Mesh, u: np.ndarray, lam: float = 0.0) -> np.ndarray:
    """Outward fluxes c * du/d(outward) at every edge-end, shape (m, 2).

    ``lam`` is the coefficient in the interior equation lam*u = (c u')' - p u
    (the eigenvalue for eigenfunctions, the positive shift for resolvent
    kernel functions).  The flux is lifted from the per-edge weak residual and
    is second-order accurate for dof vectors satisfying that equation.
    """
    out = np.zeros((mesh.graph.m, 2))
    for e in mesh.graph.edges:
        dofs = mesh.edge_dofs(e.index)
        h = mesh.cell_size(e.index)
        ks = e.c / h
        d = (e.p + lam) * h / 3.0
        o = (e.p + lam) * h / 6.0
        u0, u1 = u[dofs[0]], u[dofs[1]]
        un, up = u[dofs[-1]], u[dofs[-2]]
        toward0 = (ks + d) * u0 + (-ks + o) * u1
        toward1 = (ks + d) * un + (-ks + o) * up
        out[e.index, 0] = -toward0
        out[e.index, 1] = -toward1
    return out


def mass_norm(M: sp.csr_matrix, u: np.ndarray) -> float:
    return float(np.sqrt(max(u @ (M @ u), 0.0)))
