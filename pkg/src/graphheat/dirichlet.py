"""Dirichlet maps: vertex data to kernel functions of the shifted operator.

Boundary data ordering is (continuity block of size 2m-n, Kirchhoff block of
size n).  The Kirchhoff datum is imposed in the weak sense: the value at
vertex v is the functional u -> a_lam(u, chi_v), which equals the
conductance-weighted one-sided derivative sum taken toward the vertex.  This
is the convention under which the adjoint identity
(lam - lambda_k) <D_K e_i, f_k> = (L f_k)_i holds with a plus sign; the
geometric outward-derivative convention flips the sign of the Kirchhoff block
only.

The exponential-ansatz surjectivity construction keeps the outward derivative
convention of the boundary operator B it certifies; it is self-contained and
never mixed with the maps above.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import (
    GammaOverflowError,
    MeshMismatchError,
    NonpositiveShiftError,
    SingularVertexSystemError,
)
from .fem import BROKEN, CONTINUOUS, FormMatrices, Mesh, continuous_embedding
from .graph import MetricGraph
from .spectral import SpectralBasis


@dataclass
class DirichletMapK:
    """Kirchhoff-data Dirichlet map at shift ``lam``: columns (ndof, n)."""

    mesh: Mesh
    lam: float
    columns: np.ndarray


def dirichlet_map_K(mesh: Mesh, F: FormMatrices, lam: float) -> DirichletMapK:
    """Column i solves (K + lam*M) u = e_{vertex dof i}.

    This is the discrete counterpart of a_lam(u, v) = <e_i, Lv> for all test
    functions v, so the weak Kirchhoff flux of column i is exactly e_i.
    """
    if lam <= 0:
        raise NonpositiveShiftError(f"shift {lam} must be positive")
    if mesh.space != CONTINUOUS:
        raise ValueError("dirichlet_map_K requires a continuous mesh")
    n = mesh.graph.n
    A = (F.K + lam * F.M).tocsc()
    lu = spla.splu(A)
    loads = np.zeros((mesh.ndof, n))
    loads[np.arange(n), np.arange(n)] = 1.0
    cols = lu.solve(loads)
    return DirichletMapK(mesh=mesh, lam=lam, columns=cols)


def adjoint_coefficients(basis: SpectralBasis, dmap: DirichletMapK, F: FormMatrices) -> np.ndarray:
    """Matrix {<D_K e_i, f_k>_M} of shape (n, n_modes).

    Equals (L f_k)_i / (lam - lambda_k) up to the linear-solver tolerance.
    """
    if basis.mesh is not dmap.mesh:
        raise MeshMismatchError("basis and Dirichlet map use different meshes")
    return dmap.columns.T @ (F.M @ basis.vecs)


def weak_kirchhoff_flux(F: FormMatrices, lam: float, u: np.ndarray, n: int) -> np.ndarray:
    """Weak Kirchhoff flux vector of a continuous-mesh dof vector."""
    return np.asarray(((F.K + lam * F.M) @ u)[:n])


def interior_residual(mesh: Mesh, F: FormMatrices, lam: float, u: np.ndarray) -> float:
    """Max-norm of the interior weak residual of (lam - A) u = 0."""
    r = (F.K + lam * F.M) @ u
    n_boundary = mesh.graph.n if mesh.space == CONTINUOUS else 2 * mesh.graph.m
    return float(np.abs(r[n_boundary:]).max()) if mesh.ndof > n_boundary else 0.0


# --- full vertex-data map ----------------------------------------------------


class FullDirichletMap:
    """Analytic Dirichlet map for full vertex data (both condition blocks).

    Per edge the kernel element is a_e cosh(mu_e x) + b_e sinh(mu_e x) with
    mu_e = sqrt((lam + p_e)/c_e); the 2m coefficients solve the vertex
    condition system.  Requires per-edge constant coefficients.
    """

    def __init__(self, graph: MetricGraph, lam: float):
        if lam <= 0:
            raise NonpositiveShiftError(f"shift {lam} must be positive")
        self.graph = graph
        self.lam = lam
        m = graph.m
        self.mu = np.array([np.sqrt((lam + e.p) / e.c) for e in graph.edges])
        A = np.zeros((2 * m, 2 * m))

        def value_row(ei: int, end: int) -> np.ndarray:
            row = np.zeros(2 * m)
            mu, ell = self.mu[ei], graph.edges[ei].length
            if end == 0:
                row[2 * ei] = 1.0
            else:
                row[2 * ei] = np.cosh(mu * ell)
                row[2 * ei + 1] = np.sinh(mu * ell)
            return row

        def toward_flux_row(ei: int, end: int) -> np.ndarray:
            row = np.zeros(2 * m)
            e = graph.edges[ei]
            mu = self.mu[ei]
            if end == 0:
                row[2 * ei + 1] = -e.c * mu
            else:
                row[2 * ei] = e.c * mu * np.sinh(mu * e.length)
                row[2 * ei + 1] = e.c * mu * np.cosh(mu * e.length)
            return row

        r = 0
        for v, local in graph.continuity_rows():
            ends = graph.incident(v)
            A[r] = value_row(*ends[local]) - value_row(*ends[local + 1])
            r += 1
        for v in graph.vertices:
            A[r] = sum(toward_flux_row(ei, end) for ei, end in graph.incident(v))
            r += 1
        if not np.isfinite(A).all() or np.linalg.cond(A) > 1e14:
            raise SingularVertexSystemError("vertex condition system is numerically singular")
        self._lu = scipy.linalg.lu_factor(A)

    def coefficients(self, z: np.ndarray) -> np.ndarray:
        """Per-edge (a_e, b_e) coefficients for boundary datum z."""
        z = np.asarray(z, dtype=float)
        if z.shape != (2 * self.graph.m,):
            raise ValueError(f"datum must have length {2 * self.graph.m}")
        return scipy.linalg.lu_solve(self._lu, z)

    def evaluate(self, z: np.ndarray, ei: int, x: np.ndarray) -> np.ndarray:
        ab = self.coefficients(z)
        a, b = ab[2 * ei], ab[2 * ei + 1]
        return a * np.cosh(self.mu[ei] * x) + b * np.sinh(self.mu[ei] * x)

    def on_mesh(self, z: np.ndarray, mesh: Mesh) -> np.ndarray:
        """Broken dof vector of the kernel function with datum z."""
        if mesh.space != BROKEN:
            raise ValueError("full-map evaluation requires a broken mesh")
        ab = self.coefficients(z)
        u = np.zeros(mesh.ndof)
        for ei in range(self.graph.m):
            x = mesh.edge_coords(ei)
            a, b = ab[2 * ei], ab[2 * ei + 1]
            u[mesh.edge_dofs(ei)] = a * np.cosh(self.mu[ei] * x) + b * np.sinh(self.mu[ei] * x)
        return u


def dirichlet_map_full_fem(
    broken: Mesh, cont: Mesh, Fb: FormMatrices, lam: float, z: np.ndarray
) -> np.ndarray:
    """FEM counterpart of the analytic full map, on the broken mesh.

    Solves the square system: continuous-test weak equations with the
    Kirchhoff datum as vertex loads, plus the jump constraints J u = z_C.
    """
    if lam <= 0:
        raise NonpositiveShiftError(f"shift {lam} must be positive")
    from .fem import jump_and_flux_operators

    g = broken.graph
    ncont = g.n_continuity_rows()
    z = np.asarray(z, dtype=float)
    z_C, z_K = z[:ncont], z[ncont:]
    E = continuous_embedding(broken, cont)
    Ab = (Fb.K + lam * Fb.M).tocsr()
    J, _ = jump_and_flux_operators(broken)
    top = (E.T @ Ab).tocsr()
    rhs = np.concatenate([np.concatenate([z_K, np.zeros(cont.ndof - g.n)]), z_C])
    S = sp.vstack([top, J]).tocsc()
    u = spla.spsolve(S, rhs)
    return np.asarray(u)


def full_map_mode_coefficients(
    fmap: FullDirichletMap,
    broken: Mesh,
    cont: Mesh,
    Mb: sp.csr_matrix,
    basis: SpectralBasis,
) -> np.ndarray:
    """Matrix {<D e_j, f_k>_M}, shape (2m, n_modes), via analytic columns."""
    g = fmap.graph
    E = continuous_embedding(broken, cont)
    modes_b = E @ basis.vecs
    out = np.zeros((2 * g.m, basis.n_modes))
    for j in range(2 * g.m):
        z = np.zeros(2 * g.m)
        z[j] = 1.0
        col = fmap.on_mesh(z, broken)
        out[j] = col @ (Mb @ modes_b)
    return out


# --- surjectivity of the boundary operator ----------------------------------


def _block_matrices(g: MetricGraph) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """V0, V1 (continuity) and W0, W1 (Kirchhoff) edge-end incidence blocks."""
    m, n = g.m, g.n
    ncont = g.n_continuity_rows()
    V0 = np.zeros((ncont, m))
    V1 = np.zeros((ncont, m))
    for r, (v, local) in enumerate(g.continuity_rows()):
        ends = g.incident(v)
        for sign, (ei, end) in ((1.0, ends[local]), (-1.0, ends[local + 1])):
            (V0 if end == 0 else V1)[r, ei] += sign
    W0 = np.zeros((n, m))
    W1 = np.zeros((n, m))
    for i, v in enumerate(g.vertices):
        for ei, end in g.incident(v):
            (W0 if end == 0 else W1)[i, ei] += g.edges[ei].c
    return V0, V1, W0, W1


def apply_boundary_operator(g: MetricGraph, gamma: float, alpha: np.ndarray, beta: np.ndarray) -> np.ndarray:
    """B u for the two-sided exponential ansatz, outward derivative convention."""
    ell = np.array([e.length for e in g.edges])
    E = np.exp(-gamma * ell)
    u0 = alpha + beta * E
    ul = alpha * E + beta
    du0 = -gamma * alpha + gamma * beta * E
    dul = -gamma * alpha * E + gamma * beta
    out = np.zeros(2 * g.m)
    for r, (v, local) in enumerate(g.continuity_rows()):
        ends = g.incident(v)
        vals = []
        for ei, end in (ends[local], ends[local + 1]):
            vals.append(u0[ei] if end == 0 else ul[ei])
        out[r] = vals[0] - vals[1]
    ncont = g.n_continuity_rows()
    for i, v in enumerate(g.vertices):
        acc = 0.0
        for ei, end in g.incident(v):
            outward = du0[ei] if end == 0 else -dul[ei]
            acc += g.edges[ei].c * outward
        out[ncont + i] = acc
    return out


def surjectivity_construct(g: MetricGraph, z: np.ndarray, gamma0: float = 1.0) -> dict:
    """Constructive preimage of z under the boundary operator B.

    Doubles gamma from ``gamma0`` until the contraction norm
    ||N^-1 Ntilde F||_max drops below 1, then solves the 2m x 2m block system
    for the exponential-ansatz coefficients.  Returns the residual of B u - z
    evaluated by an independent application of B.
    """
    z = np.asarray(z, dtype=float)
    m = g.m
    if z.shape != (2 * m,):
        raise ValueError(f"datum must have length {2 * m}")
    V0, V1, W0, W1 = _block_matrices(g)
    ell = np.array([e.length for e in g.edges])
    gamma = float(gamma0)
    while True:
        E = np.diag(np.exp(-gamma * ell))
        N = np.block([[V0, V1], [-gamma * W0, -gamma * W1]])
        Nt = np.block([[V1, V0], [gamma * W1, gamma * W0]])
        Fg = np.block([[E, np.zeros_like(E)], [np.zeros_like(E), E]])
        contraction = float(np.abs(np.linalg.solve(N, Nt @ Fg)).max())
        if contraction < 1.0:
            break
        gamma *= 2.0
        if gamma > 2.0**40:
            raise GammaOverflowError("contraction norm did not drop below 1")
    ab = np.linalg.solve(N + Nt @ Fg, z)
    alpha, beta = ab[:m], ab[m:]
    residual = apply_boundary_operator(g, gamma, alpha, beta) - z
    return {
        "gamma": gamma,
        "alpha": alpha,
        "beta": beta,
        "contraction": contraction,
        "residual": residual,
        "residual_norm": float(np.abs(residual).max()),
    }
