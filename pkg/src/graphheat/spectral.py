"""Generalized symmetric eigensolve and spectral diagnostics.

The dense symmetric-definite solve (Cholesky reduction of M, via LAPACK) is
deliberate: desk-scale dof counts make it reliable and deterministic.  Only
the lowest quarter of the discrete spectrum is trusted; piecewise-linear
elements pollute the upper part.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import SolverFailureError, TooManyModesError
from .fem import FormMatrices, Mesh, edge_end_fluxes, vertex_trace


@dataclass
class SpectralBasis:
    """Ordered eigenpairs of the graph operator with vertex and flux traces.

    ``lambdas`` are the operator eigenvalues (nonpositive, nonincreasing),
    i.e. the negatives of the generalized eigenvalues of (K, M).  ``vecs`` is
    (ndof, n_modes), M-orthonormal.  ``vertex_traces`` is (n_modes, n) and
    ``deriv_traces`` holds the outward fluxes c*f' per edge-end,
    shape (n_modes, m, 2).
    """

    mesh: Mesh
    lambdas: np.ndarray
    vecs: np.ndarray
    vertex_traces: np.ndarray
    deriv_traces: np.ndarray
    lambda_shift: float = 1.0

    @property
    def n_modes(self) -> int:
        return len(self.lambdas)

    def trace_norms_sq(self) -> np.ndarray:
        """Per-mode squared vertex trace norms ||Lf_k||^2."""
        return np.sum(self.vertex_traces**2, axis=1)


def eigensolve(F: FormMatrices, mesh: Mesh, n_modes: int, lambda_shift: float = 1.0) -> SpectralBasis:
    """Compute the ``n_modes`` algebraically largest operator eigenvalues.

    Enforces the reliable-mode cap n_modes <= ndof/4.  Sign convention: the
    first vertex-trace entry exceeding 1e-8 in modulus is made positive.
    """
    ndof = mesh.ndof
    if n_modes > ndof // 4:
        raise TooManyModesError(f"{n_modes} modes requested, cap is ndof/4 = {ndof // 4}")
    if n_modes < 1:
        raise ValueError("n_modes must be positive")
    try:
        nus, vecs = scipy.linalg.eigh(
            F.K.toarray(), F.M.toarray(), subset_by_index=[0, n_modes - 1]
        )
    except scipy.linalg.LinAlgError as exc:  # pragma: no cover
        raise SolverFailureError(str(exc)) from exc
    lambdas = -nus
    n = mesh.graph.n
    traces = np.zeros((n_modes, n))
    fluxes = np.zeros((n_modes, mesh.graph.m, 2))
    for k in range(n_modes):
        f = vecs[:, k]
        tr = vertex_trace(mesh, f)
        sign_source = np.concatenate([tr, f])
        nz = np.nonzero(np.abs(sign_source) > 1e-8)[0]
        if nz.size and sign_source[nz[0]] < 0:
            f = -f
            vecs[:, k] = f
            tr = -tr
        traces[k] = tr
        fluxes[k] = edge_end_fluxes(mesh, f, lambdas[k])
    return SpectralBasis(
        mesh=mesh,
        lambdas=lambdas,
        vecs=vecs,
        vertex_traces=traces,
        deriv_traces=fluxes,
        lambda_shift=lambda_shift,
    )


def asymptotics_check(basis: SpectralBasis, lam: float, k_range: tuple[int, int]) -> dict:
    """Empirical constants and slope for the quadratic eigenvalue growth.

    Returns l1 = min (lam-lambda_k)/k^2, l2 = max of the same, and the
    least-squares slope of log(lam-lambda_k) versus log k over ``k_range``
    (1-based, inclusive).  The slope fit uses the 0-based index, since the
    leading mode (constant, lambda = 0) sits at position 1 and the growth law
    counts oscillations, which start at zero.
    """
    k_lo, k_hi = k_range
    if not (1 <= k_lo <= k_hi <= basis.n_modes):
        raise ValueError(f"k_range {k_range} outside computed modes")
    ks = np.arange(k_lo, k_hi + 1)
    gaps = lam - basis.lambdas[ks - 1]
    ratios = gaps / ks.astype(float) ** 2
    slope = np.polyfit(np.log(ks - 1), np.log(gaps), 1)[0]
    return {
        "l1": float(ratios.min()),
        "l2": float(ratios.max()),
        "loglog_slope": float(slope),
    }


def multiplet_groups(lambdas: np.ndarray, rtol: float = 1e-6) -> list[np.ndarray]:
    """Group mode indices whose eigenvalues agree to relative tolerance."""
    groups: list[list[int]] = []
    for k, lk in enumerate(lambdas):
        if groups and abs(lk - lambdas[groups[-1][0]]) <= rtol * (1.0 + abs(lk)):
            groups[-1].append(k)
        else:
            groups.append([k])
    return [np.array(g) for g in groups]


def vertex_bound_estimate(basis: SpectralBasis) -> dict:
    """Boundedness diagnostic for the vertex traces of the eigenfunctions.

    Degenerate eigenvalues are aggregated: each multiplet contributes the sum
    of ||Lf||^2 over its eigenspace, which is basis-independent.  The growth
    ratio compares the max over the upper half of the multiplets against the
    lower half.
    """
    norms = basis.trace_norms_sq()
    groups = multiplet_groups(basis.lambdas)
    agg = np.array([norms[g].sum() for g in groups])
    half = len(agg) // 2
    lower = agg[:half].max() if half else agg.max()
    upper = agg[half:].max()
    return {
        "per_mode": norms,
        "multiplet_sums": agg,
        "sup": float(norms.max()),
        "growth_ratio": float(upper / lower),
    }


def export_spectrum_csv(basis: SpectralBasis, path: str) -> None:
    """One row per mode: k, lambda_k, ||Lf_k||^2, derivative-trace norm."""
    norms = basis.trace_norms_sq()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["k", "lambda_k", "vertex_trace_norm_sq", "deriv_trace_norm"])
        for k in range(basis.n_modes):
            dnorm = float(np.sqrt(np.sum(basis.deriv_traces[k] ** 2)))
            w.writerow([k + 1, repr(float(basis.lambdas[k])), repr(float(norms[k])), repr(dnorm)])
