"""Stochastic convolutions by exact per-mode OU recursions.

Each spectral coefficient of the convolution is an Ornstein-Uhlenbeck process
driven by a mode-specific linear functional of the vertex Brownian motion.
The exact transition is used (no time-discretization bias); all modes share
the same covariance-shaped increment per step so cross-mode correlations are
preserved.  Paths are reproducible: the normal stream for path ``i`` comes
from a counter-based Philox generator keyed by (master seed, path index).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._kernels import ou_paths
from .errors import ConfigError, TraceDivergenceError
from .spectral import SpectralBasis

_PSD_FLOOR = -1e-12


@dataclass
class NoiseConfig:
    """Covariance, seed and time grid of a simulation run."""

    cov: np.ndarray
    seed: int
    dt: float
    T: float
    cov_sqrt: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        cov = np.asarray(self.cov, dtype=float)
        if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
            raise ConfigError("covariance must be a square matrix")
        if np.abs(cov - cov.T).max() > 1e-12 * max(1.0, np.abs(cov).max()):
            raise ConfigError("covariance must be symmetric")
        w, V = np.linalg.eigh((cov + cov.T) / 2.0)
        if w.min() < _PSD_FLOOR * max(1.0, w.max()):
            raise ConfigError(f"covariance not PSD (min eigenvalue {w.min()})")
        w = np.clip(w, 0.0, None)
        self.cov = (V * w) @ V.T
        self.cov_sqrt = (V * np.sqrt(w)) @ V.T
        if self.dt <= 0:
            raise ConfigError("dt must be positive")
        if self.T < self.dt:
            raise ConfigError("horizon T must be at least dt")
        n = round(self.T / self.dt)
        if abs(n * self.dt - self.T) > 1e-9 * max(1.0, self.T):
            raise ConfigError("dt must divide T to rounding")

    @property
    def n_steps(self) -> int:
        return round(self.T / self.dt)

    @property
    def dim(self) -> int:
        return self.cov.shape[0]


@dataclass
class OUEnsemble:
    """Per-mode OU data: decay rates, drive vectors and scalar variances."""

    lambdas: np.ndarray  # (K,)
    drives: np.ndarray  # (K, d): mode k driven by drives[k] . dbeta

    def sigma2(self, cov: np.ndarray) -> np.ndarray:
        return np.einsum("kd,de,ke->k", self.drives, cov, self.drives)

    def step_variances(self, cov: np.ndarray, dt: float) -> np.ndarray:
        return _ou_variance(self.sigma2(cov), self.lambdas, dt)

    def increment_map(self, cfg: NoiseConfig) -> np.ndarray:
        """Matrix P with per-step increment xi = P @ w, w standard normal.

        Rows are rescaled so each mode's marginal step variance is the exact
        OU value while all modes share the same shaped increment.
        """
        G = self.drives @ cfg.cov_sqrt
        sigma2 = np.sum(G * G, axis=1)
        v = _ou_variance(sigma2, self.lambdas, cfg.dt)
        amp = np.zeros_like(sigma2)
        pos = sigma2 > 0
        amp[pos] = np.sqrt(v[pos] / sigma2[pos])
        return G * amp[:, None]


@dataclass
class PathSample:
    """Recorded mode coefficients: coeffs has shape (n_paths, n_times, K)."""

    times: np.ndarray
    coeffs: np.ndarray
    seed: int
    path_indices: np.ndarray


def _ou_variance(sigma2: np.ndarray, lambdas: np.ndarray, t: float) -> np.ndarray:
    """Var of int_0^t e^{lambda (t-s)} sigma dW, with the lambda=0 limit."""
    sigma2 = np.asarray(sigma2, dtype=float)
    lambdas = np.asarray(lambdas, dtype=float)
    out = np.empty_like(sigma2)
    zero = np.abs(lambdas) < 1e-14
    out[zero] = sigma2[zero] * t
    lz = lambdas[~zero]
    out[~zero] = sigma2[~zero] * -np.expm1(2.0 * lz * t) / (-2.0 * lz)
    return out


def build_drive_K(basis: SpectralBasis) -> OUEnsemble:
    """Kirchhoff-noise drives: mode k is driven by its vertex trace Lf_k.

    The auxiliary shift cancels against the Dirichlet-map adjoint, so the
    drive is shift-independent by construction.
    """
    return OUEnsemble(lambdas=basis.lambdas.copy(), drives=basis.vertex_traces.copy())


def build_drive_full(basis: SpectralBasis) -> OUEnsemble:
    """Full vertex-noise drives in boundary order (continuity, Kirchhoff).

    Continuity components are partial sums of the outward flux traces of f_k
    over the adjacency-ordered edge-ends at the vertex; Kirchhoff components
    are the vertex traces.  Both follow from the Lagrange identity applied to
    kernel functions with unit boundary data.
    """
    g = basis.mesh.graph
    K = basis.n_modes
    drives = np.zeros((K, 2 * g.m))
    for r, (v, local) in enumerate(g.continuity_rows()):
        ends = g.incident(v)
        acc = np.zeros(K)
        for ei, end in ends[: local + 1]:
            acc += basis.deriv_traces[:, ei, end]
        drives[:, r] = acc
    ncont = g.n_continuity_rows()
    drives[:, ncont:] = basis.vertex_traces
    return OUEnsemble(lambdas=basis.lambdas.copy(), drives=drives)


def path_normals(seed: int, path_index: int, n_steps: int, dim: int) -> np.ndarray:
    """Standard normals (n_steps, dim) from a Philox stream keyed by path."""
    key = np.array([np.uint64(seed & 0xFFFFFFFFFFFFFFFF), np.uint64(path_index)], dtype=np.uint64)
    gen = np.random.Generator(np.random.Philox(key=key))
    return gen.standard_normal((n_steps, dim))


def noise_increments(ens: OUEnsemble, cfg: NoiseConfig, path_index: int = 0) -> np.ndarray:
    """Per-step exact OU increments xi (n_steps, K) for one path."""
    P = ens.increment_map(cfg)
    W = path_normals(cfg.seed, path_index, cfg.n_steps, cfg.dim)
    return W @ P.T


def _resolve_out_steps(cfg: NoiseConfig, out_times) -> np.ndarray:
    if out_times is None:
        return np.arange(cfg.n_steps + 1, dtype=np.int64)
    steps = np.unique(np.round(np.asarray(out_times, dtype=float) / cfg.dt).astype(np.int64))
    if steps.min() < 0 or steps.max() > cfg.n_steps:
        raise ValueError("requested output times outside [0, T]")
    snapped = steps * cfg.dt
    req = np.unique(np.asarray(out_times, dtype=float))
    if np.abs(np.sort(snapped) - np.sort(req)).max() > 1e-9 * max(1.0, cfg.T):
        raise ValueError("output times must lie on the dt grid")
    return steps


def simulate_convolution(
    ens: OUEnsemble,
    cfg: NoiseConfig,
    n_paths: int = 1,
    out_times=None,
    path_offset: int = 0,
    chunk: int = 512,
) -> PathSample:
    """Exact OU simulation of the stochastic convolution coefficients."""
    if ens.drives.shape[1] != cfg.dim:
        raise ValueError(
            f"noise dimension {cfg.dim} does not match drive dimension {ens.drives.shape[1]}"
        )
    P = ens.increment_map(cfg)
    decay = np.exp(ens.lambdas * cfg.dt)
    out_steps = _resolve_out_steps(cfg, out_times)
    K = len(ens.lambdas)
    coeffs = np.empty((n_paths, len(out_steps), K))
    z0 = np.zeros(K)
    for start in range(0, n_paths, chunk):
        stop = min(start + chunk, n_paths)
        W = np.stack(
            [
                path_normals(cfg.seed, path_offset + p, cfg.n_steps, cfg.dim)
                for p in range(start, stop)
            ]
        )
        coeffs[start:stop] = ou_paths(W, decay, P, z0, out_steps)
    return PathSample(
        times=out_steps * cfg.dt,
        coeffs=coeffs,
        seed=cfg.seed,
        path_indices=np.arange(path_offset, path_offset + n_paths),
    )


def exact_covariance(ens: OUEnsemble, cov: np.ndarray, t: float) -> np.ndarray:
    """Per-mode Var z_k(t) of the convolution started at zero."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    return _ou_variance(ens.sigma2(np.asarray(cov, dtype=float)), ens.lambdas, t)


def simulate_whitenoise_forcing(
    basis: SpectralBasis, cfg: NoiseConfig, n_paths: int = 1, out_times=None
) -> PathSample:
    """Space-time white-noise forcing: independent unit-variance OU modes.

    Requires the Hilbert-Schmidt integral partial sums to look summable
    (tail increments decaying faster than 1/k); always the case here since
    the eigenvalues grow quadratically.
    """
    K = basis.n_modes
    lam = basis.lambdas
    terms = _ou_variance(np.ones(K), lam, cfg.T)
    tail = terms[K // 2 :]
    ks = np.arange(K // 2, K) + 1.0
    slope = np.polyfit(np.log(ks), np.log(np.maximum(tail, 1e-300)), 1)[0]
    if slope > -1.0:
        raise TraceDivergenceError(f"trace-class tail slope {slope:.3f} > -1")
    ens = OUEnsemble(lambdas=lam.copy(), drives=np.eye(K))
    wcfg = NoiseConfig(cov=np.eye(K), seed=cfg.seed, dt=cfg.dt, T=cfg.T)
    return simulate_convolution(ens, wcfg, n_paths=n_paths, out_times=out_times)
