"""Hot numeric kernels: exact OU mode recursions over Monte Carlo paths.

The numba backend is used when available; set ``GRAPHHEAT_NO_NUMBA=1`` to
force the pure-numpy path (identical results, the numpy version vectorizes
over paths instead of using prange).  ``benchmarks/bench_ou.py`` compares the
two.
"""

from __future__ import annotations

import os

import numpy as np

_FLAG = "GRAPHHEAT_NO_NUMBA"


def _numba_enabled() -> bool:
    if os.environ.get(_FLAG, "").strip() not in ("", "0"):
        return False
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


NUMBA_ENABLED = _numba_enabled()


def backend() -> str:
    return "numba" if NUMBA_ENABLED else "numpy"


def _ou_paths_numpy(W, decay, P, z0, out_steps):
    n_paths, n_steps, _ = W.shape
    n_modes = decay.shape[0]
    out = np.empty((n_paths, len(out_steps), n_modes))
    z = np.broadcast_to(z0, (n_paths, n_modes)).copy()
    pos = 0
    if pos < len(out_steps) and out_steps[pos] == 0:
        out[:, pos, :] = z
        pos += 1
    for s in range(n_steps):
        z = z * decay + W[:, s, :] @ P.T
        if pos < len(out_steps) and out_steps[pos] == s + 1:
            out[:, pos, :] = z
            pos += 1
    return out


if NUMBA_ENABLED:
    import numba

    @numba.njit(parallel=True, cache=True)
    def _ou_paths_numba(W, decay, P, z0, out_steps):  # pragma: no cover - compiled
        n_paths, n_steps, d = W.shape
        n_modes = decay.shape[0]
        n_out = out_steps.shape[0]
        out = np.empty((n_paths, n_out, n_modes))
        for p in numba.prange(n_paths):
            z = z0.copy()
            pos = 0
            if pos < n_out and out_steps[pos] == 0:
                for k in range(n_modes):
                    out[p, pos, k] = z[k]
                pos += 1
            for s in range(n_steps):
                for k in range(n_modes):
                    acc = 0.0
                    for j in range(d):
                        acc += P[k, j] * W[p, s, j]
                    z[k] = z[k] * decay[k] + acc
                if pos < n_out and out_steps[pos] == s + 1:
                    for k in range(n_modes):
                        out[p, pos, k] = z[k]
                    pos += 1
        return out


def ou_paths(
    W: np.ndarray,
    decay: np.ndarray,
    P: np.ndarray,
    z0: np.ndarray,
    out_steps: np.ndarray,
    force_backend: str | None = None,
) -> np.ndarray:
    """Run the exact OU recursion z <- decay*z + P @ w over all paths.

    ``W`` is (n_paths, n_steps, d) of standard normals, ``P`` the (n_modes, d)
    per-step increment map, ``out_steps`` sorted step indices (0 = initial
    state) at which states are recorded.  Returns (n_paths, n_out, n_modes).
    """
    W = np.ascontiguousarray(W, dtype=np.float64)
    decay = np.ascontiguousarray(decay, dtype=np.float64)
    P = np.ascontiguousarray(P, dtype=np.float64)
    z0 = np.ascontiguousarray(z0, dtype=np.float64)
    out_steps = np.ascontiguousarray(out_steps, dtype=np.int64)
    use = force_backend or backend()
    if use == "numba" and NUMBA_ENABLED:
        return _ou_paths_numba(W, decay, P, z0, out_steps)
    return _ou_paths_numpy(W, decay, P, z0, out_steps)
