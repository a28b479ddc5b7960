import os
import subprocess
import sys

import numpy as np
import pytest

from graphheat import _kernels


def _workload(seed=0, n_paths=5, n_steps=40, d=4):
    rng = np.random.default_rng(seed)
    W = rng.standard_normal((n_paths, n_steps, d))
    decay = np.exp(-np.linspace(0.0, 10.0, d) * 0.01)
    P = rng.standard_normal((d, d)) * 0.1
    z0 = rng.standard_normal(d)
    out_steps = np.array([0, 20, 40])
    return W, decay, P, z0, out_steps


def test_numpy_backend_matches_reference_recursion():
    W, decay, P, z0, out_steps = _workload()
    got = _kernels._ou_paths_numpy(W, decay, P, z0, out_steps)
    # straightforward per-path reference loop
    for p in range(W.shape[0]):
        z = z0.copy()
        rec = {0: z.copy()}
        for s in range(W.shape[1]):
            z = decay * z + P @ W[p, s]
            rec[s + 1] = z.copy()
        for j, step in enumerate(out_steps):
            assert np.allclose(got[p, j], rec[step], atol=1e-13)


@pytest.mark.skipif(not _kernels.NUMBA_ENABLED, reason="numba backend unavailable")
def test_backends_agree():
    W, decay, P, z0, out_steps = _workload(seed=3, n_paths=16, n_steps=200, d=8)
    a = _kernels._ou_paths_numpy(W, decay, P, z0, out_steps)
    b = _kernels._ou_paths_numba(W, decay, P, z0, out_steps)
    assert np.max(np.abs(a - b)) < 1e-12


def test_force_backend_dispatch():
    W, decay, P, z0, out_steps = _workload()
    a = _kernels.ou_paths(W, decay, P, z0, out_steps, force_backend="numpy")
    b = _kernels.ou_paths(W, decay, P, z0, out_steps)
    assert np.allclose(a, b, atol=1e-12)


def test_env_flag_disables_numba():
    code = (
        "from graphheat import _kernels; "
        "assert _kernels.backend() == 'numpy', _kernels.backend()"
    )
    env = dict(os.environ, GRAPHHEAT_NO_NUMBA="1")
    subprocess.run([sys.executable, "-c", code], check=True, env=env)


def test_records_initial_state():
    W, decay, P, z0, out_steps = _workload()
    got = _kernels.ou_paths(W, decay, P, z0, np.array([0]), force_backend="numpy")
    assert np.allclose(got[:, 0, :], z0)
