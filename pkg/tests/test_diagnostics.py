import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from graphheat import diagnostics, fem, graph, sde, spectral
from graphheat.errors import InsufficientModesError


def test_frac_norm_alpha_zero_is_mass_norm(interval_fine, rng):
    _, _, Fm, basis = interval_fine
    c = rng.standard_normal(basis.n_modes)
    spec = diagnostics.FracNormSpec(lam=1.0, alpha=0.0)
    u = basis.vecs @ c
    assert diagnostics.frac_norm(c, spec, basis) == pytest.approx(
        fem.mass_norm(Fm.M, u), rel=1e-10
    )


def test_frac_norm_single_mode_oracle(interval_fine):
    _, _, _, basis = interval_fine
    c = np.zeros(basis.n_modes)
    c[1] = 1.0
    spec = diagnostics.FracNormSpec(lam=1.0, alpha=0.5)
    got = diagnostics.frac_norm(c, spec, basis)
    assert got == pytest.approx(np.sqrt(1 + np.pi**2), abs=2e-3)
    assert got == pytest.approx(3.2969, abs=3e-3)


@settings(max_examples=25, deadline=None)
@given(st.floats(min_value=0.1, max_value=10.0))
def test_frac_norm_homogeneity(scale):
    g = graph.interval()
    mesh = fem.build_mesh(g, 1 / 64)
    basis = spectral.eigensolve(fem.assemble_form(mesh), mesh, 8)
    c = np.linspace(1.0, 2.0, 8)
    spec = diagnostics.FracNormSpec(lam=2.0, alpha=0.3)
    assert diagnostics.frac_norm(scale * c, spec, basis) == pytest.approx(
        scale * diagnostics.frac_norm(c, spec, basis), rel=1e-12
    )


def test_frac_norm_monotone_in_alpha(interval_fine, rng):
    _, _, _, basis = interval_fine
    c = rng.standard_normal(basis.n_modes)
    vals = [
        diagnostics.frac_norm(c, diagnostics.FracNormSpec(lam=1.0, alpha=a), basis)
        for a in (-0.5, 0.0, 0.25, 0.5)
    ]
    assert all(a <= b + 1e-12 for a, b in zip(vals, vals[1:]))


def test_series_K_verdicts(interval_many_modes):
    _, _, _, basis = interval_many_modes
    cov = np.eye(2)
    assert diagnostics.regularity_series_K(basis, cov, 0.2, t=1.0).verdict == "converging"
    assert diagnostics.regularity_series_K(basis, cov, 0.35, t=1.0).verdict == "diverging"
    assert diagnostics.regularity_series_K(basis, cov, 0.25, t=1.0).verdict == "inconclusive"


def test_series_K_requires_modes(interval_fine):
    _, _, _, basis = interval_fine  # only 40 modes
    with pytest.raises(InsufficientModesError):
        diagnostics.regularity_series_K(basis, np.eye(2), 0.2, t=1.0)


def test_series_full_verdicts(path2_basis):
    g, _, _, basis = path2_basis
    ncr = g.n_continuity_rows()
    cov = np.zeros((2 * g.m, 2 * g.m))
    cov[:ncr, :ncr] = np.eye(ncr)
    assert diagnostics.regularity_series_full(basis, cov, -0.3, t=1.0).verdict == "converging"
    assert diagnostics.regularity_series_full(basis, cov, -0.2, t=1.0).verdict == "diverging"


def test_series_full_kirchhoff_block_reduces_to_K(path2_basis):
    g, _, _, basis = path2_basis
    cov = np.zeros((2 * g.m, 2 * g.m))
    ncr = g.n_continuity_rows()
    cov[ncr:, ncr:] = np.eye(g.n)
    for a in (0.2, 0.35):
        full = diagnostics.regularity_series_full(basis, cov, a, t=1.0)
        kirk = diagnostics.regularity_series_K(basis, np.eye(g.n), a, t=1.0)
        assert full.verdict == kirk.verdict
        assert np.max(np.abs(full.terms - kirk.terms)) < 1e-10


def test_trace_class_interval(interval_many_modes):
    _, _, _, basis = interval_many_modes
    v = diagnostics.trace_class_check(basis, 1.0)
    assert v.verdict == "converging"
    assert v.slope <= -1.8
    exact_total = 1.0 + sum(1 / (2 * (k - 1) ** 2 * np.pi**2) for k in range(2, 201))
    assert v.partial_sums[-1] == pytest.approx(exact_total, rel=1e-3)
    assert diagnostics.trace_class_check(basis, 0.0).partial_sums[-1] == 0.0


def test_trace_class_scaling_keeps_slope():
    slopes = []
    for length in (1.0, 2.0):
        g = graph.interval(length=length)
        mesh = fem.build_mesh(g, length / 1024)
        basis = spectral.eigensolve(fem.assemble_form(mesh), mesh, 120)
        slopes.append(diagnostics.trace_class_check(basis, 1.0).slope)
    assert abs(slopes[0] - slopes[1]) < 0.1


def test_verdict_stable_under_refinement():
    g = graph.interval()
    verdicts = []
    for h, n in ((1 / 1024, 100), (1 / 2048, 200)):
        mesh = fem.build_mesh(g, h)
        basis = spectral.eigensolve(fem.assemble_form(mesh), mesh, n)
        verdicts.append(diagnostics.regularity_series_K(basis, np.eye(2), 0.35, t=1.0).verdict)
    assert verdicts[0] == verdicts[1] == "diverging"


def test_closed_form_vs_monte_carlo(interval_many_modes):
    _, _, _, basis = interval_many_modes
    ens = sde.build_drive_K(basis)
    cfg = sde.NoiseConfig(cov=np.eye(2), seed=77, dt=0.01, T=1.0)
    out = sde.simulate_convolution(ens, cfg, n_paths=600, out_times=[0.5, 1.0])
    for a in (-0.2, 0.0, 0.1):
        gaps = 1.0 - basis.lambdas
        w = gaps ** (2 * a)
        for j, t in enumerate([0.5, 1.0]):
            z2 = out.coeffs[:, j, :] ** 2
            emp_vals = z2 @ w
            emp = emp_vals.mean()
            se = emp_vals.std() / np.sqrt(len(emp_vals))
            exact = float(np.sum(w * sde.exact_covariance(ens, np.eye(2), t)))
            assert abs(emp - exact) < 3 * se


def test_empirical_alpha_fit_interval(interval_many_modes):
    _, _, _, basis = interval_many_modes
    ens = sde.build_drive_K(basis)
    cfg = sde.NoiseConfig(cov=np.eye(2), seed=42, dt=0.002, T=1.0)
    fit = diagnostics.empirical_alpha_fit(ens, cfg, [0.1, 0.2, 0.3, 0.4], t=1.0, n_paths=1000)
    assert fit["verdict"] == "fit"
    assert 0.15 <= fit["threshold"] <= 0.35


def test_empirical_alpha_fit_no_signal(interval_many_modes):
    _, _, _, basis = interval_many_modes
    ens = sde.OUEnsemble(basis.lambdas, np.zeros_like(sde.build_drive_K(basis).drives))
    cfg = sde.NoiseConfig(cov=np.eye(2), seed=1, dt=0.01, T=1.0)
    fit = diagnostics.empirical_alpha_fit(ens, cfg, [0.1, 0.2], t=1.0, n_paths=10)
    assert fit["verdict"] == "NoSignal"


def test_series_report_fields(interval_many_modes):
    _, _, _, basis = interval_many_modes
    rep = diagnostics.regularity_series_K(basis, np.eye(2), 0.2, t=1.0).report()
    assert set(rep) >= {"slope", "slope_ci", "verdict", "total", "n_terms"}
