"""Acceptance gate: the estimation tables, the chi-square calibration, the
power/selection rates, the exact identities, and the pipeline invariants.

The Monte Carlo fixtures are session-scoped and shared across criteria:
four single-regime cells (25 replications each, pooled to 100 null test
statistics) and one two-regime cell (30 replications). Each criterion
prints one PASS/FAIL line; run with `pytest -s tests/test_acceptance.py`
to see them.
"""

import json
import os
import warnings

import numpy as np
import pytest
from scipy.integrate import quad

import mfbm.cli as cli
from mfbm import (
    ModelSpec,
    PathSampler,
    build_grid,
    fgls_estimate,
    fit_fixed_k,
    minimize_q,
    sigma_matrix,
    spectral_weight,
    spectrum,
    theoretical_variance,
    variogram,
)
from mfbm.inference import chi2_cdf
from mfbm.montecarlo import ReplicationStudy, ks_statistic, run_study
from mfbm.wavelet import k_const

from conftest import random_model
from test_changepoint import exhaustive_min

WORKERS = min(2, os.cpu_count() or 1)

FBM_HS = (0.2, 0.4, 0.6, 0.8)
FBM_REPS = 25
M1_REPS = 30

M1_MODEL = dict(hurst=(0.2, 0.7), sigma=(np.sqrt(10.0), np.sqrt(5.0)), omega=(5.0,))


def _report(criterion, ok, detail):
    print(f"ACCEPTANCE {criterion}: {'PASS' if ok else 'FAIL'} ({detail})")
    assert ok, f"criterion {criterion}: {detail}"


@pytest.fixture(scope="session")
def fbm_cells():
    out = {}
    for i, h in enumerate(FBM_HS):
        study = ReplicationStudy(
            model=ModelSpec.fbm(h, 1.0), n=6000, delta=0.03,
            f_min=0.05, f_max=20.0, m=5, seed=11 + i, replications=FBM_REPS,
        )
        out[h] = run_study(study, workers=WORKERS)
    return out


@pytest.fixture(scope="session")
def m1_cell():
    study = ReplicationStudy(
        model=ModelSpec(**M1_MODEL), n=6000, delta=0.03,
        f_min=0.8, f_max=16.0, m=5, seed=21, replications=M1_REPS,
    )
    return run_study(study, workers=WORKERS)


def test_criterion_1_fbm_estimation_table(fbm_cells):
    """H in {0.2, 0.4, 0.6, 0.8}: |mean(H_hat) - H| <= 0.08 and sd <= 0.12."""
    lines = []
    ok = True
    for h, result in fbm_cells.items():
        stats = result.stats()
        assert stats["failures"] == 0
        mean = stats["H_fgls_mean"][0]
        sd = stats["H_fgls_sd"][0]
        good = abs(mean - h) <= 0.08 and sd <= 0.12
        ok = ok and good
        lines.append(f"H={h}: mean {mean:.3f} sd {sd:.3f}")
    _report("1 single-regime table", ok, "; ".join(lines))


def test_criterion_2_m1_estimation_table(m1_cell):
    """Two-regime cell: mean H0 within 0.15 of 0.2, mean H1 within 0.10 of 0.7,
    mean omega_1 in [4.0, 6.5]."""
    stats = m1_cell.stats()
    assert stats["failures"] == 0
    h0, h1 = stats["H_fgls_mean"]
    om = stats["omega_mean"][0]
    ok = abs(h0 - 0.2) <= 0.15 and abs(h1 - 0.7) <= 0.10 and 4.0 <= om <= 6.5
    _report(
        "2 two-regime table", ok,
        f"H0 {h0:.3f} (sd {stats['H_fgls_sd'][0]:.3f}), "
        f"H1 {h1:.3f} (sd {stats['H_fgls_sd'][1]:.3f}), omega {om:.2f} (sd {stats['omega_sd'][0]:.2f})",
    )


def test_criterion_3_null_calibration(fbm_cells, m1_cell):
    """Pooled T_0 over >= 100 single-regime replications passes KS against
    chi2(3) at the 1% level; the 30 two-regime T_1 pass against chi2(6)."""
    t0 = np.concatenate([fbm_cells[h].stats()["T_samples"] for h in FBM_HS])
    assert t0.size >= 100
    d0, p0 = ks_statistic(t0, lambda x: chi2_cdf(x, 3))
    t1 = np.asarray(m1_cell.stats()["T_samples"])
    assert t1.size >= 30
    d1, p1 = ks_statistic(t1, lambda x: chi2_cdf(x, 6))
    ok = p0 >= 0.01 and p1 >= 0.01
    _report(
        "3 null calibration", ok,
        f"T0 n={t0.size} D={d0:.3f} p={p0:.3f}; T1 n={t1.size} D={d1:.3f} p={p1:.3f}",
    )


def test_criterion_4_power_and_selection(fbm_cells, m1_cell):
    """Two-regime data: reject K=0 in >= 90% and accept K=1 in >= 70%;
    single-regime data: accept K=0 in >= 85% at the 5% level."""
    m1 = m1_cell.stats()
    reject0 = m1["reject_k0_rate"]
    accept1 = m1["accept_ktrue_rate"]
    fbm_accept = np.mean(
        [1.0 - fbm_cells[h].stats()["reject_k0_rate"] for h in FBM_HS]
    )
    ok = reject0 >= 0.90 and accept1 >= 0.70 and fbm_accept >= 0.85
    _report(
        "4 power/selection", ok,
        f"two-regime reject K=0 {reject0:.0%}, accept K=1 {accept1:.0%}; "
        f"single-regime accept K=0 {fbm_accept:.0%}",
    )


def test_criterion_5_exact_identities(bump):
    """Closed-form wavelet variance, variogram quadrature equivalence, exact
    segmentation optimality, banded zeros, and GLS = OLS under identity."""
    rng = np.random.default_rng(505)

    # theoretical variance vs a^(2H+1) sigma^2 K_H inside one regime, 10 scales
    model = ModelSpec.fbm(0.35, 1.7)
    kh = k_const(bump, 0.35)
    worst_tv = 0.0
    for a in np.geomspace(0.05, 50.0, 10):
        got = theoretical_variance(model, bump, a)
        want = a ** (2 * 0.35 + 1) * 1.7**2 * kh
        worst_tv = max(worst_tv, abs(got - want) / want)
    ok_tv = worst_tv <= 1e-6

    # variogram vs direct spectral quadrature on 20 random models
    worst_v = 0.0
    for _ in range(20):
        model = random_model(rng)
        delta = float(rng.uniform(0.05, 20.0))
        got = variogram(model, delta)
        want = _variogram_by_spectral_quadrature(model, delta)
        worst_v = max(worst_v, abs(got - want) / want)
    ok_v = worst_v <= 1e-6

    # dynamic programming equals exhaustive search, a_n <= 60, k <= 2
    worst_dp = 0.0
    ok_dp = True
    for trial in range(20):
        a_n = int(rng.integers(30, 61))
        grid = build_grid(
            n=a_n * 100, delta=0.01, f_min=float(rng.uniform(0.05, 0.2)), f_max=5.0,
            wavelet=bump,
        )
        y = rng.normal(size=grid.a_n + 1)
        for k in range(3):
            seg = minimize_q(y, grid, k)
            ref_cost, ref_t = exhaustive_min(y, grid, k)
            if ref_cost is None:
                continue
            ok_dp = ok_dp and seg.t == ref_t and abs(seg.cost - ref_cost) <= 1e-9 * max(ref_cost, 1.0)
            worst_dp = max(worst_dp, abs(seg.cost - ref_cost))

    # banded zeros and GLS = OLS
    s = sigma_matrix(0.5, np.array([1.0, 2.0, 4.0]), bump, 0.1)
    ok_zero = s[0, 1] == 0.0 and s[0, 2] == 0.0 and s[1, 2] == 0.0 and np.all(np.diag(s) > 0)
    grid = build_grid(6000, 0.03, 0.05, 20.0, bump)
    y = rng.normal(size=grid.a_n + 1)
    pts = np.array([30, 60, 90, 120, 150])
    gls = fgls_estimate(y, grid, pts, np.eye(5), bump)
    x = grid.log_f[pts]
    slope, icept = np.polyfit(x, y[pts], 1)
    ok_gls = abs(gls.slope - slope) <= 1e-12 * max(1.0, abs(slope)) and abs(
        gls.intercept - icept
    ) <= 1e-12 * max(1.0, abs(icept))

    ok = ok_tv and ok_v and ok_dp and ok_zero and ok_gls
    _report(
        "5 exact identities", ok,
        f"variance id {worst_tv:.1e}; variogram id {worst_v:.1e}; "
        f"dp==exhaustive {ok_dp} (worst {worst_dp:.1e}); banded zeros {ok_zero}; gls==ols {ok_gls}",
    )


def _variogram_by_spectral_quadrature(model, delta):
    """Independent route: integrate 2 (1 - cos(delta xi)) * weight(xi) over the line."""
    edges = model.band_edges
    total = 0.0
    for j in range(model.k + 1):
        lo = edges[j]
        hi = edges[j + 1]
        if np.isinf(hi):
            split = max(lo, 50.0 / delta)
            part = quad(
                lambda x: 2.0 * (1.0 - np.cos(delta * x)) * spectral_weight(model, x),
                lo, split, limit=500, epsabs=0.0, epsrel=1e-10,
            )[0]
            h = model.hurst[j]
            s2 = model.sigma[j] ** 2
            tail_plain = split ** (-2.0 * h) / (2.0 * h)
            tail_cos = quad(
                lambda x: x ** (-2.0 * h - 1.0), split, np.inf,
                weight="cos", wvar=delta,
            )[0]
            total += 2.0 * part + 4.0 * s2 * (tail_plain - tail_cos)
        else:
            total += 2.0 * 2.0 * quad(
                lambda x: (1.0 - np.cos(delta * x)) * spectral_weight(model, x),
                lo, hi, limit=500, epsabs=0.0, epsrel=1e-10, full_output=1,
            )[0]
    return total


def test_criterion_6_pipeline_invariants(bump, tmp_path):
    """Path scaling shifts the spectrum by exactly 2 log c and leaves the fit
    invariant; identical invocations produce bit-identical reports."""
    sampler = PathSampler(ModelSpec.fbm(0.55, 1.2), 3000, 0.03)
    path = sampler.draw(seed=77, stream=0)
    c = 7.3
    scaled = type(path)(delta=path.delta, values=c * path.values)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        grid = build_grid(path.n, path.delta, 0.1, 16.0, bump)
        sp1 = spectrum(path, bump, grid)
        sp2 = spectrum(scaled, bump, grid)
        shift = sp2.y - sp1.y - 2.0 * np.log(c)
        ok_shift = np.max(np.abs(shift)) <= 1e-9
        f1 = fit_fixed_k(sp1, bump, 0)
        f2 = fit_fixed_k(sp2, bump, 0)
    ok_t = f1.segmentation.t == f2.segmentation.t
    ok_h = abs(f1.segments[0].hurst - f2.segments[0].hurst) <= 1e-9
    ok_stat = abs(f1.t_stat - f2.t_stat) <= 1e-9 * max(f1.t_stat, 1.0)
    ok_s2 = abs(f2.segments[0].sigma2 / f1.segments[0].sigma2 - c**2) <= 1e-9 * c**2

    # end-to-end determinism through the CLI: identical bytes on a re-run
    out = tmp_path / "path.csv"
    argv = ["simulate", "--hurst", "0.55", "--sigma2", "1.44", "--n", "1500",
            "--delta", "0.03", "--seed", "9", "--out", str(out)]
    assert cli.main(argv) == 0
    first = out.read_bytes()
    assert cli.main(argv) == 0
    ok_sim = out.read_bytes() == first

    rep = tmp_path / "fit.json"
    argv = ["fit", "--input", str(out), "--f-min", "0.4", "--f-max", "16",
            "--out", str(rep)]
    rc1 = cli.main(argv)
    blob1 = rep.read_bytes()
    rc2 = cli.main(argv)
    ok_fit = rc1 == rc2 and rep.read_bytes() == blob1 and json.loads(blob1)["K"] >= 0

    ok = ok_shift and ok_t and ok_h and ok_stat and ok_s2 and ok_sim and ok_fit
    _report(
        "6 pipeline invariants", ok,
        f"Y-shift residual {np.max(np.abs(shift)):.1e}; breakpoints equal {ok_t}; "
        f"H drift {abs(f1.segments[0].hurst - f2.segments[0].hurst):.1e}; "
        f"T drift {abs(f1.t_stat - f2.t_stat):.1e}; sigma2 ratio ok {ok_s2}; "
        f"bit-identical simulate {ok_sim}, fit {ok_fit}",
    )
