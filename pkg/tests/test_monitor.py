"""Diagnostics records, bound constants, identity checks, and verdicts."""

import math

import numpy as np
import pytest

from channelflow.errors import CoverageError
from channelflow.fields import Parity, ScalarField
from channelflow.monitor import (
    DiagnosticsRecord,
    check_baroclinic_residual,
    check_identity_avg_nonlinear,
    compute_bounds,
    energy_residual,
    k2,
    k11,
    k12,
    kr,
    record,
    run_norms,
    verdict,
)
from channelflow.norms import TimeSeries, time_lalpha
from channelflow.solver import (
    ForcingRecipe,
    ForcingSpec,
    InitRecipe,
    SolverConfig,
    VelocityState,
    exact_shear,
    exact_taylor_green,
    pressure_solve,
    random_divergence_free_state,
    run,
)


def _cfg(grid, **kw):
    defaults = dict(nu=1.0, dt=1e-3, t_end=0.1, grid=grid, init=InitRecipe("shear"))
    defaults.update(kw)
    return SolverConfig(**defaults)


def _norms(v0_sq=0.0, w0_sq=0.0, v0_h1=0.0, w0_h1=0.0, f_sq=0.0, g_sq=0.0, f_lr=0.0):
    from channelflow.monitor import RunNorms

    return RunNorms(v0_sq, w0_sq, v0_h1, w0_h1, f_sq, g_sq, f_lr)


# ---------------------------------------------------------------------------
# record
# ---------------------------------------------------------------------------

def test_record_zero_state(grid):
    zero = VelocityState(ScalarField.zeros(grid, Parity.EVEN_Z),
                         ScalarField.zeros(grid, Parity.EVEN_Z),
                         ScalarField.zeros(grid, Parity.ODD_Z), 0.0)
    rec = record(zero, ScalarField.zeros(grid, Parity.EVEN_Z), _cfg(grid))
    assert rec.energy == 0.0 and rec.pz_norm == 0.0 and rec.vtilde_r == 0.0
    assert rec.criterion_accum == 0.0 and rec.h1_v == 0.0


def test_record_shear_closed_forms(grid_acc):
    nu, t = 1.0, 0.07
    cfg = _cfg(grid_acc, nu=nu)
    state = exact_shear(grid_acc, t, nu)
    p = pressure_solve(state, ForcingSpec.zero(grid_acc))
    rec = record(state, p, cfg)
    assert rec.energy == pytest.approx(0.5 * math.exp(-2 * nu * np.pi**2 * t), rel=1e-12)
    assert rec.pz_norm == 0.0
    # vbar = 0 for the shear profile, so vtilde_r = ||v||_r
    assert rec.vtilde_r > 0


def test_record_taylor_green_pz_zero(grid_acc):
    cfg = _cfg(grid_acc)
    state = exact_taylor_green(grid_acc, 0.02, 1.0)
    p = pressure_solve(state, ForcingSpec.zero(grid_acc))
    rec = record(state, p, cfg)
    assert rec.pz_norm == 0.0


def test_criterion_accumulates_by_trapezoid(grid_acc):
    cfg = _cfg(grid_acc, init=InitRecipe("zero"),
               forcing=ForcingRecipe("random", amplitude=2.0, seed=7), t_end=0.05)
    res = run(cfg)
    accum = [r.criterion_accum for r in res.records]
    assert all(a <= b + 1e-18 for a, b in zip(accum, accum[1:]))
    series = TimeSeries(np.array([r.t for r in res.records]),
                        np.array([r.pz_norm for r in res.records]))
    assert accum[-1] == pytest.approx(time_lalpha(series, cfg.alpha) ** cfg.alpha,
                                      rel=1e-10, abs=1e-300)


# ---------------------------------------------------------------------------
# bound constants
# ---------------------------------------------------------------------------

def test_k11_zero_forcing(grid):
    cfg = _cfg(grid)
    assert k11(cfg, _norms(v0_sq=1.0)) == 1.0


def test_k11_formula_arithmetic(grid):
    cfg = _cfg(grid, nu=1.0, lambda1=np.pi**2)
    assert k11(cfg, _norms(f_sq=np.pi**4)) == pytest.approx(1.0, rel=1e-14)


def test_k12_at_zero(grid):
    cfg = _cfg(grid)
    assert k12(0.0, cfg, _norms(v0_sq=0.3, w0_sq=0.2)) == pytest.approx(0.5)


def _records_from(times, pz):
    return [DiagnosticsRecord(t=t, energy=0.0, gradh_v=0.0, gradh_w=0.0, vz=0.0,
                              wz=0.0, pz_norm=p, vtilde_r=0.0, h1_v=0.0, h1_w=0.0,
                              criterion_accum=0.0) for t, p in zip(times, pz)]


def test_kr_zero_horizon_zero_init(grid):
    cfg = _cfg(grid)
    recs = _records_from([0.0, 0.1], [0.0, 0.0])
    assert kr(0.0, cfg, recs, _norms()) == 1.0


def test_kr_zero_horizon_nonzero_init_as_printed(grid):
    """K12(0) > 0 for nonzero data, so the T=0 exponent does not vanish."""
    cfg = _cfg(grid)
    norms = _norms(v0_sq=1.0, v0_h1=2.0)
    recs = _records_from([0.0, 0.1], [0.0, 0.0])
    K11 = k11(cfg, norms)
    expo = K11 * 1.0 + K11 ** (2.0 / (cfg.r - 2.0)) * 1.0
    assert kr(0.0, cfg, recs, norms) == pytest.approx(math.exp(expo) * (1 + 2.0**6), rel=1e-12)


def test_kr_unforced_closed_form(grid):
    """Zero forcing and zero pressure series: K_R = e^{C T}(1 + ||v0||_H1^6)."""
    cfg = _cfg(grid)
    norms = _norms(v0_h1=0.5)
    recs = _records_from([0.0, 0.05, 0.1], [0.0, 0.0, 0.0])
    expected = math.exp(1.0 * 0.1) * (1.0 + 0.5**6)
    assert kr(0.1, cfg, recs, norms) == pytest.approx(expected, rel=1e-12)


def test_kr_monotone_in_horizon(grid):
    cfg = _cfg(grid)
    norms = _norms(v0_sq=0.1, v0_h1=0.3, f_sq=0.2, f_lr=0.4)
    recs = _records_from(np.linspace(0, 0.1, 11), np.linspace(0.0, 0.5, 11))
    vals = [kr(T, cfg, recs, norms) for T in (0.0, 0.03, 0.06, 0.1)]
    assert all(a <= b for a, b in zip(vals, vals[1:]))


def test_k2_zero_horizon(grid):
    cfg = _cfg(grid)
    recs = _records_from([0.0, 0.1], [0.0, 0.0])
    norms = _norms(v0_h1=0.4, w0_h1=0.1, f_sq=0.25, g_sq=0.05)
    assert k2(0.0, cfg, recs, norms) == pytest.approx(0.4 + 0.1 + 0.25 + 0.05, rel=1e-12)


def test_k2_zero_data(grid):
    cfg = _cfg(grid)
    recs = _records_from([0.0, 0.1], [0.0, 0.0])
    assert k2(0.1, cfg, recs, _norms()) == 0.0


def test_k2_monotone(grid):
    cfg = _cfg(grid)
    norms = _norms(v0_sq=0.01, v0_h1=0.1, f_sq=0.01, f_lr=0.1)
    recs = _records_from(np.linspace(0, 0.1, 11), np.linspace(0.0, 0.2, 11))
    vals = [k2(T, cfg, recs, norms) for T in (0.0, 0.05, 0.1)]
    assert all(a <= b for a, b in zip(vals, vals[1:]))


def test_kr_coverage_error(grid):
    cfg = _cfg(grid)
    recs = _records_from([0.0, 0.05], [0.0, 0.0])
    with pytest.raises(CoverageError):
        kr(0.2, cfg, recs, _norms())


# ---------------------------------------------------------------------------
# energy residual
# ---------------------------------------------------------------------------

def test_energy_residual_zero_run(grid):
    cfg = _cfg(grid, init=InitRecipe("zero"), t_end=0.02)
    res = run(cfg)
    _, residuals = energy_residual(res.records, cfg)
    assert np.max(np.abs(residuals)) == 0.0


def test_energy_residual_second_order(grid_acc):
    maxres = []
    for dt in (1e-3, 5e-4):
        cfg = _cfg(grid_acc, dt=dt)
        res = run(cfg)
        _, residuals = energy_residual(res.records, cfg)
        maxres.append(np.max(np.abs(residuals)))
    assert maxres[0] / maxres[1] == pytest.approx(4.0, abs=0.8)


def test_energy_residual_steady_forced_state(grid_acc):
    """Forcing balancing the shear profile gives an exactly steady run."""
    cfg = _cfg(grid_acc, forcing=ForcingRecipe("steady_shear", amplitude=1.0), t_end=0.05)
    res = run(cfg)
    energies = [r.energy for r in res.records]
    assert max(energies) - min(energies) < 1e-13
    _, residuals = energy_residual(res.records, cfg)
    assert np.max(np.abs(residuals)) < 1e-11


# ---------------------------------------------------------------------------
# identity checks
# ---------------------------------------------------------------------------

def test_identity_z_independent_state(grid_acc):
    assert check_identity_avg_nonlinear(exact_taylor_green(grid_acc, 0.0, 1.0)) < 1e-12


def test_identity_shear_state(grid_acc):
    assert check_identity_avg_nonlinear(exact_shear(grid_acc, 0.0, 1.0)) < 1e-12


def test_identity_random_states(grid):
    for seed in range(5):
        state = random_divergence_free_state(grid, seed=seed)
        assert check_identity_avg_nonlinear(state) <= 1e-9


def test_baroclinic_residual_zero_state(grid):
    zero = VelocityState(ScalarField.zeros(grid, Parity.EVEN_Z),
                         ScalarField.zeros(grid, Parity.EVEN_Z),
                         ScalarField.zeros(grid, Parity.ODD_Z), 0.0)
    later = VelocityState(zero.v1, zero.v2, zero.w, 0.01)
    latest = VelocityState(zero.v1, zero.v2, zero.w, 0.02)
    res = check_baroclinic_residual(zero, later, latest,
                                    ScalarField.zeros(grid, Parity.EVEN_Z),
                                    ForcingSpec.zero(grid), nu=1.0)
    assert res == 0.0


def _shear_baroclinic_residual(grid, dt):
    cfg = _cfg(grid, dt=dt, t_end=0.1, diag_every=10)
    res = run(cfg, keep_states=True)
    snaps = res.snapshots
    i = len(snaps) // 2
    p = pressure_solve(snaps[i], res.forcing)
    return check_baroclinic_residual(snaps[i - 1], snaps[i], snaps[i + 1], p,
                                     res.forcing, cfg.nu)


def test_baroclinic_residual_second_order(grid_acc):
    r1 = _shear_baroclinic_residual(grid_acc, 1e-3)
    r2 = _shear_baroclinic_residual(grid_acc, 5e-4)
    assert r1 / r2 == pytest.approx(4.0, abs=0.5)


# ---------------------------------------------------------------------------
# verdict
# ---------------------------------------------------------------------------

def test_verdict_zero_run(grid):
    cfg = _cfg(grid, init=InitRecipe("zero"), t_end=0.02)
    res = run(cfg)
    norms = run_norms(res.initial_state, res.forcing, cfg.r)
    bounds = compute_bounds(0.02, cfg, res.records, norms)
    rep = verdict(res.records, bounds, cfg)
    assert rep.criterion_integral == 0.0 and rep.criterion_finite
    assert rep.energy_bound_held and rep.vtilde_bound_held and rep.h1_bound_held
    assert not rep.blowup


def test_verdict_shear_energy_equality_at_start(grid_acc):
    cfg = _cfg(grid_acc)
    res = run(cfg)
    norms = run_norms(res.initial_state, res.forcing, cfg.r)
    bounds = compute_bounds(0.1, cfg, res.records, norms)
    rep = verdict(res.records, bounds, cfg)
    assert rep.criterion_integral == 0.0
    assert rep.energy_bound_held
    assert rep.energy_max_ratio == pytest.approx(1.0, rel=1e-12)  # equality at t=0


def test_verdict_blowup_flag(grid):
    cfg = _cfg(grid, nu=1e-3, t_end=0.5, init=InitRecipe("zero"),
               forcing=ForcingRecipe("random", amplitude=1e5, seed=1))
    res = run(cfg)
    assert res.blowup
    norms = run_norms(res.initial_state, res.forcing, cfg.r)
    horizon = res.records[-1].t - res.records[0].t
    bounds = compute_bounds(horizon, cfg, res.records, norms)
    rep = verdict(res.records, bounds, cfg, blowup=res.blowup,
                  last_valid_time=res.last_valid_time)
    assert rep.blowup and rep.last_valid_time == res.last_valid_time
    assert "blow-up" in rep.to_text()


def test_verdict_report_rendering(grid):
    cfg = _cfg(grid, t_end=0.02)
    res = run(cfg)
    norms = run_norms(res.initial_state, res.forcing, cfg.r)
    bounds = compute_bounds(0.02, cfg, res.records, norms)
    rep = verdict(res.records, bounds, cfg)
    text = rep.to_text()
    assert "criterion report" in text and "k11" in text
    assert rep.to_kv()["criterion_integral"] == rep.criterion_integral
