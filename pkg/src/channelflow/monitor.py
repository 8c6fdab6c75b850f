"""Regularity-criterion engine: per-record diagnostics, a priori bound
constants, derivation identity checks, and the run verdict.

The monitored quantity is ||p_z||_{L^{2q}} accumulated as
int_0^t ||p_z||_{2q}^alpha ds (trapezoid on the record cadence); finiteness
of that integral with alpha > 3, q > 1 is the strong-solution criterion.
The bound constants are evaluated from their closed forms:

    K11    = (||f||^2 + ||g||^2) / (nu^2 lambda1^2) + ||v0||^2 + ||w0||^2
    K12(t) = (||f||^2 + ||g||^2) t / (nu lambda1)   + ||v0||^2 + ||w0||^2
    K_R    = exp(C T + K11 K12(T) + K11^{2/(r-2)} K12(T))
             * [1 + ||v0||_{H1}^6 + int_0^T ||p_z||_{2q}^r + ||f||_r^r T]
    K_2    = exp(C T + K11 (T + K12(T)) + K_R^{2/(r-3)} T)
             * [||v0||_{H1} + ||w0||_{H1} + ||f||_2^2 + ||g||_2^2]

with C a generic constant (configurable, default 1): the K_R / K_2 checks
are therefore informational, while the K11 energy bound is sharp enough to
assert outright.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .calculus import (
    PlanarField,
    ddx,
    ddx_2d,
    ddy,
    ddy_2d,
    ddz,
    fluctuation,
    laplacian_h,
    multiply_exact,
    multiply_exact_2d,
    vertical_average,
    vertical_velocity,
    z_extend,
)
from .errors import CoverageError
from .fields import ScalarField, to_physical
from .norms import (
    dz_norm,
    grad_h_norm,
    h1_norm,
    inner,
    l2_norm,
    l2_norm_2d,
    lq_norm,
    lq_norm_vector,
)
from .solver import ForcingSpec, PressureField, SolverConfig, VelocityState

_EXP_OVERFLOW = 700.0


# ---------------------------------------------------------------------------
# per-sample diagnostics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DiagnosticsRecord:
    """One time sample of all monitored norms and criterion accumulators.

    gradh_v, gradh_w, vz, wz are squared L2 norms; h1_v, h1_w are full H1
    norms; criterion_accum is int_0^t ||p_z||_{2q}^alpha ds.  The energy-law
    residual of the interval ending at t is filled in after the run (0.0 on
    the first record).
    """

    t: float
    energy: float
    gradh_v: float
    gradh_w: float
    vz: float
    wz: float
    pz_norm: float
    vtilde_r: float
    h1_v: float
    h1_w: float
    criterion_accum: float
    energy_residual: float = 0.0
    forcing_power: float = 0.0

    CSV_COLUMNS = ("t", "energy", "gradh_v", "gradh_w", "vz", "wz", "pz_l2q",
                   "vtilde_r", "h1_v", "h1_w", "criterion_accum", "energy_residual")

    def csv_values(self) -> tuple[float, ...]:
        return (self.t, self.energy, self.gradh_v, self.gradh_w, self.vz, self.wz,
                self.pz_norm, self.vtilde_r, self.h1_v, self.h1_w,
                self.criterion_accum, self.energy_residual)

    @property
    def grad_sum(self) -> float:
        return self.gradh_v + self.gradh_w + self.vz + self.wz


def record(state: VelocityState, p: PressureField, config: SolverConfig,
           accum: tuple[float, float, float] | None = None,
           forcing: ForcingSpec | None = None) -> DiagnosticsRecord:
    """Compute one diagnostics record.

    `accum` is (t_prev, pz_alpha_prev, accum_prev) from the previous record;
    None starts the criterion integral at zero.
    """
    v1, v2, w = state.v1, state.v2, state.w
    pz = ddz(p)
    pz_norm = lq_norm(to_physical(pz), 2.0 * config.q)
    tv1, tv2 = fluctuation(v1), fluctuation(v2)
    vtilde_r = lq_norm_vector((to_physical(tv1), to_physical(tv2)), config.r)
    pz_alpha = pz_norm**config.alpha
    if accum is None:
        criterion = 0.0
    else:
        t_prev, pz_alpha_prev, acc_prev = accum
        criterion = acc_prev + 0.5 * (state.t - t_prev) * (pz_alpha + pz_alpha_prev)
    fpow = 0.0
    if forcing is not None:
        fpow = inner(forcing.f1, v1) + inner(forcing.f2, v2) + inner(forcing.g, w)
    return DiagnosticsRecord(
        t=state.t,
        energy=state.energy(),
        gradh_v=grad_h_norm(v1) ** 2 + grad_h_norm(v2) ** 2,
        gradh_w=grad_h_norm(w) ** 2,
        vz=dz_norm(v1) ** 2 + dz_norm(v2) ** 2,
        wz=dz_norm(w) ** 2,
        pz_norm=pz_norm,
        vtilde_r=vtilde_r,
        h1_v=math.sqrt(h1_norm(v1) ** 2 + h1_norm(v2) ** 2),
        h1_w=h1_norm(w),
        criterion_accum=criterion,
        forcing_power=fpow,
    )


class RunMonitor:
    """Accumulates records along a run; consumed by solver.run."""

    def __init__(self, config: SolverConfig, forcing: ForcingSpec):
        self.config = config
        self.forcing = forcing
        self.records: list[DiagnosticsRecord] = []
        self._accum: tuple[float, float, float] | None = None

    def observe(self, state: VelocityState, pressure: PressureField) -> None:
        rec = record(state, pressure, self.config, accum=self._accum, forcing=self.forcing)
        self._accum = (rec.t, rec.pz_norm**self.config.alpha, rec.criterion_accum)
        self.records.append(rec)

    def finalize(self) -> list[DiagnosticsRecord]:
        """Fill per-interval energy residuals (backward-looking)."""
        recs = self.records
        if len(recs) >= 2:
            _, residuals = energy_residual(recs, self.config)
            recs = [recs[0]] + [replace(r, energy_residual=float(res))
                                for r, res in zip(recs[1:], residuals)]
        self.records = recs
        return recs


# ---------------------------------------------------------------------------
# bound constants
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RunNorms:
    """Norms of the initial data and forcing entering the bound formulas."""

    v0_l2_sq: float
    w0_l2_sq: float
    v0_h1: float
    w0_h1: float
    f_l2_sq: float
    g_l2_sq: float
    f_lr: float


def run_norms(init_state: VelocityState, forcing: ForcingSpec, r: float) -> RunNorms:
    v1, v2, w = init_state.v1, init_state.v2, init_state.w
    return RunNorms(
        v0_l2_sq=l2_norm(v1) ** 2 + l2_norm(v2) ** 2,
        w0_l2_sq=l2_norm(w) ** 2,
        v0_h1=math.sqrt(h1_norm(v1) ** 2 + h1_norm(v2) ** 2),
        w0_h1=h1_norm(w),
        f_l2_sq=l2_norm(forcing.f1) ** 2 + l2_norm(forcing.f2) ** 2,
        g_l2_sq=l2_norm(forcing.g) ** 2,
        f_lr=lq_norm_vector((to_physical(forcing.f1), to_physical(forcing.f2)), r),
    )


def k11(config: SolverConfig, norms: RunNorms) -> float:
    """Energy bound: sup_t (||v||^2 + ||w||^2) <= K11."""
    forcing_sq = norms.f_l2_sq + norms.g_l2_sq
    return forcing_sq / (config.nu**2 * config.lambda1**2) + norms.v0_l2_sq + norms.w0_l2_sq


def k12(t: float, config: SolverConfig, norms: RunNorms) -> float:
    """Dissipation-integral bound: nu int_0^t ||grad u||^2 <= K12(t)."""
    forcing_sq = norms.f_l2_sq + norms.g_l2_sq
    return forcing_sq * t / (config.nu * config.lambda1) + norms.v0_l2_sq + norms.w0_l2_sq


def _pz_power_integral(T: float, records: list[DiagnosticsRecord], power: float) -> float:
    """Trapezoid of ||p_z||_{2q}^power over a horizon of length T.

    The window starts at the first record time (zero for a fresh run, the
    resume time for a restarted segment); the records must cover it.
    """
    if not records:
        raise CoverageError("no records available")
    times = np.array([r.t for r in records])
    vals = np.array([r.pz_norm for r in records]) ** power
    t_hi = times[0] + T
    tol = 1e-9 * max(1.0, abs(t_hi))
    if times[-1] < t_hi - tol:
        raise CoverageError(
            f"records cover [{times[0]}, {times[-1]}], requested horizon {T}")
    if T <= 0:
        return 0.0
    keep = times <= t_hi + tol
    t_kept, v_kept = times[keep], vals[keep]
    if t_kept[-1] < t_hi - tol:
        # partial last interval by linear interpolation of the integrand
        v_at_T = float(np.interp(t_hi, times, vals))
        t_kept = np.append(t_kept, t_hi)
        v_kept = np.append(v_kept, v_at_T)
    return float(np.trapezoid(v_kept, t_kept))


def _guarded_exp(x: float) -> float:
    return math.inf if x > _EXP_OVERFLOW else math.exp(x)


def _guarded_pow(base: float, power: float) -> float:
    """base**power for base >= 0, saturating to inf instead of overflowing."""
    if base == 0.0:
        return 0.0
    if not math.isfinite(base):
        return math.inf
    if power * math.log(base) > _EXP_OVERFLOW:
        return math.inf
    return base**power


def kr(T: float, config: SolverConfig, records: list[DiagnosticsRecord],
       norms: RunNorms, c_generic: float = 1.0) -> float:
    """Gronwall bound on ||vtilde||_r^r, evaluated as printed.

    Note the integrand exponent is r (not the criterion's alpha), and the
    exponent carries K12(T), which is nonzero at T = 0 for nonzero initial
    data; both follow the printed formula.
    """
    K11 = k11(config, norms)
    K12T = k12(T, config, norms)
    expo = c_generic * T + K11 * K12T + _guarded_pow(K11, 2.0 / (config.r - 2.0)) * K12T
    bracket = (1.0 + norms.v0_h1**6 + _pz_power_integral(T, records, config.r)
               + norms.f_lr**config.r * T)
    return _guarded_exp(expo) * bracket


def k2(T: float, config: SolverConfig, records: list[DiagnosticsRecord],
       norms: RunNorms, c_generic: float = 1.0) -> float:
    """Gronwall bound on the H1 seminorm sum, evaluated as printed."""
    K11 = k11(config, norms)
    K12T = k12(T, config, norms)
    KR = kr(T, config, records, norms, c_generic)
    bracket = norms.v0_h1 + norms.w0_h1 + norms.f_l2_sq + norms.g_l2_sq
    if bracket == 0.0:
        return 0.0
    if not math.isfinite(KR):
        return math.inf
    kr_term = 0.0 if T == 0.0 else _guarded_pow(KR, 2.0 / (config.r - 3.0)) * T
    expo = c_generic * T + K11 * (T + K12T) + kr_term
    return _guarded_exp(expo) * bracket


@dataclass(frozen=True)
class BoundConstants:
    """Evaluated bound constants for a run horizon T.

    K12 is affine in t; its rate and offset are stored so k12_of_t can be
    reconstructed exactly.
    """

    T: float
    k11: float
    k12_rate: float
    k12_offset: float
    kr: float
    k2: float
    c_generic: float = 1.0

    def k12_of_t(self, t: float) -> float:
        return self.k12_rate * t + self.k12_offset


def compute_bounds(T: float, config: SolverConfig, records: list[DiagnosticsRecord],
                   norms: RunNorms, c_generic: float = 1.0) -> BoundConstants:
    forcing_sq = norms.f_l2_sq + norms.g_l2_sq
    return BoundConstants(
        T=T,
        k11=k11(config, norms),
        k12_rate=forcing_sq / (config.nu * config.lambda1),
        k12_offset=norms.v0_l2_sq + norms.w0_l2_sq,
        kr=kr(T, config, records, norms, c_generic),
        k2=k2(T, config, records, norms, c_generic),
        c_generic=c_generic,
    )


# ---------------------------------------------------------------------------
# energy-law residual
# ---------------------------------------------------------------------------

def energy_residual(records: list[DiagnosticsRecord], config: SolverConfig
                    ) -> tuple[np.ndarray, np.ndarray]:
    """Discrete residual of the energy law per record interval.

    residual = dE/dt / 2 + nu * sum of squared gradient norms - <(f,g),(v,w)>
    with the derivative as a difference quotient and the other terms
    averaged over the interval endpoints; second order in the record
    spacing.  Returns (interval midpoints, residuals).
    """
    if len(records) < 2:
        return np.array([]), np.array([])
    t = np.array([r.t for r in records])
    e = np.array([r.energy for r in records])
    d = np.array([r.grad_sum for r in records])
    fp = np.array([r.forcing_power for r in records])
    dt = np.diff(t)
    residuals = (np.diff(e) / dt) / 2.0 + config.nu * 0.5 * (d[:-1] + d[1:]) \
        - 0.5 * (fp[:-1] + fp[1:])
    return 0.5 * (t[:-1] + t[1:]), residuals


# ---------------------------------------------------------------------------
# derivation identity checks
# ---------------------------------------------------------------------------

def _avg_nonlinear_rhs(tv1: ScalarField, tv2: ScalarField) -> tuple[PlanarField, PlanarField]:
    """Depth average of (vtilde.grad_h)vtilde + (div_h vtilde) vtilde."""
    div_tv = ScalarField.spectral(tv1.grid, tv1.parity, ddx(tv1).data + ddy(tv2).data)
    out = []
    for tvj in (tv1, tv2):
        term = multiply_exact(tv1, ddx(tvj)).data \
            + multiply_exact(tv2, ddy(tvj)).data \
            + multiply_exact(div_tv, tvj).data
        out.append(vertical_average(ScalarField.spectral(tv1.grid, tv1.parity, term)))
    return out[0], out[1]


def check_identity_avg_nonlinear(state: VelocityState) -> float:
    """L2(M) discrepancy of the averaged-nonlinearity identity.

    Left side: depth average of (v.grad_h)v - (int_0^z div_h v) v_z; right
    side: (vbar.grad_h)vbar + average of the baroclinic self-interaction.
    All products are evaluated alias-free at padded resolution; the identity
    holds to roundoff for divergence-free states.
    """
    v1, v2 = state.v1, state.v2
    grid = state.grid
    w_rec = vertical_velocity(v1, v2)
    vb1, vb2 = vertical_average(v1), vertical_average(v2)
    tv1, tv2 = fluctuation(v1), fluctuation(v2)
    rhs_avg = _avg_nonlinear_rhs(tv1, tv2)
    total_sq = 0.0
    for j, vj in enumerate((v1, v2)):
        lhs_field = multiply_exact(v1, ddx(vj)).data \
            + multiply_exact(v2, ddy(vj)).data \
            + multiply_exact(w_rec, ddz(vj)).data
        lhs = vertical_average(ScalarField.spectral(grid, vj.parity, lhs_field))
        vbj = (vb1, vb2)[j]
        barotropic = multiply_exact_2d(vb1, ddx_2d(vbj)).data \
            + multiply_exact_2d(vb2, ddy_2d(vbj)).data
        rhs = barotropic + rhs_avg[j].data
        diff = PlanarField.spectral(grid, lhs.data - rhs)
        total_sq += l2_norm_2d(diff) ** 2
    return math.sqrt(total_sq)


def check_baroclinic_residual(prev_state: VelocityState, state: VelocityState,
                              next_state: VelocityState, p: PressureField,
                              forcing: ForcingSpec, nu: float) -> float:
    """L2 residual of the baroclinic momentum equation at the middle state.

    The time derivative is the centered difference of the neighbouring
    snapshots; every other term is evaluated spectrally (alias-free
    products), so the residual is O(record spacing^2) plus scheme error.
    """
    grid = state.grid
    dt2 = next_state.t - prev_state.t
    v1, v2 = state.v1, state.v2
    vb1, vb2 = vertical_average(v1), vertical_average(v2)
    tv1, tv2 = fluctuation(v1), fluctuation(v2)
    w_t = vertical_velocity(tv1, tv2)
    rhs_avg = _avg_nonlinear_rhs(tv1, tv2)
    p_t = fluctuation(p)
    total_sq = 0.0
    for j in range(2):
        tvj = (tv1, tv2)[j]
        vbj = (vb1, vb2)[j]
        fj = (forcing.f1, forcing.f2)[j]
        dt_tvj = fluctuation(ScalarField.spectral(
            grid, v1.parity,
            ((next_state.v1, next_state.v2)[j].data - (prev_state.v1, prev_state.v2)[j].data) / dt2))
        grad_p = (ddx if j == 0 else ddy)(p_t)
        diffusion = laplacian_h(tvj).data + ddz(ddz(tvj)).data
        advection = multiply_exact(tv1, ddx(tvj)).data \
            + multiply_exact(tv2, ddy(tvj)).data \
            + multiply_exact(w_t, ddz(tvj)).data
        shear_terms = multiply_exact(tv1, z_extend(ddx_2d(vbj))).data \
            + multiply_exact(tv2, z_extend(ddy_2d(vbj))).data \
            + multiply_exact(z_extend(vb1), ddx(tvj)).data \
            + multiply_exact(z_extend(vb2), ddy(tvj)).data
        residual = dt_tvj.data - nu * diffusion + advection + shear_terms \
            - z_extend(rhs_avg[j]).data + grad_p.data - fluctuation(fj).data
        total_sq += l2_norm(ScalarField.spectral(grid, v1.parity, residual)) ** 2
    return math.sqrt(total_sq)


# ---------------------------------------------------------------------------
# verdict
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CriterionReport:
    """Summary verdict of a run against the regularity criterion and bounds."""

    t_final: float
    alpha: float
    q: float
    r: float
    criterion_integral: float
    criterion_finite: bool
    r_integral: float
    energy_bound_held: bool
    energy_max_ratio: float
    k11: float
    vtilde_bound_held: bool
    kr: float
    h1_bound_held: bool
    k2: float
    blowup: bool
    last_valid_time: float

    def to_text(self) -> str:
        lines = [
            "criterion report",
            "================",
            f"final time                      : {self.t_final:.6g}",
            f"criterion integral (alpha={self.alpha:g})   : {self.criterion_integral:.6e}"
            f"  finite: {self.criterion_finite}",
            f"companion integral (power r={self.r:g}) : {self.r_integral:.6e}",
            f"energy bound  E(t) <= K11       : {'HELD' if self.energy_bound_held else 'VIOLATED'}"
            f"  (K11={self.k11:.6e}, max E/K11={self.energy_max_ratio:.3f})",
            f"baroclinic ||vtilde||_r^r <= K_R: "
            f"{'held' if self.vtilde_bound_held else 'exceeded'} (informational, K_R={self.kr:.6e})",
            f"H1 seminorm sum <= K_2          : "
            f"{'held' if self.h1_bound_held else 'exceeded'} (informational, K_2={self.k2:.6e})",
            f"blow-up                         : {self.blowup}"
            + (f" (last valid time {self.last_valid_time:.6g})" if self.blowup else ""),
            "",
            "key-value block",
            "---------------",
        ]
        lines += [f"{k} = {v!r}" for k, v in self.to_kv().items()]
        return "\n".join(lines) + "\n"

    def to_kv(self) -> dict:
        return {
            "t_final": self.t_final,
            "alpha": self.alpha,
            "q": self.q,
            "r": self.r,
            "criterion_integral": self.criterion_integral,
            "criterion_finite": self.criterion_finite,
            "r_integral": self.r_integral,
            "energy_bound_held": self.energy_bound_held,
            "energy_max_ratio": self.energy_max_ratio,
            "k11": self.k11,
            "vtilde_bound_held": self.vtilde_bound_held,
            "kr": self.kr,
            "h1_bound_held": self.h1_bound_held,
            "k2": self.k2,
            "blowup": self.blowup,
            "last_valid_time": self.last_valid_time,
        }


def verdict(records: list[DiagnosticsRecord], bounds: BoundConstants,
            config: SolverConfig, blowup: bool = False,
            last_valid_time: float | None = None) -> CriterionReport:
    """Evaluate the criterion accounting and bound checks over a run.

    The K11 energy bound is a hard check; the K_R and K_2 comparisons are
    informational because their generic constant C is not fixed by theory.
    """
    if not records:
        raise CoverageError("verdict requires at least one record")
    t_final = records[-1].t
    criterion_integral = records[-1].criterion_accum
    r_integral = _pz_power_integral(t_final - records[0].t, records, config.r)
    energies = np.array([r.energy for r in records])
    ratio = float(np.max(energies) / bounds.k11) if bounds.k11 > 0 else (
        0.0 if float(np.max(energies)) == 0.0 else math.inf)
    vt = np.array([r.vtilde_r for r in records]) ** config.r
    h1s = np.array([r.grad_sum for r in records])
    return CriterionReport(
        t_final=t_final,
        alpha=config.alpha,
        q=config.q,
        r=config.r,
        criterion_integral=criterion_integral,
        criterion_finite=bool(np.isfinite(criterion_integral)),
        r_integral=r_integral,
        energy_bound_held=bool(ratio <= 1.0 + 1e-12),
        energy_max_ratio=ratio,
        k11=bounds.k11,
        vtilde_bound_held=bool(np.all(vt <= bounds.kr)),
        kr=bounds.kr,
        h1_bound_held=bool(np.all(h1s <= bounds.k2)),
        k2=bounds.k2,
        blowup=blowup,
        last_valid_time=t_final if last_valid_time is None else last_valid_time,
    )
