"""Norm functionals: Lebesgue norms on the channel and its horizontal
square, Sobolev norms and seminorms from spectral multipliers, and mixed
time-space accumulators.

Lq norms integrate |f|^q over the collocation nodes with trapezoid weights
in z (walls half-weighted) and the uniform periodic rule in x, y; this is
exact for band-limited integrands and second-order otherwise.  L2-type
quantities computed from spectral coefficients use the exact basis weights
(cos(m pi z) and sin(m pi z) carry squared L2 mass 1/2 for m >= 1, the
constant mode mass 1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .calculus import PlanarField
from .fields import PHYSICAL, SPECTRAL, ScalarField


def _quad_weights_3d(grid) -> np.ndarray:
    return grid.wz[None, None, :] / (grid.nx * grid.ny)


def lq_norm(f: ScalarField, q: float) -> float:
    """Lq(Omega) norm by quadrature over the collocation nodes."""
    if q < 1:
        raise ValueError(f"Lq norm requires q >= 1, got {q}")
    f.require(PHYSICAL)
    w = _quad_weights_3d(f.grid)
    return float(np.sum(np.abs(f.data) ** q * w) ** (1.0 / q))


def lq_norm_vector(components: tuple[ScalarField, ...], q: float) -> float:
    """Lq norm of the pointwise magnitude of a vector field."""
    if q < 1:
        raise ValueError(f"Lq norm requires q >= 1, got {q}")
    for f in components:
        f.require(PHYSICAL)
    mag_sq = sum(f.data**2 for f in components)
    w = _quad_weights_3d(components[0].grid)
    return float(np.sum(mag_sq ** (q / 2.0) * w) ** (1.0 / q))


def lq_norm_2d(f: PlanarField, q: float) -> float:
    """Lq(M) norm over the horizontal periodic square."""
    if q < 1:
        raise ValueError(f"Lq norm requires q >= 1, got {q}")
    f.require(PHYSICAL)
    return float((np.sum(np.abs(f.data) ** q) / (f.grid.nx * f.grid.ny)) ** (1.0 / q))


# ---------------------------------------------------------------------------
# spectral L2 / H1 machinery
# ---------------------------------------------------------------------------

def l2_norm(f: ScalarField) -> float:
    """Exact L2 norm from spectral coefficients."""
    f.require(SPECTRAL)
    th = f.grid.l2_weights(f.parity)[None, None, :]
    return math.sqrt(float(np.sum(np.abs(f.data) ** 2 * th)))


def grad_h_norm(f: ScalarField) -> float:
    """L2 norm of the horizontal gradient, from multipliers."""
    f.require(SPECTRAL)
    th = f.grid.l2_weights(f.parity)[None, None, :]
    return math.sqrt(float(np.sum(f.grid.kh_sq * np.abs(f.data) ** 2 * th)))


def dz_norm(f: ScalarField) -> float:
    """L2 norm of the vertical derivative, from multipliers.

    The derivative basis functions all carry squared mass 1/2, so the sum
    includes the m = nz-1 slot of EvenZ fields even though collocation ddz
    annihilates it; the two agree on band-limited fields.
    """
    f.require(SPECTRAL)
    mpi_sq = (np.pi * f.grid.m3) ** 2
    return math.sqrt(0.5 * float(np.sum(mpi_sq * np.abs(f.data) ** 2)))


def h1_norm(f: ScalarField) -> float:
    """Full H1(Omega) norm: (||f||^2 + ||grad_h f||^2 + ||f_z||^2)^(1/2)."""
    return math.sqrt(l2_norm(f) ** 2 + grad_h_norm(f) ** 2 + dz_norm(f) ** 2)


def inner(f: ScalarField, g: ScalarField) -> float:
    """L2 inner product of two same-parity spectral fields."""
    f.require(SPECTRAL)
    g.require(SPECTRAL)
    if f.parity is not g.parity:
        return 0.0  # orthogonal bases
    th = f.grid.l2_weights(f.parity)[None, None, :]
    return float(np.sum((f.data * np.conj(g.data)).real * th))


def l2_norm_2d(f: PlanarField) -> float:
    f.require(SPECTRAL)
    return math.sqrt(float(np.sum(np.abs(f.data) ** 2)))


def grad_h_norm_2d(f: PlanarField) -> float:
    f.require(SPECTRAL)
    g = f.grid
    kh_sq = (2.0 * np.pi) ** 2 * (g.kx[:, None] ** 2 + g.ky[None, :] ** 2)
    return math.sqrt(float(np.sum(kh_sq * np.abs(f.data) ** 2)))


def h1_norm_2d(f: PlanarField) -> float:
    return math.sqrt(l2_norm_2d(f) ** 2 + grad_h_norm_2d(f) ** 2)


# ---------------------------------------------------------------------------
# time series and mixed L^alpha(0,T; X) norms
# ---------------------------------------------------------------------------

@dataclass
class TimeSeries:
    """Samples (t_i, value_i) of a nonnegative norm along a run.

    Times are strictly increasing; values are finite unless the series is
    flagged as a blow-up record.
    """

    times: np.ndarray
    values: np.ndarray
    blowup: bool = field(default=False)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.times.shape != self.values.shape or self.times.ndim != 1:
            raise ValueError("times and values must be 1-d arrays of equal length")
        if len(self.times) >= 2 and not np.all(np.diff(self.times) > 0):
            raise ValueError("sample times must be strictly increasing")
        if not self.blowup and not np.all(np.isfinite(self.values)):
            raise ValueError("non-finite values require the blow-up flag")


def time_lalpha(series: TimeSeries, alpha: float) -> float:
    """(int_0^T value(t)^alpha dt)^(1/alpha) by the trapezoid rule.

    Returns inf when the series carries a blow-up flag or non-finite values.
    """
    if alpha < 1:
        raise ValueError(f"time exponent must satisfy alpha >= 1, got {alpha}")
    if len(series.times) < 2:
        raise ValueError("time integration needs at least 2 samples")
    if series.blowup or not np.all(np.isfinite(series.values)):
        return math.inf
    integral = float(np.trapezoid(series.values**alpha, series.times))
    return integral ** (1.0 / alpha)
