"""Method-of-lines integration of the four coupled OQBM field equations.

Space is discretized with second-order central differences (second-order
one-sided stencils on the two edge nodes, whose time derivative is then
clamped to zero) and time with fixed-step classic RK4. The solver runs the
dimensionless system, so it reads the barred coefficients.

The published field equations and the published moment equations disagree
on the sign of the delta_bar_2 gradient coupling in the rho- equation. With
the field-equation sign (``form="printed"``) the rho-/C_I pair has real
eigenvalues of size 2 delta_bar_2 k, so short wavelengths grow at rates up to
delta_bar_2**2 / lambda_bar_3 and the problem is ill-posed. The default
``form="reconciled"`` uses the moment-equation sign, ``-4 delta_bar_2 d/dxi C_I``,
which turns that pair into a bounded oscillation.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np

from .coefficients import CoefficientSet
from .errors import BlowUp, GridTooNarrow
from .field import Grid, HybridField, bloch_defect, trapezoid
from .stepping import rk4_step, step_count

DIAGNOSTIC_COLUMNS = (
    "t", "trace", "trace_rate_residual", "bloch_defect", "min_rho_plus",
    "variance", "c_i_integral", "sigma_z",
)

# RK4 stability reaches about 2.78 on the negative real axis and 2.83 on the
# imaginary axis; the lower value bounds both.
RK4_STABILITY_RADIUS = 2.78


@dataclasses.dataclass(frozen=True)
class PdeConfig:
    dt: float = 0.01
    t_end: float = 1.0
    snapshot_times: tuple = ()
    safety: float = 0.9
    boundary: str = "dirichlet-zero"
    tail_tolerance: float = 1e-6
    blowup_threshold: float = 1e6
    record_moments: int = -1  # highest moment order stored every step; -1 disables
    form: str = "reconciled"

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be > 0")
        if not self.t_end >= 0:
            raise ValueError("t_end must be >= 0")
        if not 0 < self.safety <= 1:
            raise ValueError("safety must lie in (0, 1]")
        if self.boundary != "dirichlet-zero":
            raise ValueError("only 'dirichlet-zero' boundaries are supported")
        _check_form(self.form)
        snaps = tuple(float(t) for t in self.snapshot_times)
        if list(snaps) != sorted(snaps):
            raise ValueError("snapshot_times must be sorted")
        if snaps and (snaps[0] < 0 or snaps[-1] > self.t_end + 1e-12):
            raise ValueError("snapshot_times must lie within [0, t_end]")
        object.__setattr__(self, "snapshot_times", snaps)


FORMS = ("reconciled", "printed")


def _check_form(form):
    if form not in FORMS:
        raise ValueError(f"form must be one of {FORMS}, got {form!r}")


class _Operator:
    """Precomputed pieces of the right-hand side for one grid and coefficient set."""

    def __init__(self, grid: Grid, c: CoefficientSet, form: str = "reconciled"):
        _check_form(form)
        self.d2_sign = 1.0 if form == "printed" else -1.0
        self.dx = grid.dx
        self.x = grid.x
        self.x2 = self.x**2
        self.c = c
        self.diag = np.array([c.lambda_4, c.Delta_2, c.Delta_3, c.Delta_4])[:, None]

    def derivatives(self, f):
        dx = self.dx
        d1 = np.empty_like(f)
        d1[:, 1:-1] = (f[:, 2:] - f[:, :-2]) / (2 * dx)
        d1[:, 0] = (-3 * f[:, 0] + 4 * f[:, 1] - f[:, 2]) / (2 * dx)
        d1[:, -1] = (3 * f[:, -1] - 4 * f[:, -2] + f[:, -3]) / (2 * dx)
        d2 = np.empty_like(f)
        d2[:, 1:-1] = (f[:, 2:] - 2 * f[:, 1:-1] + f[:, :-2]) / dx**2
        d2[:, 0] = (2 * f[:, 0] - 5 * f[:, 1] + 4 * f[:, 2] - f[:, 3]) / dx**2
        d2[:, -1] = (2 * f[:, -1] - 5 * f[:, -2] + 4 * f[:, -3] - f[:, -4]) / dx**2
        return d1, d2

    def __call__(self, t, f):
        c, x = self.c, self.x
        d1, d2 = self.derivatives(f)
        out = c.lambda_bar_3 * d2 + c.Delta_1 * x * d1 + (self.diag - c.lambda_bar_2 * self.x2) * f
        p, z, r, i = f
        px, zx, rx, ix = d1
        out[0] += -2 * c.delta_bar_1 * ix + 2 * c.a_bar_2 * rx
        out[1] += (
            -c.beta_diff * p
            + (4 * c.a_bar_7 * x - 4 * c.Omega_drive) * i + self.d2_sign * 4 * c.delta_bar_2 * ix
            - 4 * c.a_bar_8 * x * r - 4 * c.delta_bar_3 * rx
        )
        out[2] += c.a_bar_8 * x * z + c.delta_bar_3 * zx + 0.5 * c.a_bar_2 * px
        out[3] += (c.Omega_drive - c.a_bar_7 * x) * z - c.delta_bar_2 * zx - 0.5 * c.delta_bar_1 * px
        out[:, 0] = 0.0
        out[:, -1] = 0.0
        return out


def rhs(field: HybridField, coeffs: CoefficientSet, form: str = "reconciled") -> HybridField:
    """Time derivative of ``field``, returned as a field on the same grid."""
    op = _Operator(field.grid, coeffs, form)
    return HybridField.from_stack(field.grid, op(field.time, field.stack()), field.time)


def stable_dt(grid: Grid, coeffs: CoefficientSet, safety: float = 0.9) -> float:
    """Largest step the explicit scheme tolerates on this grid.

    The diffusive limit ``dx**2 / (2 lambda_bar_3)`` is combined with a
    Gershgorin-style bound on the remaining terms.
    """
    c = coeffs
    dx = grid.dx
    xmax = max(abs(grid.x_min), abs(grid.x_max))
    limits = []
    if c.lambda_bar_3 > 0:
        limits.append(dx**2 / (2 * c.lambda_bar_3))
    gradient = max(abs(c.delta_bar_1), abs(c.delta_bar_2), abs(c.delta_bar_3), abs(c.a_bar_2))
    radius = (
        4 * abs(c.lambda_bar_3) / dx**2
        + (abs(c.Delta_1) * xmax + 4 * gradient) / dx
        + 4 * (abs(c.Omega_drive) + (abs(c.a_bar_7) + abs(c.a_bar_8)) * xmax)
        + abs(c.lambda_bar_2) * xmax**2
        + abs(c.beta_diff)
        + max(abs(c.lambda_4), abs(c.Delta_2), abs(c.Delta_3), abs(c.Delta_4))
    )
    if radius > 0:
        limits.append(RK4_STABILITY_RADIUS / radius)
    return safety * min(limits) if limits else math.inf


@dataclasses.dataclass
class PdeResult:
    dt: float
    times: np.ndarray
    diagnostics: dict
    snapshots: list
    final: HybridField
    moments: np.ndarray | None = None
    failed_at: float | None = None

    def diagnostic_table(self):
        return [self.diagnostics[name] for name in DIAGNOSTIC_COLUMNS]


STAT_COLUMNS = ("mean", "skewness", "excess_kurtosis")


def _step_diagnostics(f, x, dx):
    p, z, _, i = f
    trace = trapezoid(p, dx)
    m2 = trapezoid(x * x * p, dx)
    mean = trapezoid(x * p, dx) / trace
    d = x - mean
    c2, c3, c4 = (trapezoid(d**k * p, dx) / trace for k in (2, 3, 4))
    skew = c3 / c2**1.5 if c2 > 0 else np.nan
    kurt = c4 / c2**2 - 3.0 if c2 > 0 else np.nan
    return trace, m2, c2, trapezoid(i, dx), trapezoid(z, dx), p.min(), mean, skew, kurt


def evolve(field: HybridField, coeffs: CoefficientSet, config: PdeConfig) -> PdeResult:
    grid = field.grid
    op = _Operator(grid, coeffs, config.form)
    dt_limit = stable_dt(grid, coeffs, config.safety)
    n_steps = step_count(config.t_end, min(config.dt, dt_limit))
    dt = config.t_end / n_steps if n_steps else config.dt
    snap_steps = [int(round((t - field.time) / dt)) if dt else 0 for t in config.snapshot_times]
    snap_steps = [min(max(k, 0), n_steps) for k in snap_steps]

    x, dx = grid.x, grid.dx
    n_rec = config.record_moments
    powers = x[None, :] ** np.arange(n_rec + 1)[:, None] if n_rec >= 0 else None

    times = field.time + dt * np.arange(n_steps + 1)
    series = {name: np.full(n_steps + 1, np.nan) for name in
              ("trace", "m2", "variance", "c_i_integral", "sigma_z", "min_rho_plus", *STAT_COLUMNS, "bloch_defect")}
    moments = np.full((n_steps + 1, n_rec + 1, 4), np.nan) if n_rec >= 0 else None
    snapshots = []

    f = field.stack().copy()
    result = PdeResult(dt, times, {}, snapshots, field, moments)

    def record(k, f):
        names = ("trace", "m2", "variance", "c_i_integral", "sigma_z", "min_rho_plus", *STAT_COLUMNS)
        for name, value in zip(names, _step_diagnostics(f, x, dx)):
            series[name][k] = value
        series["bloch_defect"][k] = bloch_defect(HybridField.from_stack(grid, f))
        if moments is not None:
            moments[k] = trapezoid(powers[:, None, :] * f[None, :, :], dx)
        while len(snapshots) < len(snap_steps) and snap_steps[len(snapshots)] == k:
            snapshots.append(HybridField.from_stack(grid, f, times[k]))

    def finish(k_last, f):
        keep = slice(0, k_last + 1)
        result.times = times[keep]
        diag = {name: arr[keep] for name, arr in series.items()}
        diag.update(_trace_identity(result.times, diag, coeffs))
        diag["t"] = result.times
        result.diagnostics = diag
        result.final = HybridField.from_stack(grid, f, times[k_last])
        if moments is not None:
            result.moments = moments[keep]

    record(0, f)
    for k in range(1, n_steps + 1):
        f_new = rk4_step(op, times[k - 1], f, dt)
        peak = np.abs(f_new).max()
        if not np.isfinite(peak) or peak > config.blowup_threshold:
            finish(k - 1, f)
            result.failed_at = times[k]
            raise BlowUp("field became non-finite or exceeded the blow-up threshold", times[k], result)
        edge = max(np.abs(f_new[:, 1]).max(), np.abs(f_new[:, -2]).max())
        if edge > config.tail_tolerance * np.abs(f_new[0]).max():
            finish(k - 1, f)
            result.failed_at = times[k]
            exc = GridTooNarrow(
                f"density at the boundary reached {edge:.3g} at t = {times[k]:.6g}; widen the grid"
            )
            exc.partial = result
            raise exc
        f = f_new
        record(k, f)
    finish(n_steps, f)
    return result


def _trace_identity(times, diag, c):
    """Finite-difference trace rate against the zeroth-moment equation."""
    trace = diag["trace"]
    expected = (c.lambda_4 - c.Delta_1) * trace - c.lambda_bar_2 * diag["m2"]
    if len(times) >= 3:
        rate = np.gradient(trace, times, edge_order=2)
    elif len(times) == 2:
        rate = np.full(2, (trace[1] - trace[0]) / (times[1] - times[0]))
    else:
        rate = np.zeros_like(trace)
    return {"trace_rate": rate, "trace_rate_expected": expected, "trace_rate_residual": rate - expected}
