"""Nonlinear cumulant dynamics under Gaussian-type closures.

Notation: ``x1`` is the first position cumulant, ``zk``, ``rk``, ``ik`` the
k-th cumulants of the rho-, C_R and C_I sectors (k = 0 is the log weight).
The second position cumulant is never integrated; it is substituted as
``chi - x1**2`` everywhere. ``close3`` drops every cumulant of order three and
up, ``close4`` keeps the third orders.

The C_I sector starts with a negative weight, so its log weight is stored
as a real number together with a sign ``i_sign`` that multiplies every
exponential containing ``i0``.

The right-hand sides transcribe the published equations term by term,
including the literal ``1`` in exponents such as ``exp(1 - z0)``. The two
published tables must coincide once the third-order cumulants are set to
zero, but they disagree in a handful of terms. ``form="printed"`` keeps every
term exactly as printed. ``form="reconciled"`` (the default) settles each
disagreement in favour of the version that the moment projection of the
field equations reproduces:

* close3 z2 and r2: the lambda_bar_2 terms read ``-2 z2**2`` and ``-2 r2**2``.
* close3 i2: the ``-delta_bar_1 (i1 - x1) exp(1 - i0)`` term is present.
* close3 i0: the drive term carries ``exp(z0 - i0)``.
* close3 r0: the a_bar_8 term carries ``exp(z0 - r0)``.
* close3 i1: the drive term reads ``-(i1 - z1)(Omega + a_bar_2 z1)``.
* close4 i1: the ``(delta_bar_2 + a_bar_2 z2)`` term carries ``exp(z0 - i0)``.
* close4 z2: the beta_bar term is present.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np

from .coefficients import CoefficientSet
from .errors import BlowUp, DegenerateAngle, UnsupportedProfile
from .field import BlochInit
from .stepping import rk4_step, step_count

CLOSURES = ("close3", "close4")
FORMS = ("reconciled", "printed")
BLOWUP_THRESHOLD = 1e8
# weights below this are zeros lost to rounding, e.g. cos(2 * (pi / 4))
DEGENERATE_WEIGHT = 1e-12

VARIABLES = {
    "close3": ("x1", "z0", "z1", "z2", "r0", "r1", "r2", "i0", "i1", "i2"),
    "close4": ("x1", "x3", "z0", "z1", "z2", "z3", "r0", "r1", "r2", "r3", "i0", "i1", "i2", "i3"),
}


@dataclasses.dataclass
class CumulantState:
    closure: str
    x_cum: np.ndarray  # x0, x1, x2, x3
    z_cum: np.ndarray
    r_cum: np.ndarray
    i_cum: np.ndarray
    chi: float
    time: float = 0.0
    i_sign: float = -1.0

    def __post_init__(self):
        if self.closure not in CLOSURES:
            raise ValueError(f"closure must be one of {CLOSURES}, got {self.closure!r}")
        for name in ("x_cum", "z_cum", "r_cum", "i_cum"):
            arr = np.zeros(4)
            given = np.asarray(getattr(self, name), dtype=float)
            arr[: len(given)] = given
            if self.closure == "close3":
                arr[3] = 0.0
            setattr(self, name, arr)
        # second position cumulant is fixed by the zeroth-order constraint
        self.x_cum[2] = self.chi - self.x_cum[1] ** 2

    def vector(self) -> np.ndarray:
        table = {"x": self.x_cum, "z": self.z_cum, "r": self.r_cum, "i": self.i_cum}
        return np.array([table[v[0]][int(v[1])] for v in VARIABLES[self.closure]])

    @classmethod
    def from_vector(cls, closure, y, chi, x0, time=0.0, i_sign=-1.0):
        sectors = {"x": np.zeros(4), "z": np.zeros(4), "r": np.zeros(4), "i": np.zeros(4)}
        sectors["x"][0] = x0
        for name, value in zip(VARIABLES[closure], y):
            sectors[name[0]][int(name[1])] = value
        return cls(closure, sectors["x"], sectors["z"], sectors["r"], sectors["i"], chi, time, i_sign)


def _log_weight(value, label):
    if not value > DEGENERATE_WEIGHT:
        raise DegenerateAngle(f"{label} = {value:.6g} must be positive for its log weight to exist")
    return math.log(value)


def init_cumulants(init: BlochInit, chi: float, closure: str = "close3") -> CumulantState:
    if init.j != 2:
        raise UnsupportedProfile("cumulant initial data assume the unit Gaussian (j = 2)")
    s2 = math.sin(2 * init.theta)
    root = math.sqrt(math.pi)
    z0 = _log_weight(math.cos(2 * init.theta) / root, "cos(2 theta)")
    r0 = _log_weight(s2 * math.cos(init.phi) / (2 * root), "sin(2 theta) cos(phi)")
    # C_I(0) = -sin(2 theta) sin(phi) rho+ / 2, so its sign is carried apart
    coherence = s2 * math.sin(init.phi) / (2 * root)
    i0 = _log_weight(abs(coherence), "|sin(2 theta) sin(phi)|")
    i_sign = -1.0 if coherence > 0 else 1.0
    return CumulantState(
        closure,
        [-0.5 * math.log(math.pi), 0.0, chi, 0.0],
        [z0, 0.0, chi, 0.0],
        [r0, 0.0, chi, 0.0],
        [i0, 0.0, chi, 0.0],
        chi,
        0.0,
        i_sign,
    )


class _Factors:
    """Exponential weights shared by the closure right-hand sides."""

    def __init__(self, z0, r0, i0, s):
        self.iz = s * math.exp(i0 - z0)
        self.zi = s * math.exp(z0 - i0)
        self.rz = math.exp(r0 - z0)
        self.zr = math.exp(z0 - r0)
        self.one_z = math.exp(1 - z0)
        self.one_r = math.exp(1 - r0)
        self.one_i = s * math.exp(1 - i0)
        self.r_one = math.exp(r0 - 1)
        self.i_one = s * math.exp(i0 - 1)
        self.ri = s * math.exp(r0 - i0)


def _unpack(c: CoefficientSet):
    return (c.lambda_bar_2, c.lambda_bar_3, c.Delta_1, c.Delta_3, c.Delta_4, c.delta_bar_1,
            c.delta_bar_2, c.delta_bar_3, c.a_bar_2, c.a_bar_7, c.a_bar_8, c.beta_diff, c.Omega_drive)


def _check_form(form):
    if form not in FORMS:
        raise ValueError(f"form must be one of {FORMS}, got {form!r}")


def rhs_close3(state: CumulantState, coeffs: CoefficientSet, form: str = "reconciled") -> np.ndarray:
    """Derivative of the close3 vector, ordered as ``VARIABLES['close3']``."""
    if state.closure != "close3":
        raise ValueError("rhs_close3 needs a close3 state")
    _check_form(form)
    fixed = form == "reconciled"
    L2, L3, D1, D3, D4, d1, d2, d3, a2, a7, a8, bb, W = _unpack(coeffs)
    chi = state.chi
    x1 = state.x_cum[1]
    z0, z1, z2, _ = state.z_cum
    r0, r1, r2, _ = state.r_cum
    i0, i1, i2, _ = state.i_cum
    e = _Factors(z0, r0, i0, state.i_sign)

    dx1 = -2 * L2 * chi * x1 + 2 * L2 * x1**3 - D1 * x1 + 2 * d1 * e.i_one - 2 * a2 * e.r_one
    dz0 = (-L2 * z1**2 - L2 * z2 - D1 + D4 - 4 * (a7 * i1 + W) * e.iz
           - bb * e.one_z + 4 * a8 * r1 * e.rz)
    dz1 = (-2 * L2 * z2 * z1 - D1 * z1 - 4 * (d2 + a7 * i2) * e.iz
           - 4 * (i1 - z1) * (W + a7 * i1) * e.iz - bb * (x1 - z1) * e.one_z
           + 4 * (d3 + a8 * r2) * e.rz + 4 * a8 * (r1 - z1) * r1 * e.rz)
    dz2 = (-(2 if fixed else 4) * L2 * z2**2 - 2 * D1 * z2 + 2 * L3
           - 8 * (d2 + a7 * i2) * (i1 - z1) * e.iz
           - 4 * (W + a7 * i1) * ((i1 - z1) ** 2 + i2 - z2) * e.iz
           + 8 * (d3 + a8 * r2) * (r1 - z1) * e.rz
           + 4 * a8 * r1 * ((r1 - z1) ** 2 + r2 - z2) * e.rz
           - bb * ((x1 - z1) ** 2 + chi - x1**2 - z2) * e.one_z)
    dr0 = -L2 * r1**2 - L2 * r2 - D1 + D3 - a8 * z1 * (e.zr if fixed else e.rz)
    dr1 = (-2 * L2 * r1 * r2 - D1 * r1 - 0.5 * a2 * e.one_r - d3 * e.zr
           + a8 * (r1 * z1 - z1**2 - z2) * e.zr)
    dr2 = (-2 * L2 * (r2 if fixed else r1) ** 2 - 2 * D1 * r2 + 2 * L3
           - (a8 * r1**2 * z1 - 2 * d3 * (r1 - z1) - a8 * r2 * z1 - 2 * a8 * r1 * z1**2
              + a8 * z1**3 - 2 * a8 * r1 * z2 + 3 * a8 * z1 * z2) * e.zr
           + a2 * (r1 - x1) * e.one_r)
    di0 = -L2 * i1**2 - L2 * i2 + D4 - D1 + (W + a2 * z1) * (e.zi if fixed else e.ri)
    di1 = (-2 * L2 * i1 * i2 - D1 * i1 + 0.5 * d1 * e.one_i
           + (-1 if fixed else 1) * (W + a2 * z1) * (i1 - z1) * e.zi + (d2 + a2 * z2) * e.zi)
    di2 = (-2 * L2 * i2**2 - 2 * D1 * i2 + 2 * L3
           + (W + a2 * z1) * ((i1 - z1) ** 2 + z2 - i2) * e.zi
           - 2 * (d2 + a2 * z2) * (i1 - z1) * e.zi)
    if fixed:
        di2 -= d1 * (i1 - x1) * e.one_i
    return np.array([dx1, dz0, dz1, dz2, dr0, dr1, dr2, di0, di1, di2])


def rhs_close4(state: CumulantState, coeffs: CoefficientSet, form: str = "reconciled") -> np.ndarray:
    """Derivative of the close4 vector, ordered as ``VARIABLES['close4']``."""
    if state.closure != "close4":
        raise ValueError("rhs_close4 needs a close4 state")
    _check_form(form)
    fixed = form == "reconciled"
    L2, L3, D1, D3, D4, d1, d2, d3, a2, a7, a8, bb, W = _unpack(coeffs)
    chi = state.chi
    x1, x3 = state.x_cum[1], state.x_cum[3]
    z0, z1, z2, z3 = state.z_cum
    r0, r1, r2, r3 = state.r_cum
    i0, i1, i2, i3 = state.i_cum
    e = _Factors(z0, r0, i0, state.i_sign)

    dx1 = (-L2 * x3 - (2 * L2 * chi + D1) * x1 + 2 * L2 * x1**3
           + 2 * d1 * e.i_one - 2 * a2 * e.r_one)
    dx3 = (-3 * D1 * x3 - 6 * L2 * chi * x3 + 6 * L2 * x1**2 * x3
           - 6 * a2 * e.r_one * (r1**2 + r2 - 2 * r1 * x1 + 2 * x1**2 - chi)
           + 6 * d1 * e.i_one * (i1**2 + i2 - 2 * i1 * x1 + 2 * x1**2 - chi))

    # sector z, equations (1)-(4)
    dz0 = (-L2 * z2 - L2 * z1**2 - D1 + D4 - 4 * (W + a7 * i1) * e.iz
           - bb * e.one_z + 4 * a8 * r1 * e.rz)
    dz1 = (-L2 * z3 - 2 * L2 * z1 * z2 - D1 * z1
           - 4 * (d2 + W * i1 + a7 * i1**2 + a7 * i2 - W * z1 - a7 * i1 * z1) * e.iz
           + 4 * (d3 + a8 * r1**2 + a8 * r2 - a8 * r1 * z1) * e.rz
           + bb * (z1 - x1) * e.one_z)
    iz_quad = i1**2 + i2 - 2 * i1 * z1 + z1**2 - z2
    rz_quad = r1**2 + r2 - 2 * r1 * z1 + z1**2 - z2
    dz2 = (-2 * L2 * z2**2 - 2 * L2 * z1 * z3 - 2 * D1 * z2 + 2 * L3
           - 4 * a7 * i3 * e.iz - 8 * (d2 + a7 * i2) * (i1 - z1) * e.iz
           - 4 * (W + a7 * i1) * iz_quad * e.iz
           + 4 * (2 * d3 * r1 + a8 * r1**3 + 3 * a8 * r1 * r2 + a8 * r3 - 2 * d3 * z1
                  - 2 * a8 * r1**2 * z1 - 2 * a8 * r2 * z1 + a8 * r1 * z1**2 - a8 * r1 * z2) * e.rz)
    if fixed:
        dz2 -= bb * ((x1 - z1) ** 2 + chi - x1**2 - z2) * e.one_z
    iz_cube = (i1**3 + i3 - 3 * i1**2 * z1 - 3 * i2 * z1 - z1**3
               + 3 * i1 * (i2 + z1**2 - z2) + 3 * z1 * z2 - z3)
    rz_cube = (r1**3 + r3 - 3 * r1**2 * z1 - z1**3
               + 3 * r1 * (r2 + z1**2 - z2) + 3 * z1 * z2 - z3)
    xz_cube = (z1**3 + z3 - 3 * z1**2 * x1 + 3 * z2 * x1 + 2 * x1**3
               - 3 * chi * x1 + 3 * z1 * (chi - z2))
    dz3 = (-3 * D1 * z3 - 6 * L2 * z2 * z3
           - 12 * a7 * i3 * (i1 - z1) * e.iz + 12 * a8 * r3 * (r1 - z1) * e.rz
           - 12 * (d2 + a7 * i2) * iz_quad * e.iz + 12 * (d3 + a8 * r2) * rz_quad * e.rz
           - 4 * (W + a7 * i1) * iz_cube * e.iz + 4 * a8 * r1 * rz_cube * e.rz
           + bb * xz_cube * e.one_z)

    # sector r, equations (5)-(8)
    dr0 = -L2 * r1**2 - L2 * r2 - D1 + D3 - a8 * z1 * e.zr
    dr1 = (-L2 * r3 - 2 * L2 * r1 * r2 - D1 * r1 - 0.5 * a2 * e.one_r
           - (d3 - a8 * r1 * z1 + a8 * z1**2 + a8 * z2) * e.zr)
    dr2 = (-2 * L2 * r2**2 - 2 * L2 * r1 * r3 - 2 * D1 * r2 + 2 * L3
           - (2 * d3 * z1 - 2 * d3 * r1 + a8 * r1**2 * z1 - a8 * r2 * z1 - 2 * a8 * r1 * z1**2
              + a8 * z1**3 - 2 * a8 * r1 * z2 + 3 * a8 * z1 * z2 + a8 * z3) * e.zr
           + a2 * (r1 - x1) * e.one_r)
    zr_quad = r1**2 - r2 - 2 * r1 * z1 + z1**2 + z2
    zr_cube = (r1**3 - 3 * r1 * r2 + r3 - 3 * r1**2 * z1 + 3 * r2 * z1 + 3 * r1 * z1**2
               - z1**3 + 3 * r1 * z2 - 3 * z1 * z2 - z3)
    dr3 = (-3 * D1 * r3 - 6 * L2 * r2 * r3
           - 3 * (d3 + a8 * z2) * zr_quad * e.zr
           + a8 * z1 * zr_cube * e.zr
           + 3 * a8 * (r1 - z1) * z3 * e.zr
           - 1.5 * a2 * (r1**2 - r2 - 2 * r1 * x1 + chi) * e.one_r)

    # sector i, equations (9)-(12)
    di0 = -L2 * i1**2 - L2 * i2 + D4 - D1 + (W + a2 * z1) * e.zi
    di1 = (-L2 * i3 - 2 * L2 * i1 * i2 - D1 * i1 + 0.5 * d1 * e.one_i
           - (i1 - z1) * (W + a2 * z1) * e.zi + (d2 + a2 * z2) * (e.zi if fixed else e.iz))
    zi_quad = i1**2 - i2 - 2 * i1 * z1 + z1**2 + z2
    di2 = (-2 * L2 * i2**2 - 2 * L2 * i1 * i3 - 2 * D1 * i2 + 2 * L3
           + (W + a2 * z1) * zi_quad * e.zi
           - 2 * (i1 - z1) * (d2 + a2 * z2) * e.zi
           + a2 * z3 * e.zi - d1 * (i1 - x1) * e.one_i)
    zi_cube = (3 * i1**2 * z1 - i1**3 - i3 - 3 * i2 * z1 + z1**3 + 3 * i1 * i2
               - 3 * i1 * z1**2 - 3 * i1 * z2 + 3 * z1 * z2 + z3)
    di3 = (-3 * D1 * i3 - 6 * L2 * i2 * i3
           + 3 * (d2 + a2 * z2) * zi_quad * e.zi
           - 3 * a2 * z3 * (i1 - z1) * e.zi
           + (W + a2 * z1) * zi_cube * e.zi
           + 1.5 * d1 * (i1**2 - i2 - 2 * i1 * x1 + chi) * e.one_i)

    return np.array([dx1, dx3, dz0, dz1, dz2, dz3, dr0, dr1, dr2, dr3, di0, di1, di2, di3])


def cumulant_rhs(state: CumulantState, coeffs: CoefficientSet, form: str = "reconciled") -> np.ndarray:
    return (rhs_close3 if state.closure == "close3" else rhs_close4)(state, coeffs, form)


def constraint_residual(x1, chi, coeffs: CoefficientSet):
    """Zeroth-order constraint ``lambda_bar_2 (x1^2 + x2) + Delta_1 - lambda_4`` with x2 = chi - x1^2."""
    x2 = chi - np.asarray(x1) ** 2
    return coeffs.lambda_bar_2 * (np.asarray(x1) ** 2 + x2) + coeffs.Delta_1 - coeffs.lambda_4


@dataclasses.dataclass
class CumulantSeries:
    closure: str
    times: np.ndarray
    values: np.ndarray  # columns follow VARIABLES[closure]
    chi: float
    x0: float
    constraint_residual: np.ndarray
    failed_at: float | None = None
    form: str = "reconciled"

    @property
    def names(self):
        return VARIABLES[self.closure]

    def channel(self, name: str) -> np.ndarray:
        if name == "x2":
            return self.chi - self.channel("x1") ** 2
        if name == "x0":
            return np.full(len(self.times), self.x0)
        if name in ("x3", "z3", "r3", "i3") and self.closure == "close3":
            return np.zeros(len(self.times))
        return self.values[:, self.names.index(name)]

    def columns(self):
        """Every cumulant in a fixed order: x0..x3, then z, r, i sectors."""
        order = [f"{s}{k}" for s in "xzri" for k in range(4)]
        return order, np.column_stack([self.channel(n) for n in order])


def evolve_cumulants(
    state: CumulantState,
    coeffs: CoefficientSet,
    t_end: float,
    dt: float = 1e-3,
    record_every: int = 1,
    threshold: float = BLOWUP_THRESHOLD,
    form: str = "reconciled",
) -> CumulantSeries:
    _check_form(form)
    closure, chi, x0, sign = state.closure, state.chi, state.x_cum[0], state.i_sign
    kernel = rhs_close3 if closure == "close3" else rhs_close4

    def rhs(t, y):
        return kernel(CumulantState.from_vector(closure, y, chi, x0, t, sign), coeffs, form)

    n_steps = step_count(t_end, dt)
    h = t_end / n_steps if n_steps else dt
    y = state.vector()
    times, rows = [state.time], [y.copy()]

    def pack(failed_at=None):
        t_arr, v_arr = np.array(times), np.array(rows)
        return CumulantSeries(closure, t_arr, v_arr, chi, x0,
                              constraint_residual(v_arr[:, 0], chi, coeffs), failed_at, form)

    for k in range(1, n_steps + 1):
        t = state.time + (k - 1) * h
        with np.errstate(over="ignore", invalid="ignore"):
            try:
                y_new = rk4_step(rhs, t, y, h)
            except OverflowError:
                y_new = np.full_like(y, np.inf)
        if not np.all(np.isfinite(y_new)) or np.abs(y_new).max() > threshold:
            raise BlowUp(f"{closure} cumulants diverged", t + h, pack(t + h))
        y = y_new
        if k % record_every == 0 or k == n_steps:
            times.append(state.time + k * h)
            rows.append(y.copy())
    return pack()
