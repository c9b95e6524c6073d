"""Truncated linear hierarchy for the position moments of the four fields.

Each order n carries a 4-vector R_n = (<xi^n rho+>, <xi^n rho->, <xi^n C_R>,
<xi^n C_I>) obeying

    dR_n/dt = M_n R_n + A_n R_{n-1} + B_n R_{n-2} + C R_{n+1} + D R_{n+2}

with R_{N+1} = R_{N+2} = 0 above the retained order N.

Three coupling layouts are available.

``"reconciled"`` (the default) is the exact moment projection of the default
field equations in :mod:`oqbm.pde`.
``"printed"`` follows the published moment equations term by term. It
differs from ``"reconciled"`` in one entry: its C_R row reads
a_bar_8 <xi^n rho->, while projecting the a_bar_8 xi rho- field term gives
a_bar_8 <xi^(n+1) rho->.
``"pde-printed"`` projects the field equations with their published
delta_bar_2 sign, so the rho- row carries -4 delta_bar_2 n <xi^(n-1) C_I>.
"""

from __future__ import annotations

import dataclasses
import math
from typing import NamedTuple

import numpy as np

from .coefficients import CoefficientSet
from .errors import BlowUp, UnsupportedProfile
from .field import COMPONENTS, BlochInit
from .stepping import rk4_step, step_count

FORMS = ("reconciled", "printed", "pde-printed")
P, Z, R, I = range(4)


class Blocks(NamedTuple):
    M: np.ndarray
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray


def _check_form(form):
    if form not in FORMS:
        raise ValueError(f"form must be one of {FORMS}, got {form!r}")


def build_blocks(n: int, coeffs: CoefficientSet, form: str = "reconciled") -> Blocks:
    """The five 4x4 coupling matrices for order ``n``."""
    if n < 0:
        raise ValueError("order must be >= 0")
    _check_form(form)
    c = coeffs
    shift = c.Delta_1 * (n + 1)
    M = np.diag([c.lambda_4 - shift, c.Delta_2 - shift, c.Delta_3 - shift, c.Delta_4 - shift])
    M[Z, P] = -c.beta_diff
    M[Z, I] = -4 * c.Omega_drive
    M[I, Z] = c.Omega_drive

    A = np.zeros((4, 4))
    A[P, R] = -2 * c.a_bar_2
    A[P, I] = 2 * c.delta_bar_1
    A[Z, R] = 4 * c.delta_bar_3
    A[Z, I] = (-4 if form == "pde-printed" else 4) * c.delta_bar_2
    A[R, P] = -0.5 * c.a_bar_2
    A[R, Z] = -c.delta_bar_3
    A[I, P] = 0.5 * c.delta_bar_1
    A[I, Z] = c.delta_bar_2

    C = np.zeros((4, 4))
    C[Z, R] = -4 * c.a_bar_8
    C[Z, I] = 4 * c.a_bar_7
    C[I, Z] = -c.a_bar_7

    if form == "printed":
        M[R, Z] = c.a_bar_8
    else:
        C[R, Z] = c.a_bar_8

    return Blocks(M, n * A, c.lambda_bar_3 * n * (n - 1) * np.eye(4), C, -c.lambda_bar_2 * np.eye(4))


@dataclasses.dataclass
class MomentState:
    n_trunc: int
    vectors: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        self.vectors = np.asarray(self.vectors, dtype=float)
        if self.vectors.shape != (self.n_trunc + 1, 4):
            raise ValueError(f"vectors must have shape ({self.n_trunc + 1}, 4)")
        if not np.all(np.isfinite(self.vectors)):
            raise ValueError("moment vectors must be finite")

    def scaled(self, factor):
        return MomentState(self.n_trunc, factor * self.vectors, self.time)


def gaussian_moment(n: int) -> float:
    """``<xi^n>`` of ``exp(-xi^2)/sqrt(pi)``; exactly zero for odd ``n``."""
    if n % 2:
        return 0.0
    return math.gamma((1 + n) / 2) / math.sqrt(math.pi)


def init_moments(n_trunc: int, init: BlochInit) -> MomentState:
    if init.j != 2:
        raise UnsupportedProfile(
            f"closed-form initial moments need j = 2, got j = {init.j}; take them from the grid instead"
        )
    if n_trunc < 0:
        raise ValueError("n_trunc must be >= 0")
    weights = np.array(init.weights())
    profile = np.array([gaussian_moment(n) for n in range(n_trunc + 1)])
    return MomentState(n_trunc, profile[:, None] * weights[None, :], 0.0)


class _Hierarchy:
    """Vectorized right-hand side over all retained orders."""

    def __init__(self, n_trunc, coeffs, form):
        blocks = [build_blocks(n, coeffs, form) for n in range(n_trunc + 1)]
        self.M = np.stack([b.M for b in blocks])
        self.A = np.stack([b.A for b in blocks])
        self.b = np.array([b.B[0, 0] for b in blocks])
        self.C = blocks[0].C
        self.d = blocks[0].D[0, 0]

    def __call__(self, t, v):
        out = np.einsum("nij,nj->ni", self.M, v)
        out[1:] += np.einsum("nij,nj->ni", self.A[1:], v[:-1])
        out[2:] += self.b[2:, None] * v[:-2]
        out[:-1] += v[1:] @ self.C.T
        out[:-2] += self.d * v[2:]
        return out


def moment_rhs(state: MomentState, coeffs: CoefficientSet, form: str = "reconciled") -> np.ndarray:
    return _Hierarchy(state.n_trunc, coeffs, form)(state.time, state.vectors)


@dataclasses.dataclass
class MomentSeries:
    times: np.ndarray
    moments: np.ndarray  # shape (len(times), N + 1, 4)
    form: str
    failed_at: float | None = None

    def channel(self, n: int, which: str = "rho_plus") -> np.ndarray:
        return self.moments[:, n, COMPONENTS.index(which)]

    def final_state(self) -> MomentState:
        return MomentState(self.moments.shape[1] - 1, self.moments[-1], float(self.times[-1]))


def evolve_moments(
    state: MomentState,
    coeffs: CoefficientSet,
    t_end: float,
    dt: float = 1e-2,
    form: str = "reconciled",
    record_every: int = 1,
) -> MomentSeries:
    if state.n_trunc < 4:
        raise ValueError("truncation order must be >= 4")
    _check_form(form)
    rhs = _Hierarchy(state.n_trunc, coeffs, form)
    n_steps = step_count(t_end, dt)
    h = t_end / n_steps if n_steps else dt
    times = [state.time]
    frames = [state.vectors.copy()]
    v = state.vectors.copy()
    for k in range(1, n_steps + 1):
        t = state.time + (k - 1) * h
        v = rk4_step(rhs, t, v, h)
        if not np.all(np.isfinite(v)):
            partial = MomentSeries(np.array(times), np.array(frames), form, failed_at=t + h)
            raise BlowUp("moment hierarchy became non-finite", t + h, partial)
        if k % record_every == 0 or k == n_steps:
            times.append(state.time + k * h)
            frames.append(v.copy())
    return MomentSeries(np.array(times), np.array(frames), form)
