"""Position-diagonal qubit density on a uniform grid.

The grid coordinate is the dimensionless position ``xi = x / x_scale``; the
four stored profiles are the scaled densities, so a moment of order n is a
plain trapezoid integral ``int xi**n f(xi) dxi``.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np

from .errors import GridTooNarrow

COMPONENTS = ("rho_plus", "rho_minus", "c_real", "c_imag")
TAIL_TOLERANCE = 1e-12


@dataclasses.dataclass(frozen=True)
class Grid:
    x_min: float = -60.0
    x_max: float = 60.0
    n_points: int = 1201

    def __post_init__(self):
        if not self.x_max > self.x_min:
            raise ValueError("x_max must exceed x_min")
        if int(self.n_points) != self.n_points or self.n_points < 16:
            raise ValueError("n_points must be an integer >= 16")

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / (self.n_points - 1)

    @property
    def x(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, int(self.n_points))

    def refined(self, factor: int = 2) -> "Grid":
        """Same interval with every cell split ``factor`` times (nested nodes)."""
        return Grid(self.x_min, self.x_max, (self.n_points - 1) * factor + 1)


@dataclasses.dataclass(frozen=True)
class BlochInit:
    """Pure internal state at angles (theta, phi) times exp(-xi**j)."""

    theta: float
    phi: float
    j: int = 2

    def __post_init__(self):
        if not 0 <= self.theta < math.pi:
            raise ValueError("theta must lie in [0, pi)")
        if not 0 <= self.phi < 2 * math.pi:
            raise ValueError("phi must lie in [0, 2 pi)")
        if int(self.j) != self.j or self.j < 2 or self.j % 2:
            raise ValueError("j must be an even integer >= 2")

    def weights(self):
        """Component weights (rho_plus, rho_minus, c_real, c_imag) per unit trace.

        The coherence is rho_12 = sin(2 theta) exp(-i phi) / 2, so the
        imaginary part carries a minus sign.
        """
        s2 = math.sin(2 * self.theta)
        return (
            1.0,
            math.cos(2 * self.theta),
            0.5 * s2 * math.cos(self.phi),
            -0.5 * s2 * math.sin(self.phi),
        )


@dataclasses.dataclass
class HybridField:
    grid: Grid
    rho_plus: np.ndarray
    rho_minus: np.ndarray
    c_real: np.ndarray
    c_imag: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        for name in COMPONENTS:
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != (self.grid.n_points,):
                raise ValueError(f"{name} has shape {arr.shape}, expected ({self.grid.n_points},)")
            setattr(self, name, arr)

    def stack(self) -> np.ndarray:
        return np.stack([self.rho_plus, self.rho_minus, self.c_real, self.c_imag])

    @classmethod
    def from_stack(cls, grid, values, time=0.0):
        values = np.asarray(values, dtype=float)
        return cls(grid, values[0].copy(), values[1].copy(), values[2].copy(), values[3].copy(), time)

    def component(self, which: str) -> np.ndarray:
        if which not in COMPONENTS:
            raise ValueError(f"component must be one of {COMPONENTS}, got {which!r}")
        return getattr(self, which)

    def scaled(self, factor: float) -> "HybridField":
        return HybridField.from_stack(self.grid, factor * self.stack(), self.time)


def trapezoid(values, dx):
    values = np.asarray(values)
    return dx * (values.sum(axis=-1) - 0.5 * (values[..., 0] + values[..., -1]))


def init_field(grid: Grid, init: BlochInit) -> HybridField:
    """Normalized ``exp(-xi**j)`` profile dressed with the internal pure state."""
    reach = min(abs(grid.x_min), abs(grid.x_max))
    if grid.x_min >= 0 or grid.x_max <= 0 or math.exp(-(reach ** init.j)) >= TAIL_TOLERANCE:
        raise GridTooNarrow(
            f"exp(-x^{init.j}) at the grid edge must be below {TAIL_TOLERANCE:g}; "
            f"grid [{grid.x_min}, {grid.x_max}] is too narrow"
        )
    x = grid.x
    profile = np.exp(-(x ** init.j))
    profile /= trapezoid(profile, grid.dx)
    w_p, w_m, w_r, w_i = init.weights()
    return HybridField(grid, w_p * profile, w_m * profile, w_r * profile, w_i * profile, 0.0)


def profile_norm(grid: Grid, j: int) -> float:
    """``I_j = int exp(-xi**j) dxi`` by trapezoid on ``grid``."""
    return float(trapezoid(np.exp(-(grid.x ** j)), grid.dx))


def grid_moment(field: HybridField, n: int, which: str = "rho_plus") -> float:
    if n < 0:
        raise ValueError("moment order must be >= 0")
    x = field.grid.x
    return float(trapezoid(x**n * field.component(which), field.grid.dx))


def grid_moments(field: HybridField, n_max: int) -> np.ndarray:
    """All moments up to ``n_max`` as an array of shape (n_max + 1, 4)."""
    x = field.grid.x
    powers = x[None, :] ** np.arange(n_max + 1)[:, None]
    return trapezoid(powers[:, None, :] * field.stack()[None, :, :], field.grid.dx)


def bloch_defect(field: HybridField) -> float:
    """Largest pointwise violation of the 2x2 positivity bound (0 if physical)."""
    p, m, r, i = field.stack()
    excess = m * m + 4 * r * r + 4 * i * i - p * p
    return float(max(0.0, excess.max(), (-p).max()))
