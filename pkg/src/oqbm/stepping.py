"""Classic fixed-step fourth-order Runge-Kutta, shared by all three solvers."""

import numpy as np


def rk4_step(rhs, t, y, dt):
    k1 = rhs(t, y)
    k2 = rhs(t + 0.5 * dt, y + 0.5 * dt * k1)
    k3 = rhs(t + 0.5 * dt, y + 0.5 * dt * k2)
    k4 = rhs(t + dt, y + dt * k3)
    return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def step_count(t_end, dt):
    """Number of equal steps not exceeding ``dt`` that land exactly on ``t_end``."""
    if t_end < 0:
        raise ValueError("t_end must be >= 0")
    if not dt > 0:
        raise ValueError("dt must be > 0")
    if t_end == 0:
        return 0
    n = int(np.ceil(t_end / dt - 1e-9))
    return max(n, 1)
