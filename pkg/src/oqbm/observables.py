"""Reported quantities derived from fields, moment series and cumulants.

Statistics are taken on the trace-normalized distribution because the
dynamics does not conserve the trace.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np

from .errors import DegenerateDistribution
from .field import HybridField, trapezoid

VARIANCE_FLOOR = 1e-14
CHANNELS = ("trace", "mean", "variance", "skewness", "excess_kurtosis", "c_i_integral", "sigma_z")


def probability_density(field: HybridField) -> np.ndarray:
    return field.rho_plus.copy()


def sigma_z_expectation(field: HybridField) -> float:
    return float(trapezoid(field.rho_minus, field.grid.dx))


def c_i_integral(field: HybridField) -> float:
    return float(trapezoid(field.c_imag, field.grid.dx))


def raw_moments(field: HybridField, order: int = 4) -> np.ndarray:
    x = field.grid.x
    return np.array([trapezoid(x**n * field.rho_plus, field.grid.dx) for n in range(order + 1)])


def stats_from_moments(m):
    """(mean, variance, skewness, excess kurtosis) from raw moments m0..m4."""
    m = np.asarray(m, dtype=float)
    if m.shape[0] < 5:
        raise ValueError("need raw moments up to order 4")
    if not m[0] > 0:
        raise DegenerateDistribution(f"trace {m[0]:.3g} is not positive")
    mu = m[1] / m[0]
    e2, e3, e4 = m[2] / m[0], m[3] / m[0], m[4] / m[0]
    var = e2 - mu**2
    if not var > VARIANCE_FLOOR:
        raise DegenerateDistribution(f"variance {var:.3g} is not positive")
    c3 = e3 - 3 * mu * e2 + 2 * mu**3
    c4 = e4 - 4 * mu * e3 + 6 * mu**2 * e2 - 3 * mu**4
    return mu, var, c3 / var**1.5, c4 / var**2 - 3.0


def central_stats(source):
    """(mean, variance, skewness, excess kurtosis) of a field or of raw moments."""
    if isinstance(source, HybridField):
        x, dx, p = source.grid.x, source.grid.dx, source.rho_plus
        trace = trapezoid(p, dx)
        if not trace > 0:
            raise DegenerateDistribution(f"trace {trace:.3g} is not positive")
        mu = trapezoid(x * p, dx) / trace
        # central moments directly on the grid to avoid cancellation
        d = x - mu
        c2, c3, c4 = (trapezoid(d**k * p, dx) / trace for k in (2, 3, 4))
        if not c2 > VARIANCE_FLOOR:
            raise DegenerateDistribution(f"variance {c2:.3g} is not positive")
        return float(mu), float(c2), float(c3 / c2**1.5), float(c4 / c2**2 - 3.0)
    return stats_from_moments(source)


def cumulants_from_moments(m) -> np.ndarray:
    """Cumulants k0..kK from raw moments m0..mK (K <= 4); k0 = ln m0."""
    m = np.asarray(m, dtype=float)
    order = m.shape[0] - 1
    if order > 4:
        raise ValueError("orders above 4 are not supported")
    if not m[0] > 0:
        raise ValueError("zeroth moment must be positive")
    e = m / m[0]
    k = np.zeros(order + 1)
    k[0] = math.log(m[0])
    if order >= 1:
        k[1] = e[1]
    if order >= 2:
        k[2] = e[2] - e[1] ** 2
    if order >= 3:
        k[3] = e[3] - 3 * e[1] * e[2] + 2 * e[1] ** 3
    if order >= 4:
        k[4] = e[4] - 4 * e[1] * e[3] - 3 * e[2] ** 2 + 12 * e[1] ** 2 * e[2] - 6 * e[1] ** 4
    return k


def moments_from_cumulants(k) -> np.ndarray:
    """Inverse of :func:`cumulants_from_moments`."""
    k = np.asarray(k, dtype=float)
    order = k.shape[0] - 1
    if order > 4:
        raise ValueError("orders above 4 are not supported")
    m0 = math.exp(k[0])
    k1, k2, k3, k4 = (list(k[1:]) + [0.0] * 4)[:4]
    e = [1.0, k1, k2 + k1**2, k3 + 3 * k2 * k1 + k1**3,
         k4 + 4 * k3 * k1 + 3 * k2**2 + 6 * k2 * k1**2 + k1**4]
    return m0 * np.array(e[: order + 1])


@dataclasses.dataclass
class ObservableSeries:
    times: np.ndarray
    trace: np.ndarray
    mean: np.ndarray
    variance: np.ndarray
    skewness: np.ndarray
    excess_kurtosis: np.ndarray
    c_i_integral: np.ndarray
    sigma_z: np.ndarray

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        for name in CHANNELS:
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != self.times.shape:
                raise ValueError(f"channel {name} is not aligned with times")
            setattr(self, name, arr)

    @classmethod
    def from_fields(cls, fields):
        rows = []
        for f in fields:
            stats = central_stats(f)
            rows.append((f.time, trapezoid(f.rho_plus, f.grid.dx), *stats, c_i_integral(f), sigma_z_expectation(f)))
        cols = np.array(rows).T if rows else np.zeros((8, 0))
        return cls(*cols)

    @classmethod
    def from_moment_array(cls, times, moments):
        """From a hierarchy array of shape (T, N + 1, 4); needs N >= 4."""
        moments = np.asarray(moments)
        stats = np.array([stats_from_moments(moments[k, :5, 0]) for k in range(len(times))])
        return cls(times, moments[:, 0, 0], *stats.T, moments[:, 0, 3], moments[:, 0, 1])
