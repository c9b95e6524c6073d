"""Master-equation coefficients from microscopic bath and system inputs.

Two entry points produce a :class:`CoefficientSet`:

* :func:`build_coefficients` evaluates every rate, shift and cross-term
  constant from a :class:`PhysicalParams` (microscopic mode), including the
  Cauchy principal-value integrals over the bath spectral density.
* :func:`direct_coefficients` assembles a set verbatim from a name -> value
  map (phenomenological mode), which is how the figure presets specify their
  dynamics.

Units: ``hbar`` and ``k_B`` are configurable but default to 1, and the bath
temperature is always passed as the energy ``k_B T``.
"""

from __future__ import annotations

import dataclasses
import math
import warnings
from fractions import Fraction

import numpy as np
from scipy import integrate

from .errors import DegenerateBath, NonConvergence, PositivityViolation, UnknownKey

OHMIC = "ohmic-exp-cutoff"
FLAT = "flat-window"
SPECTRAL_KINDS = (OHMIC, FLAT)

# occupation-number weights multiplying J(w) in the principal-value kernels
PV_WEIGHTS = ("one", "n", "n+1", "n+1/2")

PV_RTOL = 1e-8
UPPER_LIMIT_FACTOR = 50.0


class WeakDriveWarning(UserWarning):
    pass


@dataclasses.dataclass(frozen=True)
class SpectralSpec:
    kind: str = OHMIC
    eta: float = 0.05
    omega_c: float = 20.0

    def __post_init__(self):
        if self.kind not in SPECTRAL_KINDS:
            raise ValueError(f"spectral kind must be one of {SPECTRAL_KINDS}, got {self.kind!r}")
        if not self.eta >= 0:
            raise ValueError("eta must be >= 0")
        if not self.omega_c > 0:
            raise ValueError("omega_c must be > 0")

    def upper_limit(self) -> float:
        if self.kind == FLAT:
            return self.omega_c
        return UPPER_LIMIT_FACTOR * self.omega_c


@dataclasses.dataclass(frozen=True)
class PhysicalParams:
    """Microscopic inputs. ``temperature`` is k_B T in energy units."""

    m: float = 1.0
    omega: float = 1.0
    omega0: float = 5.0
    Omega_drive: float = 0.1
    alpha: float = 0.1
    temperature: float = 2.0
    hbar: float = 1.0
    x_scale: float = 1.0
    spectral: SpectralSpec = dataclasses.field(default_factory=SpectralSpec)

    def __post_init__(self):
        for name in ("m", "omega", "omega0", "x_scale", "hbar"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")
        if not self.temperature >= 0:
            raise ValueError("temperature must be >= 0")
        if abs(self.Omega_drive) >= 0.1 * self.omega0:
            warnings.warn(
                f"drive amplitude {self.Omega_drive} is not small against omega0 = {self.omega0}; "
                "the weak-drive approximation behind the coefficients may not hold",
                WeakDriveWarning,
                stacklevel=3,
            )


def occupation(omega_eval, temperature, hbar=1.0):
    """Bose-Einstein occupation ``1 / (exp(hbar*w / kT) - 1)``.

    Exactly zero at ``temperature == 0``. Accepts scalars or arrays.
    """
    w = np.asarray(omega_eval, dtype=float)
    if temperature == 0:
        out = np.zeros_like(w)
    else:
        with np.errstate(divide="ignore", over="ignore"):
            out = 1.0 / np.expm1(hbar * w / temperature)
    return out if out.ndim else float(out)


def spectral_density(omega_eval, spec: SpectralSpec):
    w = np.asarray(omega_eval, dtype=float)
    if spec.kind == OHMIC:
        out = spec.eta * w * np.exp(-w / spec.omega_c)
    else:
        out = np.where((w >= 0) & (w <= spec.omega_c), spec.eta, 0.0)
    return out if out.ndim else float(out)


def _weighted_density(weight, spec, temperature, hbar):
    """Return f(w) = J(w) * g(w) with g one of 1, n, n+1, n+1/2."""
    if weight not in PV_WEIGHTS:
        raise ValueError(f"unknown kernel weight {weight!r}; expected one of {PV_WEIGHTS}")

    def f(w):
        j = spectral_density(w, spec)
        if weight == "one":
            return j
        n = occupation(w, temperature, hbar)
        if weight == "n":
            return j * n
        if weight == "n+1":
            return j * (n + 1.0)
        return j * (n + 0.5)

    return f


def _quad(func, a, b, rtol):
    value, abserr, info = integrate.quad(func, a, b, epsabs=0.0, epsrel=rtol * 1e-2, limit=400, full_output=1)[:3]
    return value, abserr


def principal_value(integrand_kind, pole, spec: SpectralSpec, temperature, hbar=1.0, rtol=PV_RTOL):
    """Cauchy principal value of ``P int_0^U J(w) g(w) / (w - pole) dw``.

    ``integrand_kind`` picks the weight g from ``PV_WEIGHTS``. The singular
    part is removed by folding the window ``[pole - h, pole + h]`` onto
    itself, which leaves the regular integrand ``(f(p+s) - f(p-s)) / s``;
    the remainder outside the window carries no singularity.
    """
    if not pole > 0:
        raise ValueError("pole must be > 0")
    if spec.eta == 0:
        return 0.0
    if spec.kind == FLAT and temperature > 0 and integrand_kind != "one":
        # J n(w) ~ eta kT / (hbar w) at w -> 0, a log divergence
        raise NonConvergence(
            f"kernel J*{integrand_kind} diverges at zero frequency for a flat window at T > 0"
        )
    upper = spec.upper_limit()
    f = _weighted_density(integrand_kind, spec, temperature, hbar)
    if spec.kind == FLAT and math.isclose(pole, upper, rel_tol=1e-12):
        raise NonConvergence("pole coincides with the flat-window edge; the integral diverges")

    pieces = []
    if pole < upper:
        half = min(pole, upper - pole)

        def folded(s):
            return (f(pole + s) - f(pole - s)) / s

        pieces.append(_quad(folded, 0.0, half, rtol))
        if pole - half > 0:
            pieces.append(_quad(lambda w: f(w) / (w - pole), 0.0, pole - half, rtol))
        if pole + half < upper:
            pieces.append(_quad(lambda w: f(w) / (w - pole), pole + half, upper, rtol))
    else:
        pieces.append(_quad(lambda w: f(w) / (w - pole), 0.0, upper, rtol))

    value = math.fsum(p[0] for p in pieces)
    err = sum(p[1] for p in pieces)
    scale = max(abs(value), math.fsum(abs(p[0]) for p in pieces) * 1e-3, 1e-300)
    if not math.isfinite(value) or err > rtol * scale:
        raise NonConvergence(f"principal value reached error {err:.3g} against value {value:.6g}")
    return value


# -- coefficient set ---------------------------------------------------------

@dataclasses.dataclass(frozen=True)
class CoefficientSet:
    """Every constant appearing in the position-diagonal dynamics.

    Tilde/unbarred quantities are in the dimensionful position variable;
    barred ones are the dimensionless versions after scaling by
    ``x_scale``. The solvers only read the barred entries, ``lambda_4``,
    the ``Delta_*``, ``beta_diff``, ``Omega_drive`` and ``chi``.
    """

    alpha_bar_1: float = 0.0
    alpha_bar_2: float = 0.0
    alpha_bar_3: float = 0.0
    beta_1: float = 0.0
    beta_2: float = 0.0
    beta_3: float = 0.0
    a_tilde_1: float = 0.0
    a_tilde_2: float = 0.0
    a_tilde_3: float = 0.0
    a_tilde_4: float = 0.0
    a_tilde_5: float = 0.0
    a_tilde_6: float = 0.0
    a_tilde_7: float = 0.0
    a_tilde_8: float = 0.0
    lambda_1: float = 0.0
    lambda_2: float = 0.0
    lambda_3: float = 0.0
    lambda_4: float = 0.0
    lambda_bar_2: float = 0.0
    lambda_bar_3: float = 0.0
    Delta_1: float = 0.0
    Delta_2: float = 0.0
    Delta_3: float = 0.0
    Delta_4: float = 0.0
    delta_1: float = 0.0
    delta_2: float = 0.0
    delta_3: float = 0.0
    delta_bar_1: float = 0.0
    delta_bar_2: float = 0.0
    delta_bar_3: float = 0.0
    beta_diff: float = 0.0
    a_bar_2: float = 0.0
    a_bar_7: float = 0.0
    a_bar_8: float = 0.0
    Omega_drive: float = 0.0
    chi: float = 0.0
    gamma: float = 0.0
    x_scale: float = 1.0
    phenomenological: bool = False

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)

    def replace(self, **changes) -> "CoefficientSet":
        return dataclasses.replace(self, **changes)


COEFFICIENT_NAMES = tuple(
    f.name for f in dataclasses.fields(CoefficientSet) if f.name != "phenomenological"
)

# (dimensionful name, dimensionless name, power of x_scale: bar = tilde * x**p)
_SCALED_PAIRS = (
    ("lambda_2", "lambda_bar_2", 2),
    ("lambda_3", "lambda_bar_3", -2),
    ("delta_1", "delta_bar_1", -1),
    ("delta_2", "delta_bar_2", -1),
    ("delta_3", "delta_bar_3", -1),
    ("a_tilde_2", "a_bar_2", -1),
    ("a_tilde_7", "a_bar_7", 1),
    ("a_tilde_8", "a_bar_8", 1),
)

ALIASES = {
    "Omega": "Omega_drive",
    "beta": "beta_diff",
    "beta_bar": "beta_diff",
    # the moment-figure captions write lambda_4 with a bar; it carries no x scale
    "lambda_bar_4": "lambda_4",
}


def direct_coefficients(raw=None, x_scale=None) -> CoefficientSet:
    """Assemble a phenomenological coefficient set from a name -> value map.

    Unspecified entries are zero. Either member of a dimensionful /
    dimensionless pair may be given; the partner is filled in using
    ``x_scale`` (default 1). ``chi`` is taken as given.
    """
    raw = dict(raw or {})
    if "x_scale" in raw:
        if x_scale is not None and float(raw["x_scale"]) != float(x_scale):
            raise ValueError("x_scale given twice with different values")
        x_scale = raw.pop("x_scale")
    x = 1.0 if x_scale is None else float(x_scale)
    if not x > 0:
        raise ValueError("x_scale must be > 0")

    values = {}
    for key, value in raw.items():
        name = ALIASES.get(key, key)
        if name not in COEFFICIENT_NAMES:
            raise UnknownKey(key)
        if name in values:
            raise ValueError(f"coefficient {name!r} given more than once (via {key!r})")
        values[name] = float(value)

    for tilde, bar, power in _SCALED_PAIRS:
        if tilde in values and bar in values:
            if not math.isclose(values[bar], values[tilde] * x**power, rel_tol=1e-12, abs_tol=0.0):
                raise ValueError(f"{tilde} and {bar} are inconsistent for x_scale = {x}")
        elif tilde in values:
            values[bar] = values[tilde] * x**power
        elif bar in values:
            values[tilde] = values[bar] / x**power

    return CoefficientSet(x_scale=x, phenomenological=True, **values)


def _oscillator_rates(j_w, n_w, m, omega, pi):
    """QHO dissipator rates; generic in the number type so that the
    determinant check can run in exact rational arithmetic."""
    a1 = pi / 4 * j_w * (2 * n_w + 1)
    a2 = pi * j_w / (4 * (m * omega) ** 2) * (2 * n_w + 1)
    a3 = pi * j_w / (4 * m * omega)
    return a1, a2, a3


def kossakowski_determinant(params: PhysicalParams) -> float:
    """``4 a1 a2 - 4 a3**2`` for the oscillator dissipator.

    The determinant is formed in exact rational arithmetic on the floating
    inputs so that the low-temperature cancellation between the two products
    does not lose digits, then compared against ``(pi J / m w)**2 n (n+1)``.
    """
    j_w = spectral_density(params.omega, params.spectral)
    n_w = occupation(params.omega, params.temperature, params.hbar)
    fr = [Fraction(v) for v in (j_w, n_w, params.m, params.omega, math.pi)]
    a1, a2, a3 = _oscillator_rates(*fr)
    det = float(4 * a1 * a2 - 4 * a3**2)
    closed = (math.pi * j_w / (params.m * params.omega)) ** 2 * n_w * (n_w + 1.0)
    if det < -1e-12:
        raise PositivityViolation(f"Kossakowski determinant is negative: {det}")
    scale = max(abs(closed), abs(det))
    if scale > 0 and abs(det - closed) > 1e-12 * scale:
        raise PositivityViolation(f"determinant {det} disagrees with closed form {closed}")
    return det


def build_coefficients(params: PhysicalParams) -> CoefficientSet:
    """Evaluate the full coefficient set from microscopic inputs."""
    spec = params.spectral
    hbar, m, w, w0, alpha, kT = (
        params.hbar, params.m, params.omega, params.omega0, params.alpha, params.temperature,
    )
    x = params.x_scale

    j_w = spectral_density(w, spec)
    j_w0 = spectral_density(w0, spec)
    n_w = occupation(w, kT, hbar)
    n_w0 = occupation(w0, kT, hbar)

    a1, a2, a3 = _oscillator_rates(j_w, n_w, m, w, math.pi)
    if a1 == 0:
        raise DegenerateBath("J(omega) = 0: the friction ratio gamma is undefined")
    gamma = 2 * hbar * a3 / a1

    def pv(kind, pole):
        return principal_value(kind, pole, spec, kT, hbar)

    beta_1 = 2 * alpha**2 * math.pi * j_w0 * (n_w0 + 1)
    beta_2 = 2 * alpha**2 * math.pi * j_w0 * n_w0
    beta_3 = alpha**2 * pv("n+1", w0)

    alpha_0 = 1.0 / math.sqrt(2 * hbar * m * w)
    pref = hbar * alpha / (2 * m * w)
    at1 = hbar * math.pi * alpha_0 * (j_w0 * n_w0 + j_w * n_w)
    at2 = hbar * math.pi * alpha / (2 * m * w) * j_w0
    at3 = hbar * math.pi * alpha / (4 * m * w) * j_w
    at4 = pref * pv("n", w0)
    at5 = pref * pv("one", w0)
    at6 = pref * pv("n+1/2", w)
    at7 = alpha / 2 * pv("one", w)
    at8 = alpha * j_w / 2 * math.pi

    lam1 = w**2 / (a1 * gamma)
    lam2 = m**2 * w**4 / (a1 * hbar**2)
    lam3 = a2 * hbar**2
    lam4 = 2 * a3 * hbar

    D1 = lam4 - lam1
    D2 = lam4 - beta_2 - beta_1
    D3 = lam4 - 0.5 * (beta_2 + beta_1)
    D4 = 2 * beta_3 + D3 - w0
    d1 = 2 * at4 + at5
    d2 = 0.5 * at5 + at6
    d3 = at1 + at3 + 0.5 * at2

    chi = hbar * (2 * n_w + 1) / (2 * m * w * x**2)
    lam_bar_2 = lam2 * x**2
    if lam_bar_2 > 0:
        implied = (lam4 - D1) / lam_bar_2
        if not math.isclose(chi, implied, rel_tol=1e-10):
            raise AssertionError(f"chi = {chi} but (lambda_4 - Delta_1) / lambda_bar_2 = {implied}")

    return CoefficientSet(
        alpha_bar_1=a1, alpha_bar_2=a2, alpha_bar_3=a3,
        beta_1=beta_1, beta_2=beta_2, beta_3=beta_3,
        a_tilde_1=at1, a_tilde_2=at2, a_tilde_3=at3, a_tilde_4=at4,
        a_tilde_5=at5, a_tilde_6=at6, a_tilde_7=at7, a_tilde_8=at8,
        lambda_1=lam1, lambda_2=lam2, lambda_3=lam3, lambda_4=lam4,
        lambda_bar_2=lam_bar_2, lambda_bar_3=lam3 / x**2,
        Delta_1=D1, Delta_2=D2, Delta_3=D3, Delta_4=D4,
        delta_1=d1, delta_2=d2, delta_3=d3,
        delta_bar_1=d1 / x, delta_bar_2=d2 / x, delta_bar_3=d3 / x,
        beta_diff=beta_1 - beta_2,
        a_bar_2=at2 / x, a_bar_7=at7 * x, a_bar_8=at8 * x,
        Omega_drive=params.Omega_drive,
        chi=chi, gamma=gamma, x_scale=x, phenomenological=False,
    )
