"""Registry of figure scenarios with their caption parameter sets.

Coefficient keys follow :func:`oqbm.coefficients.direct_coefficients`; every
caption uses x_scale = 1, so tilde and bar values coincide. Angles are stored
as the config-file expressions so that listings show them as written.
"""

from __future__ import annotations

import hashlib
import json
import math

_FIG1 = {
    "Omega": 0.5, "beta_diff": 1e-4, "Delta_1": 1e-5, "Delta_2": 0.01, "Delta_3": 1e-4,
    "Delta_4": 8e-3, "lambda_2": 1e-4, "lambda_3": 5e-3, "lambda_4": 1e-4, "delta_1": 1e-4,
    "delta_2": 0.04, "delta_3": 0.01, "a_tilde_2": 0.04, "a_tilde_7": 1e-3, "a_tilde_8": 1e-4,
}

_FIG2A_I = dict(_FIG1, beta_diff=1e-3, Delta_2=1e-3)
_FIG2A_III = dict(_FIG1, Delta_2=1e-3, a_tilde_2=-0.04)
_FIG2A_IV = {
    "Omega": 0.1, "beta_diff": 0.01, "Delta_1": 1e-5, "Delta_2": 1e-3, "Delta_3": 2e-4,
    "Delta_4": 0.01, "lambda_2": 1e-4, "lambda_3": 0.01, "lambda_4": 1e-3, "delta_1": 0.01,
    "delta_2": 0.02, "delta_3": 0.03, "a_tilde_2": 0.04, "a_tilde_7": 1e-3, "a_tilde_8": 0.02,
}
_FIG2B = {
    "Omega": 0.5, "beta_diff": 0.01, "Delta_1": 1e-4, "Delta_2": 1e-3, "Delta_3": 1e-4,
    "Delta_4": 8e-3, "lambda_2": 1e-4, "lambda_3": 4e-3, "lambda_4": 1e-4, "delta_1": 0.01,
    "delta_2": 0.06, "delta_3": 0.01, "a_tilde_2": 1e-3, "a_tilde_7": 0.04, "a_tilde_8": 1e-4,
}
_FIG3 = {
    "Omega": 0.5, "beta_diff": 0.01, "Delta_3": 0.01, "Delta_4": 0.01, "lambda_bar_2": 0.01,
    "lambda_bar_3": 0.01, "lambda_4": 0.01, "delta_bar_1": 0.01, "delta_bar_2": 0.01,
    "a_bar_7": 0.01, "a_bar_8": 0.01, "Delta_1": 0.04, "Delta_2": 0.02, "delta_bar_3": 0.02,
    "a_bar_2": 0.02,
}
# delta_bar_2 is listed twice in this caption (0.01 and 0.02); the later value is used.
_FIG4A = {
    "Omega": 0.17, "beta_diff": 0.01, "Delta_1": 0.01, "Delta_2": 0.01, "Delta_3": 0.01,
    "Delta_4": 0.01, "lambda_bar_2": 0.01, "lambda_4": 0.01, "delta_bar_1": 0.01,
    "delta_bar_2": 0.02, "a_bar_7": 0.01, "a_bar_8": 0.01, "lambda_bar_3": 0.05, "a_bar_2": 0.02,
}
_FIG4B = {
    "Omega": 0.1, "beta_diff": 0.001, "Delta_1": 0.02, "delta_bar_3": 0.02, "Delta_2": 0.01,
    "Delta_3": 0.01, "Delta_4": 0.01, "lambda_bar_2": 0.01, "lambda_bar_3": 0.01, "a_bar_7": 0.01,
    "lambda_4": 0.04, "delta_bar_1": 0.05, "a_bar_8": 0.05, "delta_bar_2": 0.03, "a_bar_2": 0.008,
}
_FIG5 = {
    "Omega": 0.01, "beta_diff": 0.001, "lambda_bar_2": 0.001, "Delta_3": 0.001, "chi": 0.25,
    "Delta_1": 0.05, "lambda_bar_3": 0.02, "Delta_4": 0.1, "a_bar_2": 0.004, "a_bar_7": 0.02,
    "a_bar_8": 0.01, "delta_bar_1": 0.01, "delta_bar_3": 0.002,
}

_FIELD_GRID = {"x_min": -60.0, "x_max": 60.0, "n_points": 1201}
# moment figures stay narrow; this grid resolves them for PDE cross-checks
_MOMENT_GRID = {"x_min": -12.0, "x_max": 12.0, "n_points": 1201}
_SNAPSHOTS = (0.0, 50.0, 100.0, 150.0, 200.0)


def _pde(description, coeffs, theta, phi, j, t_end, snapshots=_SNAPSHOTS):
    return {
        "mode": "pde", "description": description, "coefficients": dict(coeffs),
        "init": {"theta": theta, "phi": phi, "j": j}, "grid": dict(_FIELD_GRID),
        "run": {"t_end": t_end, "dt": 0.02, "snapshots": tuple(snapshots)},
    }


def _moments(description, coeffs, theta, phi, orders, t_end=100.0):
    return {
        "mode": "moments", "description": description, "coefficients": dict(coeffs),
        "init": {"theta": theta, "phi": phi, "j": 2}, "grid": dict(_MOMENT_GRID),
        "run": {"t_end": t_end, "dt": 0.01, "n_trunc": 30, "orders": tuple(orders)},
    }


def _cumulants(description, t_end):
    return {
        "mode": "cumulants", "description": description, "coefficients": dict(_FIG5),
        "init": {"theta": "pi/8", "phi": "pi/4", "j": 2}, "grid": dict(_FIELD_GRID),
        "run": {"t_end": t_end, "dt": 1e-3, "closures": ("close3", "close4"), "record_every": 10},
    }


PRESETS = {
    "fig1a": _pde("P(x,t) snapshots, Gaussian start", _FIG1, "pi/5", "pi/4", 2, 200.0),
    "fig1b": _pde("P(x,t) snapshots, flat-topped j=10 start", _FIG1, "pi/4", "pi/4", 10, 200.0),
    "fig2a_i": _pde("variance, zero coherences, strong drive", _FIG2A_I, "pi/2", "pi/4", 2, 300.0),
    # curve (ii) is declared identical to fig1b, including its j = 10 profile
    "fig2a_ii": _pde("variance, same set as fig1b", _FIG1, "pi/4", "pi/4", 10, 300.0),
    "fig2a_iii": _pde("variance, nonzero coherences, a_tilde_2 < 0", _FIG2A_III, "pi/6", "pi/4", 2, 300.0),
    # theta = pi is the same pure state as theta = 0, which keeps theta in [0, pi)
    "fig2a_iv": _pde("variance, zero coherences, weak drive", _FIG2A_IV, "0", "0", 2, 300.0),
    "fig2b": _pde("C_I(t) and sigma_z(t) decay with revival", _FIG2B, "pi/6", "0", 2, 300.0,
                  snapshots=(0.0, 100.0, 200.0, 300.0)),
    "fig3a": _moments("n=2 moments of C_I and sigma_z", _FIG3, "pi/2", "pi/2", (2,)),
    "fig3b": _moments("n=15 moments of C_I and sigma_z", _FIG3, "pi/6", "pi/6", (15,)),
    "fig4a": _moments("n=10 moments, beat-like envelope", _FIG4A, "pi/6", "pi/4", (10,)),
    "fig4b": _moments("n=2, 8, 15 moments", _FIG4B, "pi/2", "pi/2", (2, 8, 15)),
    "fig5": _cumulants("first and second position cumulants, both closures", 25.0),
    "fig6": _cumulants("third position cumulant under close4", 40.0),
}
PRESETS["fig6"]["run"]["closures"] = ("close4",)


def list_presets():
    return sorted(PRESETS)


def get_preset(name: str) -> dict:
    if name not in PRESETS:
        raise KeyError(f"unknown preset {name!r}; choose from {', '.join(list_presets())}")
    return json.loads(json.dumps(PRESETS[name]))


def preset_checksum(name: str) -> str:
    blob = json.dumps(PRESETS[name], sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def parse_angle(text) -> float:
    """Evaluate angle expressions such as ``pi/5``, ``3*pi/4``, ``0.25`` or ``-pi``."""
    if isinstance(text, (int, float)):
        return float(text)
    s = str(text).strip().replace(" ", "")
    if not s:
        raise ValueError("empty angle")
    sign = 1.0
    if s[0] in "+-":
        sign = -1.0 if s[0] == "-" else 1.0
        s = s[1:]
    num, _, den = s.partition("/")
    factor, _, rest = num.partition("*")
    if rest:
        if rest != "pi":
            raise ValueError(f"cannot parse angle {text!r}")
        value = float(factor) * math.pi
    elif num == "pi":
        value = math.pi
    else:
        value = float(num)
    if den:
        value /= float(den)
    return sign * value
