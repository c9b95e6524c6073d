import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oqbm.coefficients import (
    FLAT, OHMIC, PV_WEIGHTS, CoefficientSet, PhysicalParams, SpectralSpec, WeakDriveWarning,
    build_coefficients, direct_coefficients, kossakowski_determinant, occupation, principal_value,
    spectral_density,
)
from oqbm.errors import DegenerateBath, NonConvergence, UnknownKey
from oqbm.presets import get_preset

from oracles import bose, ohmic, pv_oracle, weighted

REFERENCE = PhysicalParams(m=1.0, omega=1.0, omega0=5.0, Omega_drive=0.1, alpha=0.1, temperature=2.0,
                           spectral=SpectralSpec(OHMIC, eta=0.05, omega_c=20.0))


# -- occupation and spectral density -----------------------------------------

def test_occupation_zero_temperature_is_exactly_zero():
    assert occupation(1.0, 0.0) == 0.0
    assert np.all(occupation(np.array([0.5, 1.0, 50.0]), 0.0) == 0.0)


def test_occupation_unit_at_ln2_temperature():
    assert occupation(1.0, 1.0 / math.log(2)) == pytest.approx(1.0, rel=1e-14)


def test_occupation_high_temperature_matches_direct_formula():
    assert occupation(1.0, 10.0) == pytest.approx(1.0 / (math.exp(0.1) - 1.0), rel=1e-14)


def test_occupation_respects_hbar():
    assert occupation(1.0, 2.0, hbar=2.0) == pytest.approx(1.0 / (math.e - 1.0), rel=1e-14)


def test_ohmic_density_values():
    spec = SpectralSpec(OHMIC, eta=1.0, omega_c=5.0)
    assert spectral_density(0.0, spec) == 0.0
    assert spectral_density(5.0, spec) == pytest.approx(5.0 / math.e, rel=1e-14)


def test_flat_window_values():
    spec = SpectralSpec(FLAT, eta=0.3, omega_c=4.0)
    assert spectral_density(2.0, spec) == 0.3
    assert spectral_density(4.5, spec) == 0.0


@pytest.mark.parametrize("bad", [dict(kind="lorentz"), dict(eta=-1.0), dict(omega_c=0.0)])
def test_spectral_spec_validation(bad):
    with pytest.raises(ValueError):
        SpectralSpec(**bad)


@given(st.floats(0, 200), st.floats(0, 5), st.floats(0.1, 50))
def test_spectral_density_nonnegative(w, eta, wc):
    assert spectral_density(w, SpectralSpec(OHMIC, eta, wc)) >= 0
    assert spectral_density(w, SpectralSpec(FLAT, eta, wc)) >= 0


# -- principal values ----------------------------------------------------------

def test_pv_vanishes_for_zero_coupling():
    assert principal_value("n+1", 2.0, SpectralSpec(OHMIC, eta=0.0), 1.0) == 0.0


def test_pv_flat_window_symmetric_pole_cancels():
    spec = SpectralSpec(FLAT, eta=1.0, omega_c=4.0)
    assert abs(principal_value("one", 2.0, spec, 0.0)) < 1e-12


@pytest.mark.parametrize("pole", [0.5, 1.3, 3.0, 6.0])
def test_pv_flat_window_matches_log_formula(pole):
    spec = SpectralSpec(FLAT, eta=0.7, omega_c=4.0)
    expected = 0.7 * math.log(abs(4.0 - pole) / pole)
    assert principal_value("one", pole, spec, 0.0) == pytest.approx(expected, rel=1e-9)


def test_pv_ohmic_reference_kernel_against_mirrored_oracle():
    spec = SpectralSpec(OHMIC, eta=1.0, omega_c=5.0)
    value = principal_value("one", 1.0, spec, 0.0)
    assert value == pytest.approx(pv_oracle(weighted("one", 1.0, 5.0, 0.0), 1.0, 250.0), rel=1e-9)


def test_pv_flat_window_diverges_at_positive_temperature():
    with pytest.raises(NonConvergence):
        principal_value("n", 1.0, SpectralSpec(FLAT, eta=1.0, omega_c=4.0), 1.0)


def test_pv_pole_on_flat_edge_raises():
    with pytest.raises(NonConvergence):
        principal_value("one", 4.0, SpectralSpec(FLAT, eta=1.0, omega_c=4.0), 0.0)


def test_pv_rejects_bad_inputs():
    with pytest.raises(ValueError):
        principal_value("one", 0.0, SpectralSpec(), 1.0)
    with pytest.raises(ValueError):
        principal_value("n+2", 1.0, SpectralSpec(), 1.0)


# -- Kossakowski certificate ---------------------------------------------------

TEMPERATURES_20 = [0.0] + list(np.geomspace(0.02, 30.0, 19))


@pytest.mark.parametrize("kind", [OHMIC, FLAT])
@pytest.mark.parametrize("kT", TEMPERATURES_20)
def test_kossakowski_matches_closed_form(kind, kT):
    params = PhysicalParams(m=1.3, omega=0.9, temperature=kT, spectral=SpectralSpec(kind, 0.05, 20.0))
    det = kossakowski_determinant(params)
    j = spectral_density(0.9, params.spectral)
    n = float(bose(0.9, kT))
    closed = (math.pi * j / (1.3 * 0.9)) ** 2 * n * (n + 1)
    assert det >= -1e-12
    assert det == pytest.approx(closed, rel=1e-12, abs=0 if closed else 1e-300)


def test_kossakowski_zero_temperature_is_zero():
    assert kossakowski_determinant(PhysicalParams(temperature=0.0)) == 0.0


def test_kossakowski_unit_occupation():
    params = PhysicalParams(temperature=1.0 / math.log(2))
    j = spectral_density(1.0, params.spectral)
    assert kossakowski_determinant(params) == pytest.approx(2 * (math.pi * j) ** 2, rel=1e-12)


def test_kossakowski_agrees_with_built_rates():
    c = build_coefficients(REFERENCE)
    det = 4 * c.alpha_bar_1 * c.alpha_bar_2 - 4 * c.alpha_bar_3**2
    assert kossakowski_determinant(REFERENCE) == pytest.approx(det, rel=1e-9)


# -- microscopic coefficient set -------------------------------------------------

def test_zero_temperature_rates():
    params = PhysicalParams(m=2.0, omega=1.5, temperature=0.0)
    c = build_coefficients(params)
    j = spectral_density(1.5, params.spectral)
    assert c.alpha_bar_1 == pytest.approx(math.pi * j / 4, rel=1e-14)
    assert c.alpha_bar_2 == pytest.approx(math.pi * j / (4 * (2.0 * 1.5) ** 2), rel=1e-14)
    assert c.alpha_bar_3 == pytest.approx(math.pi * j / (4 * 2.0 * 1.5), rel=1e-14)
    assert 4 * c.alpha_bar_1 * c.alpha_bar_2 == pytest.approx(4 * c.alpha_bar_3**2, rel=1e-14)
    assert c.gamma == pytest.approx(2 * c.alpha_bar_3 / c.alpha_bar_1, rel=1e-14)


@pytest.mark.parametrize("kT", [0.0, 0.3, 2.0, 9.0])
def test_beta_difference_is_temperature_independent(kT):
    params = PhysicalParams(temperature=kT)
    c = build_coefficients(params)
    j0 = spectral_density(params.omega0, params.spectral)
    assert c.beta_diff == pytest.approx(2 * params.alpha**2 * math.pi * j0, rel=1e-12)
    assert c.beta_1 >= c.beta_2 >= 0


def test_reference_set_against_independent_quadrature():
    """Rates, Lamb-type constants and OQBM constants rebuilt from the oracle PV."""
    p = REFERENCE
    c = build_coefficients(p)
    eta, wc, kT = 0.05, 20.0, 2.0
    upper = 50 * wc

    def pv(kind, pole):
        return pv_oracle(weighted(kind, eta, wc, kT), pole, upper)

    j_w, j_w0 = ohmic(1.0, eta, wc), ohmic(5.0, eta, wc)
    n_w, n_w0 = float(bose(1.0, kT)), float(bose(5.0, kT))
    a1 = math.pi / 4 * j_w * (2 * n_w + 1)
    a2 = math.pi * j_w / 4 * (2 * n_w + 1)
    a3 = math.pi * j_w / 4
    expected = {
        "alpha_bar_1": a1, "alpha_bar_2": a2, "alpha_bar_3": a3,
        "beta_1": 2 * 0.01 * math.pi * j_w0 * (n_w0 + 1),
        "beta_2": 2 * 0.01 * math.pi * j_w0 * n_w0,
        "beta_3": 0.01 * pv("n+1", 5.0),
        "a_tilde_4": 0.05 * pv("n", 5.0),
        "a_tilde_5": 0.05 * pv("one", 5.0),
        "a_tilde_6": 0.05 * pv("n+1/2", 1.0),
        "a_tilde_7": 0.05 * pv("one", 1.0),
        "a_tilde_8": 0.05 * j_w * math.pi,
        "gamma": 2 * a3 / a1,
        "lambda_3": a2,
        "lambda_4": 2 * a3,
        "chi": (2 * n_w + 1) / 2,
    }
    for name, value in expected.items():
        assert getattr(c, name) == pytest.approx(value, rel=1e-7), name
    assert c.Delta_2 == pytest.approx(c.lambda_4 - c.beta_1 - c.beta_2, rel=1e-12)
    assert c.Delta_4 == pytest.approx(2 * c.beta_3 + c.Delta_3 - 5.0, rel=1e-12)


def test_chi_identity_in_microscopic_mode():
    for kT in (0.0, 0.5, 3.0):
        c = build_coefficients(PhysicalParams(temperature=kT, x_scale=1.7))
        assert c.chi * c.lambda_bar_2 == pytest.approx(c.lambda_4 - c.Delta_1, rel=1e-10)


def test_barred_scaling():
    x = 2.5
    c = build_coefficients(PhysicalParams(x_scale=x))
    assert c.lambda_bar_2 == pytest.approx(c.lambda_2 * x**2)
    assert c.lambda_bar_3 == pytest.approx(c.lambda_3 / x**2)
    assert c.delta_bar_1 == pytest.approx(c.delta_1 / x)
    assert c.a_bar_2 == pytest.approx(c.a_tilde_2 / x)
    assert c.a_bar_7 == pytest.approx(c.a_tilde_7 * x)
    assert c.a_bar_8 == pytest.approx(c.a_tilde_8 * x)


def test_zero_density_at_trap_frequency_is_degenerate():
    params = PhysicalParams(omega=3.0, spectral=SpectralSpec(FLAT, eta=0.1, omega_c=2.0), temperature=0.0)
    with pytest.raises(DegenerateBath):
        build_coefficients(params)


def test_flat_window_finite_temperature_propagates_nonconvergence():
    params = PhysicalParams(spectral=SpectralSpec(FLAT, eta=0.05, omega_c=20.0), temperature=1.0)
    with pytest.raises(NonConvergence):
        build_coefficients(params)


def test_weak_drive_warning():
    with pytest.warns(WeakDriveWarning):
        PhysicalParams(Omega_drive=1.0, omega0=5.0)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        PhysicalParams(Omega_drive=0.1, omega0=5.0)


@pytest.mark.parametrize("field", ["m", "omega", "omega0", "x_scale"])
def test_physical_params_reject_nonpositive(field):
    with pytest.raises(ValueError):
        PhysicalParams(**{field: 0.0})


# -- direct mode ----------------------------------------------------------------

def test_direct_empty_map_is_all_zero():
    c = direct_coefficients({})
    assert c.phenomenological
    assert all(v == 0 for k, v in c.as_dict().items() if k not in ("x_scale", "phenomenological"))


def test_direct_fig1_caption_set():
    c = direct_coefficients(get_preset("fig1a")["coefficients"])
    assert c.Omega_drive == 0.5 and c.beta_diff == 1e-4 and c.Delta_1 == 1e-5
    assert c.lambda_bar_2 == 1e-4 and c.lambda_bar_3 == 5e-3 and c.lambda_4 == 1e-4
    assert c.delta_bar_2 == 0.04 and c.a_bar_2 == 0.04 and c.a_bar_7 == 1e-3 and c.a_bar_8 == 1e-4


def test_direct_fig5_caption_set():
    c = direct_coefficients(get_preset("fig5")["coefficients"])
    assert (c.Omega_drive, c.beta_diff, c.lambda_bar_2, c.Delta_3, c.chi) == (0.01, 0.001, 0.001, 0.001, 0.25)
    assert (c.Delta_1, c.lambda_bar_3, c.Delta_4, c.a_bar_2) == (0.05, 0.02, 0.1, 0.004)
    assert (c.a_bar_7, c.a_bar_8, c.delta_bar_1, c.delta_bar_3) == (0.02, 0.01, 0.01, 0.002)


def test_direct_unknown_key():
    with pytest.raises(UnknownKey) as info:
        direct_coefficients({"lambda_9": 1.0})
    assert info.value.key == "lambda_9"


def test_direct_aliases_and_pairs():
    c = direct_coefficients({"beta": 0.3, "Omega": 0.2, "lambda_bar_4": 0.1, "delta_2": 0.4}, x_scale=2.0)
    assert (c.beta_diff, c.Omega_drive, c.lambda_4) == (0.3, 0.2, 0.1)
    assert c.delta_bar_2 == pytest.approx(0.2)
    with pytest.raises(ValueError):
        direct_coefficients({"beta": 0.1, "beta_diff": 0.2})
    with pytest.raises(ValueError):
        direct_coefficients({"delta_2": 0.4, "delta_bar_2": 0.4}, x_scale=2.0)


def test_coefficient_set_replace_is_a_copy():
    c = CoefficientSet(Omega_drive=0.1)
    d = c.replace(Omega_drive=0.2)
    assert c.Omega_drive == 0.1 and d.Omega_drive == 0.2


@settings(max_examples=25, deadline=None)
@given(st.floats(0.0, 20.0), st.floats(0.2, 3.0), st.floats(0.3, 3.0))
def test_kossakowski_nonnegative_property(kT, m, omega):
    params = PhysicalParams(m=m, omega=omega, temperature=kT)
    assert kossakowski_determinant(params) >= 0.0


@pytest.mark.parametrize("weight", PV_WEIGHTS)
def test_pv_kernel_set(weight):
    spec = SpectralSpec(OHMIC, eta=0.4, omega_c=6.0)
    value = principal_value(weight, 2.0, spec, 1.5)
    assert value == pytest.approx(pv_oracle(weighted(weight, 0.4, 6.0, 1.5), 2.0, 300.0), rel=1e-8)


def test_fast_velocity_stationary_state_is_annihilated():
    import sympy
    v = sympy.symbols("v", real=True)
    gamma = sympy.symbols("gamma", positive=True)
    rho_s = (2 * sympy.pi * gamma) ** sympy.Rational(-1, 2) * sympy.exp(-v**2 / (2 * gamma))
    generator = -(v**2 * rho_s + gamma * v * sympy.diff(rho_s, v))
    assert sympy.simplify(generator) == 0
    assert sympy.simplify(sympy.integrate(rho_s, (v, -sympy.oo, sympy.oo))) == 1
    # the width that enters is the one built from the oscillator rates
    c = build_coefficients(PhysicalParams())
    assert c.gamma == pytest.approx(2 * c.alpha_bar_3 / c.alpha_bar_1, rel=1e-14)
    assert c.gamma > 0
