import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oqbm.coefficients import CoefficientSet
from oqbm.cumulants import (
    VARIABLES, CumulantState, constraint_residual, cumulant_rhs, evolve_cumulants, init_cumulants,
    rhs_close3, rhs_close4,
)
from oqbm.errors import BlowUp, DegenerateAngle, UnsupportedProfile
from oqbm.field import BlochInit, Grid, init_field
from oqbm.pde import PdeConfig, evolve

from conftest import preset_coefficients

FIG5_INIT = BlochInit(math.pi / 8, math.pi / 4)


def test_initial_values():
    s = init_cumulants(FIG5_INIT, 0.25)
    root = math.sqrt(math.pi)
    assert s.x_cum[0] == pytest.approx(-0.5 * math.log(math.pi))
    assert s.x_cum[1] == 0.0 and s.x_cum[2] == 0.25
    assert s.z_cum[0] == pytest.approx(math.log(math.cos(math.pi / 4) / root))
    assert s.r_cum[0] == pytest.approx(math.log(math.sin(math.pi / 4) * math.cos(math.pi / 4) / (2 * root)))
    # the C_I weight is negative; its magnitude is stored with the sign apart
    assert s.i_cum[0] == pytest.approx(math.log(math.sin(math.pi / 4) * math.sin(math.pi / 4) / (2 * root)))
    assert s.i_sign == -1.0
    for arr in (s.z_cum, s.r_cum, s.i_cum):
        assert arr[1] == 0.0 and arr[2] == 0.25


@pytest.mark.parametrize("theta,phi", [(math.pi / 4, 0.3), (math.pi / 8, math.pi / 2), (math.pi / 8, 0.0),
                                       (0.0, 0.3), (math.pi / 2, 0.3)])
def test_degenerate_angles(theta, phi):
    with pytest.raises(DegenerateAngle):
        init_cumulants(BlochInit(theta, phi), 0.25)


def test_negative_sine_flips_the_coherence_sign():
    s = init_cumulants(BlochInit(math.pi / 8, 7 * math.pi / 4), 0.25)
    assert s.i_sign == 1.0
    assert s.i_cum[0] == pytest.approx(init_cumulants(FIG5_INIT, 0.25).i_cum[0])


def test_non_gaussian_profile_rejected():
    with pytest.raises(UnsupportedProfile):
        init_cumulants(BlochInit(math.pi / 8, math.pi / 4, 4), 0.25)


def test_state_validation_and_close3_drops_third_orders():
    with pytest.raises(ValueError):
        CumulantState("close5", [0], [0], [0], [0], 0.25)
    s = CumulantState("close3", [0, 0.1, 0, 9.0], [0, 0, 0, 9.0], [0], [0], 0.25)
    assert s.x_cum[3] == 0.0 and s.z_cum[3] == 0.0
    assert s.x_cum[2] == pytest.approx(0.25 - 0.01)
    with pytest.raises(ValueError):
        rhs_close4(s, CoefficientSet())
    with pytest.raises(ValueError):
        rhs_close3(s, CoefficientSet(), form="other")


def test_vector_round_trip():
    s = init_cumulants(FIG5_INIT, 0.25, "close4")
    back = CumulantState.from_vector("close4", s.vector(), s.chi, s.x_cum[0], 0.0, s.i_sign)
    np.testing.assert_array_equal(back.vector(), s.vector())
    assert len(s.vector()) == len(VARIABLES["close4"])


@pytest.mark.parametrize("closure", ["close3", "close4"])
def test_zero_coefficients_freeze(closure):
    s = init_cumulants(FIG5_INIT, 0.25, closure)
    assert not cumulant_rhs(s, CoefficientSet()).any()
    out = evolve_cumulants(s, CoefficientSet(), 1.0, dt=0.1)
    np.testing.assert_array_equal(out.values[-1], s.vector())


def test_third_order_is_stationary_without_sources():
    # with x3 = 0 and only lambda_bar_2 and Delta_1, dx3/dt vanishes
    s = CumulantState("close4", [0, 0.2, 0, 0], [0.1, 0.3, 0.2, 0.1], [-1, 0.1, 0.3, 0], [-1, 0.2, 0.2, 0], 0.25)
    d = dict(zip(VARIABLES["close4"], rhs_close4(s, CoefficientSet(lambda_bar_2=0.4, Delta_1=0.3))))
    assert d["x3"] == 0.0


def test_third_order_source_vanishes_at_balance():
    # a_bar_2 drives x3 through r1^2 + r2 - 2 r1 x1 + 2 x1^2 - chi
    chi, x1, r1 = 0.25, 0.1, 0.2
    r2 = chi - r1**2 + 2 * r1 * x1 - 2 * x1**2
    s = CumulantState("close4", [0, x1, 0, 0], [0, 0, 0.25, 0], [-0.5, r1, r2, 0], [-1, 0, 0.25, 0], chi)
    d = dict(zip(VARIABLES["close4"], rhs_close4(s, CoefficientSet(a_bar_2=0.7))))
    assert abs(d["x3"]) < 1e-15


def test_constraint_residual():
    c = preset_coefficients("fig5")
    value = constraint_residual(np.array([0.0, 0.3]), 0.25, c)
    np.testing.assert_allclose(value, 0.001 * 0.25 + 0.05 - 0.0)


@pytest.fixture(scope="module")
def fig5_runs():
    c = preset_coefficients("fig5")
    return {cl: evolve_cumulants(init_cumulants(FIG5_INIT, 0.25, cl), c, 25.0, dt=5e-3, record_every=2)
            for cl in ("close3", "close4")}


def test_fig5_first_cumulant_drifts_down(fig5_runs):
    s = fig5_runs["close3"]
    x1 = s.channel("x1")
    assert x1[0] == 0.0
    assert np.all(np.diff(x1) <= 0)
    assert x1[-1] < -0.01


def test_fig5_second_cumulant_decreases(fig5_runs):
    x2 = fig5_runs["close3"].channel("x2")
    assert x2[0] == 0.25
    assert np.all(np.diff(x2) < 0)


def test_fig5_closures_agree_early(fig5_runs):
    a, b = fig5_runs["close3"], fig5_runs["close4"]
    early = a.times <= 10
    x_a, x_b = a.channel("x1")[early], b.channel("x1")[early]
    assert np.abs(x_a - x_b).max() < 0.05 * np.abs(x_a).max()


def test_constraint_residual_is_constant(fig5_runs):
    r = fig5_runs["close4"].constraint_residual
    assert np.ptp(r) < 1e-15


def test_series_columns(fig5_runs):
    s = fig5_runs["close3"]
    names, table = s.columns()
    assert names[:4] == ["x0", "x1", "x2", "x3"] and len(names) == 16
    assert table.shape == (len(s.times), 16)
    assert not table[:, names.index("z3")].any()


def test_close3_blows_up_with_partial_series():
    c = preset_coefficients("fig5")
    with pytest.raises(BlowUp) as info:
        evolve_cumulants(init_cumulants(FIG5_INIT, 0.25), c, 60.0, dt=5e-3, record_every=20)
    assert info.value.time < 60
    partial = info.value.partial
    assert partial.failed_at == info.value.time
    assert np.all(np.isfinite(partial.values))


@settings(max_examples=40, deadline=None)
@given(st.floats(-0.5, 0.5), st.floats(-0.5, 0.5), st.floats(0.05, 1.0))
def test_position_rhs_matches_between_closures_without_third_orders(x1, r1, chi):
    c = preset_coefficients("fig5")
    args = ([0, x1, 0, 0], [-1.0, 0.1, chi, 0], [-2.0, r1, chi, 0], [-2.5, 0.0, chi, 0], chi)
    d3 = rhs_close3(CumulantState("close3", *args), c)
    d4 = rhs_close4(CumulantState("close4", *args), c)
    d4 = dict(zip(VARIABLES["close4"], d4))
    np.testing.assert_allclose(d3, [d4[name] for name in VARIABLES["close3"]], atol=1e-12)


def test_pde_trends_agree_with_cumulants(fig5_runs):
    # the field starts from the unit Gaussian (variance 1/2), the cumulants from chi = 1/4;
    # only the direction of the trends is compared
    c = preset_coefficients("fig5")
    pde = evolve(init_field(Grid(-30, 30, 601), FIG5_INIT), c, PdeConfig(dt=0.01, t_end=10.0))
    d = pde.diagnostics
    cum = fig5_runs["close3"]
    early = cum.times <= 10
    assert np.all(np.diff(d["mean"]) < 0) and np.all(np.diff(cum.channel("x1")[early]) <= 0)
    assert np.all(np.diff(d["variance"]) < 0) and np.all(np.diff(cum.channel("x2")[early]) < 0)
