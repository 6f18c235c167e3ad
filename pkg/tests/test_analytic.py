import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from twophoton.analytic import (
    amplitude_ode_oracle,
    cascade_probability,
    cascade_probability_exact,
    closed_form_stats,
    eta_max,
    eta_max_printed,
    fermi_ratio,
    low_pump_stats,
    manifold_one_matrix,
    reduced_linear_system,
)
from twophoton.errors import DegenerateParametersError, StepSizeError
from twophoton.hilbert import ATOM_E, ATOM_G, SpaceSpec
from twophoton.model import TwoLevelParams, build_h_two_level
from twophoton.steady import steady_state_report

BASE = TwoLevelParams()

params = st.builds(
    TwoLevelParams,
    g1=st.floats(0.3, 3.0),
    g2=st.floats(0.01, 0.5),
    kappa1=st.floats(1e-4, 1.0),
    kappa2=st.floats(0.05, 5.0),
    pump=st.floats(1e-4, 0.1),
    gamma=st.floats(1e-4, 0.5),
)


def quiet_low_pump(p):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return low_pump_stats(p)


def test_closed_form_baseline_near_exact():
    exact = steady_state_report(BASE).eta
    assert abs(closed_form_stats(BASE).eta - exact) / exact < 0.10


def test_printed_variant_differs():
    assert closed_form_stats(BASE, printed=True).eta == pytest.approx(37.2122, abs=1e-3)
    assert closed_form_stats(BASE).eta == pytest.approx(35.3828, abs=1e-3)


@given(params)
@settings(max_examples=40, deadline=None)
def test_reduced_system_matches_closed_form(p):
    cf = closed_form_stats(p)
    red = reduced_linear_system(p)
    assert red["eta"] == pytest.approx(cf.eta, rel=1e-9)
    assert red["tpe_rate"] == pytest.approx(cf.tpe_rate, rel=1e-9)
    assert red["ope_rate"] == pytest.approx(cf.ope_rate, rel=1e-9)
    assert red["loss_rate"] == pytest.approx(cf.loss_rate, rel=1e-9)
    assert cf.eta >= 0 and all(math.isfinite(v) for v in (cf.xi, cf.nu, cf.phi))


def test_closed_form_balance():
    # every pump excitation leaves through T, O or L
    cf = closed_form_stats(BASE)
    red = reduced_linear_system(BASE)
    assert cf.tpe_rate + cf.ope_rate + cf.loss_rate == pytest.approx(BASE.pump * (1 - red["pop_e"]), rel=1e-9)


def test_closed_form_degenerate_guards():
    with pytest.raises(DegenerateParametersError):
        closed_form_stats(BASE.replace(g2=0.0))
    with pytest.raises(DegenerateParametersError):
        closed_form_stats(BASE.replace(kappa2=0.0, kappa1=0.0))


def test_closed_form_vanishes_as_g2_goes_to_zero():
    cf = closed_form_stats(BASE.replace(g2=1e-6))
    assert cf.eta < 1e-6 and cf.tpe_rate < 1e-12


def test_closed_form_argmax_near_g1():
    grid = np.logspace(-1, 1, 40)
    eta = [closed_form_stats(BASE.replace(kappa2=k)).eta for k in grid]
    tpe = [closed_form_stats(BASE.replace(kappa2=k)).tpe_rate for k in grid]
    near = int(np.argmin(np.abs(grid - 1)))
    assert abs(int(np.argmax(eta)) - near) <= 1
    assert abs(int(np.argmax(tpe)) - near) <= 1


def test_eta_max_limit():
    assert eta_max(BASE) == pytest.approx(55.21, abs=1.0)
    assert eta_max(BASE) == pytest.approx(55.212, abs=1e-3)
    assert eta_max_printed(BASE) == pytest.approx(125.0)


def test_low_pump_values():
    lp = quiet_low_pump(BASE)
    assert lp.eta == pytest.approx(400 * 0.01 / (0.036 * 2))
    assert lp.ope_rate / lp.loss_rate == pytest.approx(BASE.kappa1 / BASE.gamma)


def test_low_pump_warns_outside_regime():
    with pytest.warns(UserWarning):
        low_pump_stats(BASE.replace(pump=0.1))


def test_low_pump_decays_as_inverse_kappa2():
    a = quiet_low_pump(BASE.replace(kappa2=50.0)).eta
    b = quiet_low_pump(BASE.replace(kappa2=100.0)).eta
    assert a / b == pytest.approx(2, rel=0.01)


@pytest.mark.xfail(strict=True, reason="low-pump form sits about 12% from the closed form at kappa2 = 3, kappa1 = 0.1")
def test_low_pump_matches_closed_form_away_from_breakdown():
    p = BASE.replace(kappa2=3.0, kappa1=0.1, pump=1e-6)
    lp, cf = quiet_low_pump(p).eta, closed_form_stats(p).eta
    assert abs(lp - cf) / cf < 0.05


def test_fermi_ratio_against_matrix_elements():
    p = BASE
    s = SpaceSpec(2, 4, 2)
    h = build_h_two_level(p, s).toarray()
    for n in (1, 2, 3):
        two = abs(h[s.index(ATOM_G, n - 1, 2), s.index(ATOM_E, n - 1, 0)]) ** 2
        one = abs(h[s.index(ATOM_G, n, 0), s.index(ATOM_E, n - 1, 0)]) ** 2
        assert fermi_ratio(n, p) == pytest.approx(two / one)
    assert fermi_ratio(1, p) == pytest.approx(0.02)
    assert fermi_ratio(1, p.replace(g2=0.0)) == 0
    with pytest.raises(ValueError):
        fermi_ratio(0, p)


def test_cascade_probability_identity_and_limits():
    assert cascade_probability(BASE) == pytest.approx(0.5556, abs=1e-4)
    assert math.isclose(cascade_probability(BASE), quiet_low_pump(BASE).eta / 100, rel_tol=1e-14)
    assert cascade_probability(BASE.replace(kappa2=1e6)) < 1e-5


def test_ode_oracle_trace_invariants():
    tr = amplitude_ode_oracle(BASE)
    assert abs(tr.c1[0]) == 1 and tr.c2[0] == 0 and tr.c3[0] == 0
    assert np.all(np.diff(tr.norm2) <= 1e-15)
    assert tr.richardson_error < 1e-8


def test_ode_oracle_against_independent_routes():
    tr = amplitude_ode_oracle(BASE)
    assert tr.cascade_probability == pytest.approx(cascade_probability_exact(BASE), abs=1e-7)
    ref = oracles.cascade_probability_expm(1, 0.1, 0.02, 1, 0.016, 0.005, t_max=1500, n=6000)
    assert tr.cascade_probability == pytest.approx(ref, abs=1e-5)


def test_ode_oracle_zero_g2():
    assert amplitude_ode_oracle(BASE.replace(g2=0.0), t_max=2000, richardson=False).cascade_probability == 0


def test_ode_oracle_approaches_eta_max():
    p = BASE.replace(kappa1=1e-6, pump=0.0, kappa2=BASE.g1)
    assert amplitude_ode_oracle(p, richardson=False).cascade_probability == pytest.approx(eta_max(BASE) / 100, rel=1e-3)


def test_ode_oracle_step_too_large():
    with pytest.raises(StepSizeError):
        amplitude_ode_oracle(BASE.replace(kappa2=50.0), t_max=10, dt=0.2, richardson=False)


def test_dropping_feedback_increases_cascade():
    full = amplitude_ode_oracle(BASE, richardson=False).cascade_probability
    dropped = amplitude_ode_oracle(BASE, drop_g2_feedback=True, richardson=False).cascade_probability
    assert dropped > full


def test_manifold_matrix_hermitian_part():
    m = manifold_one_matrix(BASE)
    herm = 0.5 * (m + m.conj().T)
    assert np.allclose(np.linalg.eigvalsh(herm), oracles.one_excitation_energies(1, 0.1))
