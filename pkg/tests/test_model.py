import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from twophoton.errors import ConfigError, UnsupportedError
from twophoton.hilbert import ATOM_E, ATOM_G, ATOM_I, SpaceSpec, excitation_labels, is_hermitian
from twophoton.model import (
    Channel,
    ThreeLevelParams,
    TwoLevelParams,
    build_collapse_ops,
    build_h_effective,
    build_h_three_level,
    build_h_two_level,
    effective_g2,
    liouvillian,
    transform_generator_S,
    unvec,
    vec,
)
from twophoton.steady import steady_state_report

rates = st.floats(1e-3, 2.0)
two_level = st.builds(
    TwoLevelParams,
    g1=st.floats(0.2, 2.0),
    g2=st.floats(-0.5, 0.5),
    kappa1=rates,
    kappa2=rates,
    pump=rates,
    gamma=rates,
)


@pytest.mark.parametrize("field", ["kappa1", "kappa2", "pump", "gamma"])
def test_negative_rates_rejected(field):
    with pytest.raises(ConfigError, match=field):
        TwoLevelParams(**{field: -0.1})


def test_nonpositive_g1_rejected():
    with pytest.raises(ConfigError):
        TwoLevelParams(g1=0.0)


def test_three_level_small_detuning_warns():
    with pytest.warns(UserWarning, match="delta"):
        ThreeLevelParams(delta=5.0)


def test_effective_g2_value_and_sign():
    assert effective_g2(1.0, 1.0, 100.0) == pytest.approx(-0.01)
    assert ThreeLevelParams().effective_two_level().g2 == pytest.approx(-0.01)
    with pytest.raises(ConfigError):
        effective_g2(1, 1, 0)


def test_two_photon_matrix_element():
    s = SpaceSpec(2, 1, 2)
    h = build_h_two_level(TwoLevelParams(g1=1.0, g2=0.1), s).toarray()
    assert h[s.index(ATOM_G, 0, 2), s.index(ATOM_E, 0, 0)] == pytest.approx(math.sqrt(2) * 0.1)
    assert h[s.index(ATOM_G, 1, 0), s.index(ATOM_E, 0, 0)] == pytest.approx(1.0)


def test_hamiltonian_matches_oracle_spectrum():
    p = TwoLevelParams(g1=0.7, g2=0.3)
    h = build_h_two_level(p, SpaceSpec(2, 2, 4)).toarray()
    ref = oracles.two_level_h(0.7, 0.3, 2, 4)
    assert np.allclose(np.linalg.eigvalsh(h), np.linalg.eigvalsh(ref))


def test_three_level_hamiltonian_matches_oracle_spectrum():
    p = ThreeLevelParams(g1=0.2, g3=0.8, g4=1.1, delta=50.0)
    h = build_h_three_level(p, SpaceSpec(3, 1, 3)).toarray()
    ref = oracles.three_level_h(0.2, 0.8, 1.1, 50.0, 1, 3)
    assert np.allclose(np.linalg.eigvalsh(h), np.linalg.eigvalsh(ref))


@given(two_level)
@settings(max_examples=25, deadline=None)
def test_hamiltonians_conserve_excitations(p):
    s = SpaceSpec(2, 2, 4)
    n = np.diag(excitation_labels(s) / 2)
    for h in (build_h_two_level(p, s).toarray(), build_h_effective(p, s).toarray()):
        assert np.abs(h @ n - n @ h).max() < 1e-13
    assert is_hermitian(build_h_two_level(p, s))


def test_three_level_conserves_generalised_excitations():
    s = SpaceSpec(3, 2, 5)
    h = build_h_three_level(ThreeLevelParams(), s).toarray()
    n = np.diag(excitation_labels(s))
    assert np.abs(h @ n - n @ h).max() == 0


def test_zero_rate_channels_dropped():
    ops = build_collapse_ops(TwoLevelParams(pump=0.0, gamma=0.0), SpaceSpec(2, 1, 2))
    assert [c.channel for c in ops] == [Channel.A_PHOTON, Channel.B_PHOTON]


@given(two_level)
@settings(max_examples=25, deadline=None)
def test_liouvillian_preserves_trace_and_hermiticity(p):
    s = SpaceSpec(2, 1, 3)
    liou = liouvillian(p, s)
    assert np.abs(vec(np.eye(s.dim)) @ liou.matrix).max() < 1e-12
    rng = np.random.default_rng(0)
    x = rng.normal(size=(s.dim, s.dim)) + 1j * rng.normal(size=(s.dim, s.dim))
    rho = x @ x.conj().T
    out = liou.apply(rho)
    assert np.allclose(out, out.conj().T, atol=1e-12)


def test_liouvillian_matches_row_stacked_oracle():
    p = TwoLevelParams(g2=0.3, kappa1=0.1, pump=0.2)
    s = SpaceSpec(2, 1, 2)
    liou = liouvillian(p, s)
    # the oracle uses (e, g) atom ordering; permute our basis into it
    perm = np.array([s.index(1 - i, j, k) for i in range(2) for j in range(2) for k in range(3)])
    ref = oracles.liouvillian_rows(
        oracles.two_level_h(p.g1, p.g2, 1, 2), oracles.collapse(2, 1, 2, p.kappa1, p.kappa2, p.gamma, p.pump)
    )
    rng = np.random.default_rng(1)
    rho = rng.normal(size=(s.dim, s.dim)) + 1j * rng.normal(size=(s.dim, s.dim))
    ours = liou.apply(rho)[np.ix_(perm, perm)]
    theirs = (ref @ rho[np.ix_(perm, perm)].reshape(-1)).reshape(s.dim, s.dim)
    assert np.allclose(ours, theirs)


def test_sector_structure():
    s = SpaceSpec(2, 2, 4)
    liou = liouvillian(TwoLevelParams(), s)
    m = liou.matrix.tocoo()
    lab = excitation_labels(s)
    d = s.dim
    # column stacking: vec index r = m + n d
    diff_row = lab[m.row % d] - lab[m.row // d]
    diff_col = lab[m.col % d] - lab[m.col // d]
    assert np.array_equal(diff_row, diff_col)


def test_vec_roundtrip():
    x = np.arange(9.0).reshape(3, 3)
    assert np.array_equal(unvec(vec(x), 3), x)
    assert vec(x)[1] == x[1, 0]


def test_sign_gauge_of_g2():
    s = SpaceSpec(2, 2, 4)
    plus = steady_state_report(TwoLevelParams(g2=0.1), s)
    minus = steady_state_report(TwoLevelParams(g2=-0.1), s)
    for key in ("eta", "tpe_rate", "ope_rate", "n_a", "n_b"):
        assert getattr(minus, key) == pytest.approx(getattr(plus, key), rel=1e-10)


def test_frame_independence():
    s = SpaceSpec(2, 2, 4)
    p = TwoLevelParams(omega0=4000.0)
    rot = steady_state_report(p, s)
    from twophoton.steady import observables, solve_steady_state

    lab = liouvillian(p, s, rotating=False)
    rho = solve_steady_state(lab)
    rep = observables(rho, p, s, lab)
    assert rep.eta == pytest.approx(rot.eta, rel=1e-8)
    assert rep.n_b == pytest.approx(rot.n_b, rel=1e-8)


def test_lab_frame_needs_omega0():
    with pytest.raises(ConfigError):
        build_h_two_level(TwoLevelParams(), SpaceSpec(2, 1, 2), rotating=False)


def test_transform_generator():
    p = ThreeLevelParams()
    s = SpaceSpec(3, 1, 3)
    gen = transform_generator_S(p, s).toarray()
    assert np.allclose(gen, -gen.conj().T)
    assert abs(gen[s.index(ATOM_I, 0, 1), s.index(ATOM_E, 0, 0)]) == pytest.approx(p.g4 / p.delta)
    with pytest.raises(UnsupportedError):
        transform_generator_S(p, SpaceSpec(2, 1, 2))


def test_transform_removes_first_order_coupling():
    # e^S H e^-S has no |i> <-> (g, e) coupling at order g/delta
    from scipy.linalg import expm

    p = ThreeLevelParams(g1=0.0)
    s = SpaceSpec(3, 1, 4)
    h = build_h_three_level(p, s).toarray()
    gen = transform_generator_S(p, s).toarray()
    ht = expm(gen) @ h @ expm(-gen)
    lab = s.labels()[:, 0]
    i_rows = lab == ATOM_I
    leak = np.abs(ht[np.ix_(i_rows, ~i_rows)]).max()
    bare = np.abs(h[np.ix_(i_rows, ~i_rows)]).max()
    assert leak < 0.05 * bare
