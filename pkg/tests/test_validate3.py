import numpy as np
import pytest

from twophoton.errors import ConfigError
from twophoton.hilbert import SpaceSpec
from twophoton.model import (
    ThreeLevelParams,
    TwoLevelParams,
    build_collapse_ops,
    build_h_two_level,
    build_liouvillian,
)
from twophoton.steady import observables, steady_state, steady_state_report
from twophoton.validate3 import (
    deviations,
    embed_two_level,
    embedding_indices,
    fidelity_series,
    mapd_sweep,
    write_fidelity,
    write_mapd,
)

P3 = ThreeLevelParams()


def test_operating_point_coupling_ratio():
    assert abs(P3.g2_effective) / P3.g1 == pytest.approx(0.1)


def test_embedding_indices():
    s2, s3 = SpaceSpec(2, 1, 2), SpaceSpec(3, 1, 3)
    idx = embedding_indices(s2, s3)
    assert len(set(idx)) == s2.dim
    assert all(s3.label(int(i)) == s2.label(n) for n, i in enumerate(idx))
    with pytest.raises(ConfigError):
        embedding_indices(SpaceSpec(2, 2, 2), s3)
    with pytest.raises(ConfigError):
        embedding_indices(s3, s3)


def test_fidelity_invariants():
    fid = fidelity_series(P3, t_max=20, dt=0.05)
    assert fid.fidelity[0] == pytest.approx(1)
    assert np.all(fid.fidelity >= 0) and np.all(fid.fidelity <= 1 + 1e-9)
    assert fid.norm_drift < 1e-10


def test_fidelity_worse_at_small_g1():
    strong = fidelity_series(P3, t_max=50).fidelity.min()
    weak = fidelity_series(P3.replace(g1=0.01), t_max=50).fidelity.min()
    assert strong >= 0.99
    assert weak < strong - 0.01


def test_fidelity_bad_grid():
    with pytest.raises(ConfigError):
        fidelity_series(P3, t_max=0)


def test_identical_models_give_zero_deviation():
    # two-level dynamics embedded in the three-level space: |i> is never populated
    s2, s3 = SpaceSpec(2, 2, 4), SpaceSpec(3, 2, 4)
    p2 = P3.effective_two_level()
    rho2, _ = steady_state(p2, s2)
    r2 = steady_state_report(p2, s2)
    h = embed_two_level(build_h_two_level(p2, s2), s2, s3)
    liou3 = build_liouvillian(h, build_collapse_ops(P3, s3), spec=s3)
    idx = embedding_indices(s2, s3)
    rho3 = np.zeros((s3.dim, s3.dim), dtype=complex)
    rho3[np.ix_(idx, idx)] = rho2
    assert np.abs(liou3.apply(rho3)).max() < 1e-12
    r3 = observables(rho3, P3, s3)
    assert r3.pop_i == 0
    for value in deviations(r3, r2).values():
        assert abs(value) < 1e-9


def test_deviation_absent_when_reference_zero():
    r = steady_state_report(TwoLevelParams(kappa1=0.0), SpaceSpec(2, 2, 4))
    dev = deviations(r, r)
    assert dev["ope_rate"] is None
    assert dev["eta"] == 0


def test_three_level_balance():
    rep = steady_state_report(P3, SpaceSpec(3, 3, 7))
    tol = 1e-4 if rep.pop_i > 1e-6 else 1e-8
    assert rep.balance_residual < tol
    assert rep.pop_i > 0


def test_mapd_at_kappa2_equal_g1():
    rep = mapd_sweep(P3, [P3.g1])
    assert abs(rep.d_eta[0]) < 2
    assert np.all(np.isfinite([rep.d_t[0], rep.d_o[0], rep.d_l[0]]))
    row = next(rep.rows())
    assert row[0] == pytest.approx(1.0)


def test_mapd_grid_is_sorted_and_nonempty():
    rep = mapd_sweep(P3, [0.2, 0.05])
    assert list(rep.kappa2) == [0.05, 0.2]
    with pytest.raises(ConfigError):
        mapd_sweep(P3, [])


def test_csv_exports(tmp_path):
    write_fidelity(fidelity_series(P3, t_max=1, dt=0.5), tmp_path / "f.csv")
    assert (tmp_path / "f.csv").read_text().splitlines()[0] == "t_gprime,fidelity"
    write_mapd(mapd_sweep(P3, [P3.g1], spec3=SpaceSpec(3, 2, 5), spec2=SpaceSpec(2, 2, 4)), tmp_path / "m.csv")
    lines = (tmp_path / "m.csv").read_text().splitlines()
    assert lines[0] == "kappa2_over_g1,D_eta,D_T,D_O,D_L"
    assert len(lines) == 2
