"""Checks of the effective two-level model against the full three-level atom.

Units are g' (= g3 = g4). The two-level comparator uses
g2 = effective_g2(g3, g4, delta) and otherwise the same rates.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp

from .errors import ConfigError
from .hilbert import ATOM_E, SpaceSpec
from .io import write_table
from .model import ThreeLevelParams, build_h_three_level, build_h_two_level
from .steady import SteadyReport, steady_state_report, truncation_convergence

DEFAULT_SPEC3 = SpaceSpec(3, 3, 7)
DEFAULT_SPEC2 = SpaceSpec(2, 3, 6)


def embedding_indices(spec2: SpaceSpec, spec3: SpaceSpec) -> np.ndarray:
    """Position in ``spec3`` of every ``spec2`` basis state with the same (atom, j, k)."""
    if spec2.atom_levels != 2 or spec3.atom_levels != 3:
        raise ConfigError("embedding maps a two-level space into a three-level space")
    if spec2.na_max > spec3.na_max or spec2.nb_max > spec3.nb_max:
        raise ConfigError("two-level Fock cutoffs must not exceed the three-level ones")
    return np.array([spec3.index(*spec2.label(n)) for n in range(spec2.dim)])


def embed_two_level(op, spec2: SpaceSpec, spec3: SpaceSpec) -> sp.csr_matrix:
    """Two-level operator acting on the (g, e) block of the three-level space, zero on |i>."""
    pos = embedding_indices(spec2, spec3)
    coo = sp.coo_matrix(op)
    return sp.csr_matrix((coo.data, (pos[coo.row], pos[coo.col])), shape=(spec3.dim, spec3.dim))


@dataclass(frozen=True)
class FidelitySeries:
    times: np.ndarray
    fidelity: np.ndarray
    norm_drift: float = 0.0


def _evolve(h: np.ndarray, psi0: np.ndarray, times: np.ndarray) -> np.ndarray:
    w, v = la.eigh(h)
    coef = v.conj().T @ psi0
    return v @ (np.exp(-1j * np.outer(w, times)) * coef[:, None])


def fidelity_series(
    params3: ThreeLevelParams,
    t_max: float = 50.0,
    dt: float = 0.01,
    spec: SpaceSpec = SpaceSpec(3, 2, 4),
) -> FidelitySeries:
    """|<psi3(t)|psi_m(t)>|^2 for closed evolution from |e,0,0>."""
    if not t_max > 0 or not dt > 0:
        raise ConfigError("t_max and dt must be positive")
    spec2 = SpaceSpec(2, spec.na_max, spec.nb_max)
    h3 = build_h_three_level(params3, spec).toarray()
    hm = embed_two_level(build_h_two_level(params3.effective_two_level(), spec2), spec2, spec).toarray()
    psi0 = np.zeros(spec.dim, dtype=complex)
    psi0[spec.index(ATOM_E, 0, 0)] = 1.0
    times = np.arange(int(round(t_max / dt)) + 1) * dt
    p3 = _evolve(h3, psi0, times)
    pm = _evolve(hm, psi0, times)
    overlap = np.sum(p3.conj() * pm, axis=0)
    drift = max(
        float(np.max(np.abs(np.sum(np.abs(p3) ** 2, axis=0) - 1))),
        float(np.max(np.abs(np.sum(np.abs(pm) ** 2, axis=0) - 1))),
    )
    return FidelitySeries(times=times, fidelity=np.abs(overlap) ** 2, norm_drift=drift)


OBSERVABLES = ("eta", "tpe_rate", "ope_rate", "loss_rate")


def deviations(r3: SteadyReport, r2: SteadyReport) -> dict:
    """100 (X3 - X2) / X2 for eta, T, O, L; None where X2 is zero."""
    out = {}
    for key in OBSERVABLES:
        x2, x3 = getattr(r2, key), getattr(r3, key)
        out[key] = 100.0 * (x3 - x2) / x2 if x2 != 0 else None
    return out


@dataclass(frozen=True)
class MapdReport:
    kappa2: np.ndarray
    g1: float
    d_eta: np.ndarray
    d_t: np.ndarray
    d_o: np.ndarray
    d_l: np.ndarray
    three_level: tuple = ()
    two_level: tuple = ()

    def max_abs(self) -> float:
        return float(np.nanmax(np.abs(np.concatenate([self.d_eta, self.d_t, self.d_o, self.d_l]))))

    def rows(self):
        for i, k in enumerate(self.kappa2):
            yield (k / self.g1, self.d_eta[i], self.d_t[i], self.d_o[i], self.d_l[i])


def mapd_sweep(
    base3: ThreeLevelParams,
    kappa2_grid: Sequence[float],
    spec3: Optional[SpaceSpec] = None,
    spec2: Optional[SpaceSpec] = None,
    auto: bool = False,
    tol: float = 1e-3,
) -> MapdReport:
    """Steady-state deviations of the three-level model from its two-level reduction.

    ``kappa2_grid`` is in the same units as ``base3`` (g'). The two-level
    reference is solved on its own space; embedding it in the three-level
    space would leave the decoupled |i> sector with a degenerate kernel.
    """
    grid = np.asarray(sorted(float(k) for k in kappa2_grid))
    if grid.size == 0:
        raise ConfigError("kappa2 grid is empty")
    cols = {k: [] for k in OBSERVABLES}
    reps3, reps2 = [], []
    for k2 in grid:
        p3 = base3.replace(kappa2=float(k2))
        p2 = p3.effective_two_level()
        if auto:
            s2 = truncation_convergence(p2, tol=tol)
            s3 = truncation_convergence(p3, start=SpaceSpec(3, s2.na_max, s2.nb_max + 1), tol=tol)
        else:
            s3, s2 = spec3 or DEFAULT_SPEC3, spec2 or DEFAULT_SPEC2
        r3 = steady_state_report(p3, s3)
        r2 = steady_state_report(p2, s2)
        dev = deviations(r3, r2)
        for key in OBSERVABLES:
            cols[key].append(math.nan if dev[key] is None else dev[key])
        reps3.append(r3)
        reps2.append(r2)
    arr = {k: np.array(v) for k, v in cols.items()}
    return MapdReport(
        kappa2=grid,
        g1=base3.g1,
        d_eta=arr["eta"],
        d_t=arr["tpe_rate"],
        d_o=arr["ope_rate"],
        d_l=arr["loss_rate"],
        three_level=tuple(reps3),
        two_level=tuple(reps2),
    )


def write_fidelity(series: FidelitySeries, path) -> None:
    write_table(zip(series.times, series.fidelity), ("t_gprime", "fidelity"), path)


def write_mapd(report: MapdReport, path) -> None:
    write_table(report.rows(), ("kappa2_over_g1", "D_eta", "D_T", "D_O", "D_L"), path)
