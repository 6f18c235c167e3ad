"""Steady states of the master equation and their observables.

The Liouvillian only couples density-matrix elements whose two basis states
differ by the same excitation number, so the unique steady state lives in
the diagonal sector ``N(m) = N(n)``. The solve is done there: one row of the
sector block is replaced by the trace condition and the system is
LU-factorized.
"""
from __future__ import annotations

import dataclasses
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np
import scipy.sparse.linalg as spla

from .errors import ConfigError, ConvergenceError, NonUniqueSteadyStateError, NumericalFailure
from .hilbert import ATOM_E, ATOM_G, ATOM_I, SpaceSpec, expectation, space_operators
from .model import Liouvillian, ThreeLevelParams, liouvillian

log = logging.getLogger(__name__)

RESIDUAL_TOL = 1e-9
PSD_TOL = -1e-8
DEFAULT_SPEC = SpaceSpec(2, 3, 6)


def _sector_blocks(labels: np.ndarray):
    """Basis indices grouped by excitation label."""
    return [np.flatnonzero(labels == v) for v in np.unique(labels)]


def solve_steady_state(liou: Liouvillian) -> np.ndarray:
    """Unit-trace solution of L vec(rho) = 0.

    Raises NonUniqueSteadyStateError when the bordered system is singular,
    which is what a kernel of dimension > 1 produces.
    """
    d = liou.dim
    idx = liou.sector(0)
    block = liou.matrix[idx][:, idx].tolil()
    diag = np.flatnonzero(idx % (d + 1) == 0)  # vec positions of rho[m, m]
    block[0, :] = 0
    block[0, diag] = 1.0
    rhs = np.zeros(len(idx), dtype=complex)
    rhs[0] = 1.0
    block = block.tocsc()
    block.eliminate_zeros()
    # empty rows/columns mean a structurally singular system; catching them here
    # also keeps SuperLU from printing BLAS argument errors
    if np.any(np.diff(block.indptr) == 0) or np.any(np.diff(block.tocsr().indptr) == 0):
        raise NonUniqueSteadyStateError("steady-state system is structurally singular; kernel is not one-dimensional")
    try:
        lu = spla.splu(block)
    except RuntimeError as exc:
        raise NonUniqueSteadyStateError(f"steady-state system is singular ({exc}); kernel is not one-dimensional") from exc
    x = lu.solve(rhs)
    if not np.all(np.isfinite(x)):
        raise NumericalFailure("steady-state solve produced non-finite values")
    full = np.zeros(d * d, dtype=complex)
    full[idx] = x
    rho = full.reshape(d, d, order="F")
    rho = 0.5 * (rho + rho.conj().T)
    res = steady_residual(liou, rho)
    if res > RESIDUAL_TOL * max(1.0, float(abs(liou.matrix).max())):
        raise NumericalFailure(f"steady-state residual {res:.3g} exceeds tolerance")
    return rho


def steady_residual(liou: Liouvillian, rho: np.ndarray) -> float:
    return float(np.max(np.abs(liou.matrix @ rho.reshape(-1, order="F"))))


def min_eigenvalue_blocked(rho: np.ndarray, labels: Optional[np.ndarray]) -> float:
    """Smallest eigenvalue, using the excitation-sector block structure if given."""
    if labels is None:
        return float(np.linalg.eigvalsh(rho)[0])
    return float(min(np.linalg.eigvalsh(rho[np.ix_(b, b)])[0] for b in _sector_blocks(labels)))


@dataclass(frozen=True)
class SteadyReport:
    eta: float
    tpe_rate: float
    ope_rate: float
    loss_rate: float
    n_a: float
    n_b: float
    pop_g: float
    pop_e: float
    g2zero: Optional[float]
    mandel_q: Optional[float]
    balance_residual: float
    truncation: SpaceSpec
    pop_i: float = 0.0
    b2_moment: float = 0.0
    min_eigenvalue: float = 0.0
    residual: float = 0.0

    def as_row(self) -> dict:
        row = dataclasses.asdict(self)
        spec = row.pop("truncation")
        row.update(na_max=spec["na_max"], nb_max=spec["nb_max"])
        return {k: (math.nan if v is None else v) for k, v in row.items()}


def observables(rho: np.ndarray, params, spec: SpaceSpec, liou: Optional[Liouvillian] = None) -> SteadyReport:
    """Rates, efficiency, populations and b-mode statistics of a steady state."""
    o = space_operators(spec)
    ev = lambda op: float(expectation(op, rho).real)
    n_a = ev(o.num_a)
    n_b = ev(o.num_b)
    b2 = o.b @ o.b
    b2_moment = ev(b2.conj().T @ b2)
    pop_g = ev(o.proj[ATOM_G])
    pop_e = ev(o.proj[ATOM_E])
    pop_i = ev(o.proj[ATOM_I]) if spec.atom_levels == 3 else 0.0

    tpe = params.kappa2 * n_b / 2.0
    ope = params.kappa1 * n_a
    loss = params.gamma * pop_e
    inflow = params.pump * pop_g
    eta = 100.0 * tpe / inflow if inflow > 0 else 0.0
    balance = abs(inflow - (ope + tpe + loss)) / inflow if inflow > 0 else abs(ope + tpe + loss)

    if n_b > 1e-14:
        g2zero = b2_moment / n_b**2
        mandel_q = (b2_moment - n_b**2) / n_b
    else:
        g2zero = mandel_q = None

    residual = steady_residual(liou, rho) if liou is not None else math.nan
    labels = liou.labels if liou is not None else None
    return SteadyReport(
        eta=eta,
        tpe_rate=tpe,
        ope_rate=ope,
        loss_rate=loss,
        n_a=n_a,
        n_b=n_b,
        pop_g=pop_g,
        pop_e=pop_e,
        g2zero=g2zero,
        mandel_q=mandel_q,
        balance_residual=balance,
        truncation=spec,
        pop_i=pop_i,
        b2_moment=b2_moment,
        min_eigenvalue=min_eigenvalue_blocked(rho, labels),
        residual=residual,
    )


def _default_levels(params) -> int:
    return 3 if isinstance(params, ThreeLevelParams) else 2


def steady_state(params, spec: Optional[SpaceSpec] = None):
    """(rho, liouvillian) for the given model."""
    spec = spec or SpaceSpec(_default_levels(params), DEFAULT_SPEC.na_max, DEFAULT_SPEC.nb_max)
    liou = liouvillian(params, spec)
    return solve_steady_state(liou), liou


def steady_state_report(params, spec: Optional[SpaceSpec] = None) -> SteadyReport:
    spec = spec or SpaceSpec(_default_levels(params), DEFAULT_SPEC.na_max, DEFAULT_SPEC.nb_max)
    rho, liou = steady_state(params, spec)
    rep = observables(rho, params, spec, liou)
    if rep.min_eigenvalue < PSD_TOL:
        raise NumericalFailure(f"steady state not positive semidefinite (min eigenvalue {rep.min_eigenvalue:.3g})")
    return rep


CONVERGENCE_KEYS = ("eta", "tpe_rate", "ope_rate", "loss_rate")


def _drift(new: SteadyReport, old: SteadyReport) -> dict:
    out = {}
    for k in CONVERGENCE_KEYS:
        x, y = getattr(new, k), getattr(old, k)
        scale = max(abs(x), abs(y))
        out[k] = abs(x - y) / scale if scale > 0 else 0.0
    return out


def truncation_convergence(
    params,
    start: Optional[SpaceSpec] = None,
    tol: float = 1e-3,
    ladder: str = "joint",
    max_dim: int = 4000,
    return_report: bool = False,
):
    """Smallest truncation whose observables are stable under one more ladder step.

    ``ladder="joint"`` steps (na_max, nb_max) -> (na_max + 1, nb_max + 2).
    ``ladder="adaptive"`` probes each mode separately and only grows the
    ones whose extension moves an observable by more than ``tol``; the a mode
    at high pump needs far more quanta than the b mode, which the joint
    ladder cannot exploit.
    """
    if not tol > 0:
        raise ConfigError("tol must be > 0")
    if ladder not in ("joint", "adaptive"):
        raise ConfigError(f"unknown ladder {ladder!r}")
    levels = _default_levels(params)
    spec = start or SpaceSpec(levels, 1, 2)
    if spec.atom_levels != levels:
        raise ConfigError("start spec atom_levels does not match the parameter set")

    cache = {}

    def report(s):
        if s not in cache:
            cache[s] = steady_state_report(params, s)
        return cache[s]

    drift = {}
    while True:
        cur = report(spec)
        if ladder == "joint":
            nxt = spec.grown(1, 2)
            if nxt.dim > max_dim:
                break
            drift = _drift(report(nxt), cur)
            if max(drift.values()) < tol:
                return (spec, cur) if return_report else spec
            spec = nxt
        else:
            da, db = spec.grown(1, 0), spec.grown(0, 2)
            if max(da.dim, db.dim) > max_dim:
                break
            drift_a = _drift(report(da), cur)
            drift_b = _drift(report(db), cur)
            drift = {k: max(drift_a[k], drift_b[k]) for k in CONVERGENCE_KEYS}
            grow_a = max(drift_a.values()) >= tol
            grow_b = max(drift_b.values()) >= tol
            if not (grow_a or grow_b):
                return (spec, cur) if return_report else spec
            spec = spec.grown(1 if grow_a else 0, 2 if grow_b else 0)
        log.debug("growing truncation to %s (drift %s)", spec, drift)
    raise ConvergenceError(
        f"truncation did not converge below dimension {max_dim} (last {spec.as_dict()})",
        drift=drift,
        last_spec=spec,
    )


SWEEP_AXES = ("g1", "g2", "kappa1", "kappa2", "pump", "gamma")


def sweep(
    params,
    axis: str,
    grid: Iterable[float],
    spec: Optional[SpaceSpec] = None,
    auto: bool = False,
    tol: float = 1e-3,
    threads: int = 1,
) -> list:
    """Steady-state reports along one parameter axis, in grid order.

    With ``auto`` each point runs the adaptive truncation ladder, warm-started
    from the previous point's truncation (points then run sequentially).
    """
    if axis not in SWEEP_AXES:
        raise ConfigError(f"unknown sweep axis {axis!r}; expected one of {SWEEP_AXES}")
    points = [params.replace(**{axis: float(v)}) for v in grid]
    if auto:
        out = []
        start = spec
        for p in points:
            start, rep = truncation_convergence(p, start=start, tol=tol, ladder="adaptive", return_report=True)
            out.append(rep)
        return out
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(lambda p: steady_state_report(p, spec), points))
    return [steady_state_report(p, spec) for p in points]
