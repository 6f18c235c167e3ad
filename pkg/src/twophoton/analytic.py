"""Closed-form statistics of the manifold approximation and their oracles.

The manifold approximation keeps only the states ``|e,0,0>``, ``|g,1,0>``,
``|g,0,2>`` (excitation 1), ``|g,0,1>`` (1/2) and ``|g,0,0>``. Eliminating
the coherences from the resulting moment equations leaves a 4x4 linear
system in <b'b>, <a'a>, <a'b^2 + a b'^2> and <|e><e|>; `closed_form_stats`
is its explicit solution and `reduced_linear_system` solves it numerically.

Two typographical slips in the commonly quoted closed form are corrected
here (the ``+ g2`` term of ``phi`` and a spurious factor in ``eta``);
``printed=True`` evaluates the formulas as typeset.
"""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DegenerateParametersError, StepSizeError
from .model import TwoLevelParams

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class AnalyticStats:
    xi: float
    nu: float
    phi: float
    tpe_rate: float
    ope_rate: float
    loss_rate: float
    eta: float


def closed_form_stats(params: TwoLevelParams, printed: bool = False) -> AnalyticStats:
    """Steady-state rates and efficiency of the manifold approximation."""
    g1, g2 = params.g1, abs(params.g2)
    k1, k2, gam, pump = params.kappa1, params.kappa2, params.gamma, params.pump
    big_k = k2 + k1 / 2
    if g2 == 0:
        raise DegenerateParametersError("closed form needs g2 != 0 (phi diverges as 1/g2)")
    if big_k <= 0:
        raise DegenerateParametersError("closed form needs kappa2 + kappa1/2 > 0")

    xi = 2 * g1 + 2 * k1 * g2**2 / (big_k * g1) + k1 * (k1 + pump + gam) / (2 * g1)
    if xi == 0:
        raise DegenerateParametersError("xi vanishes")
    nu = 1 - k1 * g1 / (big_k * xi)
    phi = k2 / (2 * g2) * (k2 + pump / 2 + gam / 2 + 2 * g1**2 / (2 * k2 + k1)) - k2 * k1 * g1 * g2 / (big_k**2 * xi)
    if not printed:
        phi += g2

    den = (phi / xi) * (2 * k1 * g1 + (gam + pump) * xi) + 2 * g2 * nu**2 * k2
    tpe = 2 * k2 * g2 * nu * pump / den
    ope = 2 * g1 * k1 * pump * (phi - k2 * g2 * nu / big_k) / (xi * den)
    loss = gam * pump * phi / den

    x = 2 * k1 * g1 + gam * xi
    if printed:
        y = 2 * k1 * g1 + (gam + pump) * xi
        eta = 100 * 2 * k2 * g2 * nu / ((phi / xi) * x + 2 * g2 * nu**2 * k2 * x / y)
    else:
        eta = 100 * 2 * k2 * g2 * nu / ((phi / xi) * x + 2 * g2 * nu**2 * k2)
    return AnalyticStats(xi=xi, nu=nu, phi=phi, tpe_rate=tpe, ope_rate=ope, loss_rate=loss, eta=eta)


def low_pump_stats(params: TwoLevelParams) -> AnalyticStats:
    """Leading order in P of the closed form. Diagnostic only.

    Overshoots the exact efficiency near kappa2 = g1 (55.6% vs about 34% at
    the baseline); ``xi``, ``nu`` and ``phi`` are reported as NaN.
    """
    g1, g2 = params.g1, params.g2
    k1, k2, gam, pump = params.kappa1, params.kappa2, params.gamma, params.pump
    if gam + k1 <= 0:
        raise DegenerateParametersError("low-pump formulas need gamma + kappa1 > 0")
    if pump > 0.5 * (gam + k1):
        warnings.warn("low_pump_stats used outside P << kappa1 + gamma", stacklevel=2)
    base = (gam + k1) * (k2**2 + g1**2)
    eta = 400 * k2 * g2**2 / base
    return AnalyticStats(
        xi=math.nan,
        nu=math.nan,
        phi=math.nan,
        tpe_rate=4 * g2**2 * pump * k2 / base,
        ope_rate=k1 * pump / (gam + k1),
        loss_rate=gam * pump / (gam + k1),
        eta=eta,
    )


def eta_max(params: TwoLevelParams) -> float:
    """Efficiency limit kappa1 -> 0, P -> 0 at kappa2 = g1 (percent)."""
    return closed_form_stats(params.replace(kappa1=0.0, pump=0.0, kappa2=params.g1)).eta


def eta_max_printed(params: TwoLevelParams) -> float:
    """The commonly quoted 2 g2^2 / (gamma g1), in percent.

    Kept for comparison only: at g2 = 0.1, gamma = 0.016 it gives 125%.
    """
    return 100 * 2 * params.g2**2 / (params.gamma * params.g1)


def fermi_ratio(n: int, params: TwoLevelParams) -> float:
    """Ratio of two-photon to one-photon emission probability from |e, n-1, 0>."""
    if int(n) != n or n < 1:
        raise ValueError(f"n must be an integer >= 1, got {n}")
    return 2 * params.g2**2 / (n * params.g1**2)


def reduced_matrix(params: TwoLevelParams):
    """Coefficient matrix and right-hand side of the 4x4 moment system.

    Unknowns are (<b'b>, <a'a>, <a'b^2 + a b'^2>, <|e><e|>), with
    <|g><g|> = 1 - <|e><e|>.
    """
    g1, g2 = params.g1, params.g2
    k1, k2, gam, pump = params.kappa1, params.kappa2, params.gamma, params.pump
    if g2 == 0:
        raise DegenerateParametersError("reduced system needs g2 != 0")
    a = np.array(
        [
            [k2 * (k2 + pump / 2 + gam / 2) / (2 * g2) + g2, 0.0, g1, -4 * g2],
            [0.0, k1 * (k1 + pump + gam) / (2 * g1) + 2 * g1, g2, -2 * g1],
            [-k2 * g1 / (2 * g2), -2 * k1 * g2 / g1, k2 + k1 / 2, 0.0],
            [k2 / 2, k1, 0.0, gam + pump],
        ]
    )
    return a, np.array([0.0, 0.0, 0.0, pump])


def reduced_linear_system(params: TwoLevelParams) -> dict:
    a, rhs = reduced_matrix(params)
    if np.linalg.cond(a) > 1e14:
        raise DegenerateParametersError("reduced 4x4 system is singular for these parameters")
    n_b, n_a, cross, pop_e = np.linalg.solve(a, rhs)
    tpe = params.kappa2 * n_b / 2
    inflow = params.pump * (1 - pop_e)
    return {
        "n_a": float(n_a),
        "n_b": float(n_b),
        "cross_term": float(cross),
        "pop_e": float(pop_e),
        "tpe_rate": float(tpe),
        "ope_rate": float(params.kappa1 * n_a),
        "loss_rate": float(params.gamma * pop_e),
        "eta": float(100 * tpe / inflow) if inflow > 0 else 0.0,
    }


def cascade_probability(params: TwoLevelParams) -> float:
    """Approximate probability that one excitation of |e,0,0> leaves as a photon pair."""
    base = (params.gamma + params.kappa1) * (params.kappa2**2 + params.g1**2)
    if base <= 0:
        raise DegenerateParametersError("cascade probability needs gamma + kappa1 > 0")
    return 4 * params.kappa2 * params.g2**2 / base


@dataclass(frozen=True)
class AmplitudeTrace:
    """Amplitudes of |e,0,0>, |g,1,0>, |g,0,2> (rotating frame), sampled every ``stride`` steps."""

    time: np.ndarray
    c1: np.ndarray
    c2: np.ndarray
    c3: np.ndarray
    cascade_probability: float
    dt: float
    richardson_error: float = math.nan

    @property
    def norm2(self) -> np.ndarray:
        return np.abs(self.c1) ** 2 + np.abs(self.c2) ** 2 + np.abs(self.c3) ** 2


def manifold_one_matrix(params: TwoLevelParams, drop_g2_feedback: bool = False) -> np.ndarray:
    """i dc/dt = M c on (|e,0,0>, |g,1,0>, |g,0,2>) in the rotating frame."""
    g1, g2 = params.g1, params.g2
    s = math.sqrt(2) * g2
    return np.array(
        [
            [-0.5j * params.gamma, g1, 0.0 if drop_g2_feedback else s],
            [g1, -0.5j * (params.pump + params.kappa1), 0.0],
            [s, 0.0, -1j * (params.pump / 2 + params.kappa2)],
        ],
        dtype=complex,
    )


def _rk4_march(m: np.ndarray, dt: float, n_steps: int, block: int = 2048) -> np.ndarray:
    """All RK4 iterates c_0..c_n of dc/dt = -i M c from c_0 = (1, 0, 0).

    For a linear ODE one RK4 step is multiplication by the degree-4 Taylor
    polynomial of exp(-i M dt); iterates are produced block-wise from
    precomputed powers of that step matrix.
    """
    a = -1j * dt * m
    step = np.eye(3) + a + a @ a / 2 + a @ a @ a / 6 + a @ a @ a @ a / 24
    block = max(1, min(block, n_steps + 1))
    powers = np.empty((block, 3, 3), dtype=complex)
    powers[0] = np.eye(3)
    for k in range(1, block):
        powers[k] = step @ powers[k - 1]
    jump = step @ powers[-1]
    out = np.empty((n_steps + 1, 3), dtype=complex)
    c = np.array([1.0, 0.0, 0.0], dtype=complex)
    for start in range(0, n_steps + 1, block):
        stop = min(start + block, n_steps + 1)
        out[start:stop] = powers[: stop - start] @ c
        c = jump @ c
    return out


def _cascade_integral(c: np.ndarray, dt: float, kappa2: float, tail_rate: float) -> float:
    w = np.abs(c[:, 2]) ** 2
    integral = dt * (w.sum() - 0.5 * (w[0] + w[-1]))
    if tail_rate > 0:
        integral += w[-1] / tail_rate
    return 2 * kappa2 * integral


def amplitude_ode_oracle(
    params: TwoLevelParams,
    t_max: Optional[float] = None,
    dt: float = 1e-3,
    stride: int = 100,
    drop_g2_feedback: bool = False,
    richardson: bool = True,
) -> AmplitudeTrace:
    """Integrate the three-amplitude equations from |e,0,0> and return P_T.

    P_T = 2 kappa2 * int |c3|^2 dt by the trapezoid rule plus an exponential
    tail at the slowest decay rate. ``t_max`` defaults to the time at which
    the norm has decayed to about 1e-8.
    """
    m = manifold_one_matrix(params, drop_g2_feedback)
    rates = -np.linalg.eigvals(m).imag  # amplitude decay rates
    slow = float(rates.min())
    if t_max is None:
        if slow <= 0:
            raise DegenerateParametersError("no decay in the one-excitation manifold; pass t_max explicitly")
        t_max = math.log(1e8) / (2 * slow)
    n_steps = int(math.ceil(t_max / dt))
    c = _rk4_march(m, dt, n_steps)

    norm2 = np.sum(np.abs(c) ** 2, axis=1)
    if np.any(np.diff(norm2) > 1e-12 * norm2[:-1]):
        raise StepSizeError(f"amplitude norm increased with dt = {dt}; reduce the step")
    if norm2[-1] > 1e-6:
        warnings.warn(f"norm {norm2[-1]:.2e} left at t_max = {t_max:g}; increase t_max", stacklevel=2)

    tail = 2 * slow
    p_t = _cascade_integral(c, dt, params.kappa2, tail)
    err = math.nan
    if richardson:
        fine = _rk4_march(m, dt / 2, 2 * n_steps)
        err = abs(_cascade_integral(fine, dt / 2, params.kappa2, tail) - p_t)
    sel = slice(None, None, max(1, int(stride)))
    t = np.arange(n_steps + 1) * dt
    return AmplitudeTrace(
        time=t[sel],
        c1=c[sel, 0],
        c2=c[sel, 1],
        c3=c[sel, 2],
        cascade_probability=float(p_t),
        dt=dt,
        richardson_error=float(err),
    )


def cascade_probability_exact(params: TwoLevelParams) -> float:
    """2 kappa2 * int_0^inf |c3|^2 dt from the eigen-decomposition of the 3x3 block.

    Independent of the time stepper; used to cross-check `amplitude_ode_oracle`.
    """
    m = manifold_one_matrix(params)
    w, v = np.linalg.eig(m)
    amp = v[2] * np.linalg.solve(v, np.array([1.0, 0.0, 0.0], dtype=complex))
    total = 0.0 + 0.0j
    for j in range(3):
        for k in range(3):
            total += amp[j] * np.conj(amp[k]) / (1j * (w[j] - np.conj(w[k])))
    return float(2 * params.kappa2 * total.real)
