"""Two-time correlations and cavity emission spectra.

C(tau) = Tr[x' exp(L tau)(x rho_ss)] for x = a or b (quantum regression),
and S(w) = 2 Re int_0^inf C(tau) exp(-i w tau) dtau on a symmetric grid
with spacing 2 pi / t_max. Detunings are measured from omega0 (mode a) or
omega0/2 (mode b) because the dynamics run in the rotating frame.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.signal import find_peaks
from scipy.sparse.linalg import expm_multiply

from .errors import ConfigError, NumericalFailure
from .hilbert import SpaceSpec, space_operators
from .io import write_json, write_table
from .model import Liouvillian, TwoLevelParams
from .steady import steady_residual, steady_state

MODES = ("a", "b")
# excitation-label shift (2N units) carried by x rho for each mode
_SHIFT = {"a": -2, "b": -1}


def spectrum_params() -> TwoLevelParams:
    """Baseline with kappa2 = 0.2, where the dressed-state lines are well separated."""
    return TwoLevelParams(kappa2=0.2)


def default_t_max(params: TwoLevelParams) -> float:
    return 20.0 / min(params.kappa1 + params.gamma, params.kappa2)


def _mode_op(mode: str, spec: SpaceSpec):
    if mode not in MODES:
        raise ConfigError(f"mode must be 'a' or 'b', got {mode!r}")
    o = space_operators(spec)
    return o.a if mode == "a" else o.b


def two_time_correlation(liou: Liouvillian, rho_ss: np.ndarray, mode: str, tau_grid) -> np.ndarray:
    """<x'(tau) x(0)> on a uniform grid starting at tau = 0."""
    tau = np.asarray(tau_grid, dtype=float)
    if tau.ndim != 1 or tau.size < 2 or tau[0] != 0:
        raise ConfigError("tau_grid must be a 1-D grid starting at 0")
    step = np.diff(tau)
    if not np.allclose(step, step[0], rtol=1e-9, atol=0):
        raise ConfigError("tau_grid must be uniform")
    res = steady_residual(liou, rho_ss)
    if res > 1e-8:
        raise NumericalFailure(f"rho_ss is not a converged steady state (residual {res:.3g})")
    spec = liou.spec
    x = _mode_op(mode, spec)
    d = spec.dim
    start = (x @ rho_ss).reshape(-1, order="F")
    idx = liou.sector(_SHIFT[mode]) if liou.labels is not None else np.arange(d * d)
    block = liou.matrix[idx][:, idx].tocsc()
    traj = expm_multiply(block, start[idx], start=0.0, stop=tau[-1], num=tau.size, endpoint=True)
    # Tr[x' Y] = vec(conj(x)) . vec(Y)
    weights = np.asarray(x.conj().todense()).reshape(-1, order="F")[idx]
    return traj @ weights


@dataclass(frozen=True)
class SpectrumResult:
    mode: str
    detunings: np.ndarray
    values: np.ndarray
    resolution: float
    t_max: float = math.nan
    dtau: float = math.nan

    def center(self, omega0: float) -> float:
        return omega0 if self.mode == "a" else omega0 / 2

    def absolute_frequencies(self, omega0: float) -> np.ndarray:
        return self.center(omega0) + self.detunings

    def value_at(self, detuning: float) -> float:
        return float(self.values[int(np.argmin(np.abs(self.detunings - detuning)))])


def emission_spectrum(
    correlation,
    tau_grid,
    mode: str = "b",
    window: Optional[float] = None,
    linewidth: Optional[float] = None,
) -> SpectrumResult:
    """Max-normalized S(w) from C(tau) by a trapezoid-weighted FFT.

    The sample count used is made even so the frequency grid (odd length)
    is symmetric about zero. ``window`` is an optional exponential decay
    rate applied to C; ``linewidth`` enables the unresolved-peak warning.
    """
    c = np.asarray(correlation, dtype=complex)
    tau = np.asarray(tau_grid, dtype=float)
    if c.shape != tau.shape:
        raise ConfigError("correlation and tau_grid must have the same length")
    if (c.size - 1) % 2 == 0:  # need an odd number of bins
        c, tau = c[:-1], tau[:-1]
    dtau = tau[1] - tau[0]
    t_max = tau[-1]
    if abs(c[-1]) > 1e-4 * abs(c[0]):
        warnings.warn(f"correlation has not decayed at t_max = {t_max:g} (|C|/|C0| = {abs(c[-1] / c[0]):.2e})", stacklevel=2)
    if window:
        c = c * np.exp(-window * tau)
    m = c.size - 1
    y = c[:-1].copy()
    # trapezoid weights; exp(-i w_k t_max) = 1 on this grid so the last sample folds onto the first
    y[0] = 0.5 * (c[0] + c[-1])
    spec = 2.0 * dtau * np.fft.fft(y).real
    freqs = 2 * np.pi * np.fft.fftfreq(m, dtau)
    order = np.argsort(freqs)
    freqs, spec = freqs[order], spec[order]
    peak = spec.max()
    if peak <= 0:
        raise NumericalFailure("spectrum has no positive weight")
    values = spec / peak
    if values.min() < -1e-6:
        warnings.warn(f"spectrum dips to {values.min():.2e} below zero before clipping", stacklevel=2)
    values = np.clip(values, 0.0, None)
    resolution = 2 * np.pi / t_max
    if linewidth is not None and resolution > linewidth / 2:
        warnings.warn(f"bin width {resolution:.3g} exceeds half the expected linewidth {linewidth:.3g}", stacklevel=2)
    return SpectrumResult(mode=mode, detunings=freqs, values=values, resolution=resolution, t_max=t_max, dtau=dtau)


def compute_spectrum(
    params: TwoLevelParams,
    mode: str,
    spec: Optional[SpaceSpec] = None,
    t_max: Optional[float] = None,
    dtau: float = 0.05,
) -> SpectrumResult:
    """Steady state, correlation and spectrum in one call."""
    spec = spec or SpaceSpec(2, 3, 6)
    t_max = t_max or default_t_max(params)
    n = int(round(t_max / dtau))
    n += n % 2  # even number of intervals -> odd bin count after trimming
    tau = np.arange(n + 1) * dtau
    rho, liou = steady_state(params, spec)
    corr = two_time_correlation(liou, rho, mode, tau)
    width = min(params.kappa1 + params.gamma, params.kappa2)
    return emission_spectrum(corr, tau, mode, linewidth=width)


@dataclass(frozen=True)
class DressedPeaks:
    splitting: float
    mode_b: tuple
    mode_a: tuple
    suppression_ratio: float  # |c(g,1,0) / c(g,0,2)| of the middle one-excitation eigenstate


def dressed_peaks(params: TwoLevelParams) -> DressedPeaks:
    """Predicted line positions from the one-excitation dressed states."""
    omega = math.sqrt(params.g1**2 + 2 * params.g2**2)
    return DressedPeaks(
        splitting=omega,
        mode_b=(-omega, 0.0, omega),
        mode_a=(-omega, omega),
        suppression_ratio=math.sqrt(2) * abs(params.g2) / params.g1,
    )


def spectrum_peaks(result: SpectrumResult, min_height: float = 1e-3) -> np.ndarray:
    """Detunings of local maxima above ``min_height`` (relative), tallest first."""
    idx, props = find_peaks(result.values, height=min_height)
    order = np.argsort(props["peak_heights"])[::-1]
    return result.detunings[idx[order]]


def write_spectrum(result: SpectrumResult, path, params=None) -> None:
    meta = {
        "mode": result.mode,
        "resolution": result.resolution,
        "t_max": result.t_max,
        "dtau": result.dtau,
        "normalization": "unit maximum",
        "params": params.as_dict() if params is not None else None,
    }
    write_table(zip(result.detunings, result.values), ("detuning_over_g1", "value"), path)
    write_json(meta, str(path) + ".json")
