"""Monte Carlo wavefunction trajectories.

Each step of length ``dt`` draws one uniform ``r``; when ``r`` is below
``dp = dt * <psi| sum_c c'c |psi>`` a jump is applied, with channel ``c``
chosen in proportion to its share of ``dp``. Otherwise the state is
propagated by one RK4 step of ``i d psi/dt = H_e psi`` and renormalized.

``H_e`` conserves the excitation number, so between jumps the state lives
in one excitation manifold. Stepping is therefore done on the (small)
manifold block, many steps at a time, from precomputed powers of the RK4
step matrix. The uniform for step ``n`` depends only on (seed, trajectory
index, n), so the event sequence does not depend on how steps are batched.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np
from scipy.sparse.linalg import expm_multiply

from .errors import ConfigError, StepSizeError, UndefinedEstimateError
from .hilbert import ATOM_E, SpaceSpec, excitation_labels, space_operators
from .io import write_table
from .model import Channel, TwoLevelParams, build_h_effective, jump_rate_operator, liouvillian

log = logging.getLogger(__name__)

DP_LIMIT = 0.01  # dt * max jump rate must stay below this
DP_FATAL = 0.1
_UNIFORM_CHUNK = 1 << 16
_MAX_BLOCK = 4096

# change of 2N per channel
_LABEL_SHIFT = {Channel.A_PHOTON: -2, Channel.B_PHOTON: -1, Channel.DECAY: -2, Channel.PUMP: 2}
_CHANNELS = (Channel.A_PHOTON, Channel.B_PHOTON, Channel.DECAY, Channel.PUMP)


def max_jump_rate(params: TwoLevelParams, spec: SpaceSpec) -> float:
    return float(jump_rate_operator(params, spec).diagonal().real.max())


@dataclass(frozen=True)
class TrajectoryConfig:
    """One trajectory. ``dt`` defaults to 0.8 of the largest step the rate invariant allows."""

    params: TwoLevelParams = field(default_factory=TwoLevelParams)
    spec: SpaceSpec = SpaceSpec(2, 2, 4)
    t_max: float = 3000.0
    dt: Optional[float] = None
    seed: int = 0
    sample_stride: int = 500
    traj_index: int = 0
    initial: tuple = (ATOM_E, 0, 0)

    def __post_init__(self):
        if self.spec.atom_levels != 2:
            raise ConfigError("trajectories are implemented for the two-level model")
        if not self.t_max > 0:
            raise ConfigError(f"t_max must be > 0, got {self.t_max}")
        if int(self.sample_stride) != self.sample_stride or self.sample_stride < 1:
            raise ConfigError("sample_stride must be a positive integer")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        rate = max_jump_rate(self.params, self.spec)
        if self.dt is None:
            object.__setattr__(self, "dt", 0.8 * DP_LIMIT / rate if rate > 0 else 1e-2)
        if not self.dt > 0:
            raise ConfigError(f"dt must be > 0, got {self.dt}")
        if self.dt * rate >= DP_LIMIT:
            raise ConfigError(
                f"dt * max jump rate = {self.dt * rate:.3g} violates the bound {DP_LIMIT}; use dt < {DP_LIMIT / rate:.3g}"
            )

    @property
    def n_steps(self) -> int:
        return int(math.ceil(self.t_max / self.dt - 1e-9))

    def with_index(self, index: int) -> "TrajectoryConfig":
        return TrajectoryConfig(self.params, self.spec, self.t_max, self.dt, self.seed, self.sample_stride, index, self.initial)


@dataclass(frozen=True)
class JumpEvent:
    time: float
    channel: Channel
    # <N> of the state just before and just after the jump
    n_before: float = math.nan
    n_after: float = math.nan


@dataclass
class TrajectoryRecord:
    config: TrajectoryConfig
    events: List[JumpEvent]
    sample_times: np.ndarray
    pop_e: np.ndarray
    n_a: np.ndarray
    n_b: np.ndarray
    max_n_variance: float = 0.0

    @property
    def traj_index(self) -> int:
        return self.config.traj_index

    def channels(self) -> list:
        return [e.channel for e in self.events]


class _StepUniforms:
    """Uniform variate for every step index, generated in fixed chunks."""

    def __init__(self, seed: int, traj_index: int):
        self.seed = int(seed)
        self.traj_index = int(traj_index)
        self._cache: Dict[int, np.ndarray] = {}

    def _chunk(self, c: int) -> np.ndarray:
        arr = self._cache.get(c)
        if arr is None:
            ss = np.random.SeedSequence(self.seed, spawn_key=(self.traj_index, 0, c))
            arr = np.random.Generator(np.random.Philox(ss)).random(_UNIFORM_CHUNK)
            if len(self._cache) > 2:
                self._cache.pop(min(self._cache))
            self._cache[c] = arr
        return arr

    def get(self, start: int, count: int) -> np.ndarray:
        c0, c1 = start // _UNIFORM_CHUNK, (start + count - 1) // _UNIFORM_CHUNK
        if c0 == c1:
            off = start - c0 * _UNIFORM_CHUNK
            return self._chunk(c0)[off : off + count]
        parts = [self._chunk(c) for c in range(c0, c1 + 1)]
        off = start - c0 * _UNIFORM_CHUNK
        return np.concatenate(parts)[off : off + count]


@dataclass
class _Manifold:
    idx: np.ndarray
    powers: Optional[np.ndarray]  # (block + 1, n, n); None for one-dimensional manifolds
    block: int
    total_rate: np.ndarray  # diagonal of sum_c c'c on the block
    channel_rate: np.ndarray  # (4, n) per-channel diagonals
    obs: np.ndarray  # (3, n): |e><e|, a'a, b'b diagonals


class _Propagator:
    def __init__(self, params: TwoLevelParams, spec: SpaceSpec, dt: float):
        self.params, self.spec, self.dt = params, spec, dt
        self.labels = excitation_labels(spec)
        self.h_eff = build_h_effective(params, spec).tocsr()
        o = space_operators(spec)
        rates = {
            Channel.A_PHOTON: params.kappa1 * o.num_a.diagonal().real,
            Channel.B_PHOTON: params.kappa2 * o.num_b.diagonal().real,
            Channel.DECAY: params.gamma * o.proj[ATOM_E].diagonal().real,
            Channel.PUMP: params.pump * o.proj[0].diagonal().real,
        }
        self.channel_rate = np.array([rates[c] for c in _CHANNELS])
        self.ops = {Channel.A_PHOTON: o.a, Channel.B_PHOTON: o.b, Channel.DECAY: o.sigmam, Channel.PUMP: o.sigmap}
        self.obs = np.array(
            [o.proj[ATOM_E].diagonal().real, o.num_a.diagonal().real, o.num_b.diagonal().real]
        )
        self._cache: Dict[int, _Manifold] = {}

    def manifold(self, label: int) -> _Manifold:
        m = self._cache.get(label)
        if m is not None:
            return m
        idx = np.flatnonzero(self.labels == label)
        total = self.channel_rate[:, idx].sum(axis=0)
        n = len(idx)
        peak = float(total.max()) if n else 0.0
        if n == 1:
            m = _Manifold(idx, None, _UNIFORM_CHUNK, total, self.channel_rate[:, idx], self.obs[:, idx])
        else:
            # keep |U^k| well above underflow inside a block
            block = _MAX_BLOCK if peak == 0 else max(1, min(_MAX_BLOCK, int(600.0 / (peak * self.dt))))
            h = self.h_eff[idx][:, idx].toarray()
            a = -1j * self.dt * h
            a2 = a @ a
            step = np.eye(n) + a + a2 / 2 + a2 @ a / 6 + a2 @ a2 / 24
            powers = np.empty((block + 1, n, n), dtype=complex)
            powers[0] = np.eye(n)
            filled = 1
            while filled < block + 1:
                take = min(filled, block + 1 - filled)
                # U^(filled + j) = U^j U^filled
                powers[filled : filled + take] = powers[:take] @ (powers[filled - 1] @ step)
                filled += take
            m = _Manifold(idx, powers, block, total, self.channel_rate[:, idx], self.obs[:, idx])
        self._cache[label] = m
        return m


_PROPAGATORS: Dict[tuple, _Propagator] = {}


def _propagator(params, spec, dt) -> _Propagator:
    key = (params, spec, dt)
    prop = _PROPAGATORS.get(key)
    if prop is None:
        if len(_PROPAGATORS) > 16:
            _PROPAGATORS.clear()
        prop = _PROPAGATORS[key] = _Propagator(params, spec, dt)
    return prop


def run_trajectory(config: TrajectoryConfig) -> TrajectoryRecord:
    """One MCWF trajectory from ``config.initial`` (default |e,0,0>)."""
    params, spec, dt = config.params, config.spec, config.dt
    prop = _propagator(params, spec, dt)
    uniforms = _StepUniforms(config.seed, config.traj_index)
    chooser = np.random.Generator(
        np.random.Philox(np.random.SeedSequence(config.seed, spawn_key=(config.traj_index, 1)))
    )
    n_steps = config.n_steps
    stride = int(config.sample_stride)

    psi = np.zeros(spec.dim, dtype=complex)
    psi[spec.index(*config.initial)] = 1.0
    label = int(prop.labels[spec.index(*config.initial)])

    events: List[JumpEvent] = []
    s_steps: List[np.ndarray] = []
    s_vals: List[np.ndarray] = []
    max_var = 0.0
    step = 0
    while step < n_steps:
        man = prop.manifold(label)
        local = psi[man.idx]
        count = min(man.block, n_steps - step)
        if man.powers is None:
            probs = None
            dp = np.full(count, dt * man.total_rate[0])
        else:
            phi = man.powers[: count + 1] @ local
            weight = np.abs(phi) ** 2
            norms = weight.sum(axis=1)
            probs = weight / norms[:, None]
            dp = dt * (probs[:count] @ man.total_rate)
        u = uniforms.get(step, count)
        hits = np.flatnonzero(u < dp)
        last = int(hits[0]) if hits.size else count - 1
        if dp[: last + 1].max() >= DP_FATAL:
            raise StepSizeError(f"jump probability {dp.max():.3g} per step at t = {step * dt:g}; reduce dt")

        first_sample = -(-step // stride) * stride
        sample_at = np.arange(first_sample, step + last + 1, stride)
        if sample_at.size:
            if probs is None:
                vals = np.repeat(man.obs[:, :1].T, sample_at.size, axis=0)
            else:
                p = probs[sample_at - step]
                vals = p @ man.obs.T
                lab = prop.labels[man.idx] / 2.0
                var = p @ lab**2 - (p @ lab) ** 2
                max_var = max(max_var, float(np.max(np.abs(var))))
            s_steps.append(sample_at)
            s_vals.append(vals)

        if not hits.size:
            if probs is not None:
                psi = np.zeros_like(psi)
                psi[man.idx] = phi[count] / math.sqrt(norms[count])
            step += count
            continue

        # jump during step (step + last), applied to the state at its start
        if probs is None:
            cur = np.ones(1)
            state = local
        else:
            cur = probs[last]
            state = phi[last] / math.sqrt(norms[last])
        share = man.channel_rate @ cur
        pick = int(np.searchsorted(np.cumsum(share), chooser.random() * share.sum(), side="right"))
        pick = min(pick, len(_CHANNELS) - 1)
        while share[pick] == 0:  # guard against landing on a zero-width interval at the top
            pick -= 1
        channel = _CHANNELS[pick]
        full = np.zeros_like(psi)
        full[man.idx] = state
        new = prop.ops[channel] @ full
        new /= np.linalg.norm(new)
        n_before = float(cur @ (prop.labels[man.idx] / 2.0))
        label += _LABEL_SHIFT[channel]
        events.append(JumpEvent(time=(step + last + 1) * dt, channel=channel, n_before=n_before, n_after=label / 2.0))
        psi = new
        step += last + 1

    if s_steps:
        steps_arr = np.concatenate(s_steps)
        vals = np.concatenate(s_vals)
    else:
        steps_arr = np.zeros(0, dtype=int)
        vals = np.zeros((0, 3))
    return TrajectoryRecord(
        config=config,
        events=events,
        sample_times=steps_arr * dt,
        pop_e=vals[:, 0],
        n_a=vals[:, 1],
        n_b=vals[:, 2],
        max_n_variance=max_var,
    )


def run_ensemble(config: TrajectoryConfig, n_traj: int, workers: int = 1) -> List[TrajectoryRecord]:
    """Trajectories 0..n_traj-1 of ``config``, returned in index order."""
    configs = [config.with_index(i) for i in range(n_traj)]
    if workers > 1 and n_traj > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(run_trajectory, configs))
    return [run_trajectory(c) for c in configs]


def cascade_detect(record) -> list:
    """(t_first, t_second) for each pair of consecutive B_PHOTON events with nothing in between."""
    events = record.events if isinstance(record, TrajectoryRecord) else record
    pairs = []
    i = 0
    while i + 1 < len(events):
        if events[i].channel == Channel.B_PHOTON and events[i + 1].channel == Channel.B_PHOTON:
            pairs.append((events[i].time, events[i + 1].time))
            i += 2
        else:
            i += 1
    return pairs


@dataclass(frozen=True)
class JumpStats:
    counts: Dict[Channel, int]
    cascade_count: int
    mean_intra_cascade_gap: float
    eta_estimate: float
    eta_stderr: float
    total_time: float = math.nan

    def rate(self, channel: Channel) -> float:
        return self.counts[channel] / self.total_time


def jump_statistics(records: Sequence) -> JumpStats:
    """Efficiency estimate 100 * (B jumps / 2) / pump jumps over all records.

    The standard error treats each pump cycle as a Bernoulli trial that
    either ends in a photon pair or not.
    """
    if not records:
        raise ValueError("need at least one record")
    counts = {c: 0 for c in _CHANNELS}
    gaps = []
    cascades = 0
    total_time = 0.0
    for rec in records:
        events = rec.events if isinstance(rec, TrajectoryRecord) else rec
        for e in events:
            counts[Channel(e.channel)] += 1
        pairs = cascade_detect(events)
        cascades += len(pairs)
        gaps.extend(t2 - t1 for t1, t2 in pairs)
        if isinstance(rec, TrajectoryRecord):
            total_time += rec.config.n_steps * rec.config.dt
    pumps = counts[Channel.PUMP]
    if pumps == 0:
        raise UndefinedEstimateError("no PUMP events; efficiency estimate undefined")
    frac = (counts[Channel.B_PHOTON] / 2) / pumps
    p = min(max(frac, 0.0), 1.0)
    return JumpStats(
        counts=counts,
        cascade_count=cascades,
        mean_intra_cascade_gap=float(np.mean(gaps)) if gaps else math.nan,
        eta_estimate=100 * frac,
        eta_stderr=100 * math.sqrt(p * (1 - p) / pumps),
        total_time=total_time if total_time > 0 else math.nan,
    )


@dataclass(frozen=True)
class EnsembleAverage:
    times: np.ndarray
    pop_e: np.ndarray
    n_a: np.ndarray
    n_b: np.ndarray
    pop_e_err: np.ndarray
    n_a_err: np.ndarray
    n_b_err: np.ndarray
    n_traj: int


def _average(records: Sequence[TrajectoryRecord]) -> EnsembleAverage:
    n = len(records)
    if n == 0:
        raise ValueError("need at least one record")
    length = min(len(r.sample_times) for r in records)
    out = {}
    for name in ("pop_e", "n_a", "n_b"):
        data = np.array([getattr(r, name)[:length] for r in records])
        out[name] = data.mean(axis=0)
        out[name + "_err"] = data.std(axis=0, ddof=1) / math.sqrt(n) if n > 1 else np.full(length, math.nan)
    return EnsembleAverage(times=records[0].sample_times[:length], n_traj=n, **out)


def ensemble_average(configs, workers: int = 1) -> EnsembleAverage:
    """Mean populations over trajectories, with standard errors.

    ``configs`` is a list of `TrajectoryConfig` sharing params and spec, or a
    list of already-run `TrajectoryRecord`.
    """
    configs = list(configs)
    if configs and isinstance(configs[0], TrajectoryRecord):
        return _average(configs)
    first = configs[0]
    for c in configs[1:]:
        if (c.params, c.spec, c.dt, c.sample_stride) != (first.params, first.spec, first.dt, first.sample_stride):
            raise ConfigError("ensemble members must share params, spec, dt and sample_stride")
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(run_trajectory, configs))
    else:
        records = [run_trajectory(c) for c in configs]
    return _average(records)


def master_equation_populations(params: TwoLevelParams, spec: SpaceSpec, times: np.ndarray, initial=(ATOM_E, 0, 0)):
    """<|e><e|>, <a'a>, <b'b> from the master equation on a uniform time grid."""
    times = np.asarray(times, dtype=float)
    liou = liouvillian(params, spec)
    d = spec.dim
    rho0 = np.zeros((d, d), dtype=complex)
    k = spec.index(*initial)
    rho0[k, k] = 1.0
    idx = liou.sector(0)
    block = liou.matrix[idx][:, idx].tocsc()
    v = expm_multiply(block, rho0.reshape(-1, order="F")[idx], start=times[0], stop=times[-1], num=len(times), endpoint=True)
    diag_pos = np.flatnonzero(idx % (d + 1) == 0)
    diag_basis = idx[diag_pos] // (d + 1)
    pops = v[:, diag_pos].real
    prop = _propagator(params, spec, 1.0)
    obs = prop.obs[:, diag_basis]
    vals = pops @ obs.T
    return vals[:, 0], vals[:, 1], vals[:, 2]


def write_event_log(records: Sequence[TrajectoryRecord], path) -> None:
    rows = ((r.traj_index, e.time, e.channel.value) for r in records for e in r.events)
    write_table(rows, ("trajectory_id", "time", "channel"), path)
