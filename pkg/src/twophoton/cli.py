"""Batch front end: JSON run configuration in, CSV tables and JSON metadata out.

Example::

    twophoton --config run.json --out results/

with ``run.json``::

    {"subcommand": "sweep", "params": {"kappa1": 0.02},
     "sweep": {"axis": "kappa2", "grid": {"space": "log", "start": 0.1, "stop": 10, "num": 40}}}

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 truncation convergence failure.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import math
import os
import platform
import sys
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Tuple

import numpy as np
import scipy

from . import __version__
from .analytic import (
    amplitude_ode_oracle,
    cascade_probability,
    closed_form_stats,
    eta_max,
    eta_max_printed,
    low_pump_stats,
    reduced_linear_system,
)
from .errors import ConfigError, ConvergenceError, NumericalFailure, TwoPhotonError
from .hilbert import SpaceSpec
from .io import write_json, write_table
from .model import ThreeLevelParams, TwoLevelParams
from .spectra import compute_spectrum, dressed_peaks, spectrum_peaks, write_spectrum
from .steady import SWEEP_AXES, steady_state_report, sweep, truncation_convergence
from .trajectories import TrajectoryConfig, ensemble_average, jump_statistics, run_ensemble, write_event_log
from .validate3 import fidelity_series, mapd_sweep, write_fidelity, write_mapd

log = logging.getLogger("twophoton")

SUBCOMMANDS = ("steady", "sweep", "analytic", "traj", "spectrum", "validate3", "convergence")
THREADS_ENV = "TWOPHOTON_THREADS"
EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_CONVERGENCE = 0, 2, 3, 4

REPORT_COLUMNS = (
    "eta", "tpe_rate", "ope_rate", "loss_rate", "n_a", "n_b", "pop_g", "pop_e",
    "g2zero", "mandel_q", "balance_residual", "na_max", "nb_max",
)
_PER_SECOND = {"tpe_rate": "T_per_second", "ope_rate": "O_per_second", "loss_rate": "L_per_second"}


@dataclass(frozen=True)
class SweepSettings:
    axis: str
    grid: Tuple[float, ...]


@dataclass(frozen=True)
class TrajectorySettings:
    t_max: float = 3000.0
    dt: Optional[float] = None
    n_traj: int = 4
    sample_stride: int = 500


@dataclass(frozen=True)
class SpectrumSettings:
    modes: Tuple[str, ...] = ("a", "b")
    t_max: Optional[float] = None
    dtau: float = 0.05


@dataclass(frozen=True)
class Validate3Settings:
    kappa2_grid: Tuple[float, ...] = (0.02, 0.05, 0.1, 0.2, 0.5)
    fidelity_t_max: float = 50.0
    fidelity_dt: float = 0.01


@dataclass(frozen=True)
class ConvergenceSettings:
    tol: float = 1e-3
    ladder: str = "joint"
    max_dim: int = 4000


@dataclass(frozen=True)
class RunConfig:
    subcommand: str
    model: str = "two_level"
    params: object = field(default_factory=TwoLevelParams)
    spec: Optional[SpaceSpec] = SpaceSpec(2, 3, 6)
    auto_truncation: bool = False
    sweep: Optional[SweepSettings] = None
    trajectory: TrajectorySettings = TrajectorySettings()
    spectrum: SpectrumSettings = SpectrumSettings()
    validate3: Validate3Settings = Validate3Settings()
    convergence: ConvergenceSettings = ConvergenceSettings()
    out: str = "out"
    seed: int = 0
    threads: int = 1
    g1_hz: Optional[float] = None
    warnings: Tuple[str, ...] = ()

    def as_dict(self) -> dict:
        d = {
            "subcommand": self.subcommand,
            "model": self.model,
            "params": self.params.as_dict(),
            "spec": None if self.spec is None else {"na_max": self.spec.na_max, "nb_max": self.spec.nb_max},
            "auto_truncation": self.auto_truncation,
            "sweep": None if self.sweep is None else {"axis": self.sweep.axis, "grid": list(self.sweep.grid)},
            "trajectory": dataclasses.asdict(self.trajectory),
            "spectrum": {**dataclasses.asdict(self.spectrum), "modes": list(self.spectrum.modes)},
            "validate3": {**dataclasses.asdict(self.validate3), "kappa2_grid": list(self.validate3.kappa2_grid)},
            "convergence": dataclasses.asdict(self.convergence),
            "out": self.out,
            "seed": self.seed,
            "threads": self.threads,
            "g1_hz": self.g1_hz,
        }
        return d

    def serialize(self) -> str:
        return json.dumps(self.as_dict(), indent=2, sort_keys=True)


_TOP_KEYS = {
    "subcommand", "model", "params", "spec", "auto_truncation", "sweep", "trajectory",
    "spectrum", "validate3", "convergence", "out", "seed", "threads", "g1_hz",
}


def _check_keys(section: str, data: dict, allowed) -> None:
    if not isinstance(data, dict):
        raise ConfigError(f"{section} must be an object")
    unknown = sorted(set(data) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown key(s) in {section}: {', '.join(unknown)}")


def _number(section: str, name: str, value, positive=False, integer=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{section}.{name} must be a number")
    if integer and int(value) != value:
        raise ConfigError(f"{section}.{name} must be an integer")
    if not math.isfinite(value) or (positive and value <= 0):
        raise ConfigError(f"{section}.{name} must be {'positive' if positive else 'finite'}")
    return int(value) if integer else float(value)


def expand_grid(section: str, spec) -> Tuple[float, ...]:
    """Sorted grid from a list or a {"space", "start", "stop", "num"} description.

    Duplicates are rejected; an unsorted list is sorted so permuted inputs
    give identical tables.
    """
    if isinstance(spec, dict):
        _check_keys(section, spec, {"space", "start", "stop", "num"})
        space = spec.get("space", "linear")
        if space not in ("linear", "log"):
            raise ConfigError(f"{section}.space must be 'linear' or 'log'")
        try:
            start, stop, num = spec["start"], spec["stop"], spec["num"]
        except KeyError as exc:
            raise ConfigError(f"{section} needs start, stop and num") from exc
        start = _number(section, "start", start)
        stop = _number(section, "stop", stop)
        num = _number(section, "num", num, positive=True, integer=True)
        if space == "log":
            if start <= 0 or stop <= 0:
                raise ConfigError(f"{section}: log grids need positive bounds")
            values = np.logspace(math.log10(start), math.log10(stop), num)
        else:
            values = np.linspace(start, stop, num)
        values = [float(v) for v in values]
    elif isinstance(spec, (list, tuple)):
        values = [_number(section, f"[{i}]", v) for i, v in enumerate(spec)]
    else:
        raise ConfigError(f"{section} must be a list or a grid description")
    if not values:
        raise ConfigError(f"{section} is empty")
    values = sorted(values)
    if any(b <= a for a, b in zip(values, values[1:])):
        raise ConfigError(f"{section} has duplicate values")
    return tuple(values)


def _settings(cls, section: str, data, casts) -> object:
    if data is None:
        return cls()
    _check_keys(section, data, {f.name for f in dataclasses.fields(cls)})
    kw = {}
    for name, value in data.items():
        kw[name] = casts[name](value)
    return cls(**kw)


def parse_config(text: str) -> RunConfig:
    """Validate a JSON run configuration and fill in every default."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    _check_keys("config", data, _TOP_KEYS)
    notes = []

    sub = data.get("subcommand")
    if sub not in SUBCOMMANDS:
        raise ConfigError(f"subcommand must be one of {SUBCOMMANDS}, got {sub!r}")
    model = data.get("model", "three_level" if sub == "validate3" else "two_level")
    if model not in ("two_level", "three_level"):
        raise ConfigError("model must be 'two_level' or 'three_level'")
    cls = TwoLevelParams if model == "two_level" else ThreeLevelParams
    raw = data.get("params") or {}
    _check_keys("params", raw, {f.name for f in dataclasses.fields(cls)})
    kw = {k: (None if v is None and k == "omega0" else _number("params", k, v)) for k, v in raw.items()}
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        try:
            params = cls(**kw)
        except TwoPhotonError as exc:
            raise ConfigError(f"params: {exc}") from exc
    notes.extend(str(w.message) for w in caught)
    if model == "two_level" and abs(params.g2) > params.g1:
        notes.append(
            f"|g2| = {abs(params.g2):g} exceeds g1 = {params.g1:g}; the effective two-photon model assumes |g2| << g1"
        )

    levels = 2 if model == "two_level" else 3
    spec_raw = data.get("spec", {})
    if spec_raw is None:
        spec_raw = {}
    _check_keys("spec", spec_raw, {"na_max", "nb_max"})
    # trajectories run on a smaller space: the ensemble rarely leaves N <= 2
    default_na, default_nb = (2, 4) if sub == "traj" else (3, 6 if levels == 2 else 7)
    try:
        spec = SpaceSpec(
            levels,
            _number("spec", "na_max", spec_raw.get("na_max", default_na), positive=True, integer=True),
            _number("spec", "nb_max", spec_raw.get("nb_max", default_nb), positive=True, integer=True),
        )
    except TwoPhotonError as exc:
        raise ConfigError(f"spec: {exc}") from exc
    auto = data.get("auto_truncation", False)
    if not isinstance(auto, bool):
        raise ConfigError("auto_truncation must be true or false")

    sweep_cfg = None
    if sub == "sweep" or data.get("sweep") is not None:
        sw = data.get("sweep")
        if sw is None:
            raise ConfigError("sweep runs need a sweep section with exactly one axis")
        _check_keys("sweep", sw, {"axis", "grid"})
        axis = sw.get("axis")
        if not isinstance(axis, str):
            raise ConfigError("sweep.axis must name exactly one parameter")
        if axis not in SWEEP_AXES:
            raise ConfigError(f"sweep.axis must be one of {SWEEP_AXES}")
        if "grid" not in sw:
            raise ConfigError("sweep.grid is required")
        sweep_cfg = SweepSettings(axis, expand_grid("sweep.grid", sw["grid"]))

    opt_float = lambda s, n: (lambda v: None if v is None else _number(s, n, v, positive=True))
    trajectory = _settings(
        TrajectorySettings,
        "trajectory",
        data.get("trajectory"),
        {
            "t_max": lambda v: _number("trajectory", "t_max", v, positive=True),
            "dt": opt_float("trajectory", "dt"),
            "n_traj": lambda v: _number("trajectory", "n_traj", v, positive=True, integer=True),
            "sample_stride": lambda v: _number("trajectory", "sample_stride", v, positive=True, integer=True),
        },
    )

    def _modes(v):
        if not isinstance(v, list) or not v or any(m not in ("a", "b") for m in v):
            raise ConfigError("spectrum.modes must be a non-empty list of 'a' and 'b'")
        return tuple(sorted(set(v)))

    spectrum = _settings(
        SpectrumSettings,
        "spectrum",
        data.get("spectrum"),
        {"modes": _modes, "t_max": opt_float("spectrum", "t_max"), "dtau": lambda v: _number("spectrum", "dtau", v, positive=True)},
    )
    validate3 = _settings(
        Validate3Settings,
        "validate3",
        data.get("validate3"),
        {
            "kappa2_grid": lambda v: expand_grid("validate3.kappa2_grid", v),
            "fidelity_t_max": lambda v: _number("validate3", "fidelity_t_max", v, positive=True),
            "fidelity_dt": lambda v: _number("validate3", "fidelity_dt", v, positive=True),
        },
    )

    def _ladder(v):
        if v not in ("joint", "adaptive"):
            raise ConfigError("convergence.ladder must be 'joint' or 'adaptive'")
        return v

    convergence = _settings(
        ConvergenceSettings,
        "convergence",
        data.get("convergence"),
        {
            "tol": lambda v: _number("convergence", "tol", v, positive=True),
            "ladder": _ladder,
            "max_dim": lambda v: _number("convergence", "max_dim", v, positive=True, integer=True),
        },
    )

    out = data.get("out", "out")
    if not isinstance(out, str) or not out:
        raise ConfigError("out must be a non-empty path string")
    seed = _number("config", "seed", data.get("seed", 0), integer=True)
    if not 0 <= seed < 2**64:
        raise ConfigError("seed must be an unsigned 64-bit integer")
    threads = _number("config", "threads", data.get("threads", 1), positive=True, integer=True)
    g1_hz = data.get("g1_hz")
    if g1_hz is not None:
        g1_hz = _number("config", "g1_hz", g1_hz, positive=True)
    if sub in ("traj", "spectrum") and model != "two_level":
        raise ConfigError(f"{sub} runs use the two-level model")
    if sub == "validate3" and model != "three_level":
        raise ConfigError("validate3 runs use the three-level model")

    return RunConfig(
        subcommand=sub,
        model=model,
        params=params,
        spec=spec,
        auto_truncation=auto,
        sweep=sweep_cfg,
        trajectory=trajectory,
        spectrum=spectrum,
        validate3=validate3,
        convergence=convergence,
        out=out,
        seed=seed,
        threads=threads,
        g1_hz=g1_hz,
        warnings=tuple(notes),
    )


def _report_row(rep, g1_hz=None) -> dict:
    row = rep.as_row()
    if g1_hz is not None:
        for key, col in _PER_SECOND.items():
            row[col] = row[key] * g1_hz
    return row


def _report_columns(g1_hz) -> tuple:
    return REPORT_COLUMNS + (tuple(_PER_SECOND.values()) if g1_hz is not None else ())


def _versions() -> dict:
    return {"twophoton": __version__, "numpy": np.__version__, "scipy": scipy.__version__, "python": platform.python_version()}


def _run_steady(cfg: RunConfig, out: Path, meta: dict) -> None:
    if cfg.auto_truncation:
        spec, rep = truncation_convergence(
            cfg.params, tol=cfg.convergence.tol, ladder=cfg.convergence.ladder, max_dim=cfg.convergence.max_dim, return_report=True
        )
    else:
        rep = steady_state_report(cfg.params, cfg.spec)
    meta["truncation"] = rep.truncation.as_dict()
    meta["residuals"] = {"liouvillian": rep.residual, "balance": rep.balance_residual, "min_eigenvalue": rep.min_eigenvalue}
    if cfg.model == "three_level":
        meta["pop_i"] = rep.pop_i
    write_table([_report_row(rep, cfg.g1_hz)], _report_columns(cfg.g1_hz), out / "steady.csv")


def _run_sweep(cfg: RunConfig, out: Path, meta: dict) -> None:
    axis, grid = cfg.sweep.axis, cfg.sweep.grid
    reps = sweep(cfg.params, axis, grid, spec=None if cfg.auto_truncation else cfg.spec, auto=cfg.auto_truncation,
                 tol=cfg.convergence.tol, threads=cfg.threads)
    rows = []
    for value, rep in zip(grid, reps):
        row = {axis: value, **_report_row(rep, cfg.g1_hz)}
        if cfg.model == "two_level" and cfg.params.replace(**{axis: value}).g2 != 0:
            row["eta_closed_form"] = closed_form_stats(cfg.params.replace(**{axis: value})).eta
        rows.append(row)
    cols = (axis,) + _report_columns(cfg.g1_hz) + (("eta_closed_form",) if cfg.model == "two_level" else ())
    meta["truncation"] = [r.truncation.as_dict() for r in reps]
    meta["residuals"] = {
        "max_liouvillian": max(r.residual for r in reps),
        "max_balance": max(r.balance_residual for r in reps),
    }
    write_table(rows, cols, out / f"sweep_{axis}.csv")


def _analytic_row(p: TwoLevelParams) -> dict:
    cf = closed_form_stats(p)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        lp = low_pump_stats(p)
    red = reduced_linear_system(p)
    return {
        "eta": cf.eta, "tpe_rate": cf.tpe_rate, "ope_rate": cf.ope_rate, "loss_rate": cf.loss_rate,
        "xi": cf.xi, "nu": cf.nu, "phi": cf.phi,
        "eta_printed": closed_form_stats(p, printed=True).eta,
        "eta_low_pump": lp.eta, "eta_reduced": red["eta"], "cascade_probability": cascade_probability(p),
    }


_ANALYTIC_COLUMNS = ("eta", "tpe_rate", "ope_rate", "loss_rate", "xi", "nu", "phi", "eta_printed",
                     "eta_low_pump", "eta_reduced", "cascade_probability")


def _run_analytic(cfg: RunConfig, out: Path, meta: dict) -> None:
    if cfg.model != "two_level":
        raise ConfigError("analytic runs use the two-level model")
    if cfg.sweep is not None:
        axis = cfg.sweep.axis
        rows = [{axis: v, **_analytic_row(cfg.params.replace(**{axis: v}))} for v in cfg.sweep.grid]
        write_table(rows, (axis,) + _ANALYTIC_COLUMNS, out / f"analytic_{axis}.csv")
        return
    row = _analytic_row(cfg.params)
    trace = amplitude_ode_oracle(cfg.params)
    row["cascade_probability_ode"] = trace.cascade_probability
    meta["eta_max"] = eta_max(cfg.params)
    meta["eta_max_printed_formula"] = eta_max_printed(cfg.params)
    meta["ode"] = {"dt": trace.dt, "t_max": float(trace.time[-1]), "richardson_error": trace.richardson_error}
    write_table([row], _ANALYTIC_COLUMNS + ("cascade_probability_ode",), out / "analytic.csv")


def _run_traj(cfg: RunConfig, out: Path, meta: dict) -> None:
    ts = cfg.trajectory
    base = TrajectoryConfig(params=cfg.params, spec=cfg.spec, t_max=ts.t_max, dt=ts.dt, seed=cfg.seed,
                            sample_stride=ts.sample_stride)
    records = run_ensemble(base, ts.n_traj, workers=cfg.threads)
    stats = jump_statistics(records)
    avg = ensemble_average(records)
    write_event_log(records, out / "events.csv")
    write_table(
        zip(avg.times, avg.pop_e, avg.pop_e_err, avg.n_a, avg.n_a_err, avg.n_b, avg.n_b_err),
        ("time", "pop_e", "pop_e_err", "n_a", "n_a_err", "n_b", "n_b_err"),
        out / "populations.csv",
    )
    meta["dt"] = base.dt
    meta["truncation"] = cfg.spec.as_dict()
    meta["jump_statistics"] = {
        "counts": {c.value: n for c, n in stats.counts.items()},
        "cascade_count": stats.cascade_count,
        "mean_intra_cascade_gap": stats.mean_intra_cascade_gap,
        "eta_estimate": stats.eta_estimate,
        "eta_stderr": stats.eta_stderr,
        "total_time": stats.total_time,
    }


def _run_spectrum(cfg: RunConfig, out: Path, meta: dict) -> None:
    ss = cfg.spectrum
    pred = dressed_peaks(cfg.params)
    meta["dressed_peaks"] = {"splitting": pred.splitting, "suppression_ratio": pred.suppression_ratio}
    meta["truncation"] = cfg.spec.as_dict()
    meta["peaks"] = {}
    for mode in ss.modes:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            res = compute_spectrum(cfg.params, mode, spec=cfg.spec, t_max=ss.t_max, dtau=ss.dtau)
        meta.setdefault("warnings", []).extend(str(w.message) for w in caught)
        meta["peaks"][mode] = [float(x) for x in spectrum_peaks(res)[:5]]
        write_spectrum(res, out / f"spectrum_{mode}.csv", cfg.params)


def _run_validate3(cfg: RunConfig, out: Path, meta: dict) -> None:
    vs = cfg.validate3
    fid = fidelity_series(cfg.params, t_max=vs.fidelity_t_max, dt=vs.fidelity_dt)
    write_fidelity(fid, out / "fidelity.csv")
    rep = mapd_sweep(cfg.params, vs.kappa2_grid, spec3=cfg.spec, auto=cfg.auto_truncation, tol=cfg.convergence.tol)
    write_mapd(rep, out / "mapd.csv")
    meta["min_fidelity"] = float(fid.fidelity.min())
    meta["max_abs_deviation"] = rep.max_abs()
    meta["g2_effective"] = cfg.params.g2_effective
    meta["truncation"] = {
        "three_level": [r.truncation.as_dict() for r in rep.three_level],
        "two_level": [r.truncation.as_dict() for r in rep.two_level],
    }
    meta["units"] = "g' (g3 = g4)"


def _run_convergence(cfg: RunConfig, out: Path, meta: dict) -> None:
    cs = cfg.convergence
    spec, rep = truncation_convergence(cfg.params, start=None, tol=cs.tol, ladder=cs.ladder, max_dim=cs.max_dim,
                                       return_report=True)
    meta["truncation"] = spec.as_dict()
    write_table([_report_row(rep, cfg.g1_hz)], _report_columns(cfg.g1_hz), out / "convergence.csv")


_HANDLERS = {
    "steady": _run_steady,
    "sweep": _run_sweep,
    "analytic": _run_analytic,
    "traj": _run_traj,
    "spectrum": _run_spectrum,
    "validate3": _run_validate3,
    "convergence": _run_convergence,
}


def _error_payload(exc: BaseException) -> dict:
    payload = {"error_class": type(exc).__name__, "message": str(exc)}
    if isinstance(exc, ConvergenceError):
        payload["drift"] = exc.drift
        payload["last_spec"] = exc.last_spec.as_dict() if exc.last_spec is not None else None
    return payload


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, ConvergenceError):
        return EXIT_CONVERGENCE
    if isinstance(exc, ConfigError):
        return EXIT_CONFIG
    if isinstance(exc, (NumericalFailure, TwoPhotonError, ArithmeticError)):
        return EXIT_NUMERICAL
    raise exc


def run(cfg: RunConfig) -> int:
    """Execute one configuration; returns the process exit status."""
    out = Path(cfg.out)
    meta = {"config": cfg.as_dict(), "versions": _versions(), "warnings": list(cfg.warnings)}
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        print(json.dumps({"error_class": "ConfigError", "message": f"output path not writable: {exc}"}), file=sys.stderr)
        return EXIT_CONFIG
    try:
        _HANDLERS[cfg.subcommand](cfg, out, meta)
    except (TwoPhotonError, ArithmeticError) as exc:
        code = exit_code_for(exc)
        meta["error"] = _error_payload(exc)
        try:
            write_json(meta, out / "metadata.json")
        except OSError:
            pass
        print(json.dumps(meta["error"], default=str), file=sys.stderr)
        return code
    meta["status"] = "ok"
    write_json(meta, out / "metadata.json")
    return EXIT_OK


def _resolve_threads(flag: Optional[int]) -> Optional[int]:
    if flag is not None:
        return flag
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            n = int(env)
        except ValueError as exc:
            raise ConfigError(f"{THREADS_ENV} must be an integer") from exc
        if n < 1:
            raise ConfigError(f"{THREADS_ENV} must be >= 1")
        return n
    return None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="twophoton", description="Two-photon cavity emitter simulations")
    p.add_argument("subcommand", nargs="?", choices=SUBCOMMANDS, help="overrides the config's subcommand")
    p.add_argument("--config", required=True, help="JSON run configuration")
    p.add_argument("--out", help="output directory (overrides config)")
    p.add_argument("--threads", type=int, help=f"worker count (default: ${THREADS_ENV} or config)")
    p.add_argument("--seed", type=int, help="64-bit seed for Monte Carlo runs")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        text = Path(args.config).read_text(encoding="utf-8")
        data = json.loads(text)
        if isinstance(data, dict):
            if args.subcommand:
                data["subcommand"] = args.subcommand
            if args.out:
                data["out"] = args.out
            if args.seed is not None:
                data["seed"] = args.seed
            threads = _resolve_threads(args.threads)
            if threads is not None:
                data["threads"] = threads
        cfg = parse_config(json.dumps(data))
    except (ConfigError, OSError, json.JSONDecodeError) as exc:
        print(json.dumps({"error_class": "ConfigError", "message": str(exc)}), file=sys.stderr)
        return EXIT_CONFIG
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
