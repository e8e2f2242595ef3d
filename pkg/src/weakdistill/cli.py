"""Command-line front end.

Subcommands::

    weakdistill pure         per-step trace of the repeated protocol, or
                             (--sweep-entropy) total success vs. linear entropy
    weakdistill trajectory   seeded Monte Carlo runs of the protocol, JSON summary
    weakdistill mixed-sweep  sign maps for a noisy input (--channel dephasing |
                             amplitude_damping | maximally_mixed | monte-carlo)

Settings resolve as built-in defaults < environment (WEAKDISTILL_SEED,
WEAKDISTILL_THREADS) < ``--config`` file (flat JSON object) < flags.

Data goes to ``--out`` (stdout when absent). With ``--out`` a manifest
``<out>.manifest.json`` is written beside it holding the resolved config,
versions, seed and timings. CSV floats carry 17 significant digits; a
missing value is an empty field.

Exit codes: 0 success, 2 configuration error, 3 degenerate input
(already maximally entangled), 4 sampling budget exceeded (partial output is
kept and flagged in the manifest).
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import platform
import sys
import time
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .errors import AlreadyMaximal, RejectionBudgetExceeded, WeakDistillError
from .mixed import CHANNEL_KINDS, SWEEP_COLUMNS, ChannelSpec, apply_channel, grid_points, single_shot, sweep_channel
from .entanglement import linear_entropy
from .protocol import TRACE_COLUMNS, analytic_trace, run_trajectories, total_success_probability
from .sampling import MC_COLUMNS, criterion_threshold_s, iter_monte_carlo
from .states import SchmidtState
from .streams import DEFAULT_SEED

EXIT_OK, EXIT_CONFIG, EXIT_DEGENERATE, EXIT_BUDGET = 0, 2, 3, 4
COMMANDS = ("pure", "trajectory", "mixed-sweep")
MONTE_CARLO = "monte-carlo"
FORMATS = ("csv", "json")
ENTROPY_COLUMNS = ("s_value", "alpha_sq", "total_success")

_CHANNEL_ALIASES = {
    "pd": "dephasing",
    "ad": "amplitude_damping",
    "rnd": "maximally_mixed",
    "maximally_mixed_admixture": "maximally_mixed",
    "monte_carlo": MONTE_CARLO,
    "mc": MONTE_CARLO,
}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved settings for one run. ``None`` means "command default"."""

    command: str = "pure"
    alpha_sq: float = 0.4
    n_steps: Optional[int] = None
    n_samples: Optional[int] = None
    master_seed: int = DEFAULT_SEED
    output_path: Optional[str] = None
    format: str = "csv"
    sweep_entropy: bool = False
    points: int = 99
    channel: str = "amplitude_damping"
    u: Optional[float] = None
    lam: Optional[float] = None
    a_sz: tuple[float, ...] = (-0.95,)
    grid: Optional[int] = None
    threads: int = 1

    def to_dict(self) -> dict:
        d = asdict(self)
        d["a_sz"] = list(self.a_sz)
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        data = dict(data)
        if "a_sz" in data:
            data["a_sz"] = tuple(_as_float_list(data["a_sz"]))
        return cls(**data)

    def steps(self) -> int:
        if self.n_steps is not None:
            return self.n_steps
        return 15 if self.command == "pure" else 40

    def samples(self) -> int:
        if self.n_samples is not None:
            return self.n_samples
        return 100_000 if self.command == "trajectory" else 1000

    def grid_size(self) -> int:
        if self.grid is not None:
            return self.grid
        return 41 if self.channel == MONTE_CARLO else 101

    def single_point(self) -> bool:
        return self.u is not None or self.lam is not None

    def validate(self) -> "RunConfig":
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        if self.format not in FORMATS:
            raise ConfigError(f"format must be one of {FORMATS}")
        if not 0.0 <= self.alpha_sq <= 1.0:
            raise ConfigError(f"alpha_sq must lie in [0, 1], got {self.alpha_sq}")
        if self.steps() < 1:
            raise ConfigError("steps must be >= 1")
        if self.samples() < 1:
            raise ConfigError("samples must be >= 1")
        if self.master_seed < 0:
            raise ConfigError("seed must be non-negative")
        if self.points < 1 or self.grid_size() < 1:
            raise ConfigError("grid sizes must be >= 1")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        if self.command == "mixed-sweep":
            if self.channel not in CHANNEL_KINDS + (MONTE_CARLO,):
                raise ConfigError(f"unknown channel {self.channel!r}")
            if not self.a_sz or any(not -1.0 <= a <= 1.0 for a in self.a_sz):
                raise ConfigError("a_sz values must lie in [-1, 1]")
            if self.channel == MONTE_CARLO and len(self.a_sz) > 1 and self.output_path is None:
                raise ConfigError("several a_sz values write one file each; give --out")
            if self.lam is not None and not 0.0 <= self.lam <= 1.0:
                raise ConfigError("lambda must lie in [0, 1]")
            if self.u is not None:
                ChannelSpec(self.channel, self.u)
        return self


def _as_float_list(value) -> list[float]:
    if isinstance(value, str):
        return [float(x) for x in value.split(",") if x.strip()]
    if isinstance(value, (int, float)):
        return [float(value)]
    return [x for v in value for x in _as_float_list(v)]


_CONFIG_KEYS = {f.name for f in fields(RunConfig)}
_KEY_ALIASES = {
    "steps": "n_steps",
    "samples": "n_samples",
    "seed": "master_seed",
    "out": "output_path",
    "lambda": "lam",
}


def _normalize_key(key: str) -> str:
    key = key.replace("-", "_")
    key = _KEY_ALIASES.get(key, key)
    if key not in _CONFIG_KEYS:
        raise ConfigError(f"unknown config key {key!r}")
    return key


def _coerce(key: str, value):
    if value is None:
        return None
    kind = {f.name: f.type for f in fields(RunConfig)}[key]
    try:
        if key == "a_sz":
            return tuple(_as_float_list(value))
        if key == "sweep_entropy":
            if isinstance(value, str):
                return value.strip().lower() in ("1", "true", "yes", "on")
            return bool(value)
        if "int" in kind:
            if isinstance(value, float) and not value.is_integer():
                raise ValueError(value)
            return int(value)
        if "float" in kind:
            return float(value)
        if key == "channel":
            return _CHANNEL_ALIASES.get(str(value), str(value))
        return str(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value for {key}: {value!r}") from exc


def _env_settings(environ) -> dict:
    out = {}
    if environ.get("WEAKDISTILL_SEED"):
        out["master_seed"] = _coerce("master_seed", environ["WEAKDISTILL_SEED"])
    if environ.get("WEAKDISTILL_THREADS"):
        out["threads"] = _coerce("threads", environ["WEAKDISTILL_THREADS"])
    return out


def _file_settings(path: str) -> dict:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict) or any(isinstance(v, dict) for v in data.values()):
        raise ConfigError("config must be a flat JSON object")
    out = {}
    for k, v in data.items():
        key = _normalize_key(k)
        out[key] = _coerce(key, v)
    return out


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat JSON file of settings (overridden by flags)")
    common.add_argument("--alpha-sq", type=float, help="squared Schmidt coefficient alpha^2")
    common.add_argument("--steps", type=int, help="number of measurement steps N")
    common.add_argument("--samples", type=int, help="trajectories, or separable states per cell")
    common.add_argument("--seed", type=int, help="master seed")
    common.add_argument("--threads", type=int)
    common.add_argument("--out", help="output file; stdout when absent")
    common.add_argument("--format", choices=FORMATS)

    parser = argparse.ArgumentParser(prog="weakdistill", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("pure", parents=[common], help="pure-state protocol trace")
    p.add_argument("--sweep-entropy", action="store_true", default=None)
    p.add_argument("--points", type=int, help="entropy grid size")

    sub.add_parser("trajectory", parents=[common], help="seeded trajectory statistics")

    m = sub.add_parser("mixed-sweep", parents=[common], help="mixed-state sign maps")
    m.add_argument("--channel", help="dephasing, amplitude_damping, maximally_mixed or monte-carlo")
    m.add_argument("--u", type=float, help="channel parameter for a single-point run")
    m.add_argument("--lambda", dest="lam", type=float, help="admixture weight for a single-point run")
    m.add_argument("--a-sz", nargs="+", help="A_sz values for monte-carlo mode, space- or comma-separated")
    m.add_argument("--grid", type=int, help="points per axis")
    return parser


def resolve_config(args: argparse.Namespace, environ=None) -> RunConfig:
    environ = os.environ if environ is None else environ
    settings = {"command": args.command}
    settings.update(_env_settings(environ))
    if getattr(args, "config", None):
        settings.update(_file_settings(args.config))
        settings["command"] = args.command
    flag_map = {
        "alpha_sq": "alpha_sq",
        "steps": "n_steps",
        "samples": "n_samples",
        "seed": "master_seed",
        "threads": "threads",
        "out": "output_path",
        "format": "format",
        "sweep_entropy": "sweep_entropy",
        "points": "points",
        "channel": "channel",
        "u": "u",
        "lam": "lam",
        "a_sz": "a_sz",
        "grid": "grid",
    }
    for attr, key in flag_map.items():
        value = getattr(args, attr, None)
        if value is not None:
            settings[key] = _coerce(key, value)
    try:
        return RunConfig(**settings).validate()
    except WeakDistillError as exc:
        raise ConfigError(str(exc)) from exc


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return ""
    return format(x, ".17g")


def _json_value(x):
    if x is None or isinstance(x, (bool, int, str)):
        return x
    x = float(x)
    return None if math.isnan(x) else x


class _Sink:
    """Row writer for CSV or JSON; CSV rows are flushed as they arrive."""

    def __init__(self, stream, columns, form):
        self.stream, self.columns, self.form = stream, columns, form
        self.rows = []
        if form == "csv":
            self.writer = csv.writer(stream, lineterminator="\n")
            self.writer.writerow(columns)

    def write(self, row):
        if self.form == "csv":
            self.writer.writerow([fmt(v) for v in row])
            self.stream.flush()
        else:
            self.rows.append([_json_value(v) for v in row])

    def close(self):
        if self.form == "json":
            json.dump({"columns": list(self.columns), "rows": self.rows}, self.stream, indent=1)
            self.stream.write("\n")
        self.stream.flush()


def _open(path: Optional[str]):
    if path is None:
        return _Borrowed(sys.stdout)
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    return open(path, "w", encoding="utf-8", newline="")


class _Borrowed:
    def __init__(self, stream):
        self.stream = stream

    def __enter__(self):
        return self.stream

    def __exit__(self, *exc):
        self.stream.flush()
        return False


def _versions() -> dict:
    return {"weakdistill": __version__, "python": platform.python_version(), "numpy": np.__version__}


def write_manifest(cfg: RunConfig, extra: dict, timings: dict) -> Optional[str]:
    if cfg.output_path is None:
        return None
    path = cfg.output_path + ".manifest.json"
    doc = {
        "command": cfg.command,
        "config": cfg.to_dict(),
        "master_seed": cfg.master_seed,
        "versions": _versions(),
        "timings_s": timings,
    }
    doc.update(extra)
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def cmd_pure(cfg: RunConfig) -> int:
    t0 = time.perf_counter()
    extra = {}
    if cfg.sweep_entropy:
        with _open(cfg.output_path) as fh:
            sink = _Sink(fh, ENTROPY_COLUMNS, cfg.format)
            for s_value in grid_points(cfg.points):
                st = SchmidtState.from_linear_entropy(s_value)
                sink.write((s_value, st.alpha_sq, total_success_probability(st)))
            sink.close()
        extra["grid"] = {"points": cfg.points}
    else:
        state = SchmidtState.from_alpha_sq(cfg.alpha_sq)
        tr = analytic_trace(state, cfg.steps())
        with _open(cfg.output_path) as fh:
            sink = _Sink(fh, TRACE_COLUMNS, cfg.format)
            for row in tr.rows():
                sink.write(row)
            sink.close()
        extra.update(
            total_success=tr.total_success,
            limit=2.0 * min(state.alpha_sq, state.beta_sq),
            converged=tr.converged,
            swapped=tr.swapped,
        )
    write_manifest(cfg, extra, {"total": time.perf_counter() - t0})
    return EXIT_OK


def trajectory_summary(cfg: RunConfig) -> dict:
    state = SchmidtState.from_alpha_sq(cfg.alpha_sq)
    batch = run_trajectories(state, cfg.steps(), cfg.samples(), cfg.master_seed, threads=cfg.threads)
    lo, hi = batch.wilson_interval()
    mean_steps = batch.mean_steps_to_success()
    return {
        "alpha_sq": cfg.alpha_sq,
        "n_steps": cfg.steps(),
        "n_trajectories": batch.n_trajectories,
        "master_seed": cfg.master_seed,
        "n_success": batch.n_success,
        "success_fraction": batch.success_fraction,
        "sigma": batch.sigma,
        "confidence_interval_95": [lo, hi],
        "mean_steps_to_success": None if math.isnan(mean_steps) else mean_steps,
        "expected_total_success": total_success_probability(state),
        "steps_histogram": list(batch.steps_histogram),
    }


def cmd_trajectory(cfg: RunConfig) -> int:
    t0 = time.perf_counter()
    summary = trajectory_summary(cfg)
    with _open(cfg.output_path) as fh:
        if cfg.format == "json":
            fh.write(json.dumps(summary, indent=2, sort_keys=True) + "\n")
        else:
            cols = [k for k in sorted(summary) if not isinstance(summary[k], list)]
            cols += ["ci_low", "ci_high"]
            sink = _Sink(fh, cols, "csv")
            ci = summary["confidence_interval_95"]
            sink.write([summary[k] for k in cols[:-2]] + ci)
            sink.close()
    write_manifest(cfg, {}, {"total": time.perf_counter() - t0})
    return EXIT_OK


def _single_point_row(cfg: RunConfig):
    state = SchmidtState.from_alpha_sq(cfg.alpha_sq)
    param = cfg.u if cfg.channel != "maximally_mixed" else (cfg.lam if cfg.lam is not None else cfg.u)
    if param is None:
        raise ConfigError(f"single-point {cfg.channel} run needs --u" + (" or --lambda" if cfg.channel == "maximally_mixed" else ""))
    dec = apply_channel(ChannelSpec(cfg.channel, param), state)
    _, delta = single_shot(dec)
    return (linear_entropy(dec.pure), dec.lam, delta.c_before, delta.c_after, delta.sign)


def _monte_carlo_path(base: str, a: float) -> str:
    p = Path(base)
    return str(p.with_name(f"{p.stem}_asz{a:+.4f}{p.suffix or '.csv'}"))


def cmd_mixed_sweep(cfg: RunConfig) -> int:
    t0 = time.perf_counter()
    if cfg.channel != MONTE_CARLO:
        with _open(cfg.output_path) as fh:
            sink = _Sink(fh, SWEEP_COLUMNS, cfg.format)
            if cfg.single_point():
                sink.write(_single_point_row(cfg))
                extra = {"mode": "single-point", "channel": cfg.channel}
            else:
                g = grid_points(cfg.grid_size())
                for row in sweep_channel(cfg.channel, g, g):
                    sink.write(row.as_tuple())
                extra = {"mode": "grid", "channel": cfg.channel, "grid": g}
            sink.close()
        write_manifest(cfg, extra, {"total": time.perf_counter() - t0})
        return EXIT_OK

    g = grid_points(cfg.grid_size())
    lam_grid = [cfg.lam] if cfg.lam is not None else g
    files, timings, thresholds = [], {}, {}
    status, failure = EXIT_OK, None
    for a in cfg.a_sz:
        ta = time.perf_counter()
        path = _monte_carlo_path(cfg.output_path, a) if cfg.output_path else None
        threshold = criterion_threshold_s(a)
        thresholds[repr(a)] = threshold if math.isfinite(threshold) else None
        with _open(path) as fh:
            sink = _Sink(fh, MC_COLUMNS, cfg.format)
            try:
                for cell in iter_monte_carlo(a, g, lam_grid, cfg.samples(), cfg.master_seed, cfg.threads):
                    sink.write(cell.as_tuple())
            except RejectionBudgetExceeded as exc:
                status = EXIT_BUDGET
                failure = {"a_sz": a, "message": str(exc), "accepted": exc.accepted, "rejections": exc.rejections}
            sink.close()
        if path:
            files.append(path)
        timings[repr(a)] = time.perf_counter() - ta
        if status != EXIT_OK:
            break
    timings["total"] = time.perf_counter() - t0
    extra = {
        "mode": MONTE_CARLO,
        "a_sz": list(cfg.a_sz),
        "n": cfg.samples(),
        "s_grid": g,
        "lambda_grid": lam_grid,
        "threshold_s_value": thresholds,
        "files": files,
        "partial": status != EXIT_OK,
        "failure": failure,
    }
    write_manifest(cfg, extra, timings)
    return status


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = resolve_config(args)
        handler = {"pure": cmd_pure, "trajectory": cmd_trajectory, "mixed-sweep": cmd_mixed_sweep}[cfg.command]
        return handler(cfg)
    except AlreadyMaximal as exc:
        print(f"weakdistill: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except RejectionBudgetExceeded as exc:
        print(f"weakdistill: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (ConfigError, WeakDistillError) as exc:
        print(f"weakdistill: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
