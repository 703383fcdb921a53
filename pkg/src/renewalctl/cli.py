"""Command-line interface: run scenarios and V sweeps, list the catalog, print oracles.

Configs and summaries are YAML; traces are CSV with 9 significant digits.
Exit codes: 0 success, 1 run failure, 2 config error.
"""

from __future__ import annotations

import argparse
import dataclasses
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import yaml

from . import kernels
from .lfp import attribute_optimum, charnes_cooper_solve, dinkelbach_solve, stationary_policy_optimum
from .model import AttributeModel, TaskModel, build_task_model
from .sim import Scenario, default_horizon, get_scenario, run_scenario, scenario_names
from .sim.core import TASK_KINDS
from .sim.scenarios import CATALOG, lfp_instance

EMIT_MODES = ("summary", "trace", "both")
CONFIG_KEYS = ("scenario", "V", "frames", "seed", "out", "emit", "window", "jobs", "stride", "backend")
INLINE_KEYS = ("name", "kind", "model", "instance", "V", "weights", "power_budget", "rate_schedule",
               "moving_window", "q0", "z0", "description")
DEFAULT_SEED = 1
DEFAULT_OUT = "results"


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    scenario: str | dict
    V: tuple
    frames: int
    seed: int = DEFAULT_SEED
    out: str = DEFAULT_OUT
    emit: str = "summary"
    window: int | None = None
    jobs: int = 1
    stride: int | None = None
    backend: str | None = None

    @property
    def scenario_name(self) -> str:
        return self.scenario if isinstance(self.scenario, str) else str(self.scenario.get("name", "inline"))


# ---------------------------------------------------------------------------
# parsing

def _int(value, path, minimum=None):
    if isinstance(value, bool):
        raise ConfigError(f"{path}: expected an integer, got {value!r}")
    try:
        f = float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{path}: expected an integer, got {value!r}") from None
    if not math.isfinite(f) or f != int(f):
        raise ConfigError(f"{path}: expected an integer, got {value!r}")
    if minimum is not None and f < minimum:
        raise ConfigError(f"{path}: must be >= {minimum}, got {value!r}")
    return int(f)


def _float(value, path, minimum=None):
    if isinstance(value, bool):
        raise ConfigError(f"{path}: expected a number, got {value!r}")
    try:
        f = float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{path}: expected a number, got {value!r}") from None
    if not math.isfinite(f):
        raise ConfigError(f"{path}: expected a finite number, got {value!r}")
    if minimum is not None and f < minimum:
        raise ConfigError(f"{path}: must be >= {minimum}, got {value!r}")
    return f


def _v_list(value, path="V"):
    items = value if isinstance(value, (list, tuple)) else [value]
    if not items:
        raise ConfigError(f"{path}: V list must be non-empty")
    return tuple(_float(v, f"{path}[{i}]", 0.0) for i, v in enumerate(items))


def scenario_from_dict(spec: dict, horizon: int | None = None) -> Scenario:
    """Build an inline scenario (task_scheduler, flow_control or online_lfp)."""
    if not isinstance(spec, dict):
        raise ConfigError("scenario: expected a catalog name or a mapping")
    for key in spec:
        if key not in INLINE_KEYS:
            raise ConfigError(f"scenario.{key}: unknown field")
    kind = spec.get("kind", "task_scheduler")
    name = str(spec.get("name", "inline"))
    K = _int(horizon if horizon is not None else 1_000_000, "frames", 1)
    common = {
        "name": name, "kind": kind, "horizon": K,
        "V": _float(spec.get("V", 1.0), "scenario.V", 0.0),
        "description": str(spec.get("description", "inline scenario")),
    }
    if "moving_window" in spec:
        common["moving_window"] = _int(spec["moving_window"], "scenario.moving_window", 1)
    if "q0" in spec:
        common["q0"] = tuple(_float(v, f"scenario.q0[{i}]", 0.0) for i, v in enumerate(spec["q0"]))
    try:
        if kind in TASK_KINDS:
            if "model" not in spec:
                raise ConfigError("scenario.model: required for task scenarios")
            try:
                model = build_task_model(spec["model"])
            except (ValueError, TypeError) as exc:
                raise ConfigError(f"scenario.model: {exc}") from None
            kw = {}
            if "weights" in spec:
                kw["weights"] = tuple(_float(v, f"scenario.weights[{i}]") for i, v in enumerate(spec["weights"]))
            if "power_budget" in spec:
                kw["power_budget"] = _float(spec["power_budget"], "scenario.power_budget")
            if "rate_schedule" in spec:
                sched = []
                for i, row in enumerate(spec["rate_schedule"]):
                    if not isinstance(row, (list, tuple)) or len(row) != 2:
                        raise ConfigError(f"scenario.rate_schedule[{i}]: expected [start_frame, multiplier]")
                    sched.append((_int(row[0], f"scenario.rate_schedule[{i}][0]", 0),
                                  _float(row[1], f"scenario.rate_schedule[{i}][1]", 0.0)))
                kw["rate_schedule"] = tuple(sched)
            if "z0" in spec:
                kw["z0"] = _float(spec["z0"], "scenario.z0", 0.0)
            return Scenario(model=model, **common, **kw)
        if kind == "online_lfp":
            if "instance" not in spec:
                raise ConfigError("scenario.instance: required for online_lfp scenarios")
            try:
                inst = lfp_instance(spec["instance"])
            except (KeyError, ValueError, TypeError) as exc:
                raise ConfigError(f"scenario.instance: {exc}") from None
            return Scenario(model=inst, params={"instance": spec["instance"]}, **common)
    except (ValueError, TypeError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"scenario: {exc}") from None
    raise ConfigError(f"scenario.kind: inline scenarios support {TASK_KINDS + ('online_lfp',)}, got {kind!r}")


def config_from_dict(raw) -> RunConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config: expected a mapping at the top level")
    for key in raw:
        if key not in CONFIG_KEYS:
            raise ConfigError(f"{key}: unknown config field")
    if "scenario" not in raw:
        raise ConfigError("scenario: required")
    scen = raw["scenario"]
    if isinstance(scen, str):
        if scen not in CATALOG:
            raise ConfigError(f"scenario: unknown scenario {scen!r}; known: {', '.join(CATALOG)}")
        base_frames = default_horizon(scen)
    elif isinstance(scen, dict):
        base_frames = 1_000_000
    else:
        raise ConfigError("scenario: expected a catalog name or a mapping")
    frames = _int(raw.get("frames", base_frames), "frames", 1)
    if isinstance(scen, dict):
        base = scenario_from_dict(scen, frames)  # validates the inline definition
    else:
        base = get_scenario(scen, horizon=min(frames, 3))
    V = _v_list(raw["V"]) if "V" in raw else (float(base.V),)
    emit = raw.get("emit", "summary")
    if emit not in EMIT_MODES:
        raise ConfigError(f"emit: expected one of {EMIT_MODES}, got {emit!r}")
    window = raw.get("window")
    backend = raw.get("backend")
    if backend not in (None, "python", "cython"):
        raise ConfigError(f"backend: expected python or cython, got {backend!r}")
    stride = raw.get("stride")
    return RunConfig(
        scenario=scen, V=V, frames=frames,
        seed=_int(raw.get("seed", DEFAULT_SEED), "seed", 0),
        out=str(raw.get("out", DEFAULT_OUT)),
        emit=emit,
        window=None if window is None else _int(window, "window", 1),
        jobs=_int(raw.get("jobs", 1), "jobs", 1),
        stride=None if stride is None else _int(stride, "stride", 1),
        backend=backend,
    )


def parse_config(text: str) -> RunConfig:
    """Parse YAML (or JSON) config text into a validated :class:`RunConfig`."""
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"config: not valid YAML ({exc})") from None
    return config_from_dict(raw)


def config_to_dict(cfg: RunConfig) -> dict:
    out = {
        "scenario": cfg.scenario, "V": list(cfg.V), "frames": cfg.frames, "seed": cfg.seed,
        "out": cfg.out, "emit": cfg.emit, "jobs": cfg.jobs,
    }
    for key in ("window", "stride", "backend"):
        val = getattr(cfg, key)
        if val is not None:
            out[key] = val
    return out


def serialize(cfg: RunConfig) -> str:
    return yaml.safe_dump(config_to_dict(cfg), sort_keys=False)


# ---------------------------------------------------------------------------
# execution

def build_scenario(cfg: RunConfig, V: float) -> Scenario:
    if isinstance(cfg.scenario, dict):
        s = scenario_from_dict(cfg.scenario, cfg.frames)
        s = dataclasses.replace(s, V=V, seed=cfg.seed)
    else:
        s = get_scenario(cfg.scenario, horizon=cfg.frames, V=V, seed=cfg.seed)
    if cfg.window is not None:
        s = dataclasses.replace(s, moving_window=cfg.window)
    if cfg.stride is not None:
        s = dataclasses.replace(s, trace_stride=cfg.stride)
    return s


def _fmt(x) -> str:
    return f"{x:.9g}"


def write_trace(path: Path, trace) -> None:
    np.savetxt(path, trace.data, fmt="%.9g", delimiter=",", header=",".join(trace.columns), comments="")


def write_moving_average(path: Path, trace) -> None:
    qcols = [i for i, c in enumerate(trace.columns) if c.startswith("Q_")]
    cols = ["k", "ma_admission_rate", "ma_arrival_rate", "mean_backlog"]
    data = np.column_stack([
        trace.data[:, 0], trace.extra["ma_admission_rate"], trace.extra["ma_arrival_rate"],
        trace.data[:, qcols].mean(axis=1) if qcols else np.zeros(len(trace)),
    ])
    np.savetxt(path, data, fmt="%.9g", delimiter=",", header=",".join(cols), comments="")


def run_dir(cfg: RunConfig, V: float) -> Path:
    return Path(cfg.out) / cfg.scenario_name / f"V_{_fmt(V)}"


def _run_one(cfg: RunConfig, V: float) -> dict:
    """Run one (scenario, V) pair and write its files; returns a table row."""
    s = build_scenario(cfg, V)
    t0 = time.perf_counter()
    summary, trace = run_scenario(s, backend=cfg.backend, trace=cfg.emit in ("trace", "both"))
    elapsed = time.perf_counter() - t0
    d = run_dir(cfg, V)
    d.mkdir(parents=True, exist_ok=True)
    if cfg.emit in ("summary", "both"):
        rec = summary.to_record()
        single = dataclasses.replace(cfg, V=(V,))
        rec["config"] = config_to_dict(single)
        rec["description"] = s.description
        (d / "summary.yaml").write_text(yaml.safe_dump(rec, sort_keys=False))
    if trace is not None:
        write_trace(d / "trace.csv", trace)
        if trace.extra:
            write_moving_average(d / "moving_average.csv", trace)
    opt = summary.extras.get("power_opt", summary.extras.get("ratio_opt"))
    return {
        "V": V, "power": summary.power, "oracle": opt,
        "gap": max(summary.gaps) if summary.gaps else 0.0,
        "q_max": max(summary.q_max) if summary.q_max else 0.0,
        "frames": summary.frames, "seconds": elapsed, "backend": summary.backend,
    }


def _print_table(rows, out):
    out.write(f"{'V':>10} {'power':>12} {'oracle':>12} {'max gap':>11} {'max Q':>11} {'frames':>9} {'sec':>7}\n")
    for r in rows:
        if "error" in r:
            out.write(f"{_fmt(r['V']):>10} FAILED: {r['error']}\n")
            continue
        oracle = "-" if r["oracle"] is None else f"{r['oracle']:.6f}"
        out.write(f"{_fmt(r['V']):>10} {r['power']:12.6f} {oracle:>12} {r['gap']:11.3e} {r['q_max']:11.4g} "
                  f"{r['frames']:9d} {r['seconds']:7.2f}\n")


def execute(cfg: RunConfig, out=None) -> int:
    """Run every (scenario, V) pair; returns the process exit status."""
    out = out or sys.stdout
    rows = []
    if cfg.jobs > 1 and len(cfg.V) > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            futures = [pool.submit(_run_one, cfg, V) for V in cfg.V]
            for V, fut in zip(cfg.V, futures):
                try:
                    rows.append(fut.result())
                except Exception as exc:  # noqa: BLE001 - reported per run
                    rows.append({"V": V, "error": f"{type(exc).__name__}: {exc}"})
    else:
        for V in cfg.V:
            try:
                rows.append(_run_one(cfg, V))
            except Exception as exc:  # noqa: BLE001
                rows.append({"V": V, "error": f"{type(exc).__name__}: {exc}"})
    out.write(f"scenario {cfg.scenario_name}  seed {cfg.seed}  backend {kernels.get_backend(cfg.backend).BACKEND}"
              f"  out {cfg.out}\n")
    _print_table(rows, out)
    return 1 if any("error" in r for r in rows) else 0


def oracle_record(s: Scenario) -> dict:
    """Offline optimum for a scenario's model."""
    m = s.model
    if isinstance(m, TaskModel):
        opt = stationary_policy_optimum(m, m.rates)
        rec = {"scenario": s.name, "method": "charnes-cooper", "status": opt.status,
               "power_opt": float(opt.power_opt), "probs": opt.probs.tolist(), "idle": float(opt.idle)}
        if s.kind == "flow_control":
            rec["note"] = "minimum power with every arrival admitted and served"
        return rec
    if isinstance(m, AttributeModel):
        opt = attribute_optimum(m)
        return {"scenario": s.name, "method": "charnes-cooper", "status": opt.status,
                "ratio_opt": float(opt.ratio_opt), "probs": [p.tolist() for p in opt.probs]}
    cc = charnes_cooper_solve(m)
    rec = {"scenario": s.name, "method": "charnes-cooper", "status": cc.status, "ratio_opt": float(cc.value),
           "x": None if cc.x is None else np.asarray(cc.x).tolist()}
    if cc.status == "optimal":
        rec["dinkelbach"] = float(dinkelbach_solve(m).value)
    return rec


# ---------------------------------------------------------------------------
# argument handling

def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="renewalctl", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run a scenario or a V sweep")
    r.add_argument("config", nargs="?", help="YAML config file")
    r.add_argument("--scenario", help="catalog scenario name")
    r.add_argument("--V", help="comma-separated V values")
    r.add_argument("--frames", help="horizon K in frames")
    r.add_argument("--seed", help="u64 seed")
    r.add_argument("--out", help="output directory")
    r.add_argument("--emit", choices=EMIT_MODES)
    r.add_argument("--window", help="moving-average window in frames")
    r.add_argument("--jobs", help="parallel runs")
    r.add_argument("--stride", help="trace stride in frames")
    r.add_argument("--backend", choices=("python", "cython"))
    sub.add_parser("list-scenarios", help="list the built-in scenarios")
    o = sub.add_parser("oracle", help="print the offline optimum for a scenario")
    o.add_argument("config", nargs="?")
    o.add_argument("--scenario")
    return p


def _raw_config(args) -> dict:
    raw = {}
    if args.config:
        try:
            text = Path(args.config).read_text()
        except OSError as exc:
            raise ConfigError(f"config: cannot read {args.config} ({exc.strerror})") from None
        loaded = yaml.safe_load(text) if text.strip() else {}
        if not isinstance(loaded, dict):
            raise ConfigError("config: expected a mapping at the top level")
        raw.update(loaded)
    if getattr(args, "scenario", None):
        raw["scenario"] = args.scenario
    for key in ("frames", "seed", "out", "emit", "window", "jobs", "stride", "backend"):
        val = getattr(args, key, None)
        if val is not None:
            raw[key] = val
    if getattr(args, "V", None) is not None:
        raw["V"] = [v for v in args.V.split(",") if v.strip()]
    return raw


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "list-scenarios":
        for name in scenario_names():
            s = get_scenario(name, horizon=1)
            print(f"{name:26s} {s.kind:15s} K={default_horizon(name):<9d} V={_fmt(s.V):<6s} {s.description}")
        return 0
    try:
        cfg = config_from_dict(_raw_config(args))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    if args.command == "oracle":
        rec = oracle_record(build_scenario(cfg, cfg.V[0]))
        sys.stdout.write(yaml.safe_dump(rec, sort_keys=False))
        return 0 if rec["status"] == "optimal" else 1
    if cfg.backend == "cython" and kernels.compiled is None:
        print("config error: backend: compiled kernels are not available", file=sys.stderr)
        return 2
    os.makedirs(cfg.out, exist_ok=True)
    return execute(cfg)


if __name__ == "__main__":
    sys.exit(main())
