"""Config file handling, trace emission, and the command line front end.

Config files are flat INI: sections [network], [controller], [reference],
[disturbance], [run], every key optional, unknown keys rejected.  An empty
file parses to the nominal preset.  serialize_config writes back every
resolved value, and parse_config(serialize_config(spec)) == spec.
"""

from __future__ import annotations

import argparse
import configparser
import dataclasses
import io
import json
import sys
from pathlib import Path

from .controller import ControllerConfig
from .estimators import EstimatorConfig
from .netparams import NetworkParams, derive_operating_point
from .plant import GAIN_HOLLOT, GAIN_PAPER
from .scenario import (PRESET_DESCRIPTIONS, PRESET_NAMES, ConfigError,
                       DisturbanceSpec, DivergenceError, MeasurementNoise,
                       Metrics, ReferenceProfile, ScenarioSpec, TraceRecord,
                       compute_metrics, preset, run)

_SCHEMA = {
    "network": ("w_max", "q_max", "q0", "n_sessions", "capacity", "t_p",
                "plant_n"),
    "controller": ("alpha", "k_p", "h", "tau_w", "t_f", "stability_check"),
    "reference": ("times", "levels", "t_ref"),
    "disturbance": ("kind", "amplitude", "omega", "phase", "seed"),
    "run": ("duration", "ts", "gain_strategy", "rng_seed",
            "plant_delay_override", "noise_amplitude", "noise_seed"),
}

_DEFAULT_CONTROLLER = dict(alpha=-1e5, k_p=0.5, tau_w=0.4, t_f=0.8,
                           stability_check=True)


def _get(section, key, conv, default):
    if section is None or key not in section:
        return default
    raw = section[key].strip()
    try:
        return conv(raw)
    except ValueError as e:
        raise ConfigError(f"bad value for {key!r}: {e}") from None


def _floats(raw: str) -> tuple[float, ...]:
    return tuple(float(p) for p in raw.split(","))


def _bool(raw: str) -> bool:
    lowered = raw.lower()
    if lowered in ("true", "yes", "on", "1"):
        return True
    if lowered in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"not a boolean: {raw!r}")


def parse_config(text: str) -> ScenarioSpec:
    """Build a ScenarioSpec from INI text; omitted keys fall back to nominal."""
    cp = configparser.ConfigParser(interpolation=None)
    try:
        cp.read_string(text)
    except configparser.Error as e:
        raise ConfigError(f"unparseable config: {e}") from None
    for section in cp.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
        for key in cp[section]:
            if key not in _SCHEMA[section]:
                raise ConfigError(f"unknown key {key!r} in [{section}]")

    def sec(name):
        return cp[name] if cp.has_section(name) else None

    net_s = sec("network")
    try:
        network = NetworkParams(
            w_max=_get(net_s, "w_max", float, 131.0),
            q_max=_get(net_s, "q_max", float, 800.0),
            q0=_get(net_s, "q0", float, 175.0),
            n_sessions=_get(net_s, "n_sessions", int, 60),
            capacity=_get(net_s, "capacity", float, 3750.0),
            t_p=_get(net_s, "t_p", float, 0.2),
        )
        plant_n = _get(net_s, "plant_n", int, None)
        op = derive_operating_point(network)

        run_s = sec("run")
        ts = _get(run_s, "ts", float, 0.01)
        ctl_s = sec("controller")
        dflt = _DEFAULT_CONTROLLER
        alpha = _get(ctl_s, "alpha", float, dflt["alpha"])
        h = _get(ctl_s, "h", float, op.tau0)
        est = EstimatorConfig(
            tau_w=_get(ctl_s, "tau_w", float, dflt["tau_w"]),
            t_f=_get(ctl_s, "t_f", float, dflt["t_f"]),
            alpha=alpha, h=h, ts=ts)
        controller = ControllerConfig(
            alpha=alpha,
            k_p=_get(ctl_s, "k_p", float, dflt["k_p"]),
            h=h, est=est,
            stability_check=_get(ctl_s, "stability_check", _bool,
                                 dflt["stability_check"]))

        ref_s = sec("reference")
        reference = ReferenceProfile(
            times=_get(ref_s, "times", _floats, (0.0, 5.0, 15.0, 25.0)),
            levels=_get(ref_s, "levels", _floats, (0.0, 100.0, -75.0, 0.0)),
            t_ref=_get(ref_s, "t_ref", float, 0.5))

        dist_s = sec("disturbance")
        disturbance = DisturbanceSpec(
            kind=_get(dist_s, "kind", str, "none"),
            amplitude=_get(dist_s, "amplitude", float, 0.0),
            omega=_get(dist_s, "omega", float, 0.0),
            phase=_get(dist_s, "phase", float, 0.0),
            seed=_get(dist_s, "seed", int, None))

        noise_amp = _get(run_s, "noise_amplitude", float, None)
        noise = None
        if noise_amp is not None:
            noise = MeasurementNoise(amplitude=noise_amp,
                                     seed=_get(run_s, "noise_seed", int, None))
        return ScenarioSpec(
            duration=_get(run_s, "duration", float, 35.0),
            ts=ts,
            network=network,
            controller=controller,
            reference=reference,
            disturbance=disturbance,
            plant_delay_override=_get(run_s, "plant_delay_override", float, None),
            plant_n_override=plant_n,
            gain_strategy=_get(run_s, "gain_strategy", str, GAIN_HOLLOT),
            measurement_noise=noise,
            rng_seed=_get(run_s, "rng_seed", int, 42))
    except ConfigError:
        raise
    except ValueError as e:
        raise ConfigError(str(e)) from None


def serialize_config(spec: ScenarioSpec) -> str:
    """Render the fully resolved spec as INI text (round-trips exactly)."""
    cp = configparser.ConfigParser(interpolation=None)
    net = spec.network
    cp["network"] = {
        "w_max": repr(net.w_max), "q_max": repr(net.q_max),
        "q0": repr(net.q0), "n_sessions": str(net.n_sessions),
        "capacity": repr(net.capacity), "t_p": repr(net.t_p),
    }
    if spec.plant_n_override is not None:
        cp["network"]["plant_n"] = str(spec.plant_n_override)
    ctl = spec.controller
    cp["controller"] = {
        "alpha": repr(ctl.alpha), "k_p": repr(ctl.k_p), "h": repr(ctl.h),
        "tau_w": repr(ctl.est.tau_w), "t_f": repr(ctl.est.t_f),
        "stability_check": "true" if ctl.stability_check else "false",
    }
    ref = spec.reference
    cp["reference"] = {
        "times": ", ".join(repr(t) for t in ref.times),
        "levels": ", ".join(repr(v) for v in ref.levels),
        "t_ref": repr(ref.t_ref),
    }
    dist = spec.disturbance
    cp["disturbance"] = {
        "kind": dist.kind, "amplitude": repr(dist.amplitude),
        "omega": repr(dist.omega), "phase": repr(dist.phase),
    }
    if dist.seed is not None:
        cp["disturbance"]["seed"] = str(dist.seed)
    cp["run"] = {
        "duration": repr(spec.duration), "ts": repr(spec.ts),
        "gain_strategy": spec.gain_strategy,
        "rng_seed": str(spec.rng_seed),
    }
    if spec.plant_delay_override is not None:
        cp["run"]["plant_delay_override"] = repr(spec.plant_delay_override)
    if spec.measurement_noise is not None:
        cp["run"]["noise_amplitude"] = repr(spec.measurement_noise.amplitude)
        if spec.measurement_noise.seed is not None:
            cp["run"]["noise_seed"] = str(spec.measurement_noise.seed)
    out = io.StringIO()
    cp.write(out)
    return out.getvalue()


TRACE_HEADER = "t,q,dq,ref,u_raw,u,du,F_est,F_fcst,dq_hat,dist"

_COLUMNS = ("t", "q", "dq", "ref", "u_raw", "u", "du",
            "f_est", "f_fcst", "dq_hat", "dist")


def _fmt(v: float) -> str:
    return format(v, ".9g")


def _csv_lines(trace: list[TraceRecord]):
    yield TRACE_HEADER
    for r in trace:
        yield ",".join(_fmt(getattr(r, c)) for c in _COLUMNS)


def emit_trace(trace: list[TraceRecord], metrics: Metrics, spec: ScenarioSpec,
               path: Path) -> Path:
    """Write the CSV trace plus a .metrics.json sidecar, return the CSV path.

    Values are printed with 9 significant digits, '.' decimal separator,
    LF line endings.  The sidecar metrics are recomputed from the values
    exactly as published, so re-parsing the CSV reproduces them.
    """
    path = Path(path)
    with open(path, "w", newline="\n") as f:
        for line in _csv_lines(trace):
            f.write(line + "\n")
    quantized = [
        dataclasses.replace(r, **{c: float(_fmt(getattr(r, c)))
                                  for c in _COLUMNS})
        for r in trace
    ]
    sidecar_metrics = compute_metrics(
        quantized, spec,
        realized_plant_delay_s=metrics.realized_plant_delay_s,
        warmup_s=metrics.warmup_s)
    sidecar = {
        "metrics": dataclasses.asdict(sidecar_metrics),
        "spec_ini": serialize_config(spec),
        "rng": {"generator": "numpy default_rng (PCG64)",
                "seed": spec.rng_seed},
        "steps": len(trace),
    }
    sidecar_path = path.with_name(path.stem + ".metrics.json")
    with open(sidecar_path, "w", newline="\n") as f:
        json.dump(sidecar, f, indent=2)
        f.write("\n")
    return path


def emit_figures(trace: list[TraceRecord], spec: ScenarioSpec, outdir: Path,
                 name: str) -> list[Path]:
    """Per-figure CSV pairs: fig-<name>-control.csv and fig-<name>-output.csv,
    plus fig-<name>-disturbance.csv when a disturbance is active."""
    outdir = Path(outdir)
    panels = {
        "control": ("t,u,du", ("t", "u", "du")),
        "output": ("t,dq,ref", ("t", "dq", "ref")),
    }
    if spec.disturbance.kind != "none":
        panels["disturbance"] = ("t,dist", ("t", "dist"))
    written = []
    for panel, (header, cols) in panels.items():
        p = outdir / f"fig-{name}-{panel}.csv"
        with open(p, "w", newline="\n") as f:
            f.write(header + "\n")
            for r in trace:
                f.write(",".join(_fmt(getattr(r, c)) for c in cols) + "\n")
        written.append(p)
    return written


def _resolve_scenario(token: str) -> tuple[ScenarioSpec, str]:
    if token in PRESET_NAMES:
        return preset(token), token
    p = Path(token)
    if p.exists():
        return parse_config(p.read_text()), p.stem
    raise ConfigError(
        f"{token!r} is neither a preset ({', '.join(PRESET_NAMES)}) "
        f"nor a config file")


_GAIN_FLAG = {"paper": GAIN_PAPER, "hollot": GAIN_HOLLOT}


def _apply_overrides(spec: ScenarioSpec, args) -> ScenarioSpec:
    changes = {}
    if args.seed is not None:
        changes["rng_seed"] = args.seed
    if args.duration is not None:
        changes["duration"] = args.duration
    if args.gain is not None:
        changes["gain_strategy"] = _GAIN_FLAG[args.gain]
    try:
        if args.ts is not None:
            est = dataclasses.replace(spec.controller.est, ts=args.ts)
            changes["controller"] = dataclasses.replace(spec.controller, est=est)
            changes["ts"] = args.ts
        return dataclasses.replace(spec, **changes) if changes else spec
    except ConfigError:
        raise
    except ValueError as e:
        # replace() reruns the dataclass validators; report as a config error
        raise ConfigError(str(e)) from None


def _run_one(spec: ScenarioSpec, outdir: Path, name: str,
             emit_figs: bool) -> None:
    outdir.mkdir(parents=True, exist_ok=True)
    trace, metrics = run(spec)
    csv_path = emit_trace(trace, metrics, spec, outdir / "trace.csv")
    if emit_figs:
        emit_figures(trace, spec, outdir, name)
    print(f"{name}: {len(trace)} steps -> {csv_path}  "
          f"rmse={metrics.rmse:.6g} max|e|={metrics.max_abs_error:.6g} "
          f"saturated={metrics.saturated_count}")


def _cmd_run(args) -> int:
    spec, name = _resolve_scenario(args.scenario)
    spec = _apply_overrides(spec, args)
    _run_one(spec, Path(args.out), name, args.emit_figures)
    return 0


def _cmd_list_presets(args) -> int:
    for name in PRESET_NAMES:
        print(f"{name:18s} {PRESET_DESCRIPTIONS[name]}")
    return 0


def _cmd_batch(args) -> int:
    for name in PRESET_NAMES:
        _run_one(preset(name), Path(args.out) / name, name, args.emit_figures)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mfaqm",
        description="Closed-loop simulator for model-free active queue management")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one scenario (preset name or config file)")
    p_run.add_argument("--scenario", required=True)
    p_run.add_argument("--out", required=True)
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--duration", type=float, default=None)
    p_run.add_argument("--ts", type=float, default=None)
    p_run.add_argument("--gain", choices=sorted(_GAIN_FLAG), default=None)
    p_run.add_argument("--emit-figures", action="store_true")
    p_run.set_defaults(func=_cmd_run)

    p_list = sub.add_parser("list-presets", help="list benchmark presets")
    p_list.set_defaults(func=_cmd_list_presets)

    p_batch = sub.add_parser("batch", help="run every preset")
    p_batch.add_argument("--all", action="store_true", required=True)
    p_batch.add_argument("--out", required=True)
    p_batch.add_argument("--emit-figures", action="store_true")
    p_batch.set_defaults(func=_cmd_batch)
    return parser


def main(argv: list[str] | None = None) -> int:
    """Entry point; returns 0 on success, 2 on config errors, 3 on divergence."""
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except DivergenceError as e:
        print(f"aborted: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
