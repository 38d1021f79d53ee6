"""Closed-loop experiment engine and the standard experiment presets.

A scenario wires the controller against the discrete plant for a fixed
duration and emits one trace record per sample period.  Everything is
deterministic for a given spec: randomness enters only through seeded
generators for the disturbance and the optional measurement noise.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, replace
from functools import cached_property

import numpy as np

from .controller import ControllerConfig, ControllerState, controller_step, \
    make_controller_config
from .netparams import NetworkParams, derive_operating_point
from .plant import GAIN_HOLLOT, GAIN_PAPER, GAIN_STRATEGIES, build_plant


class ConfigError(ValueError):
    """A scenario spec violates the schema or its invariants."""


class DivergenceError(RuntimeError):
    """The closed loop left the trust region of the linearized plant."""


DIVERGENCE_FACTOR = 10.0  # abort when |raw dq| exceeds this many q_max


@dataclass(frozen=True)
class ReferenceProfile:
    """Piecewise-constant setpoint schedule smoothed by a first-order filter.

    times[i] is the instant level[i] becomes the target; times[0] must be
    0 and the filter state starts on levels[0], so the profile begins flat.
    Value and slope are evaluated in closed form, never by discrete
    filtering, which keeps look-ahead queries exact.
    """

    times: tuple[float, ...] = (0.0, 5.0, 15.0, 25.0)
    levels: tuple[float, ...] = (0.0, 100.0, -75.0, 0.0)
    t_ref: float = 0.5  # smoothing time constant [s]

    def __post_init__(self) -> None:
        if len(self.times) != len(self.levels) or not self.times:
            raise ConfigError("reference times and levels must pair up")
        if self.times[0] != 0.0:
            raise ConfigError("reference schedule must start at t = 0")
        if any(b <= a for a, b in zip(self.times, self.times[1:])):
            raise ConfigError("reference times must increase strictly")
        if self.t_ref < 0:
            raise ConfigError("t_ref must be non-negative")

    @cached_property
    def _anchors(self) -> tuple[float, ...]:
        """Smoothed value at each switch instant, by exact decay."""
        vals = [self.levels[0]]
        for i in range(1, len(self.times)):
            if self.t_ref > 0:
                decay = math.exp(-(self.times[i] - self.times[i - 1]) / self.t_ref)
            else:
                decay = 0.0
            prev_target = self.levels[i - 1]
            vals.append(prev_target + (vals[-1] - prev_target) * decay)
        return tuple(vals)

    def value_and_rate(self, t: float) -> tuple[float, float]:
        """Smoothed setpoint and its exact derivative at absolute time t."""
        if t < self.times[0]:
            return self.levels[0], 0.0
        i = bisect.bisect_right(self.times, t) - 1
        target = self.levels[i]
        if self.t_ref <= 0:
            return target, 0.0
        gap = (self._anchors[i] - target) * math.exp(-(t - self.times[i]) / self.t_ref)
        return target + gap, -gap / self.t_ref


DISTURBANCE_KINDS = ("none", "sine", "uniform-times-sine")


@dataclass(frozen=True)
class DisturbanceSpec:
    """Additive input disturbance, applied after the controller.

    sine:                amplitude * sin(omega * t + phase)
    uniform-times-sine:  U(-amplitude, amplitude) * sin(omega * t + phase),
                         drawn independently every sample from a seeded
                         generator, so |d| never exceeds amplitude.
    """

    kind: str = "none"
    amplitude: float = 0.0
    omega: float = 0.0  # [rad/s]
    phase: float = 0.0  # [rad]
    seed: int | None = None

    def __post_init__(self) -> None:
        if self.kind not in DISTURBANCE_KINDS:
            raise ConfigError(f"unknown disturbance kind {self.kind!r}")
        if self.amplitude < 0:
            raise ConfigError("disturbance amplitude must be non-negative")


@dataclass(frozen=True)
class MeasurementNoise:
    """Uniform U(-amplitude, amplitude) noise on dq as seen by the controller."""

    amplitude: float
    seed: int | None = None

    def __post_init__(self) -> None:
        if self.amplitude < 0:
            raise ConfigError("noise amplitude must be non-negative")


@dataclass(frozen=True)
class ScenarioSpec:
    duration: float
    ts: float
    network: NetworkParams
    controller: ControllerConfig
    reference: ReferenceProfile
    disturbance: DisturbanceSpec
    plant_delay_override: float | None = None
    plant_n_override: int | None = None
    gain_strategy: str = GAIN_PAPER
    measurement_noise: MeasurementNoise | None = None
    rng_seed: int = 42

    def __post_init__(self) -> None:
        if self.duration <= 0 or self.ts <= 0:
            raise ConfigError("duration and ts must be positive")
        steps = self.duration / self.ts
        if abs(steps - round(steps)) > 1e-9 * max(1.0, steps):
            raise ConfigError("duration must be an integral number of ts steps")
        if self.gain_strategy not in GAIN_STRATEGIES:
            raise ConfigError(f"unknown gain strategy {self.gain_strategy!r}")
        if self.controller.est.ts != self.ts:
            raise ConfigError("controller estimator ts disagrees with run ts")
        if self.plant_delay_override is not None and self.plant_delay_override < 0:
            raise ConfigError("plant delay override must be non-negative")
        if self.plant_n_override is not None and self.plant_n_override <= 0:
            raise ConfigError("plant n_sessions override must be positive")
        for level in self.reference.levels:
            q_abs = self.network.q0 + level
            if not 0.0 <= q_abs <= self.network.q_max:
                raise ConfigError(
                    f"reference level {level:g} puts the queue at {q_abs:g}, "
                    f"outside [0, {self.network.q_max:g}]")

    def n_steps(self) -> int:
        return round(self.duration / self.ts)


@dataclass(frozen=True)
class TraceRecord:
    """One sample period of the closed loop.

    q and dq describe the queue at time t, before this period's input is
    applied; u_raw/u/du describe the input held over [t, t + ts).
    """

    t: float
    q: float        # absolute queue [packets], clamped
    dq: float       # queue deviation [packets]
    ref: float      # smoothed reference deviation at t [packets]
    u_raw: float    # absolute loss ratio before clamping
    u: float        # absolute loss ratio after clamping to [0, 1]
    du: float       # controller command (deviation, before disturbance)
    f_est: float    # drift estimate at t
    f_fcst: float   # drift forecast at t + h
    dq_hat: float   # predicted deviation at t + h
    dist: float     # disturbance added to the input this period


@dataclass(frozen=True)
class Metrics:
    """Tracking metrics over a finished trace.

    rmse aggregates the tracking error over the final half of every
    setpoint hold; rmse_per_hold keeps the same quantity per hold.
    """

    rmse: float
    rmse_per_hold: tuple[float, ...]
    max_abs_error: float
    max_abs_du: float
    saturated_count: int
    realized_plant_delay_s: float = float("nan")
    warmup_s: float = float("nan")


def hold_spans(reference: ReferenceProfile, duration: float) -> tuple[tuple[float, float], ...]:
    """[start, end) of each setpoint hold, the last one ending at duration."""
    edges = [t for t in reference.times if t < duration] + [duration]
    return tuple((a, b) for a, b in zip(edges, edges[1:]))


def compute_metrics(trace: list[TraceRecord], spec: ScenarioSpec,
                    realized_plant_delay_s: float = float("nan"),
                    warmup_s: float = float("nan")) -> Metrics:
    t = np.array([r.t for r in trace])
    err = np.array([r.dq - r.ref for r in trace])
    du = np.array([r.du for r in trace])
    u_raw = np.array([r.u_raw for r in trace])
    per_hold = []
    tail_mask = np.zeros(len(trace), dtype=bool)
    for a, b in hold_spans(spec.reference, spec.duration):
        mask = (t >= a + 0.5 * (b - a)) & (t < b)
        tail_mask |= mask
        per_hold.append(float(np.sqrt(np.mean(err[mask] ** 2))) if mask.any()
                        else float("nan"))
    rmse = float(np.sqrt(np.mean(err[tail_mask] ** 2))) if tail_mask.any() else float("nan")
    return Metrics(
        rmse=rmse,
        rmse_per_hold=tuple(per_hold),
        max_abs_error=float(np.max(np.abs(err))),
        max_abs_du=float(np.max(np.abs(du))),
        saturated_count=int(np.sum((u_raw < 0.0) | (u_raw > 1.0))),
        realized_plant_delay_s=realized_plant_delay_s,
        warmup_s=warmup_s,
    )


def run(spec: ScenarioSpec) -> tuple[list[TraceRecord], Metrics]:
    """Simulate the closed loop and return (trace, metrics).

    Raises DivergenceError as soon as the raw queue deviation exceeds
    DIVERGENCE_FACTOR * q_max; the linearized plant means nothing out there.
    """
    ctrl_op = derive_operating_point(spec.network)
    plant_net = spec.network if spec.plant_n_override is None else replace(
        spec.network, n_sessions=spec.plant_n_override)
    plant_op = derive_operating_point(plant_net)
    plant = build_plant(plant_op, plant_net, spec.ts,
                        delay_override=spec.plant_delay_override,
                        gain_strategy=spec.gain_strategy)
    pstate = plant.initial_state()
    cstate = ControllerState(spec.controller)

    dist = spec.disturbance
    dist_rng = np.random.default_rng(
        dist.seed if dist.seed is not None else spec.rng_seed)
    noise = spec.measurement_noise
    noise_rng = None
    if noise is not None and noise.amplitude > 0:
        noise_rng = np.random.default_rng(
            noise.seed if noise.seed is not None else spec.rng_seed + 1)

    h = spec.controller.h
    abort_at = DIVERGENCE_FACTOR * spec.network.q_max
    trace: list[TraceRecord] = []
    dq_true = 0.0
    for k in range(spec.n_steps()):
        t = k * spec.ts
        ref_now, _ = spec.reference.value_and_rate(t)
        ref_val, ref_rate = spec.reference.value_and_rate(t + h)
        dq_meas = dq_true
        if noise_rng is not None:
            dq_meas += noise_rng.uniform(-noise.amplitude, noise.amplitude)
        du_cmd = controller_step(dq_meas, ref_val, ref_rate,
                                 spec.controller, cstate)
        if dist.kind == "none":
            d = 0.0
        elif dist.kind == "sine":
            d = dist.amplitude * math.sin(dist.omega * t + dist.phase)
        else:
            d = dist_rng.uniform(-dist.amplitude, dist.amplitude) \
                * math.sin(dist.omega * t + dist.phase)
        du_applied = du_cmd + d
        q_now = pstate.q
        dq_true = plant.step(pstate, du_applied)
        trace.append(TraceRecord(
            t=t, q=q_now, dq=q_now - spec.network.q0, ref=ref_now,
            u_raw=plant_op.u0 + du_applied, u=pstate.u, du=du_cmd,
            f_est=cstate.f_est, f_fcst=cstate.f_forecast,
            dq_hat=cstate.dq_hat, dist=d))
        if abs(pstate.x2) > abort_at:
            raise DivergenceError(
                f"divergence at t = {t:.2f} s: |raw dq| = {abs(pstate.x2):.3g} "
                f"exceeds {DIVERGENCE_FACTOR:g} * q_max")
    metrics = compute_metrics(trace, spec,
                              realized_plant_delay_s=plant.realized_delay_s,
                              warmup_s=cstate.warmup_s)
    return trace, metrics


PRESET_NAMES = ("nominal", "plant-no-delay", "plant-delay-x1.5",
                "n-mismatch", "disturb-sine", "disturb-random")

PRESET_DESCRIPTIONS = {
    "nominal": "matched delay, no disturbance",
    "plant-no-delay": "plant transport delay removed, controller unchanged",
    "plant-delay-x1.5": "plant transport delay grown 1.5x, controller unchanged",
    "n-mismatch": "plant simulates 90 sessions, controller keeps assuming 60",
    "disturb-sine": "sinusoidal input disturbance",
    "disturb-random": "uniform-times-sine input disturbance, seeded",
}


def preset(name: str, *, duration: float = 35.0, ts: float = 0.01,
           rng_seed: int = 42, gain_strategy: str | None = None) -> ScenarioSpec:
    """Build one of the named benchmark scenarios.

    All presets share the default network, reference profile, alpha = -1e5
    and k_p = +0.5, and differ only in the single aspect they probe.
    """
    if name not in PRESET_NAMES:
        raise ConfigError(f"unknown preset {name!r}; see PRESET_NAMES")
    net = NetworkParams()
    op = derive_operating_point(net)
    ctrl = make_controller_config(alpha=-1e5, k_p=0.5, h=op.tau0, ts=ts)
    kwargs = dict(
        duration=duration, ts=ts, network=net, controller=ctrl,
        reference=ReferenceProfile(), disturbance=DisturbanceSpec(),
        gain_strategy=gain_strategy if gain_strategy is not None else GAIN_HOLLOT,
        rng_seed=rng_seed)
    if name == "plant-no-delay":
        kwargs["plant_delay_override"] = 0.0
    elif name == "plant-delay-x1.5":
        kwargs["plant_delay_override"] = 1.5 * op.tau0
    elif name == "n-mismatch":
        kwargs["plant_n_override"] = 90
    elif name == "disturb-sine":
        kwargs["disturbance"] = DisturbanceSpec(
            kind="sine", amplitude=5e-4, omega=2.0 * math.pi / 10.0)
    elif name == "disturb-random":
        kwargs["disturbance"] = DisturbanceSpec(
            kind="uniform-times-sine", amplitude=1e-2,
            omega=math.pi / 40.0, phase=math.pi / 2.0)
    return ScenarioSpec(**kwargs)
