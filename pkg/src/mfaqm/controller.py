"""Delay-aware intelligent proportional controller.

The controller knows nothing about the plant beyond the local model

    d(dq)/dt = F + alpha * du(t - h)

It estimates the lumped drift F over a sliding window, fits an affine
trend to that estimate, forecasts both the drift and the queue one delay
ahead, and closes the loop on the predicted error:

    du(t) = (ref_rate(t+h) - F_forecast(t+h) - k_p * e_hat(t+h)) / alpha

where e_hat(t+h) = dq_hat(t+h) - ref(t+h).  Substituting du back into the
local model cancels F and leaves d(e_hat)/dt = -k_p * e_hat, so k_p > 0 is
required for decay; the stability_check flag enforces that unless the
caller explicitly opts out for reproduction experiments.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .estimators import (EstimatorConfig, TrendEstimate, estimate_drift,
                         forecast, integrate_forecast, trend_and_slope)
from .signals import DelayLine, SlidingWindow, seconds_to_samples


@dataclass(frozen=True)
class ControllerConfig:
    alpha: float
    k_p: float
    h: float  # assumed round-trip delay [s]
    est: EstimatorConfig
    stability_check: bool = True

    def __post_init__(self) -> None:
        if self.alpha == 0:
            raise ValueError("alpha must be nonzero")
        if self.h < 0:
            raise ValueError("h must be non-negative")
        if self.stability_check and self.k_p <= 0:
            raise ValueError(
                "k_p must be positive for a decaying error; "
                "set stability_check=False to experiment anyway")
        if self.est.alpha != self.alpha or self.est.h != self.h:
            raise ValueError("estimator config disagrees on alpha or h")


def make_controller_config(alpha: float, k_p: float, h: float, ts: float,
                           tau_w: float = 0.4, t_f: float = 0.8,
                           stability_check: bool = True) -> ControllerConfig:
    """Convenience constructor keeping the nested estimator config in sync.

    The window defaults are tuned empirically: a short drift window keeps
    the adaptation fast while the longer trend window smooths the forecast
    enough for solid margins against the benchmark plant.  Shrinking both
    toward 0.2 s destabilizes the loop.
    """
    est = EstimatorConfig(tau_w=tau_w, t_f=t_f, alpha=alpha, h=h, ts=ts)
    return ControllerConfig(alpha=alpha, k_p=k_p, h=h, est=est,
                            stability_check=stability_check)


class ControllerState:
    """Sample buffers owned by one control loop.

    The controller stores every du it issued itself; the estimator's
    du(. - h) window is produced by delaying that stream, so no plant
    internals are ever consulted.  Until the warm-up clock has elapsed
    and the drift-trend window is full, the output is held at zero.
    """

    def __init__(self, cfg: ControllerConfig):
        est = cfg.est
        ts = est.ts
        self.n_h, _ = seconds_to_samples(cfg.h, ts)
        n_w, _ = seconds_to_samples(est.tau_w, ts)
        n_f, _ = seconds_to_samples(est.t_f, ts)
        self.q_win = SlidingWindow(n_w + 1, ts)
        self.u_win = SlidingWindow(n_w + 1, ts)
        self.f_win = SlidingWindow(n_f + 1, ts)
        # Feeding last_du through a line of capacity n_h - 1 yields the du
        # issued n_h steps ago.  For h = 0 this degrades to the previous
        # sample: the current du cannot feed its own computation.
        self.u_shift = DelayLine(max(self.n_h - 1, 0))
        self.u_recent: deque[float] = deque([0.0] * (self.n_h + 1),
                                            maxlen=self.n_h + 1)
        self.last_du = 0.0
        self.steps = 0
        self.warmup_steps, self.warmup_s = seconds_to_samples(
            max(est.tau_w, est.t_f) + cfg.h, ts)
        # diagnostics for the trace, refreshed every step
        self.f_est = 0.0
        self.f_forecast = 0.0
        self.dq_hat = 0.0

    @property
    def active(self) -> bool:
        return self.steps >= self.warmup_steps and self.f_win.full


def predict_output(dq_now: float, f_trend: TrendEstimate,
                   state: ControllerState, cfg: ControllerConfig) -> float:
    """Queue deviation expected one assumed delay ahead.

    Current value, plus the integral of the extrapolated drift over the
    horizon, plus the input contribution already in flight:

        dq_hat(t+h) = dq(t) + integral of F over [t, t+h]
                            + alpha * integral of du over [t-h, t]
    """
    u = np.asarray(state.u_recent, dtype=float)
    if state.n_h == 0:
        u_int = 0.0
    else:
        u_int = cfg.est.ts * (u.sum() - 0.5 * (u[0] + u[-1]))
    return dq_now + integrate_forecast(f_trend, cfg.h) + cfg.alpha * u_int


def control(ref_val: float, ref_rate: float, f_forecast: float,
            dq_hat: float, cfg: ControllerConfig) -> float:
    """Proportional law on the predicted error with drift cancellation.

    Plain arithmetic only, so symbolic inputs flow through unchanged.
    """
    e_hat = dq_hat - ref_val
    return (ref_rate - f_forecast - cfg.k_p * e_hat) / cfg.alpha


def controller_step(dq_meas: float, ref_val: float, ref_rate: float,
                    cfg: ControllerConfig, state: ControllerState) -> float:
    """One control period: ingest dq(t), emit du(t).

    ref_val and ref_rate must already be the reference value and slope at
    t + h; the caller owns the reference generator.
    """
    state.q_win.push(dq_meas)
    state.u_win.push(state.u_shift.step(state.last_du))
    if state.q_win.full:
        state.f_est = estimate_drift(state.q_win, state.u_win, cfg.est)
        state.f_win.push(state.f_est)
    if state.active:
        trend = trend_and_slope(state.f_win)
        state.f_forecast = forecast(trend, cfg.h,
                                    max_horizon=max(cfg.h, cfg.est.t_f))
        state.dq_hat = predict_output(dq_meas, trend, state, cfg)
        du = control(ref_val, ref_rate, state.f_forecast, state.dq_hat, cfg)
    else:
        # warm-up: hold the operating point, keep diagnostics neutral
        state.f_forecast = 0.0
        state.dq_hat = dq_meas
        du = 0.0
    state.u_recent.append(du)
    state.last_du = du
    state.steps += 1
    return du
