"""Sliding-window integral estimators: lumped drift, affine trend, forecast.

All three work on the local model  d(dq)/dt = F + alpha * du(t - h)  where
F lumps every unmodeled effect.  The integral kernels below are the closed
forms obtained by annihilating initial conditions in the operational domain;
numerically they coincide with a continuous least-squares fit over the
window, so they stay well behaved under zero-mean measurement noise.
"""

from __future__ import annotations

from dataclasses import dataclass

from .signals import SlidingWindow, kernel_product_integral


@dataclass(frozen=True)
class EstimatorConfig:
    """Window lengths and local-model constants shared by the estimators."""

    tau_w: float  # drift-estimation window [s]
    t_f: float    # trend-fit window over the drift series [s]
    alpha: float  # input gain of the local model [packets/s per unit loss ratio]
    h: float      # assumed round-trip delay [s]
    ts: float     # sample period [s]

    def __post_init__(self) -> None:
        if self.ts <= 0:
            raise ValueError("ts must be positive")
        if self.tau_w < 2 * self.ts:
            raise ValueError("tau_w must cover at least two sample periods")
        if self.t_f < 2 * self.ts:
            raise ValueError("t_f must cover at least two sample periods")
        if self.alpha == 0:
            raise ValueError("alpha must be nonzero")
        if self.h < 0:
            raise ValueError("h must be non-negative")


@dataclass(frozen=True)
class TrendEstimate:
    """Affine trend of a windowed signal, anchored at the newest sample."""

    m: float   # trend value at the newest sample
    dm: float  # trend slope [signal units / s]


def estimate_drift(q_window: SlidingWindow, u_window: SlidingWindow,
                   cfg: EstimatorConfig) -> float:
    """Windowed estimate of F in  d(dq)/dt = F + alpha * du(t - h).

    q_window holds queue deviations dq, u_window holds the h-shifted input
    deviations du(. - h) on the same clock, both spanning tau_w.  With
    window-local sigma in [0, tau]:

        F = -(6 / tau**3) * integral of
            (tau - 2*sigma) * dq(sigma) + alpha * sigma*(tau - sigma) * du(sigma - h)

    Exact for constant F and affine dq; quadrature error is O(ts**2).
    """
    if q_window.length != u_window.length or q_window.ts != u_window.ts:
        raise ValueError("dq and du windows must share length and sample period")
    tau = q_window.span
    iq = kernel_product_integral(q_window, lambda s: tau - 2.0 * s)
    iu = kernel_product_integral(u_window, lambda s: s * (tau - s))
    return -(6.0 / tau**3) * (iq + cfg.alpha * iu)


def trend_and_slope(window: SlidingWindow) -> TrendEstimate:
    """Affine trend of the window by exact integral kernels.

    Equivalent to the continuous least-squares fit a0 + a1*sigma over the
    window span T:

        a1 = -(6 / T**3) * integral of (T - 2*sigma) * x(sigma)
        a0 =  (2 / T**2) * integral of (2*T - 3*sigma) * x(sigma)

    Returns the fitted value at the newest sample, m = a0 + a1*T, and the
    slope dm = a1.  Reproduces affine signals to machine precision.
    """
    t_span = window.span
    a1 = -(6.0 / t_span**3) * kernel_product_integral(
        window, lambda s: t_span - 2.0 * s)
    a0 = (2.0 / t_span**2) * kernel_product_integral(
        window, lambda s: 2.0 * t_span - 3.0 * s)
    return TrendEstimate(m=a0 + a1 * t_span, dm=a1)


def forecast(est: TrendEstimate, dt: float, max_horizon: float | None = None) -> float:
    """Extrapolate the trend dt seconds past the newest sample.

    The affine model is only trusted over short horizons; pass max_horizon
    to enforce the caller's convention (the controller uses max(h, t_f)).
    """
    if dt < 0:
        raise ValueError("forecast horizon must be non-negative")
    if max_horizon is not None and dt > max_horizon:
        raise ValueError(f"forecast horizon {dt:g} exceeds limit {max_horizon:g}")
    return est.m + est.dm * dt


def integrate_forecast(est: TrendEstimate, horizon: float) -> float:
    """Integral of the extrapolated trend over [0, horizon] past the window:

        m * horizon + dm * horizon**2 / 2
    """
    return est.m * horizon + 0.5 * est.dm * horizon * horizon
