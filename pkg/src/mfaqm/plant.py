"""Linearized TCP/AQM queue plant, discretized for simulation only.

The queue deviation responds to the loss-ratio deviation through a static
gain, a pure transport delay, and two first-order lags:

    dq(s) / du(s) = sign * gain * exp(-delay_s * s)
                    / ((tc1 * s + 1) * (tc2 * s + 1))

with tc1 = tau0 and tc2 = w0 * tau0 / 2.  sign is -1: raising the loss
ratio drains the queue.  The controller never sees this module; it exists
so simulations have something truthful to push against.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .netparams import NetworkParams, OperatingPoint
from .signals import DelayLine, seconds_to_samples

GAIN_PAPER = "paper-literal"
GAIN_HOLLOT = "hollot"
GAIN_STRATEGIES = (GAIN_PAPER, GAIN_HOLLOT)


def plant_gain(strategy: str, net: NetworkParams, op: OperatingPoint) -> float:
    """Static gain magnitude of the queue response to the loss ratio.

    Two published readings of the same linearization disagree by a factor
    4 * n_sessions**2; both are kept selectable and neither is asserted
    as ground truth:

      paper-literal: (n_sessions * w0)**3
      hollot:        (capacity * tau0)**3 / (4 * n_sessions**2)
    """
    if strategy == GAIN_PAPER:
        return (net.n_sessions * op.w0) ** 3
    if strategy == GAIN_HOLLOT:
        return (net.capacity * op.tau0) ** 3 / (4.0 * net.n_sessions**2)
    raise ValueError(f"unknown gain strategy {strategy!r}")


@dataclass(frozen=True)
class PlantParams:
    gain: float     # static gain magnitude [packets per unit loss ratio]
    sign: float     # -1.0 for the queue/loss-ratio pairing
    tc1: float      # first lag time constant [s]
    tc2: float      # second lag time constant [s]
    delay_s: float  # transport delay [s]

    def __post_init__(self) -> None:
        if self.gain <= 0 or self.tc1 <= 0 or self.tc2 <= 0:
            raise ValueError("gain and time constants must be positive")
        if self.delay_s < 0:
            raise ValueError("delay must be non-negative")


@dataclass
class PlantState:
    """Mutable state owned by one DiscretePlant instance."""

    x1: float  # first lag state, deviation units (unclamped)
    x2: float  # second lag state = raw queue deviation (unclamped)
    q: float   # absolute queue after clamping to [0, q_max]
    u: float   # absolute loss ratio after clamping to [0, 1]


class DiscretePlant:
    """Zero-order-hold discretization of the plant above.

    Each first-order stage is discretized exactly for piecewise-constant
    input (pole = exp(-ts/tc)); the stages are coupled sample-and-hold, so
    the overall response is within O(ts) of the continuous cascade.  The
    transport delay is realized as a whole number of samples; the realized
    value is exposed for logging since it differs from delay_s whenever
    that is not a multiple of ts.

    Saturation: the absolute input u0 + du is clamped to [0, 1] before the
    delay line; the absolute queue q0 + x2 is clamped to [0, q_max] on
    output only, lag states are never clamped.
    """

    def __init__(self, params: PlantParams, net: NetworkParams,
                 op: OperatingPoint, ts: float):
        if ts <= 0:
            raise ValueError("ts must be positive")
        self.params = params
        self.ts = ts
        self.q0 = net.q0
        self.q_max = net.q_max
        self.u0 = op.u0
        self.pole1 = math.exp(-ts / params.tc1)
        self.pole2 = math.exp(-ts / params.tc2)
        self.k_in = params.sign * params.gain * (1.0 - self.pole1)
        self.k_mid = 1.0 - self.pole2
        self.delay_samples, self.realized_delay_s = seconds_to_samples(
            params.delay_s, ts)
        self._delay = DelayLine(self.delay_samples)

    @property
    def dc_gain(self) -> float:
        return self.params.sign * self.params.gain

    def initial_state(self) -> PlantState:
        return PlantState(x1=0.0, x2=0.0, q=self.q0, u=self.u0)

    def step(self, state: PlantState, du_cmd: float) -> float:
        """Advance one sample period under input deviation du_cmd.

        Returns the clamped queue deviation q - q0.
        """
        u_abs = min(max(self.u0 + du_cmd, 0.0), 1.0)
        state.u = u_abs
        du_eff = self._delay.step(u_abs - self.u0)
        state.x1 = self.pole1 * state.x1 + self.k_in * du_eff
        state.x2 = self.pole2 * state.x2 + self.k_mid * state.x1
        state.q = min(max(self.q0 + state.x2, 0.0), self.q_max)
        return state.q - self.q0


def build_plant(op: OperatingPoint, net: NetworkParams, ts: float,
                delay_override: float | None = None,
                gain_strategy: str = GAIN_PAPER) -> DiscretePlant:
    """Assemble the discrete plant for an operating point.

    delay_override replaces the transport delay (0 is legal and yields a
    pass-through line); the lags always come from the operating point:
    tc1 = tau0, tc2 = w0 * tau0 / 2.
    """
    params = PlantParams(
        gain=plant_gain(gain_strategy, net, op),
        sign=-1.0,
        tc1=op.tau0,
        tc2=op.w0 * op.tau0 / 2.0,
        delay_s=op.tau0 if delay_override is None else delay_override,
    )
    return DiscretePlant(params, net, op, ts)
