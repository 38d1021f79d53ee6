"""Network constants and the derived TCP/AQM operating point."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class NetworkParams:
    """Link and TCP population constants.

    Units: packets for window and queue sizes, packets/s for the link
    capacity, seconds for the propagation delay.  Defaults describe the
    standard dumbbell benchmark this simulator targets.
    """

    w_max: float = 131.0
    q_max: float = 800.0
    q0: float = 175.0
    n_sessions: int = 60
    capacity: float = 3750.0
    t_p: float = 0.2

    def __post_init__(self) -> None:
        # q0 = 0 is a legal (empty queue) operating point, the rest must be > 0.
        if self.q0 < 0:
            raise ValueError("q0 must be non-negative")
        for name in ("w_max", "q_max", "n_sessions", "capacity", "t_p"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be strictly positive")
        if self.q0 > self.q_max:
            raise ValueError("q0 must not exceed q_max")


@dataclass(frozen=True)
class OperatingPoint:
    """Equilibrium implied by NetworkParams."""

    tau0: float  # round-trip time [s]
    w0: float    # per-session TCP window [packets]
    u0: float    # equilibrium loss ratio, inside (0, 1)


def derive_operating_point(params: NetworkParams) -> OperatingPoint:
    """Compute the equilibrium round-trip time, window and loss ratio.

    tau0 = q0 / capacity + t_p
    w0   = capacity * tau0 / n_sessions
    u0   = 2 / w0**2

    Raises ValueError when the implied loss ratio leaves (0, 1), which
    happens when the per-session window drops to sqrt(2) packets or less.
    """
    tau0 = params.q0 / params.capacity + params.t_p
    w0 = params.capacity * tau0 / params.n_sessions
    u0 = 2.0 / (w0 * w0)
    if not 0.0 < u0 < 1.0:
        raise ValueError(
            f"loss ratio u0 = {u0:g} outside (0, 1); w0 = {w0:g} is too small"
        )
    return OperatingPoint(tau0=tau0, w0=w0, u0=u0)
