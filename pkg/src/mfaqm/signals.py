"""Fixed-step signal plumbing: delay line, sliding window, window quadrature."""

from __future__ import annotations

import math
from collections import deque

import numpy as np


class WindowNotFull(RuntimeError):
    """An integral was requested before the window had filled."""


def seconds_to_samples(delay_s: float, ts: float) -> tuple[int, float]:
    """Convert a time span in seconds to whole samples, ties away from zero.

    Returns (samples, realized_s).  The realized span differs from the
    request whenever delay_s is not a multiple of ts; callers log it.
    """
    if ts <= 0:
        raise ValueError("ts must be positive")
    if delay_s < 0:
        raise ValueError("delay must be non-negative")
    n = math.floor(delay_s / ts + 0.5)
    return n, n * ts


class DelayLine:
    """Pure transport delay of a fixed number of samples.

    step(x) returns the value pushed exactly `capacity` steps earlier;
    until the line has been fed that many samples it returns the initial
    fill value.  capacity 0 is the identity.

    >>> line = DelayLine(2)
    >>> [line.step(x) for x in (1.0, 2.0, 3.0)]
    [0.0, 0.0, 1.0]
    """

    def __init__(self, capacity: int, initial: float = 0.0):
        if capacity < 0:
            raise ValueError("capacity must be >= 0")
        self.capacity = capacity
        self._buf = deque(float(initial) for _ in range(capacity))

    def step(self, x: float) -> float:
        if self.capacity == 0:
            return x
        out = self._buf.popleft()
        self._buf.append(float(x))
        return out


class SlidingWindow:
    """The last `length` samples of a uniformly sampled signal.

    Samples are kept oldest first.  Once full, the window covers
    span = (length - 1) * ts seconds; the quadrature helpers below use
    window-local time sigma in [0, span], sigma = span at the newest sample.
    """

    def __init__(self, length: int, ts: float):
        if length < 2:
            raise ValueError("window needs at least 2 samples")
        if ts <= 0:
            raise ValueError("ts must be positive")
        self.length = length
        self.ts = ts
        self._buf: deque[float] = deque(maxlen=length)

    def push(self, x: float) -> None:
        self._buf.append(float(x))

    def __len__(self) -> int:
        return len(self._buf)

    @property
    def full(self) -> bool:
        return len(self._buf) == self.length

    @property
    def span(self) -> float:
        return (self.length - 1) * self.ts

    def values(self) -> np.ndarray:
        return np.asarray(self._buf, dtype=float)

    def local_times(self) -> np.ndarray:
        return np.arange(self.length) * self.ts


def _require_full(window: SlidingWindow) -> None:
    if not window.full:
        raise WindowNotFull(
            f"window holds {len(window)} of {window.length} samples"
        )


def window_integral(window: SlidingWindow, kernel) -> float:
    """Trapezoidal integral of kernel(sigma) * x(sigma) over the window.

    kernel must accept a numpy array of window-local times.  Exact when
    the product kernel(sigma) * x(sigma) is affine in sigma; otherwise
    the error is bounded by span * ts**2 * max|f''| / 12.
    """
    _require_full(window)
    v = np.asarray(kernel(window.local_times()), dtype=float) * window.values()
    return float(window.ts * (v.sum() - 0.5 * (v[0] + v[-1])))


_GL_OFFSET = 0.5 / math.sqrt(3.0)


def kernel_product_integral(window: SlidingWindow, kernel) -> float:
    """Integral of kernel(sigma) against the piecewise-linear interpolant
    of the window samples, via 2-point Gauss quadrature per interval.

    Exact (to rounding) whenever kernel is a polynomial of degree <= 2,
    in particular for every kernel the estimators use, so affine signals
    are reproduced to machine precision.  Coincides with the plain
    trapezoid rule when kernel is constant.
    """
    _require_full(window)
    x = window.values()
    ts = window.ts
    lo = window.local_times()[:-1]
    acc = 0.0
    for u in (0.5 - _GL_OFFSET, 0.5 + _GL_OFFSET):
        nodes = lo + u * ts
        interp = x[:-1] * (1.0 - u) + x[1:] * u
        acc += 0.5 * ts * float(np.dot(np.asarray(kernel(nodes), dtype=float), interp))
    return acc
