"""Delay line, sliding window and the two quadrature rules."""

import numpy as np
import pytest

from mfaqm import (DelayLine, SlidingWindow, WindowNotFull,
                   kernel_product_integral, seconds_to_samples,
                   window_integral)


def filled_window(values, ts=0.01):
    win = SlidingWindow(len(values), ts)
    for v in values:
        win.push(v)
    return win


class TestSecondsToSamples:
    def test_benchmark_delay(self):
        n, realized = seconds_to_samples(0.24666666666666667, 0.01)
        assert n == 25
        assert realized == pytest.approx(0.25, rel=1e-12)

    def test_exact_multiple(self):
        assert seconds_to_samples(0.02, 0.01)[0] == 2

    def test_tie_rounds_away_from_zero(self):
        # binary-exact operands so the tie is a true tie
        assert seconds_to_samples(1.25, 0.5)[0] == 3

    def test_zero(self):
        assert seconds_to_samples(0.0, 0.01) == (0, 0.0)

    def test_rejects(self):
        with pytest.raises(ValueError):
            seconds_to_samples(-0.1, 0.01)
        with pytest.raises(ValueError):
            seconds_to_samples(0.1, 0.0)


class TestDelayLine:
    def test_basic_shift(self):
        line = DelayLine(2)
        assert [line.step(x) for x in (1.0, 2.0, 3.0)] == [0.0, 0.0, 1.0]

    def test_capacity_zero_is_identity(self):
        line = DelayLine(0)
        assert [line.step(x) for x in (5.0, -1.0)] == [5.0, -1.0]

    def test_initial_value(self):
        line = DelayLine(3, initial=7.0)
        assert [line.step(float(x)) for x in range(5)] == [7.0, 7.0, 7.0, 0.0, 1.0]

    def test_composition_matches_single_line(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            a, b = int(rng.integers(0, 8)), int(rng.integers(0, 8))
            xs = rng.normal(size=40)
            first, second, whole = DelayLine(a), DelayLine(b), DelayLine(a + b)
            for x in xs:
                assert second.step(first.step(x)) == whole.step(x)

    def test_rejects_negative_capacity(self):
        with pytest.raises(ValueError):
            DelayLine(-1)


class TestSlidingWindow:
    def test_fill_and_order(self):
        win = SlidingWindow(3, 0.1)
        assert not win.full
        for v in (1.0, 2.0, 3.0, 4.0):
            win.push(v)
        assert win.full
        assert list(win.values()) == [2.0, 3.0, 4.0]
        assert win.span == pytest.approx(0.2)

    def test_rejects_degenerate(self):
        with pytest.raises(ValueError):
            SlidingWindow(1, 0.1)
        with pytest.raises(ValueError):
            SlidingWindow(5, 0.0)

    def test_integral_requires_full(self):
        win = SlidingWindow(4, 0.1)
        win.push(1.0)
        with pytest.raises(WindowNotFull):
            window_integral(win, lambda s: s)
        with pytest.raises(WindowNotFull):
            kernel_product_integral(win, lambda s: s)


class TestWindowIntegral:
    def test_constant_kernel_constant_signal(self):
        win = filled_window([4.2] * 11, ts=0.1)
        assert window_integral(win, lambda s: np.ones_like(s)) \
            == pytest.approx(4.2 * 1.0, rel=1e-14)

    def test_linear_kernel_unit_signal(self):
        win = filled_window([1.0] * 101, ts=0.01)
        assert window_integral(win, lambda s: s) == pytest.approx(0.5, abs=1e-12)

    def test_quadratic_kernel_has_trapezoid_error(self):
        win = filled_window([1.0] * 101, ts=0.01)
        val = window_integral(win, lambda s: s * s)
        # bound: span * ts^2 * max|f''| / 12 = 1 * 1e-4 * 2 / 12
        assert val == pytest.approx(1.0 / 3.0, abs=2e-5)

    def test_exact_when_product_affine(self):
        rng = np.random.default_rng(5)
        for _ in range(10):
            a, b, c = rng.normal(size=3)
            sig = a + b * np.arange(21) * 0.01
            win = filled_window(list(sig), ts=0.01)
            t_end = 0.2
            exact = c * (a * t_end + b * t_end**2 / 2)
            assert window_integral(win, lambda s: np.full_like(s, c)) \
                == pytest.approx(exact, abs=1e-12)


class TestKernelProductIntegral:
    def test_quadratic_kernel_exact(self):
        win = filled_window([1.0] * 101, ts=0.01)
        val = kernel_product_integral(win, lambda s: s * s)
        assert val == pytest.approx(1.0 / 3.0, abs=1e-13)

    def test_affine_kernel_affine_signal_exact(self):
        rng = np.random.default_rng(8)
        ts, n = 0.01, 20
        t_end = n * ts
        for _ in range(20):
            a, b, c, d = rng.normal(size=4)
            sig = a + b * np.arange(n + 1) * ts
            win = filled_window(list(sig), ts=ts)
            # integral of (c + d s)(a + b s) over [0, t_end]
            exact = (a * c * t_end + (a * d + b * c) * t_end**2 / 2
                     + b * d * t_end**3 / 3)
            got = kernel_product_integral(win, lambda s: c + d * s)
            assert got == pytest.approx(exact, abs=1e-13 * max(1, abs(exact)))

    def test_constant_kernel_reduces_to_trapezoid(self):
        rng = np.random.default_rng(9)
        sig = list(rng.normal(size=31))
        win = filled_window(sig, ts=0.02)
        a = kernel_product_integral(win, lambda s: np.full_like(s, 1.7))
        b = window_integral(win, lambda s: np.full_like(s, 1.7))
        assert a == pytest.approx(b, rel=1e-13)

    def test_linear_in_signal(self):
        rng = np.random.default_rng(10)
        x, y = rng.normal(size=21), rng.normal(size=21)
        kern = lambda s: s * (0.2 - s)
        wx, wy = filled_window(list(x)), filled_window(list(y))
        wxy = filled_window(list(2.0 * x - 3.0 * y))
        assert kernel_product_integral(wxy, kern) == pytest.approx(
            2.0 * kernel_product_integral(wx, kern)
            - 3.0 * kernel_product_integral(wy, kern), rel=1e-10, abs=1e-12)
