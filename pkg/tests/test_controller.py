"""Controller unit tests plus closed-loop checks against the exact local model.

The local model the controller assumes,  d(dq)/dt = F + alpha*du(t-h),  is
itself a perfectly fair test plant: wiring the controller against it must
reproduce the designed error decay  e' = -k_p * e  almost exactly, which
pins the whole estimate/forecast/predict/control chain at once.
"""

import math
import types

import numpy as np
import pytest
import sympy

from mfaqm import (ControllerConfig, ControllerState, EstimatorConfig,
                   ReferenceProfile, TrendEstimate, control, controller_step,
                   make_controller_config, predict_output)

TS = 0.01


def run_local_loop(cfg, profile, f_drift, duration, dq0=0.0):
    """Close the loop around the exact (Euler-integrated) local model."""
    state = ControllerState(cfg)
    n = round(duration / cfg.est.ts)
    du_all, recs = [], []
    dq = dq0
    for k in range(n):
        t = k * cfg.est.ts
        ref_now, _ = profile.value_and_rate(t)
        ref_val, ref_rate = profile.value_and_rate(t + cfg.h)
        du = controller_step(dq, ref_val, ref_rate, cfg, state)
        du_all.append(du)
        recs.append(dict(t=t, dq=dq, ref=ref_now, du=du, f_est=state.f_est,
                         dq_hat=state.dq_hat, active=state.active))
        du_delayed = du_all[k - state.n_h] if k >= state.n_h else 0.0
        dq += cfg.est.ts * (f_drift + cfg.alpha * du_delayed)
    return recs


class TestConfig:
    def test_make_controller_config_defaults(self):
        cfg = make_controller_config(alpha=-1e5, k_p=0.5, h=0.25, ts=TS)
        assert cfg.est.tau_w == 0.4
        assert cfg.est.t_f == 0.8
        assert cfg.est.alpha == cfg.alpha
        assert cfg.est.h == cfg.h
        assert cfg.stability_check

    def test_rejects_nonpositive_gain(self):
        with pytest.raises(ValueError):
            make_controller_config(alpha=-1e5, k_p=0.0, h=0.25, ts=TS)
        with pytest.raises(ValueError):
            make_controller_config(alpha=-1e5, k_p=-0.5, h=0.25, ts=TS)

    def test_negative_gain_allowed_when_unchecked(self):
        cfg = make_controller_config(alpha=-1e5, k_p=-0.5, h=0.25, ts=TS,
                                     stability_check=False)
        assert cfg.k_p == -0.5

    def test_rejects_zero_alpha_and_negative_h(self):
        with pytest.raises(ValueError):
            make_controller_config(alpha=0.0, k_p=0.5, h=0.25, ts=TS)
        with pytest.raises(ValueError):
            make_controller_config(alpha=-1e5, k_p=0.5, h=-0.1, ts=TS)

    def test_rejects_estimator_disagreement(self):
        est = EstimatorConfig(tau_w=0.4, t_f=0.8, alpha=-2e5, h=0.25, ts=TS)
        with pytest.raises(ValueError):
            ControllerConfig(alpha=-1e5, k_p=0.5, h=0.25, est=est)


class TestControlLaw:
    def test_closed_form_case(self):
        cfg = make_controller_config(alpha=-1e5, k_p=0.5, h=0.25, ts=TS)
        # e_hat = 12 - 10 = 2; (2 - 3 - 0.5*2) / -1e5 = 2e-5
        du = control(ref_val=10.0, ref_rate=2.0, f_forecast=3.0,
                     dq_hat=12.0, cfg=cfg)
        assert du == pytest.approx(2e-5, rel=1e-12)

    def test_zero_in_zero_out(self):
        cfg = make_controller_config(alpha=-1e5, k_p=0.5, h=0.25, ts=TS)
        assert control(0.0, 0.0, 0.0, 0.0, cfg) == 0.0

    def test_symbolic_error_dynamics(self):
        # substitute the law back into the local model: the drift cancels
        # and the predicted error obeys e' = -k_p * e identically
        f, ref, ref_rate, dq_hat, k_p, alpha = sympy.symbols(
            "f ref ref_rate dq_hat k_p alpha", real=True)
        cfg = types.SimpleNamespace(k_p=k_p, alpha=alpha)
        du = control(ref, ref_rate, f, dq_hat, cfg)
        e_rate = f + alpha * du - ref_rate  # d/dt (dq_hat - ref)
        assert sympy.simplify(e_rate - (-k_p * (dq_hat - ref))) == 0


class TestPredictOutput:
    def test_zero_delay_returns_measurement(self):
        cfg = make_controller_config(alpha=-1e5, k_p=0.5, h=0.0, ts=TS)
        state = ControllerState(cfg)
        got = predict_output(7.0, TrendEstimate(m=3.0, dm=9.0), state, cfg)
        assert got == 7.0

    def test_drift_term_only(self):
        cfg = make_controller_config(alpha=-1e5, k_p=0.5, h=0.25, ts=TS)
        state = ControllerState(cfg)  # u_recent is all zeros
        got = predict_output(4.0, TrendEstimate(m=1.0, dm=2.0), state, cfg)
        # 4 + (1*0.25 + 0.5*2*0.25^2)
        assert got == pytest.approx(4.3125, rel=1e-12)

    def test_inflight_input_term(self):
        cfg = make_controller_config(alpha=-1e5, k_p=0.5, h=0.25, ts=TS)
        state = ControllerState(cfg)
        c = 2e-5
        state.u_recent.extend([c] * len(state.u_recent))
        got = predict_output(0.0, TrendEstimate(m=0.0, dm=0.0), state, cfg)
        # trapezoid of a constant over n_h*ts = 0.25 s
        assert got == pytest.approx(cfg.alpha * c * 0.25, rel=1e-12)


class TestWarmup:
    def test_holds_zero_until_windows_ready(self):
        cfg = make_controller_config(alpha=-1e5, k_p=0.5, h=0.25, ts=TS)
        state = ControllerState(cfg)
        # n_w = 40, n_f = 80: drift series starts at call 41, trend window
        # fills at call 121, later than the warm-up clock of 105 steps
        first_active = None
        for k in range(200):
            du = controller_step(5.0, 50.0, 0.0, cfg, state)
            if first_active is None and state.active:
                first_active = k
            if not state.active:
                assert du == 0.0
        assert first_active == 120
        assert state.warmup_steps == 105

    def test_clock_binds_when_windows_are_short(self):
        cfg = make_controller_config(alpha=-1e5, k_p=0.5, h=0.25, ts=TS,
                                     tau_w=0.2, t_f=0.2)
        state = ControllerState(cfg)
        first_active = None
        for k in range(100):
            controller_step(5.0, 50.0, 0.0, cfg, state)
            if first_active is None and state.active:
                first_active = k
        # trend window full after call 41, clock = (0.2 + 0.25)/ts = 45
        assert state.warmup_steps == 45
        assert first_active == 44  # post-call check sees steps already bumped

    def test_equilibrium_stays_quiet(self):
        cfg = make_controller_config(alpha=-1e5, k_p=0.5, h=0.25, ts=TS)
        state = ControllerState(cfg)
        for _ in range(500):
            du = controller_step(0.0, 0.0, 0.0, cfg, state)
            assert du == 0.0
        assert state.f_est == pytest.approx(0.0, abs=1e-12)
        assert state.dq_hat == pytest.approx(0.0, abs=1e-12)


class TestClosedLoopOnLocalModel:
    def make_cfg(self, **kw):
        return make_controller_config(alpha=-1e5, k_p=0.5, h=0.25, ts=TS, **kw)

    def test_drift_estimate_locks_on(self):
        cfg = self.make_cfg()
        profile = ReferenceProfile(times=(0.0,), levels=(0.0,))
        recs = run_local_loop(cfg, profile, f_drift=2.0, duration=8.0)
        late = [r["f_est"] for r in recs if r["t"] >= 6.0]
        assert max(abs(v - 2.0) for v in late) < 1e-3

    def test_tracks_smoothed_step(self):
        # transient decays at rate k_p, so judge the tail 7 s after the step
        cfg = self.make_cfg()
        profile = ReferenceProfile(times=(0.0, 2.0), levels=(0.0, 50.0))
        recs = run_local_loop(cfg, profile, f_drift=2.0, duration=10.0)
        late = [abs(r["dq"] - r["ref"]) for r in recs if r["t"] >= 9.0]
        assert max(late) < 0.15

    def test_prediction_matches_future_measurement(self):
        cfg = self.make_cfg()
        profile = ReferenceProfile(times=(0.0, 2.0), levels=(0.0, 50.0))
        recs = run_local_loop(cfg, profile, f_drift=2.0, duration=8.0)
        n_h = 25
        errs = [abs(recs[k]["dq_hat"] - recs[k + n_h]["dq"])
                for k in range(len(recs) - n_h)
                if recs[k]["active"]]
        assert max(errs) < 0.02 * 50.0

    def test_error_decay_rate_matches_gain(self):
        # start 40 packets off target with zero drift; after activation the
        # log-error slope must equal -k_p within 10 percent
        cfg = self.make_cfg()
        profile = ReferenceProfile(times=(0.0,), levels=(0.0,))
        recs = run_local_loop(cfg, profile, f_drift=0.0, duration=6.0, dq0=40.0)
        t_act = next(r["t"] for r in recs if r["active"])
        pts = [(r["t"], math.log(abs(r["dq"]))) for r in recs
               if t_act + 0.5 <= r["t"] <= t_act + 2.5 and abs(r["dq"]) > 1e-9]
        slope = np.polyfit([p[0] for p in pts], [p[1] for p in pts], 1)[0]
        assert slope == pytest.approx(-cfg.k_p, rel=0.10)

    def test_sign_flip_antisymmetry(self):
        cfg = self.make_cfg()
        up = ReferenceProfile(times=(0.0, 2.0), levels=(0.0, 50.0))
        down = ReferenceProfile(times=(0.0, 2.0), levels=(0.0, -50.0))
        du_up = [r["du"] for r in run_local_loop(cfg, up, 0.0, 6.0)]
        du_down = [r["du"] for r in run_local_loop(cfg, down, 0.0, 6.0)]
        assert np.allclose(du_up, [-x for x in du_down], atol=1e-18)

    def test_zero_delay_loop_still_tracks(self):
        cfg = make_controller_config(alpha=-1e5, k_p=0.5, h=0.0, ts=TS)
        profile = ReferenceProfile(times=(0.0, 2.0), levels=(0.0, 50.0))
        recs = run_local_loop(cfg, profile, f_drift=2.0, duration=10.0)
        late = [abs(r["dq"] - r["ref"]) for r in recs if r["t"] >= 9.0]
        assert max(late) < 0.15
