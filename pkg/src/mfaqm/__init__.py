"""Deterministic closed-loop simulator for model-free active queue management."""

from .controller import (ControllerConfig, ControllerState, control,
                         controller_step, make_controller_config,
                         predict_output)
from .estimators import (EstimatorConfig, TrendEstimate, estimate_drift,
                         forecast, integrate_forecast, trend_and_slope)
from .netparams import NetworkParams, OperatingPoint, derive_operating_point
from .plant import (GAIN_HOLLOT, GAIN_PAPER, GAIN_STRATEGIES, DiscretePlant,
                    PlantParams, PlantState, build_plant, plant_gain)
from .scenario import (ConfigError, DisturbanceSpec, DivergenceError,
                       MeasurementNoise, Metrics, ReferenceProfile,
                       ScenarioSpec, TraceRecord, compute_metrics,
                       hold_spans, preset, run, PRESET_NAMES)
from .signals import (DelayLine, SlidingWindow, WindowNotFull,
                      kernel_product_integral, seconds_to_samples,
                      window_integral)

__all__ = [
    "ControllerConfig", "ControllerState", "control", "controller_step",
    "make_controller_config", "predict_output",
    "EstimatorConfig", "TrendEstimate", "estimate_drift", "forecast",
    "integrate_forecast", "trend_and_slope",
    "NetworkParams", "OperatingPoint", "derive_operating_point",
    "GAIN_HOLLOT", "GAIN_PAPER", "GAIN_STRATEGIES", "DiscretePlant",
    "PlantParams", "PlantState", "build_plant", "plant_gain",
    "ConfigError", "DisturbanceSpec", "DivergenceError", "MeasurementNoise",
    "Metrics", "ReferenceProfile", "ScenarioSpec", "TraceRecord",
    "compute_metrics", "hold_spans", "preset", "run", "PRESET_NAMES",
    "DelayLine", "SlidingWindow", "WindowNotFull",
    "kernel_product_integral", "seconds_to_samples", "window_integral",
]
