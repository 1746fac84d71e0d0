"""Exogenous operator-performance models and the unified accuracy function.

Covers the fatigue (task-effectiveness) model, utilization-ratio dynamics
with the derived sensory-motor time, the memory-retention curve, and the
composition of all of them with the drift-diffusion accuracy: fatigue
rescales the drift rate, utilization sets a motor dead time during which no
evidence accrues, and retention discounts the initial evidence carried over
from the last visit to the same region.

Simulation time is minutes; the fatigue model consumes hours.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import polynomial as npoly
from scipy.special import expit, ndtr

from .ddm import DdmParams

__all__ = [
    "FatigueExhaustionError",
    "SafteParams",
    "UtilizationParams",
    "RetentionParams",
    "SleepSchedule",
    "task_effectiveness",
    "effective_drift",
    "utilization_after_task",
    "motor_time",
    "rest_time",
    "retention",
    "retained_belief",
    "unified_accuracy",
]

log = logging.getLogger(__name__)

# Clamp margin above the fatigue singularity of the modified-drift equation.
_TE_CLAMP_MARGIN = 1e-6


class FatigueExhaustionError(RuntimeError):
    """Raised when the fatigue model leaves no usable cognitive capacity."""


@dataclass(frozen=True)
class SafteParams:
    """Fatigue-model constants: reservoir + two-harmonic circadian rhythm."""

    reservoir_capacity: float = 2880.0
    drain_rate: float = 0.5  # reservoir units per minute awake
    amp1: float = 7.0
    amp2: float = 5.0
    second_harmonic: float = 0.5
    peak_hour: float = 18.0
    relative_peak: float = 3.0

    def __post_init__(self) -> None:
        if not self.reservoir_capacity > 0:
            raise ValueError("reservoir_capacity must be positive")
        if self.drain_rate < 0:
            raise ValueError("drain_rate must be nonnegative")


@dataclass(frozen=True)
class UtilizationParams:
    """Utilization dynamics plus the motor-time polynomial in utilization.

    ``motor_poly`` holds ascending-degree coefficients; it may dip below zero
    in the interior of [0, 1] (the published quadratic does), in which case
    ``motor_time`` clamps at zero.
    """

    sensitivity: float = 100.0  # time constant tau, minutes
    optimal: float = 0.7
    threshold: float = 0.85
    motor_poly: tuple[float, ...] = (45.0, -155.0, 132.0)

    def __post_init__(self) -> None:
        if not self.sensitivity > 0:
            raise ValueError("sensitivity must be positive")
        if not 0.0 < self.optimal < self.threshold < 1.0:
            raise ValueError(
                f"need 0 < optimal < threshold < 1, got optimal={self.optimal}, "
                f"threshold={self.threshold}"
            )


@dataclass(frozen=True)
class RetentionParams:
    """Two-exponential forgetting curve with a long-term floor.

    rem(t) = min(1, w1 e^{-10 t / tau1} + w2 e^{-10 t / tau2} + floor).
    """

    w1: float = 4.6
    w2: float = 1.5
    tau1: float = 1.15
    tau2: float = 27.55
    floor: float = 0.1

    def __post_init__(self) -> None:
        for name in ("w1", "w2", "tau1", "tau2", "floor"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")
        if self.tau1 <= 0 or self.tau2 <= 0:
            raise ValueError("retention time constants must be positive")


@dataclass(frozen=True)
class SleepSchedule:
    """Wake-up hour (0-24) and hours slept before waking."""

    wake_hour: float = 6.0
    hours_slept: float = 6.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.wake_hour < 24.0:
            raise ValueError("wake_hour must lie in [0, 24)")
        if self.hours_slept < 0:
            raise ValueError("hours_slept must be nonnegative")

    def clock_state(self, sim_minutes: float) -> tuple[float, float]:
        """(hours awake, time of day in hours) at the given simulation time."""
        hours_awake = sim_minutes / 60.0
        return hours_awake, (self.wake_hour + hours_awake) % 24.0


def task_effectiveness(hours_awake: float, time_of_day: float, safte: SafteParams) -> float:
    """Fatigue multiplier as a fraction of rested performance.

    Reservoir drains linearly while awake; a two-harmonic circadian term
    modulates around it.  The raw value is near 100 and is normalized by 100
    here so downstream formulas (reaction time / TE, drift modification)
    consume a dimensionless fraction.
    """
    if hours_awake < 0:
        raise ValueError("hours_awake must be nonnegative")
    drained = 60.0 * safte.drain_rate * hours_awake
    circadian = math.cos(2.0 * math.pi / 24.0 * (time_of_day - safte.peak_hour)) + (
        safte.second_harmonic
        * math.cos(4.0 * math.pi / 24.0 * (time_of_day - safte.peak_hour - safte.relative_peak))
    )
    raw = (
        100.0 * (safte.reservoir_capacity - drained) / safte.reservoir_capacity
        + (safte.amp1 + safte.amp2 * drained / safte.reservoir_capacity) * circadian
    )
    if raw <= 0.0:
        raise FatigueExhaustionError(
            f"task effectiveness {raw:.3f} <= 0 after {hours_awake:.1f} h awake"
        )
    return raw / 100.0


def effective_drift(mu: float, sigma: float, xi1: float, xi2: float, te: float) -> float:
    """Drift rate of a fatigued operator.

    Defined so the free-response decision time at the Bayes-risk threshold
    matches the rested time divided by ``te``:
    tanh(mu_eff^2 xi2 / (4 xi1 sigma^2)) = tanh(mu^2 xi2 / (4 xi1 sigma^2)) / te.
    """
    if not (xi1 > 0 and xi2 > 0):
        raise ValueError("delay and error costs must be positive")
    s2 = sigma * sigma
    tanh_term = math.tanh(mu * mu * xi2 / (4.0 * xi1 * s2))
    if te <= tanh_term:
        raise FatigueExhaustionError(
            f"task effectiveness {te:.6f} at or below the drift singularity {tanh_term:.6f}"
        )
    return math.sqrt((2.0 * xi1 * s2 / xi2) * math.log((te + tanh_term) / (te - tanh_term)))


def utilization_after_task(u: float, busy: float, idle: float, tau: float) -> float:
    """Utilization ratio after a busy stretch followed by an idle stretch."""
    if not 0.0 <= u <= 1.0:
        raise ValueError("utilization must lie in [0, 1]")
    if busy < 0 or idle < 0:
        raise ValueError("busy and idle durations must be nonnegative")
    decay_busy = math.exp(-busy / tau)
    return (1.0 - decay_busy + u * decay_busy) * math.exp(-idle / tau)


def motor_time(u: float, te: float, params: UtilizationParams) -> float:
    """Sensory-motor dead time at utilization ``u``, sped up by fatigue factor
    ``te``.  The polynomial is clamped at zero where it dips negative."""
    if te <= 0:
        raise ValueError("task effectiveness must be positive")
    return max(0.0, float(npoly.polyval(u, params.motor_poly))) / te


def rest_time(u: float, params: UtilizationParams) -> float:
    """Idle time that returns an over-threshold utilization to its optimum.

    Zero unless u exceeds the threshold; otherwise tau * log(u / optimal),
    which composes with ``utilization_after_task`` to land exactly on the
    optimum.
    """
    if not 0.0 <= u <= 1.0:
        raise ValueError("utilization must lie in [0, 1]")
    if u <= params.threshold:
        return 0.0
    return params.sensitivity * math.log(u / params.optimal)


def retention(elapsed: float, params: RetentionParams) -> float:
    """Fraction of acquired belief (in log-odds) retained after ``elapsed``."""
    if elapsed < 0:
        raise ValueError("elapsed time must be nonnegative")
    raw = (
        params.w1 * math.exp(-10.0 * elapsed / params.tau1)
        + params.w2 * math.exp(-10.0 * elapsed / params.tau2)
        + params.floor
    )
    return min(1.0, raw)


def retained_belief(pi_last: float, elapsed: float, params: RetentionParams) -> float:
    """Belief surviving after ``elapsed`` time: log-odds shrink by rem(elapsed)."""
    if not 0.5 <= pi_last < 1.0:
        raise ValueError(f"pi_last must lie in [0.5, 1), got {pi_last}")
    rem = retention(elapsed, params)
    log_odds = math.log(pi_last / (1.0 - pi_last))
    return float(expit(log_odds * rem))


def _clamped_te(te: float, ddm: DdmParams) -> float:
    tanh_term = math.tanh(
        ddm.drift_magnitude**2 * ddm.error_cost / (4.0 * ddm.delay_cost * ddm.diffusion**2)
    )
    floor = tanh_term + _TE_CLAMP_MARGIN
    if te < floor:
        log.warning(
            "task effectiveness %.6f below drift singularity %.6f; clamping", te, floor
        )
        return floor
    return te


def unified_accuracy(
    hypothesis: str,
    t,
    u: float,
    te: float,
    elapsed_last: float,
    pi_last: float,
    ddm: DdmParams,
    uparams: UtilizationParams,
    rparams: RetentionParams,
):
    """Decision accuracy combining fatigue, motor dead time, and retention.

    No evidence accrues during the motor time, so the effective interrogation
    duration is (t - T_wait)^+ with T_wait = motor_time(u, te).  The initial
    evidence is the retention-discounted log-odds of the belief held after
    the region was last processed, scaled for the fatigued drift.  At zero
    effective duration the accuracy is the t -> 0+ limit: 0.5 for unbiased
    initial evidence, otherwise 0 or 1 by the side of the threshold the
    initial evidence falls on.

    ``hypothesis`` is "anomalous" (positive drift, report when evidence ends
    above threshold) or "nominal" (the mirror).
    """
    if hypothesis not in ("anomalous", "nominal"):
        raise ValueError(f"hypothesis must be 'anomalous' or 'nominal', got {hypothesis!r}")
    if not 0.5 <= pi_last < 1.0:
        raise ValueError(f"pi_last must lie in [0.5, 1), got {pi_last}")
    te = _clamped_te(te, ddm)
    mu_eff = effective_drift(ddm.drift_magnitude, ddm.diffusion, ddm.delay_cost, ddm.error_cost, te)
    t_wait = motor_time(u, te, uparams)
    rem = retention(elapsed_last, rparams)
    sigma, nu = ddm.diffusion, ddm.interrogation_threshold
    x_init = sigma**2 * math.log(pi_last / (1.0 - pi_last)) / (2.0 * mu_eff) * rem

    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("duration must be nonnegative")
    t_eff = np.maximum(t - t_wait, 0.0)
    out = np.empty_like(t_eff)

    degenerate = t_eff <= 0.0
    if hypothesis == "anomalous":
        limit = 0.5 if x_init == nu else (1.0 if x_init > nu else 0.0)
    else:
        limit = 0.5 if x_init == nu else (1.0 if x_init < nu else 0.0)
    out[degenerate] = limit

    live = ~degenerate
    if np.any(live):
        spread = sigma * np.sqrt(t_eff[live])
        if hypothesis == "anomalous":
            out[live] = ndtr((mu_eff * t_eff[live] + x_init - nu) / spread)
        else:
            out[live] = ndtr((nu + mu_eff * t_eff[live] - x_init) / spread)
    return float(out) if out.ndim == 0 else out
