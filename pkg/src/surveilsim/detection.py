"""Ensemble CUSUM change detection over the operator's binary decisions.

One nonnegative statistic per region accumulates the log-likelihood ratio of
each decision made on that region's tasks; crossing the shared threshold
declares an anomaly and resets that region's statistic (others untouched).
Likelihoods are conditioned on the operator's current belief and the task's
allocation, which is how dependence between successive decisions enters.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

from .errors import DegenerateLikelihoodError

__all__ = ["CusumBank", "loglik_ratio", "cusum_update"]

# Floor applied inside the log to keep pathological likelihoods from
# producing infinities mid-simulation.
_LIKELIHOOD_FLOOR = 1e-12


@dataclass(frozen=True)
class CusumBank:
    """Per-region detection statistics and the shared detection threshold."""

    statistics: tuple[float, ...]
    threshold: float

    def __post_init__(self) -> None:
        if not self.threshold > 0:
            raise ValueError("threshold must be positive")
        if any(s < 0 for s in self.statistics):
            raise ValueError("statistics must be nonnegative")

    @staticmethod
    def initial(region_count: int, threshold: float) -> "CusumBank":
        return CusumBank(statistics=(0.0,) * region_count, threshold=threshold)


def _floored(value: float, label: str) -> float:
    if math.isnan(value) or value < 0.0 or value > 1.0:
        raise DegenerateLikelihoodError(f"{label}={value!r} is not a probability")
    if value < _LIKELIHOOD_FLOOR:
        warnings.warn(f"{label}={value:.3e} floored to {_LIKELIHOOD_FLOOR}", RuntimeWarning)
        return _LIKELIHOOD_FLOOR
    return value


def loglik_ratio(decision: int, f1: float, f0: float) -> float:
    """Log-likelihood ratio of one decision: anomalous vs nominal hypothesis.

    ``f1`` = P(report anomaly | anomalous), ``f0`` = P(report nominal |
    nominal).  A report of an anomaly contributes log(f1 / (1 - f0)); the
    opposite report contributes log((1 - f1) / f0).
    """
    if decision not in (0, 1):
        raise ValueError(f"decision must be 0 or 1, got {decision}")
    if decision == 1:
        num, den = f1, 1.0 - f0
    else:
        num, den = 1.0 - f1, f0
    return math.log(_floored(num, "likelihood numerator") / _floored(den, "likelihood denominator"))


def cusum_update(bank: CusumBank, region: int, increment: float) -> tuple[CusumBank, bool]:
    """Fold one log-likelihood increment into a region's statistic.

    The statistic is clipped at zero from below.  Crossing the threshold
    (>=) reports a detection and resets that region's statistic to zero.
    Callers must only feed decisions from tasks with positive allocation.
    """
    stats = list(bank.statistics)
    value = max(0.0, stats[region] + increment)
    detected = value >= bank.threshold
    stats[region] = 0.0 if detected else value
    return CusumBank(statistics=tuple(stats), threshold=bank.threshold), detected
