"""Drift-diffusion decision accuracy for two-alternative choice tasks.

Evidence accumulates as dx = mu dt + sigma dW from initial evidence x0.
Two decision paradigms are covered:

* interrogation: the decision is forced at a deadline t by thresholding the
  accumulated evidence against ``interrogation_threshold``;
* free response: the decision is made when the evidence first exits
  ``(-free_response_threshold, +free_response_threshold)``.

Sign convention, fixed package-wide: "hypothesis 0" is the alternative with
drift +mu, chosen when the evidence at the deadline exceeds the threshold;
"hypothesis 1" is the mirrored alternative (drift -mu, chosen below the
threshold).  The surveillance layers map *anomalous* onto hypothesis 0, so an
anomaly is reported exactly when the evidence ends above the threshold, and a
belief that a region is anomalous biases x0 upward via ``initial_evidence``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

__all__ = [
    "DdmParams",
    "initial_evidence",
    "accuracy_h0",
    "accuracy_h1",
    "expected_accuracy",
    "decision_likelihoods",
    "free_response_expected_time",
    "bayes_risk_threshold",
]


@dataclass(frozen=True)
class DdmParams:
    """Parameters of one operator's drift-diffusion decision model.

    ``delay_cost`` and ``error_cost`` (cost per unit decision delay and cost
    per error) are only consulted by the Bayes-risk threshold and the
    fatigue-modified drift; they may be left at 0 when those are unused.
    """

    drift_magnitude: float
    diffusion: float
    interrogation_threshold: float = 0.0
    free_response_threshold: float = 0.0
    delay_cost: float = 0.0
    error_cost: float = 0.0

    def __post_init__(self) -> None:
        if not self.drift_magnitude > 0:
            raise ValueError(f"drift_magnitude must be positive, got {self.drift_magnitude}")
        if not self.diffusion > 0:
            raise ValueError(f"diffusion must be positive, got {self.diffusion}")
        if self.free_response_threshold < 0:
            raise ValueError("free_response_threshold must be nonnegative")


def initial_evidence(prior: float, params: DdmParams) -> float:
    """Initial evidence encoding the prior odds of the hypothesis-0 alternative.

    x0 = sigma^2 * log(prior / (1 - prior)) / (2 mu).  Positive when the
    prior favors the positive-drift alternative.
    """
    if not 0.0 < prior < 1.0:
        raise ValueError(f"prior must lie in (0, 1), got {prior}")
    return params.diffusion**2 * math.log(prior / (1.0 - prior)) / (2.0 * params.drift_magnitude)


def _check_duration(t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0.0):
        raise ValueError("interrogation duration must be positive")
    return t


def accuracy_h0(t, x0: float, params: DdmParams):
    """P(correct | hypothesis 0) at interrogation time ``t``.

    Hypothesis 0 drives the evidence upward (+mu) and is chosen when the
    evidence ends above the threshold: 1 - Phi((nu - mu t - x0) / (sigma sqrt t)).
    """
    t = _check_duration(t)
    mu, sigma, nu = params.drift_magnitude, params.diffusion, params.interrogation_threshold
    out = ndtr((mu * t + x0 - nu) / (sigma * np.sqrt(t)))
    return float(out) if out.ndim == 0 else out


def accuracy_h1(t, x0: float, params: DdmParams):
    """P(correct | hypothesis 1): drift -mu, chosen when the evidence ends below
    the threshold: Phi((nu + mu t - x0) / (sigma sqrt t))."""
    t = _check_duration(t)
    mu, sigma, nu = params.drift_magnitude, params.diffusion, params.interrogation_threshold
    out = ndtr((nu + mu * t - x0) / (sigma * np.sqrt(t)))
    return float(out) if out.ndim == 0 else out


def expected_accuracy(t, weight_h0: float, f0, f1):
    """Mixture accuracy: each hypothesis's accuracy weighted by that
    hypothesis's probability.  ``weight_h0`` is P(hypothesis 0)."""
    if not 0.0 <= weight_h0 <= 1.0:
        raise ValueError("weight_h0 must lie in [0, 1]")
    return weight_h0 * f0 + (1.0 - weight_h0) * f1


def decision_likelihoods(t, belief: float, params: DdmParams):
    """(P(report anomaly | anomalous), P(report nominal | nominal)) at time t.

    ``belief`` is the operator's current probability that the region is
    anomalous; anomalous is the positive-drift alternative, so the belief
    biases the accumulator toward the anomalous report.
    """
    x0 = initial_evidence(belief, params)
    return accuracy_h0(t, x0, params), accuracy_h1(t, x0, params)


def free_response_expected_time(x0: float, params: DdmParams) -> float:
    """Expected first-exit time of the accumulator from (-eta, +eta).

    Three-term closed form: threshold term (eta/mu) tanh(mu eta / sigma^2),
    a bias correction, and -x0/mu.
    """
    mu, sigma, eta = params.drift_magnitude, params.diffusion, params.free_response_threshold
    if eta == 0.0 and x0 == 0.0:
        return 0.0
    if abs(x0) >= eta:
        raise ValueError(f"|x0|={abs(x0)} already at or beyond the threshold eta={eta}")
    s2 = sigma * sigma
    term_threshold = (eta / mu) * math.tanh(mu * eta / s2)
    term_bias = (2.0 * eta * (1.0 - math.exp(-2.0 * x0 * mu / s2))) / (
        mu * (math.exp(2.0 * eta * mu / s2) - math.exp(-2.0 * eta * mu / s2))
    )
    return term_threshold + term_bias - x0 / mu


_BISECT_TOL = 1e-12
_BISECT_MAX_ITER = 200


def bayes_risk_threshold(params: DdmParams, mode: str = "limiting") -> float:
    """Free-response threshold minimizing the Bayes risk xi1*T + xi2*P(error).

    ``limiting`` returns mu*xi2/(4*xi1) (low-drift / high-noise regime);
    ``exact`` solves the transcendental stationarity condition
    (xi2/xi1)(2 mu^2/sigma^2) - 4 mu eta/sigma^2 + e^{-2 mu eta/sigma^2}
    - e^{2 mu eta/sigma^2} = 0 by bisection on [0, limiting value].
    """
    mu, sigma = params.drift_magnitude, params.diffusion
    xi1, xi2 = params.delay_cost, params.error_cost
    if not (xi1 > 0 and xi2 > 0):
        raise ValueError("delay_cost and error_cost must be positive")
    limiting = mu * xi2 / (4.0 * xi1)
    if mode == "limiting":
        return limiting
    if mode != "exact":
        raise ValueError(f"mode must be 'exact' or 'limiting', got {mode!r}")

    s2 = sigma * sigma

    def residual(eta: float) -> float:
        a = 2.0 * mu * eta / s2
        return (xi2 / xi1) * (2.0 * mu * mu / s2) - 2.0 * a + math.exp(-a) - math.exp(a)

    lo, hi = 0.0, limiting
    f_lo, f_hi = residual(lo), residual(hi)
    if f_hi == 0.0:
        return hi
    if f_lo <= 0.0 or f_hi > 0.0:
        raise ArithmeticError(
            "Bayes-risk root not bracketed on [0, limiting]: "
            f"residual(0)={f_lo:.3e}, residual({hi:.6g})={f_hi:.3e}"
        )
    for _ in range(_BISECT_MAX_ITER):
        mid = 0.5 * (lo + hi)
        f_mid = residual(mid)
        if f_mid == 0.0:
            return mid
        if f_mid > 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo < _BISECT_TOL:
            break
    return 0.5 * (lo + hi)
