"""Per-region operator beliefs: Bayes updates, the reset floor, and retention.

The operator holds one belief per region that the region is anomalous.
Processing a task updates exactly that region's belief from the sampled
binary decision; beliefs never drop below 0.5 (the operator resets a belief
below the neutral value back to it) and are capped just under 1 so their
log-odds stay finite.

With exogenous factors enabled, the *working* belief for a region is the
retention-discounted value of the belief recorded when the region was last
processed; it is recomputed on demand from ``belief_at_last`` and
``last_processed_at`` so unvisited regions decay toward 0.5 without explicit
updates.  With exogenous factors disabled none of the human-factor models is
consulted and the stored belief is used as-is.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from . import human_factors as hf
from .ddm import DdmParams, decision_likelihoods
from .errors import DegenerateLikelihoodError

__all__ = [
    "BELIEF_CAP",
    "RegionBelief",
    "OperatorState",
    "OperatorModels",
    "bayes_update",
    "reset_floor",
    "current_belief",
    "region_likelihoods",
    "process_decision",
    "reset_after_detection",
]

# Upper cap on stored beliefs; keeps log-odds finite.
BELIEF_CAP = 1.0 - 1e-9


@dataclass(frozen=True)
class RegionBelief:
    current: float = 0.5
    last_processed_at: float | None = None
    belief_at_last: float = 0.5


@dataclass(frozen=True)
class OperatorState:
    beliefs: tuple[RegionBelief, ...]
    utilization: float = 0.0

    @staticmethod
    def initial(region_count: int, utilization: float = 0.0) -> "OperatorState":
        return OperatorState(
            beliefs=tuple(RegionBelief() for _ in range(region_count)),
            utilization=utilization,
        )


@dataclass(frozen=True)
class OperatorModels:
    """Parameter bundle driving belief updates and utilization dynamics.

    With ``exogenous`` False only ``ddm`` is consulted; the human-factor
    records may then be None.
    """

    ddm: DdmParams
    exogenous: bool = False
    utilization: hf.UtilizationParams | None = None
    retention: hf.RetentionParams | None = None
    safte: hf.SafteParams | None = None
    sleep: hf.SleepSchedule | None = None

    def __post_init__(self) -> None:
        if self.exogenous:
            missing = [
                name
                for name in ("utilization", "retention", "safte", "sleep")
                if getattr(self, name) is None
            ]
            if missing:
                raise ValueError(f"exogenous mode requires parameter records: {missing}")


def bayes_update(prior: float, p_dec_given_anomalous: float, p_dec_given_nominal: float) -> float:
    """Posterior belief of an anomaly given the likelihoods of the observed
    decision under each hypothesis."""
    if not 0.0 < prior < 1.0:
        raise ValueError("prior must lie in (0, 1)")
    numerator = prior * p_dec_given_anomalous
    denominator = (1.0 - prior) * p_dec_given_nominal + numerator
    if denominator == 0.0:
        raise DegenerateLikelihoodError("decision has zero likelihood under both hypotheses")
    return numerator / denominator


def reset_floor(pi: float) -> float:
    """Belief reset rule: values below the neutral 0.5 snap back to it."""
    return max(0.5, pi)


def current_belief(state: OperatorState, region: int, now: float, models: OperatorModels) -> float:
    """Working belief for a region at time ``now`` (retention-discounted when
    exogenous factors are on)."""
    belief = state.beliefs[region]
    if not models.exogenous or belief.last_processed_at is None:
        return belief.current
    elapsed = max(0.0, now - belief.last_processed_at)
    return hf.retained_belief(belief.belief_at_last, elapsed, models.retention)


def region_likelihoods(
    state: OperatorState,
    region: int,
    allocation: float,
    now: float,
    models: OperatorModels,
) -> tuple[float, float, float]:
    """(P(report anomaly | anomalous), P(report nominal | nominal), prior).

    Everything is frozen at ``now`` (the task's processing start): the prior
    is the working belief at that instant and the likelihoods are the
    accuracies at the given allocation.
    """
    belief = state.beliefs[region]
    if not models.exogenous:
        prior = belief.current
        f1, f0 = decision_likelihoods(allocation, prior, models.ddm)
        return f1, f0, prior

    if belief.last_processed_at is None:
        elapsed, pi_last = 0.0, 0.5
    else:
        elapsed = max(0.0, now - belief.last_processed_at)
        pi_last = belief.belief_at_last
    hours_awake, time_of_day = models.sleep.clock_state(now)
    te = hf.task_effectiveness(hours_awake, time_of_day, models.safte)
    prior = hf.retained_belief(pi_last, elapsed, models.retention)
    f1 = hf.unified_accuracy(
        "anomalous", allocation, state.utilization, te, elapsed, pi_last,
        models.ddm, models.utilization, models.retention,
    )
    f0 = hf.unified_accuracy(
        "nominal", allocation, state.utilization, te, elapsed, pi_last,
        models.ddm, models.utilization, models.retention,
    )
    return float(f1), float(f0), prior


def process_decision(
    state: OperatorState,
    region: int,
    allocation: float,
    decision: int,
    now: float,
    models: OperatorModels,
) -> OperatorState:
    """State after processing one task from ``region``.

    ``now`` is the processing *start* time; the likelihoods and the prior are
    frozen there, and the region's processing timestamp is recorded at the
    completion ``now + allocation``.  A zero allocation produces no decision
    and leaves beliefs untouched.  Only the processed region's belief
    changes; utilization absorbs the busy stretch when exogenous factors are
    on (idle stretches are applied separately by the caller).
    """
    if allocation < 0:
        raise ValueError("allocation must be nonnegative")
    if allocation == 0.0:
        return state
    if decision not in (0, 1):
        raise ValueError(f"decision must be 0 or 1, got {decision}")

    f1, f0, prior = region_likelihoods(state, region, allocation, now, models)
    if decision == 1:
        p_anom, p_nom = f1, 1.0 - f0
    else:
        p_anom, p_nom = 1.0 - f1, f0
    posterior = min(reset_floor(bayes_update(prior, p_anom, p_nom)), BELIEF_CAP)

    beliefs = list(state.beliefs)
    beliefs[region] = RegionBelief(
        current=posterior,
        last_processed_at=now + allocation,
        belief_at_last=posterior,
    )
    utilization = state.utilization
    if models.exogenous:
        utilization = hf.utilization_after_task(
            state.utilization, allocation, 0.0, models.utilization.sensitivity
        )
    return OperatorState(beliefs=tuple(beliefs), utilization=utilization)


def reset_after_detection(state: OperatorState, region: int) -> OperatorState:
    """Detected region's belief returns to the neutral value; others untouched."""
    beliefs = list(state.beliefs)
    beliefs[region] = replace(beliefs[region], current=0.5, belief_at_last=0.5)
    return OperatorState(beliefs=tuple(beliefs), utilization=state.utilization)
