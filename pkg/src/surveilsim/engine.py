"""Seed-deterministic closed-loop surveillance simulation.

Two processes interleave in simulated time.  The vehicle repeatedly samples
a destination from the current routing policy, spends travel plus collection
time, and enqueues a decision task.  The operator serves the queue
first-come-first-served: each task start freezes a receding-horizon problem,
the allocation is applied, the operator's binary decision is sampled from
the accuracy model, and the belief, detection, and routing layers update in
turn.  A detection clears the region's ground-truth anomaly, resets the
operator's belief and that region's statistic, and drops pending tasks down
to one.  Runs are bit-reproducible from the scenario seed: the master seed
splits into independent streams for routing draws and operator decisions.

Ground truth and beliefs never mix: the truth is read only to sample the
decision's correctness; every downstream update consumes the decision alone.
With exogenous factors disabled the run never touches the human-factor
models (pure evidence-accumulation operator).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace

import numpy as np

from . import human_factors as hf
from .ddm import DdmParams
from .decision_support import (
    HorizonProblem,
    allocate,
    expected_task_params,
    make_task_snapshot,
    solve_horizon_full,
)
from .detection import CusumBank, cusum_update, loglik_ratio
from .errors import ScenarioError
from .operator_state import (
    OperatorModels,
    OperatorState,
    current_belief,
    process_decision,
    region_likelihoods,
    reset_after_detection,
)
from .routing import (
    RoutingPolicy,
    SurveillanceGraph,
    expected_cycle_time,
    likelihood_routing,
    metropolis_hastings,
)
from .trace import Trace, TraceRecord

__all__ = [
    "AlgorithmParams",
    "Scenario",
    "Task",
    "run",
    "simulate_operator_decision",
    "drop_pending",
    "validate_scenario",
]

log = logging.getLogger(__name__)

ROUTING_MODES = ("likelihood", "metropolis")


@dataclass(frozen=True)
class AlgorithmParams:
    """Decision-support and detection knobs."""

    horizon: int = 5
    dt: float = 0.5
    queue_cap: float = 50.0
    queue_step: float = 0.5
    cusum_threshold: float = 5.0
    critical_belief: float = 0.8
    routing_mode: str = "likelihood"


@dataclass(frozen=True)
class Task:
    region: int
    enqueued_at: float


@dataclass(frozen=True)
class Scenario:
    """Full simulation input: graph, anomaly schedule, operator, algorithm."""

    graph: SurveillanceGraph
    anomalies: tuple[tuple[int, float], ...]  # (region, onset time)
    ddm: DdmParams
    algorithm: AlgorithmParams
    duration: float
    seed: int
    exogenous_factors: bool = False
    utilization: hf.UtilizationParams | None = None
    retention: hf.RetentionParams | None = None
    safte: hf.SafteParams | None = None
    sleep: hf.SleepSchedule | None = None
    initial_utilization: float = 0.5
    start_region: int = 0

    def models(self) -> OperatorModels:
        return OperatorModels(
            ddm=self.ddm,
            exogenous=self.exogenous_factors,
            utilization=self.utilization,
            retention=self.retention,
            safte=self.safte,
            sleep=self.sleep,
        )


def validate_scenario(scenario: Scenario) -> list[str]:
    """All structural problems found (empty means valid)."""
    problems: list[str] = []
    m = scenario.graph.region_count
    problems.extend(scenario.graph.validate())
    if scenario.duration <= 0:
        problems.append("duration must be positive")
    for region, onset in scenario.anomalies:
        if not 0 <= region < m:
            problems.append(f"anomaly region {region + 1} outside 1..{m}")
        if not 0.0 <= onset < scenario.duration:
            problems.append(f"anomaly onset {onset} outside [0, duration)")
    alg = scenario.algorithm
    if alg.horizon < 1:
        problems.append("horizon must be at least 1")
    if alg.dt <= 0:
        problems.append("dt must be positive")
    if alg.queue_cap < 1:
        problems.append("queue_cap must be at least 1")
    if alg.cusum_threshold <= 0:
        problems.append("cusum_threshold must be positive")
    if not 0.0 < alg.critical_belief <= 1.0:
        problems.append("critical_belief must lie in (0, 1]")
    if alg.routing_mode not in ROUTING_MODES:
        problems.append(
            f"routing mode {alg.routing_mode!r} unsupported; choose one of {ROUTING_MODES}"
        )
    if not 0 <= scenario.start_region < m:
        problems.append(f"start_region {scenario.start_region + 1} outside 1..{m}")
    if scenario.exogenous_factors:
        for name in ("utilization", "retention", "safte", "sleep"):
            if getattr(scenario, name) is None:
                problems.append(f"exogenous mode requires the {name} parameter record")
        if not 0.0 <= scenario.initial_utilization <= 1.0:
            problems.append("initial_utilization must lie in [0, 1]")
        if scenario.utilization is not None:
            poly = scenario.utilization.motor_poly
            from numpy.polynomial import polynomial as npoly

            ends = [float(npoly.polyval(u, poly)) for u in (0.0, 1.0)]
            if min(ends) < 0:
                problems.append("motor polynomial must be nonnegative at u=0 and u=1")
        if not (scenario.ddm.delay_cost > 0 and scenario.ddm.error_cost > 0):
            problems.append("exogenous mode requires positive delay_cost and error_cost")
    return problems


def simulate_operator_decision(
    rng: np.random.Generator, truth_anomalous: bool, accuracy: float
) -> int:
    """Binary decision: the label matching the truth with the given probability."""
    if not 0.0 < accuracy < 1.0:
        raise ValueError("accuracy must lie in (0, 1)")
    correct = rng.random() < accuracy
    label = 1 if truth_anomalous else 0
    return label if correct else 1 - label


def drop_pending(queue):
    """Keep only the oldest pending task (empty stays empty)."""
    return list(queue[:1])


@dataclass
class _Active:
    task: Task
    started_at: float
    allocation: float
    decide_at: float
    f1: float | None  # P(report anomaly | anomalous), frozen at start
    f0: float | None  # P(report nominal | nominal), frozen at start


class _Simulation:
    def __init__(self, scenario: Scenario):
        problems = validate_scenario(scenario)
        if problems:
            raise ScenarioError(problems)
        self.scenario = scenario
        self.graph = scenario.graph
        self.m = self.graph.region_count
        self.alg = scenario.algorithm
        self.models = scenario.models()
        self.exo = scenario.exogenous_factors

        seq = np.random.SeedSequence(scenario.seed)
        routing_seed, decision_seed = seq.spawn(2)
        self.rng_routing = np.random.default_rng(routing_seed)
        self.rng_decisions = np.random.default_rng(decision_seed)

        self.state = OperatorState.initial(
            self.m, scenario.initial_utilization if self.exo else 0.0
        )
        self.bank = CusumBank.initial(self.m, self.alg.cusum_threshold)
        self.policy = likelihood_routing(self.bank)
        self.mh = (
            metropolis_hastings(self.graph, self.policy.q)
            if self.alg.routing_mode == "metropolis"
            else None
        )

        self.pending_onsets: list[list[float]] = [[] for _ in range(self.m)]
        for region, onset in scenario.anomalies:
            self.pending_onsets[region].append(onset)
        for onsets in self.pending_onsets:
            onsets.sort()
        self.anomalous = [False] * self.m

        self.records: list[TraceRecord] = []
        self.waiting: list[Task] = []
        self.current: _Active | None = None
        self.vehicle_loc = scenario.start_region
        self.op_free_at = 0.0

    # --- clock helpers ---

    def _advance_truth(self, now: float) -> None:
        for k in range(self.m):
            onsets = self.pending_onsets[k]
            while onsets and onsets[0] <= now:
                onsets.pop(0)
                self.anomalous[k] = True

    def _te_at(self, now: float) -> float:
        if not self.exo:
            return 1.0
        hours_awake, time_of_day = self.scenario.sleep.clock_state(now)
        return hf.task_effectiveness(hours_awake, time_of_day, self.scenario.safte)

    # --- trace ---

    def _emit(self, now, event, region=None, allocation=None, decision=None) -> None:
        self.records.append(
            TraceRecord(
                time=now,
                event=event,
                region=region,
                allocation=allocation,
                decision=decision,
                queue_len=len(self.waiting) + (1 if self.current is not None else 0),
                utilization=self.state.utilization,
                task_effectiveness=self._te_at(now),
                cusum=self.bank.statistics,
                q=tuple(float(v) for v in self.policy.q),
                beliefs=tuple(b.current for b in self.state.beliefs),
                retained=tuple(
                    current_belief(self.state, k, now, self.models) for k in range(self.m)
                ),
            )
        )

    # --- vehicle ---

    def _sample_leg(self, now: float) -> tuple[int, float]:
        if self.mh is not None:
            cdf = np.cumsum(self.mh[self.vehicle_loc])
            k = int(np.searchsorted(cdf, self.rng_routing.random(), side="right").clip(0, self.m - 1))
        else:
            from .routing import sample_next_region

            k = sample_next_region(self.policy, self.rng_routing)
        arrival = now + float(self.graph.travel[self.vehicle_loc, k]) + float(self.graph.collection[k])
        return k, arrival

    def _handle_arrival(self) -> None:
        region, at = self.inflight
        self._advance_truth(at)
        self.waiting.append(Task(region=region, enqueued_at=at))
        self.vehicle_loc = region
        self._emit(at, "enqueue", region=region)
        self.inflight = self._sample_leg(at)

    # --- operator ---

    def _region_performance(self, region: int, now: float, te: float):
        """Frozen mixture accuracy of a task from ``region``, vectorized in t."""
        models = self.models
        belief = current_belief(self.state, region, now, models)
        if not self.exo:
            from .ddm import initial_evidence
            from scipy.special import ndtr

            ddm = models.ddm
            x0 = initial_evidence(belief, ddm)
            mu, sigma, nu = ddm.drift_magnitude, ddm.diffusion, ddm.interrogation_threshold

            def perf(t, pi=belief, x0=x0):
                t = np.asarray(t, dtype=float)
                out = np.empty_like(t)
                zero = t <= 0.0
                out[zero] = 0.5 if x0 == nu else (pi if x0 > nu else 1.0 - pi)
                live = ~zero
                if np.any(live):
                    spread = sigma * np.sqrt(t[live])
                    f1 = ndtr((mu * t[live] + x0 - nu) / spread)
                    f0 = ndtr((nu + mu * t[live] - x0) / spread)
                    out[live] = pi * f1 + (1.0 - pi) * f0
                return float(out) if out.ndim == 0 else out

            return perf, belief

        record = self.state.beliefs[region]
        if record.last_processed_at is None:
            elapsed, pi_last = 0.0, 0.5
        else:
            elapsed = max(0.0, now - record.last_processed_at)
            pi_last = record.belief_at_last
        u = self.state.utilization

        def perf(t, pi=belief, elapsed=elapsed, pi_last=pi_last, u=u, te=te):
            f1 = hf.unified_accuracy(
                "anomalous", t, u, te, elapsed, pi_last,
                models.ddm, models.utilization, models.retention,
            )
            f0 = hf.unified_accuracy(
                "nominal", t, u, te, elapsed, pi_last,
                models.ddm, models.utilization, models.retention,
            )
            return pi * np.asarray(f1, dtype=float) + (1.0 - pi) * np.asarray(f0, dtype=float)

        return perf, belief

    def _start_task(self, now: float) -> None:
        task = self.waiting.pop(0)
        if self.exo:
            gap = now - self.op_free_at
            if gap > 0:
                self.state = replace(
                    self.state,
                    utilization=hf.utilization_after_task(
                        self.state.utilization, 0.0, gap, self.scenario.utilization.sensitivity
                    ),
                )
        te = self._te_at(now)
        snapshots = []
        head_belief = None
        for k in range(self.m):
            perf, belief = self._region_performance(k, now, te)
            snapshots.append(
                make_task_snapshot(
                    region=k,
                    performance=perf,
                    weight=float(self.graph.weights[k]),
                    deadline=float(self.graph.deadlines[k]),
                    dt=self.alg.dt,
                )
            )
            if k == task.region:
                head_belief = belief
        queue_regions = [task.region] + [t.region for t in self.waiting]
        problem = HorizonProblem(
            horizon=self.alg.horizon,
            queue=tuple(snapshots[r] for r in queue_regions),
            routing=self.policy,
            arrival_rate=1.0 / expected_cycle_time(self.policy, self.graph),
            expected_task=expected_task_params(self.policy, snapshots),
            dt=self.alg.dt,
            queue_cap=self.alg.queue_cap,
            queue_step=self.alg.queue_step,
        )
        duration = allocate(problem, head_belief, self.alg.critical_belief)
        if log.isEnabledFor(logging.DEBUG) and head_belief <= self.alg.critical_belief:
            solution = solve_horizon_full(problem)
            log.debug(
                "solve t=%.2f region=%d queue=%d alloc=%.2f value=%.5f",
                now, task.region, len(queue_regions), solution.allocation, solution.value,
            )
        if duration > 0:
            f1, f0, _ = region_likelihoods(self.state, task.region, duration, now, self.models)
        else:
            f1 = f0 = None
        self.current = _Active(
            task=task,
            started_at=now,
            allocation=duration,
            decide_at=now + duration,
            f1=f1,
            f0=f0,
        )
        self._emit(now, "allocate", region=task.region, allocation=duration)

    def _handle_decide(self) -> None:
        cur = self.current
        now, region = cur.decide_at, cur.task.region
        self._advance_truth(now)
        decision = None
        detected = False
        if cur.allocation > 0:
            truth = self.anomalous[region]
            accuracy = cur.f1 if truth else cur.f0
            decision = simulate_operator_decision(self.rng_decisions, truth, accuracy)
            self.state = process_decision(
                self.state, region, cur.allocation, decision, cur.started_at, self.models
            )
            increment = loglik_ratio(decision, cur.f1, cur.f0)
            self.bank, detected = cusum_update(self.bank, region, increment)
        self.current = None
        self._emit(now, "decide", region=region, allocation=cur.allocation, decision=decision)
        if detected:
            self.anomalous[region] = False
            self.state = reset_after_detection(self.state, region)
            self.waiting = drop_pending(self.waiting)
            self._emit(now, "detect", region=region)
        self.policy = likelihood_routing(self.bank)
        if self.mh is not None:
            self.mh = metropolis_hastings(self.graph, self.policy.q)
        self._emit(now, "route")
        free_at = now
        if self.exo:
            delta = hf.rest_time(self.state.utilization, self.scenario.utilization)
            if delta > 0:
                self.state = replace(
                    self.state,
                    utilization=hf.utilization_after_task(
                        self.state.utilization, 0.0, delta, self.scenario.utilization.sensitivity
                    ),
                )
                free_at = now + delta
                self._emit(now, "rest", allocation=delta)
        self.op_free_at = free_at

    # --- main loop ---

    def run(self) -> Trace:
        duration = self.scenario.duration
        self._emit(0.0, "route")
        self.inflight = self._sample_leg(0.0)
        while True:
            t_arr = self.inflight[1]
            t_dec = self.current.decide_at if self.current is not None else math.inf
            if self.current is None and self.waiting:
                t_start = max(self.op_free_at, self.waiting[0].enqueued_at)
            else:
                t_start = math.inf
            upcoming = min(t_arr, t_dec, t_start)
            if upcoming > duration:
                break
            if t_arr <= upcoming:
                self._handle_arrival()
            elif t_start <= t_dec:
                self._start_task(t_start)
            else:
                self._handle_decide()
        return Trace(records=self.records, region_count=self.m)


def run(scenario: Scenario) -> Trace:
    """Simulate the scenario; reproducible bit-for-bit from its seed."""
    return _Simulation(scenario).run()
