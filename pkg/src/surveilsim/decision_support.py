"""Attention allocation: latency penalties, receding-horizon DP, and the
sigmoid-utility knapsack for the no-deadline policy.

The finite-horizon problem maximizes the average per-task reward over N
stages.  Tasks already in the queue contribute their realized performance
curve, weight, and latency rate; later stages use routing-averaged expected
task parameters.  The single state variable is the certainty-equivalent
queue length, which evolves as max(1, n - 1 + lambda * t) per stage, is
floored at 1, capped, and snapped to a uniform grid; the discretized program
is solved exactly by backward induction, with ties broken toward the
smallest duration.

With no deadlines the stationary allocation instead solves a knapsack with
sigmoid utilities under the queue-stability budget 1/lambda, via the
three-step 2-factor scheme: maximize the fractionally-relaxed value over the
marginal-utility level alpha, allocate the integral part of that fractional
solution, then hand any residual budget to the most profitable untouched
item.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .routing import RoutingPolicy

__all__ = [
    "TaskSnapshot",
    "ExpectedTask",
    "HorizonProblem",
    "HorizonSolution",
    "SigmoidItem",
    "latency_rate",
    "make_task_snapshot",
    "expected_task_params",
    "reward_realized",
    "reward_expected",
    "state_grid",
    "queue_transition",
    "solve_horizon",
    "solve_horizon_full",
    "allocate",
    "sigmoid_pseudo_inverse",
    "knapsack_sigmoid",
    "no_deadline_allocation",
]


@dataclass(frozen=True)
class TaskSnapshot:
    """One queued task with its performance curve frozen at solve time."""

    region: int
    performance: Callable  # duration -> accuracy, vectorized over numpy arrays
    weight: float
    deadline: float
    latency_rate: float

    def __post_init__(self) -> None:
        if not self.deadline > 0:
            raise ValueError("deadline must be positive")
        if not self.weight > 0:
            raise ValueError("weight must be positive")
        if self.latency_rate < 0:
            raise ValueError("latency_rate must be nonnegative")


@dataclass(frozen=True)
class ExpectedTask:
    """Routing-averaged stand-in for tasks that have not arrived yet."""

    performance: Callable
    weight: float  # sum_k q_k w_k
    latency_rate: float  # sum_k q_k c_k
    deadline: float  # action bound for expected stages


@dataclass(frozen=True)
class HorizonProblem:
    """Snapshot of everything one receding-horizon solve needs."""

    horizon: int
    queue: tuple[TaskSnapshot, ...]
    routing: RoutingPolicy
    arrival_rate: float
    expected_task: ExpectedTask
    dt: float
    queue_cap: float
    queue_step: float = 0.5

    def __post_init__(self) -> None:
        if self.horizon < 1:
            raise ValueError("horizon must be at least 1")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.queue_step > 0:
            raise ValueError("queue_step must be positive")
        if self.queue_cap < 1:
            raise ValueError("queue_cap must be at least 1")


@dataclass(frozen=True)
class HorizonSolution:
    allocation: float  # optimal duration for the head task
    value: float  # average per-stage objective of the discretized program


def latency_rate(performance: Callable, weight: float, deadline: float, step: float) -> float:
    """Latency penalty rate: weight times the performance slope at the deadline.

    Central difference with the given step.  Warns (and still returns the
    rate) when the slope is still rising at the deadline, i.e. the deadline
    precedes the sigmoid's inflection and the penalty choice loses its
    admissibility rationale.
    """
    h = step
    lo = max(deadline - h, 0.0)
    d_at = (float(performance(deadline + h)) - float(performance(lo))) / (deadline + h - lo)
    before = max(deadline - 2.0 * h, h)
    lo_b = max(before - h, 0.0)
    d_before = (float(performance(before + h)) - float(performance(lo_b))) / (before + h - lo_b)
    if d_at > d_before + 1e-12:
        warnings.warn(
            "deadline precedes the performance inflection; latency rate may be inadmissible",
            RuntimeWarning,
        )
    return weight * d_at


def make_task_snapshot(
    region: int, performance: Callable, weight: float, deadline: float, dt: float
) -> TaskSnapshot:
    """Build a snapshot, deriving the latency rate at step dt/10."""
    rate = latency_rate(performance, weight, deadline, dt / 10.0)
    return TaskSnapshot(
        region=region,
        performance=performance,
        weight=weight,
        deadline=deadline,
        latency_rate=max(rate, 0.0),
    )


def expected_task_params(
    routing: RoutingPolicy, per_region: Sequence[TaskSnapshot]
) -> ExpectedTask:
    """Certainty-equivalent parameters of not-yet-arrived tasks.

    The mixture performance weights each region by q_k * w_k (normalized);
    the expected weight and latency rate are plain q-averages.
    """
    q = routing.q
    if len(per_region) != len(q):
        raise ValueError("need one task snapshot per region")
    weights = np.array([task.weight for task in per_region])
    rates = np.array([task.latency_rate for task in per_region])
    wbar = float(q @ weights)
    cbar = float(q @ rates)
    mix = q * weights / wbar
    performances = [task.performance for task in per_region]

    def fbar(t):
        t = np.asarray(t, dtype=float)
        acc = np.zeros_like(t)
        for coef, perf in zip(mix, performances):
            acc = acc + coef * np.asarray(perf(t), dtype=float)
        return float(acc) if acc.ndim == 0 else acc

    return ExpectedTask(
        performance=fbar,
        weight=wbar,
        latency_rate=cbar,
        deadline=float(max(task.deadline for task in per_region)),
    )


def _stage_parts(problem: HorizonProblem, position: int):
    """(action bound, base reward of t, per-state linear coefficient fn)."""
    n = len(problem.queue)
    cbar = problem.expected_task.latency_rate
    lam = problem.arrival_rate
    if position <= n:
        task = problem.queue[position - 1]
        tail = sum(tk.latency_rate for tk in problem.queue[position - 1 :])

        def base(t):
            t = np.asarray(t, dtype=float)
            r = (
                task.weight * np.asarray(task.performance(t), dtype=float)
                - tail * t
                - 0.5 * cbar * lam * t * t
            )
            return np.where(t == 0.0, 0.0, r)

        def coef(states):
            return cbar * np.maximum(0.0, np.asarray(states, dtype=float) - (n - position + 1))

        return task.deadline, base, coef

    expected = problem.expected_task

    def base(t):
        t = np.asarray(t, dtype=float)
        r = (
            expected.weight * np.asarray(expected.performance(t), dtype=float)
            - 0.5 * cbar * lam * t * t
        )
        return np.where(t == 0.0, 0.0, r)

    def coef(states):
        return cbar * np.asarray(states, dtype=float)

    return expected.deadline, base, coef


def reward_realized(position: int, t, problem: HorizonProblem, predicted_queue: float | None = None):
    """Reward of allocating ``t`` to the queued task at 1-based ``position``.

    The linear latency term charges the realized rates of the tasks at or
    after this position plus the expected rate for every predicted task
    beyond them (``predicted_queue`` is the certainty-equivalent queue length
    at this stage; defaults to the no-arrivals prediction).  The quadratic
    term charges arrivals during processing half the allocation on average.
    Zero allocation earns and costs nothing.
    """
    n = len(problem.queue)
    if not 1 <= position <= n:
        raise ValueError(f"position must lie in [1, {n}], got {position}")
    task = problem.queue[position - 1]
    t = np.asarray(t, dtype=float)
    if np.any(t > task.deadline + 1e-9):
        warnings.warn("allocation beyond the task deadline; clamping", RuntimeWarning)
        t = np.minimum(t, task.deadline)
    if predicted_queue is None:
        predicted_queue = max(1.0, float(n - (position - 1)))
    _, base, coef = _stage_parts(problem, position)
    r = base(t) - coef(predicted_queue) * t
    r = np.where(t == 0.0, 0.0, r)
    return float(r) if r.ndim == 0 else r


def reward_expected(position: int, t, problem: HorizonProblem, predicted_queue: float | None = None):
    """Reward of a predicted future task (1-based ``position`` past the queue)."""
    n = len(problem.queue)
    if not n < position <= problem.horizon:
        raise ValueError(f"position must lie in ({n}, {problem.horizon}], got {position}")
    if predicted_queue is None:
        predicted_queue = 1.0
    t = np.asarray(t, dtype=float)
    _, base, coef = _stage_parts(problem, position)
    r = base(t) - coef(predicted_queue) * t
    r = np.where(t == 0.0, 0.0, r)
    return float(r) if r.ndim == 0 else r


def state_grid(cap: float, step: float) -> np.ndarray:
    """Uniform queue-length grid {1, 1+step, ...} up to the cap."""
    return np.arange(1.0, cap + 0.5 * step, step)


def queue_transition(nbar, t, arrival_rate: float, cap: float | None = None, step: float | None = None):
    """Certainty-equivalent queue evolution max(1, n - 1 + rate * t), snapped
    to the state grid and capped when ``step``/``cap`` are given."""
    raw = np.maximum(1.0, np.asarray(nbar, dtype=float) - 1.0 + arrival_rate * np.asarray(t, dtype=float))
    if step is not None:
        raw = 1.0 + np.rint((raw - 1.0) / step) * step
    if cap is not None:
        raw = np.minimum(raw, cap)
    return raw


def _action_grid(bound: float, dt: float) -> np.ndarray:
    grid = np.arange(0.0, bound + 1e-9 * max(bound, 1.0), dt)
    if grid[-1] < bound - 1e-9 * max(bound, 1.0):
        grid = np.append(grid, bound)
    return grid


def solve_horizon_full(problem: HorizonProblem) -> HorizonSolution:
    """Backward induction over the discretized (queue length, stage) space."""
    n = len(problem.queue)
    if n == 0:
        raise ValueError("horizon problem needs at least one queued task")
    states = state_grid(problem.queue_cap, problem.queue_step)
    grid_max = float(states[-1])
    s_count = len(states)
    lam, step = problem.arrival_rate, problem.queue_step

    value = np.zeros(s_count)
    first_actions: np.ndarray | None = None
    first_best: np.ndarray | None = None
    for position in range(problem.horizon, 0, -1):
        bound, base, coef = _stage_parts(problem, position)
        actions = _action_grid(bound, problem.dt)
        stage_reward = base(actions)[None, :] - coef(states)[:, None] * actions[None, :]
        stage_reward[:, actions == 0.0] = 0.0
        nxt = queue_transition(states[:, None], actions[None, :], lam, cap=grid_max, step=step)
        idx = np.clip(np.rint((nxt - 1.0) / step).astype(int), 0, s_count - 1)
        total = stage_reward + value[idx]
        best = np.argmax(total, axis=1)  # first max: ties go to the smallest duration
        value = total[np.arange(s_count), best]
        first_actions, first_best = actions, best

    start = min(max(float(n), 1.0), grid_max)
    i0 = int(np.clip(np.rint((start - 1.0) / step), 0, s_count - 1))
    return HorizonSolution(
        allocation=float(first_actions[first_best[i0]]),
        value=float(value[i0]) / problem.horizon,
    )


def solve_horizon(problem: HorizonProblem) -> float:
    """Optimal duration for the head task (first action of the DP)."""
    return solve_horizon_full(problem).allocation


def allocate(problem: HorizonProblem, head_belief: float, critical_belief: float) -> float:
    """Receding-horizon allocation with the high-belief override.

    Past the critical belief the reward rate is too shallow for the DP to be
    meaningful, so the head task simply receives its full deadline; the
    resulting decision either lowers the belief or triggers a detection that
    resets it.
    """
    if head_belief > critical_belief:
        return problem.queue[0].deadline
    return solve_horizon(problem)


# --- knapsack with sigmoid utilities -------------------------------------


@dataclass(frozen=True)
class SigmoidItem:
    """Knapsack item: nondecreasing sigmoid utility of the resource given."""

    utility: Callable
    weight: float
    inflection: float
    derivative: Callable | None = None

    def slope(self, t: float) -> float:
        if self.derivative is not None:
            return float(self.derivative(t))
        return _numeric_slope(self.utility, t)


def _numeric_slope(f: Callable, t: float, h: float | None = None) -> float:
    if h is None:
        h = max(1e-6, 1e-6 * abs(t))
    lo = max(0.0, t - h)
    return (float(f(t + h)) - float(f(lo))) / (t + h - lo)


def sigmoid_pseudo_inverse(item: SigmoidItem, slope_value: float) -> float:
    """Largest t with utility slope equal to ``slope_value``; 0 when the slope
    exceeds the peak slope (the defined fallback).

    Bisection on the post-inflection branch where the slope is decreasing.
    """
    if not slope_value > 0:
        raise ValueError("slope must be positive")
    t_inf = max(0.0, item.inflection)
    probe = t_inf if t_inf > 0 else 1e-9
    peak = item.slope(probe)
    if slope_value > peak:
        return 0.0
    if slope_value == peak:
        return t_inf
    lo, hi = probe, max(2.0 * probe, 1.0)
    while item.slope(hi) > slope_value:
        lo, hi = hi, hi * 2.0
        if hi > 1e12:
            return hi
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if item.slope(mid) > slope_value:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-13 * max(1.0, hi):
            break
    return 0.5 * (lo + hi)


def _greedy_order(sizes: np.ndarray, values: np.ndarray) -> list[int]:
    """Fractional-knapsack order: free items first, then by value density."""
    free = [k for k in range(len(sizes)) if sizes[k] == 0.0]
    paid = [k for k in range(len(sizes)) if sizes[k] > 0.0]
    paid.sort(key=lambda k: (-values[k] / sizes[k], k))
    return free + paid


def _alpha_instance(items: Sequence[SigmoidItem], alpha: float):
    sizes = np.array([sigmoid_pseudo_inverse(it, alpha / it.weight) for it in items])
    values = np.array([it.weight * float(it.utility(s)) for it, s in zip(items, sizes)])
    return sizes, values


def _fractional_value(items: Sequence[SigmoidItem], alpha: float, budget: float) -> float:
    sizes, values = _alpha_instance(items, alpha)
    remaining, total = budget, 0.0
    for k in _greedy_order(sizes, values):
        if sizes[k] == 0.0:
            total += values[k]
            continue
        take = min(1.0, remaining / sizes[k])
        total += take * values[k]
        remaining -= take * sizes[k]
        if remaining <= 0.0:
            break
    return total


_ALPHA_GRID_POINTS = 64


def knapsack_sigmoid(items: Sequence[SigmoidItem], budget: float) -> np.ndarray:
    """2-factor allocation for the sigmoid-utility knapsack.

    Step 1 maximizes the fractional-relaxation value over the marginal level
    alpha (log-grid multistart plus local refinement); step 2 gives each
    fully-taken item of that fractional solution its pseudo-inverse resource;
    step 3 grants the leftover budget to the most profitable item that
    received nothing.  The total never exceeds the budget.
    """
    m = len(items)
    alloc = np.zeros(m)
    if budget < 0:
        raise ValueError("budget must be nonnegative")
    if budget == 0.0 or m == 0:
        return alloc

    probes = [max(it.inflection, budget * 1e-6) for it in items]
    alpha_max = max(it.weight * it.slope(p) for it, p in zip(items, probes))
    if not alpha_max > 0:
        return alloc
    grid = np.geomspace(alpha_max * 1e-8, alpha_max, _ALPHA_GRID_POINTS)
    coarse = np.array([_fractional_value(items, a, budget) for a in grid])
    order = np.argsort(coarse)[::-1]
    best_alpha, best_value = float(grid[order[0]]), float(coarse[order[0]])
    for i in order[:3]:
        lo = grid[max(i - 1, 0)]
        hi = grid[min(i + 1, len(grid) - 1)]
        if hi <= lo:
            continue
        res = minimize_scalar(
            lambda a: -_fractional_value(items, a, budget),
            bounds=(lo, hi),
            method="bounded",
            options={"xatol": alpha_max * 1e-10},
        )
        if -res.fun > best_value:
            best_alpha, best_value = float(res.x), float(-res.fun)

    sizes, values = _alpha_instance(items, best_alpha)
    remaining = budget
    for k in _greedy_order(sizes, values):
        if sizes[k] == 0.0:
            continue
        if sizes[k] <= remaining + 1e-15:
            alloc[k] = sizes[k]
            remaining -= sizes[k]
        else:
            break  # fractional boundary item and everything after get nothing
    residual = budget - alloc.sum()
    untouched = [k for k in range(m) if alloc[k] == 0.0]
    if untouched and residual > 0.0:
        k_best = max(untouched, key=lambda k: items[k].weight * float(items[k].utility(residual)))
        alloc[k_best] = residual
    return alloc


def find_inflection(utility: Callable, upper: float) -> float:
    """Steepest-slope location of a sigmoid utility on (0, upper]; 0 for
    concave utilities whose slope is largest at the origin."""
    h = upper * 1e-5
    ts = np.geomspace(upper * 1e-4, upper, 128)
    slopes = np.array([_numeric_slope(utility, float(t), h) for t in ts])
    i = int(np.argmax(slopes))
    if i == 0:
        tiny = upper * 1e-6
        if _numeric_slope(utility, tiny, tiny * 0.5) >= slopes[0]:
            return 0.0
    lo, hi = float(ts[max(i - 1, 0)]), float(ts[min(i + 1, len(ts) - 1)])
    if hi <= lo:
        return float(ts[i])
    res = minimize_scalar(
        lambda t: -_numeric_slope(utility, float(t), h), bounds=(lo, hi), method="bounded"
    )
    return float(res.x) if -res.fun >= slopes[i] else float(ts[i])


def no_deadline_allocation(
    routing: RoutingPolicy, tasks: Sequence[TaskSnapshot], arrival_rate: float
) -> np.ndarray:
    """Stationary per-region durations for the deadline-free policy.

    The stability constraint sum_k q_k t_k <= 1/lambda becomes a sigmoid
    knapsack by measuring each region's resource in q_k * t units: item k has
    utility f_k(s / q_k), weight q_k * w_k, and budget 1/lambda.
    """
    if not arrival_rate > 0:
        raise ValueError("arrival rate must be positive")
    q = routing.q
    if len(tasks) != len(q):
        raise ValueError("need one task snapshot per region")
    budget = 1.0 / arrival_rate
    items, active = [], []
    for k, task in enumerate(tasks):
        if q[k] <= 0.0:
            continue
        qk = float(q[k])
        perf = task.performance

        def utility(s, perf=perf, qk=qk):
            return perf(np.asarray(s, dtype=float) / qk)

        t_inf = find_inflection(perf, 2.0 * budget / qk)
        items.append(
            SigmoidItem(utility=utility, weight=qk * task.weight, inflection=qk * t_inf)
        )
        active.append(k)
    consumed = knapsack_sigmoid(items, budget)
    out = np.zeros(len(tasks))
    for k, s in zip(active, consumed):
        out[k] = s / q[k]
    return out
