"""Stochastic patrol routing over the surveillance graph.

The default policy picks each destination independently with probability
proportional to the logistic of that region's detection statistic, so likely
anomalies attract visits while every region keeps positive probability.  A
Metropolis-Hastings chain with the same target as its stationary
distribution is available as an alternative for patrols that should move
along graph edges.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .detection import CusumBank

__all__ = [
    "SurveillanceGraph",
    "RoutingPolicy",
    "metropolis_hastings",
    "likelihood_routing",
    "expected_cycle_time",
    "sample_next_region",
]


@dataclass(frozen=True, eq=False)
class SurveillanceGraph:
    """Regions with pairwise travel times, per-region collection times,
    importance weights, task deadlines, and patrol connectivity."""

    travel: np.ndarray  # m x m, symmetric, zero diagonal
    collection: np.ndarray  # m, positive
    weights: np.ndarray  # m, positive
    deadlines: np.ndarray  # m, positive
    adjacency: np.ndarray  # m x m bool, symmetric; self-loops allowed

    def __post_init__(self) -> None:
        travel = np.asarray(self.travel, dtype=float)
        m = travel.shape[0]
        if travel.shape != (m, m):
            raise ValueError(f"travel matrix must be square, got {travel.shape}")
        object.__setattr__(self, "travel", travel)
        for name in ("collection", "weights", "deadlines"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != (m,):
                raise ValueError(f"{name} must have one entry per region, got shape {arr.shape}")
            object.__setattr__(self, name, arr)
        adjacency = np.asarray(self.adjacency, dtype=bool)
        if adjacency.shape != (m, m):
            raise ValueError("adjacency must be m x m")
        object.__setattr__(self, "adjacency", adjacency)
        problems = self.validate()
        if problems:
            raise ValueError("; ".join(problems))

    def validate(self) -> list[str]:
        problems = []
        if not np.allclose(self.travel, self.travel.T, atol=0.0):
            problems.append("travel matrix must be symmetric")
        if np.any(np.diag(self.travel) != 0.0):
            problems.append("travel matrix must have a zero diagonal")
        if np.any(self.travel < 0.0):
            problems.append("travel times must be nonnegative")
        if np.any(self.collection <= 0.0):
            problems.append("collection times must be positive")
        if np.any(self.weights <= 0.0):
            problems.append("region weights must be positive")
        if np.any(self.deadlines <= 0.0):
            problems.append("deadlines must be positive")
        if not np.array_equal(self.adjacency, self.adjacency.T):
            problems.append("adjacency must be symmetric")
        if not self._connected():
            problems.append("surveillance graph must be connected")
        return problems

    def _connected(self) -> bool:
        m = self.region_count
        seen = {0}
        frontier = [0]
        while frontier:
            i = frontier.pop()
            for j in range(m):
                if j != i and self.adjacency[i, j] and j not in seen:
                    seen.add(j)
                    frontier.append(j)
        return len(seen) == m

    @property
    def region_count(self) -> int:
        return self.travel.shape[0]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SurveillanceGraph):
            return NotImplemented
        return (
            np.array_equal(self.travel, other.travel)
            and np.array_equal(self.collection, other.collection)
            and np.array_equal(self.weights, other.weights)
            and np.array_equal(self.deadlines, other.deadlines)
            and np.array_equal(self.adjacency, other.adjacency)
        )

    @staticmethod
    def complete(travel, collection, weights, deadlines) -> "SurveillanceGraph":
        """Fully connected graph (self-loops included) over the travel matrix."""
        m = np.asarray(travel).shape[0]
        return SurveillanceGraph(
            travel=travel,
            collection=collection,
            weights=weights,
            deadlines=deadlines,
            adjacency=np.ones((m, m), dtype=bool),
        )


@dataclass(frozen=True, eq=False)
class RoutingPolicy:
    """Probability distribution over destination regions."""

    q: np.ndarray

    def __post_init__(self) -> None:
        q = np.asarray(self.q, dtype=float)
        if np.any(q < 0.0):
            raise ValueError("routing probabilities must be nonnegative")
        if abs(q.sum() - 1.0) > 1e-12:
            raise ValueError(f"routing probabilities must sum to 1, got {q.sum()!r}")
        object.__setattr__(self, "q", q)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, RoutingPolicy):
            return NotImplemented
        return np.array_equal(self.q, other.q)


def metropolis_hastings(graph: SurveillanceGraph, target) -> np.ndarray:
    """Row-stochastic transition matrix on the graph with the given stationary
    distribution.

    Off-diagonal edge entries are min(1/d_i, q_j / (q_i d_j)) with d_i the
    number of regions reachable from i (self included when the self-loop
    exists); the diagonal absorbs the leftover mass.  Detailed balance
    q_i A_ij = q_j A_ji holds by construction.
    """
    target = np.asarray(target, dtype=float)
    if np.any(target <= 0.0):
        raise ValueError("target distribution must be strictly positive")
    q = target / target.sum()
    m = graph.region_count
    degree = graph.adjacency.sum(axis=1).astype(float)
    a = np.zeros((m, m))
    for i in range(m):
        for j in range(m):
            if i != j and graph.adjacency[i, j]:
                a[i, j] = min(1.0 / degree[i], q[j] / (q[i] * degree[j]))
        a[i, i] = 1.0 - a[i].sum()
    return a


def likelihood_routing(bank: CusumBank) -> RoutingPolicy:
    """Destination probabilities proportional to the logistic of each region's
    detection statistic (uniform when all statistics are zero)."""
    scores = expit(np.asarray(bank.statistics, dtype=float))
    q = scores / scores.sum()
    q = q / q.sum()  # renormalize so the sum is 1 to machine precision
    return RoutingPolicy(q=q)


def expected_cycle_time(policy: RoutingPolicy, graph: SurveillanceGraph) -> float:
    """Expected travel-plus-collection time per task under the policy:
    q^T D q + q^T T.  Its reciprocal is the task arrival rate."""
    q = policy.q
    return float(q @ graph.travel @ q + q @ graph.collection)


def sample_next_region(policy: RoutingPolicy, rng: np.random.Generator) -> int:
    """Inverse-CDF draw of a destination region."""
    cdf = np.cumsum(policy.q)
    return int(np.searchsorted(cdf, rng.random(), side="right").clip(0, len(cdf) - 1))
