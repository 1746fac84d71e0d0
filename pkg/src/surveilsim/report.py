"""SVG panel rendering from a trace CSV.

One SVG per panel, mirroring the simulation's figure layout: duration
allocations, queue length, detection statistics, region-selection
probabilities, and (when the trace carries them) utilization, rest times,
and retained beliefs.  Motor time needs the scenario's polynomial, so that
panel is rendered only when a scenario file is supplied.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .trace import Trace

__all__ = ["render_report"]

_REGION_STYLES = ("solid", "dashed", "dotted", "dashdot")


def _style(k: int) -> dict:
    return {"linestyle": _REGION_STYLES[k % len(_REGION_STYLES)]}


def render_report(trace: Trace, outdir, scenario=None) -> list[Path]:
    """Write one SVG per panel into ``outdir``; returns the paths written."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    m = trace.region_count
    written: list[Path] = []

    def save(fig, name: str) -> None:
        path = outdir / f"panel_{name}.svg"
        fig.tight_layout()
        fig.savefig(path, format="svg")
        plt.close(fig)
        written.append(path)

    decides = trace.events("decide")
    fig, ax = plt.subplots(figsize=(7, 2.6))
    ax.vlines(
        [r.time for r in decides],
        0,
        [r.allocation or 0.0 for r in decides],
        lw=1.2,
    )
    ax.set_xlabel("time")
    ax.set_ylabel("duration allocation")
    save(fig, "allocation")

    fig, ax = plt.subplots(figsize=(7, 2.6))
    times = [r.time for r in trace.records]
    ax.step(times, [r.queue_len for r in trace.records], where="post")
    ax.set_xlabel("time")
    ax.set_ylabel("queue length")
    save(fig, "queue")

    for name, attr, ylabel in (
        ("statistics", "cusum", "detection statistic"),
        ("selection", "q", "selection probability"),
        ("retained_belief", "retained", "retained belief"),
    ):
        fig, ax = plt.subplots(figsize=(7, 2.6))
        for k in range(m):
            ax.step(
                times,
                [getattr(r, attr)[k] for r in trace.records],
                where="post",
                label=f"region {k + 1}",
                **_style(k),
            )
        ax.set_xlabel("time")
        ax.set_ylabel(ylabel)
        ax.legend(fontsize=7, ncol=min(m, 4))
        save(fig, name)

    fig, ax = plt.subplots(figsize=(7, 2.6))
    ax.step(times, [r.utilization for r in trace.records], where="post")
    ax.set_xlabel("time")
    ax.set_ylabel("utilization")
    save(fig, "utilization")

    rests = trace.events("rest")
    fig, ax = plt.subplots(figsize=(7, 2.6))
    ax.vlines([r.time for r in rests], 0, [r.allocation or 0.0 for r in rests], lw=1.2)
    ax.set_xlabel("time")
    ax.set_ylabel("rest time")
    save(fig, "rest")

    if scenario is not None and scenario.exogenous_factors:
        from numpy.polynomial import polynomial as npoly

        poly = scenario.utilization.motor_poly
        fig, ax = plt.subplots(figsize=(7, 2.6))
        motor = [
            max(0.0, float(npoly.polyval(r.utilization, poly))) / r.task_effectiveness
            for r in trace.records
        ]
        ax.step(times, motor, where="post")
        ax.set_xlabel("time")
        ax.set_ylabel("motor time")
        save(fig, "motor")

    detects = trace.events("detect")
    if detects:
        fig, ax = plt.subplots(figsize=(7, 1.8))
        ax.scatter([r.time for r in detects], [r.region + 1 for r in detects], marker="v")
        ax.set_yticks(np.arange(1, m + 1))
        ax.set_xlabel("time")
        ax.set_ylabel("detected region")
        save(fig, "detections")

    return written
