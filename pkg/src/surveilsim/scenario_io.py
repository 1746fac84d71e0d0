"""Scenario file loading, validation, and writing.

Scenario files are INI-style with six sections:

    [graph]      region_count, travel (matrix rows on continuation lines),
                 collection, adjacency ("complete" or 0/1 matrix rows)
    [regions]    weights, deadlines
    [operator]   drift, diffusion, interrogation_threshold, delay_cost,
                 error_cost, and (for exogenous runs) sensitivity,
                 optimal_utilization, utilization_threshold, motor_poly,
                 retention_*, SAFTE constants, sleep schedule,
                 initial_utilization
    [algorithm]  horizon, dt, queue_cap, queue_step, cusum_threshold,
                 critical_belief, routing
    [run]        duration, seed, exogenous_factors, start_region
    [anomalies]  schedule = "region:onset region:onset ..." (1-based regions)

Unknown keys are rejected.  Loading collects *all* validation problems and
raises a single ScenarioError carrying them.  ``motor_poly`` is a polynomial
expression in u (e.g. "54 - 155u + 132u^2 - 9"); repeated degrees fold by
summation.
"""

from __future__ import annotations

import logging
import re
import warnings
from configparser import ConfigParser
from importlib import resources

import numpy as np

from .ddm import DdmParams
from .engine import ROUTING_MODES, AlgorithmParams, Scenario, validate_scenario
from .errors import ScenarioError
from .human_factors import RetentionParams, SafteParams, SleepSchedule, UtilizationParams
from .routing import SurveillanceGraph

__all__ = [
    "load_scenario",
    "loads_scenario",
    "write_scenario",
    "dumps_scenario",
    "bundled_scenario_path",
    "parse_polynomial",
    "format_polynomial",
]

log = logging.getLogger(__name__)

_SECTION_KEYS = {
    "graph": {"region_count", "travel", "collection", "adjacency"},
    "regions": {"weights", "deadlines"},
    "operator": {
        "drift",
        "diffusion",
        "interrogation_threshold",
        "delay_cost",
        "error_cost",
        "sensitivity",
        "optimal_utilization",
        "utilization_threshold",
        "motor_poly",
        "retention_weights",
        "retention_timescales",
        "retention_floor",
        "reservoir_capacity",
        "drain_rate",
        "circadian_amp1",
        "circadian_amp2",
        "second_harmonic",
        "peak_hour",
        "relative_peak_hour",
        "wake_hour",
        "hours_slept",
        "initial_utilization",
    },
    "algorithm": {
        "horizon",
        "dt",
        "queue_cap",
        "queue_step",
        "cusum_threshold",
        "critical_belief",
        "routing",
    },
    "run": {"duration", "seed", "exogenous_factors", "start_region"},
    "anomalies": {"schedule"},
}

_POLY_TERM = re.compile(
    r"\s*([+-]?)\s*(\d+(?:\.\d*)?|\.\d+)\s*(u(?:\s*\^\s*(\d+))?)?\s*"
)


def parse_polynomial(text: str) -> tuple[float, ...]:
    """Ascending-degree coefficients of a polynomial expression in u."""
    coeffs: dict[int, float] = {}
    pos = 0
    while pos < len(text):
        match = _POLY_TERM.match(text, pos)
        if not match or match.end() == pos:
            raise ValueError(f"cannot parse polynomial near {text[pos:]!r}")
        sign = -1.0 if match.group(1) == "-" else 1.0
        value = sign * float(match.group(2))
        degree = 0
        if match.group(3):
            degree = int(match.group(4)) if match.group(4) else 1
        coeffs[degree] = coeffs.get(degree, 0.0) + value
        pos = match.end()
    top = max(coeffs) if coeffs else 0
    return tuple(coeffs.get(d, 0.0) for d in range(top + 1))


def format_polynomial(coeffs) -> str:
    parts = []
    for degree, value in enumerate(coeffs):
        if degree > 0 and value == 0.0:
            continue
        mag = format(abs(value), ".12g")
        var = "" if degree == 0 else ("u" if degree == 1 else f"u^{degree}")
        if not parts:
            parts.append(f"{'-' if value < 0 else ''}{mag}{var}")
        else:
            parts.append(f"{'-' if value < 0 else '+'} {mag}{var}")
    return " ".join(parts) if parts else "0"


class _Collector:
    """Pulls typed values out of the parsed file, logging every problem."""

    def __init__(self, parser: ConfigParser):
        self.parser = parser
        self.problems: list[str] = []

    def fail(self, message: str) -> None:
        self.problems.append(message)

    def raw(self, section: str, key: str, default=None, required=True):
        if self.parser.has_option(section, key):
            return self.parser.get(section, key)
        if required and default is None:
            self.fail(f"[{section}] missing required key '{key}'")
        return default

    def floatval(self, section, key, default=None, required=True):
        raw = self.raw(section, key, default=None, required=required and default is None)
        if raw is None:
            return default
        try:
            return float(raw)
        except ValueError:
            self.fail(f"[{section}] {key}: not a number: {raw!r}")
            return default

    def intval(self, section, key, default=None, required=True):
        raw = self.raw(section, key, default=None, required=required and default is None)
        if raw is None:
            return default
        try:
            return int(raw)
        except ValueError:
            self.fail(f"[{section}] {key}: not an integer: {raw!r}")
            return default

    def boolval(self, section, key, default=False):
        raw = self.raw(section, key, required=False)
        if raw is None:
            return default
        lowered = raw.strip().lower()
        if lowered in ("on", "true", "yes", "1"):
            return True
        if lowered in ("off", "false", "no", "0"):
            return False
        self.fail(f"[{section}] {key}: expected on/off, got {raw!r}")
        return default

    def vector(self, section, key, length, required=True):
        raw = self.raw(section, key, required=required)
        if raw is None:
            return None
        try:
            values = [float(v) for v in raw.split()]
        except ValueError:
            self.fail(f"[{section}] {key}: not a numeric list: {raw!r}")
            return None
        if len(values) == 1 and length > 1:
            values = values * length
        if len(values) != length:
            self.fail(f"[{section}] {key}: expected {length} values, got {len(values)}")
            return None
        return np.array(values)

    def matrix(self, section, key, size, required=True):
        raw = self.raw(section, key, required=required)
        if raw is None:
            return None
        rows = [line for line in raw.splitlines() if line.strip()]
        if len(rows) != size:
            self.fail(f"[{section}] {key}: expected {size} rows, got {len(rows)}")
            return None
        out = []
        for line in rows:
            try:
                row = [float(v) for v in line.split()]
            except ValueError:
                self.fail(f"[{section}] {key}: bad row {line!r}")
                return None
            if len(row) != size:
                self.fail(
                    f"[{section}] {key}: row has {len(row)} entries, expected {size}"
                )
                return None
            out.append(row)
        return np.array(out)


def loads_scenario(text: str) -> Scenario:
    parser = ConfigParser(inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    parser.read_string(text)

    col = _Collector(parser)
    for section in parser.sections():
        if section not in _SECTION_KEYS:
            col.fail(f"unknown section [{section}]")
            continue
        unknown = set(parser.options(section)) - _SECTION_KEYS[section]
        if unknown:
            col.fail(f"[{section}] unknown keys: {sorted(unknown)}")
    for section in ("graph", "regions", "operator", "algorithm", "run", "anomalies"):
        if section not in parser.sections():
            col.fail(f"missing section [{section}]")
    if col.problems:
        raise ScenarioError(col.problems)

    m = col.intval("graph", "region_count")
    if m is None or m < 1:
        col.fail("[graph] region_count must be a positive integer")
        raise ScenarioError(col.problems)

    travel = col.matrix("graph", "travel", m)
    collection = col.vector("graph", "collection", m)
    adjacency_raw = col.raw("graph", "adjacency", default="complete", required=False)
    if adjacency_raw.strip().lower() == "complete":
        adjacency = np.ones((m, m), dtype=bool)
    else:
        adj = col.matrix("graph", "adjacency", m, required=True)
        adjacency = adj.astype(bool) if adj is not None else None
    weights = col.vector("regions", "weights", m)
    deadlines = col.vector("regions", "deadlines", m)

    graph = None
    if all(v is not None for v in (travel, collection, weights, deadlines, adjacency)):
        try:
            graph = SurveillanceGraph(
                travel=travel,
                collection=collection,
                weights=weights,
                deadlines=deadlines,
                adjacency=adjacency,
            )
        except ValueError as exc:
            col.problems.extend(str(exc).split("; "))

    drift = col.floatval("operator", "drift")
    diffusion = col.floatval("operator", "diffusion")
    ddm = None
    if drift is not None and diffusion is not None:
        try:
            ddm = DdmParams(
                drift_magnitude=drift,
                diffusion=diffusion,
                interrogation_threshold=col.floatval(
                    "operator", "interrogation_threshold", default=0.0
                ),
                delay_cost=col.floatval("operator", "delay_cost", default=0.0),
                error_cost=col.floatval("operator", "error_cost", default=0.0),
            )
        except ValueError as exc:
            col.fail(f"[operator] {exc}")

    routing_mode = col.raw("algorithm", "routing", default="likelihood", required=False)
    if routing_mode == "fmmc":
        col.fail(
            "[algorithm] routing = fmmc needs a semidefinite-program solver and is "
            "not supported; the metropolis chain achieves the same stationary "
            "distribution — use routing = likelihood or routing = metropolis"
        )
    elif routing_mode not in ROUTING_MODES:
        col.fail(f"[algorithm] routing must be one of {ROUTING_MODES}, got {routing_mode!r}")

    algorithm = AlgorithmParams(
        horizon=col.intval("algorithm", "horizon", default=5),
        dt=col.floatval("algorithm", "dt", default=0.5),
        queue_cap=col.floatval("algorithm", "queue_cap", default=50.0),
        queue_step=col.floatval("algorithm", "queue_step", default=0.5),
        cusum_threshold=col.floatval("algorithm", "cusum_threshold", default=5.0),
        critical_belief=col.floatval("algorithm", "critical_belief", default=0.8),
        routing_mode=routing_mode if routing_mode in ROUTING_MODES else "likelihood",
    )

    duration = col.floatval("run", "duration")
    seed = col.intval("run", "seed", default=0)
    exogenous = col.boolval("run", "exogenous_factors", default=False)
    start_region = col.intval("run", "start_region", default=1) - 1

    anomalies: list[tuple[int, float]] = []
    schedule = col.raw("anomalies", "schedule", default="", required=False) or ""
    for token in schedule.split():
        try:
            region_txt, onset_txt = token.split(":")
            anomalies.append((int(region_txt) - 1, float(onset_txt)))
        except ValueError:
            col.fail(f"[anomalies] bad schedule entry {token!r} (expected region:onset)")

    utilization = retention = safte = sleep = None
    initial_utilization = col.floatval("operator", "initial_utilization", default=0.5, required=False)
    if exogenous:
        poly_raw = col.raw("operator", "motor_poly")
        motor_poly: tuple[float, ...] = (0.0,)
        if poly_raw is not None:
            try:
                motor_poly = parse_polynomial(poly_raw)
            except ValueError as exc:
                col.fail(f"[operator] motor_poly: {exc}")
        try:
            utilization = UtilizationParams(
                sensitivity=col.floatval("operator", "sensitivity", default=100.0),
                optimal=col.floatval("operator", "optimal_utilization", default=0.7),
                threshold=col.floatval("operator", "utilization_threshold", default=0.85),
                motor_poly=motor_poly,
            )
        except ValueError as exc:
            col.fail(f"[operator] {exc}")
        rw = col.vector("operator", "retention_weights", 2)
        rt = col.vector("operator", "retention_timescales", 2)
        if rw is not None and rt is not None:
            try:
                retention = RetentionParams(
                    w1=float(rw[0]),
                    w2=float(rw[1]),
                    tau1=float(rt[0]),
                    tau2=float(rt[1]),
                    floor=col.floatval("operator", "retention_floor", default=0.1),
                )
            except ValueError as exc:
                col.fail(f"[operator] {exc}")
        try:
            safte = SafteParams(
                reservoir_capacity=col.floatval("operator", "reservoir_capacity", default=2880.0),
                drain_rate=col.floatval("operator", "drain_rate", default=0.5),
                amp1=col.floatval("operator", "circadian_amp1", default=7.0),
                amp2=col.floatval("operator", "circadian_amp2", default=5.0),
                second_harmonic=col.floatval("operator", "second_harmonic", default=0.5),
                peak_hour=col.floatval("operator", "peak_hour", default=18.0),
                relative_peak=col.floatval("operator", "relative_peak_hour", default=3.0),
            )
            sleep = SleepSchedule(
                wake_hour=col.floatval("operator", "wake_hour", default=6.0),
                hours_slept=col.floatval("operator", "hours_slept", default=6.0),
            )
        except ValueError as exc:
            col.fail(f"[operator] {exc}")

    if col.problems or graph is None or ddm is None or duration is None:
        if not col.problems:
            col.fail("scenario incomplete")
        raise ScenarioError(col.problems)

    scenario = Scenario(
        graph=graph,
        anomalies=tuple(anomalies),
        ddm=ddm,
        algorithm=algorithm,
        duration=duration,
        seed=seed,
        exogenous_factors=exogenous,
        utilization=utilization,
        retention=retention,
        safte=safte,
        sleep=sleep,
        initial_utilization=initial_utilization,
        start_region=start_region,
    )
    problems = validate_scenario(scenario)
    if problems:
        raise ScenarioError(problems)
    _admissibility_check(scenario)
    return scenario


def _admissibility_check(scenario: Scenario) -> None:
    """Warn when the derived latency penalty would starve a lone task.

    The penalty rates must be small enough that a single queued task still
    earns a positive-duration allocation; the deadline controls this.
    """
    from .ddm import decision_likelihoods

    ddm = scenario.ddm
    for k in range(scenario.graph.region_count):
        deadline = float(scenario.graph.deadlines[k])
        w = float(scenario.graph.weights[k])
        grid = np.linspace(1e-6, deadline, 160)
        f1, f0 = decision_likelihoods(grid, 0.5, ddm)
        perf = 0.5 * (np.asarray(f1) + np.asarray(f0))
        slope_end = (perf[-1] - perf[-2]) / (grid[-1] - grid[-2])
        c = w * slope_end
        lam_ref = 1.0 / float(
            np.mean(scenario.graph.travel) + np.mean(scenario.graph.collection)
        )
        gains = w * perf - c * grid - 0.5 * c * lam_ref * grid**2
        if int(np.argmax(gains)) == 0:
            warnings.warn(
                f"region {k + 1}: latency penalty admissibility is marginal; "
                "a lone task may receive a zero allocation (deadline too small?)",
                RuntimeWarning,
            )


def load_scenario(path) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        return loads_scenario(fh.read())


def _f(value: float) -> str:
    return repr(float(value))


def dumps_scenario(scenario: Scenario) -> str:
    g = scenario.graph
    m = g.region_count
    lines = ["[graph]", f"region_count = {m}", "travel ="]
    for row in g.travel:
        lines.append("    " + " ".join(_f(v) for v in row))
    lines.append("collection = " + " ".join(_f(v) for v in g.collection))
    if g.adjacency.all():
        lines.append("adjacency = complete")
    else:
        lines.append("adjacency =")
        for row in g.adjacency:
            lines.append("    " + " ".join(str(int(v)) for v in row))
    lines += [
        "",
        "[regions]",
        "weights = " + " ".join(_f(v) for v in g.weights),
        "deadlines = " + " ".join(_f(v) for v in g.deadlines),
        "",
        "[operator]",
        f"drift = {_f(scenario.ddm.drift_magnitude)}",
        f"diffusion = {_f(scenario.ddm.diffusion)}",
        f"interrogation_threshold = {_f(scenario.ddm.interrogation_threshold)}",
        f"delay_cost = {_f(scenario.ddm.delay_cost)}",
        f"error_cost = {_f(scenario.ddm.error_cost)}",
    ]
    if scenario.exogenous_factors:
        u, r, s, sl = scenario.utilization, scenario.retention, scenario.safte, scenario.sleep
        lines += [
            f"sensitivity = {_f(u.sensitivity)}",
            f"optimal_utilization = {_f(u.optimal)}",
            f"utilization_threshold = {_f(u.threshold)}",
            f"motor_poly = {format_polynomial(u.motor_poly)}",
            f"retention_weights = {_f(r.w1)} {_f(r.w2)}",
            f"retention_timescales = {_f(r.tau1)} {_f(r.tau2)}",
            f"retention_floor = {_f(r.floor)}",
            f"reservoir_capacity = {_f(s.reservoir_capacity)}",
            f"drain_rate = {_f(s.drain_rate)}",
            f"circadian_amp1 = {_f(s.amp1)}",
            f"circadian_amp2 = {_f(s.amp2)}",
            f"second_harmonic = {_f(s.second_harmonic)}",
            f"peak_hour = {_f(s.peak_hour)}",
            f"relative_peak_hour = {_f(s.relative_peak)}",
            f"wake_hour = {_f(sl.wake_hour)}",
            f"hours_slept = {_f(sl.hours_slept)}",
            f"initial_utilization = {_f(scenario.initial_utilization)}",
        ]
    alg = scenario.algorithm
    lines += [
        "",
        "[algorithm]",
        f"horizon = {alg.horizon}",
        f"dt = {_f(alg.dt)}",
        f"queue_cap = {_f(alg.queue_cap)}",
        f"queue_step = {_f(alg.queue_step)}",
        f"cusum_threshold = {_f(alg.cusum_threshold)}",
        f"critical_belief = {_f(alg.critical_belief)}",
        f"routing = {alg.routing_mode}",
        "",
        "[run]",
        f"duration = {_f(scenario.duration)}",
        f"seed = {scenario.seed}",
        f"exogenous_factors = {'on' if scenario.exogenous_factors else 'off'}",
        f"start_region = {scenario.start_region + 1}",
        "",
        "[anomalies]",
        "schedule = "
        + " ".join(f"{region + 1}:{_f(onset)}" for region, onset in scenario.anomalies),
        "",
    ]
    return "\n".join(lines)


def write_scenario(scenario: Scenario, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_scenario(scenario))


def bundled_scenario_path(name: str):
    """Filesystem path of a bundled scenario ("case1" or "case2")."""
    ref = resources.files("surveilsim") / "scenarios" / f"{name}.scn"
    if not ref.is_file():
        raise FileNotFoundError(f"no bundled scenario named {name!r}")
    return ref
