"""Discrete-time corridor driver.

Each step executes four phases in a fixed order: control-point releases,
stop entry/exit, boarding and alighting progress, then link movements.  The
clock starts one warm-up period before the rush (time zero is rush start),
runs through the rush, and then keeps stepping until every bus has left the
corridor, so per-bus records are complete.

Holding is disabled during warm-up and patron demand is scaled down; rush
buses (schedule slots 1 and up) are the only ones that enter the metrics.
Replications are independent, reproducible from ``(seed, replication)``, and
may run in parallel processes; the sequential stopping decision of
:func:`run_experiment` is unaffected by the degree of parallelism.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import metrics as metrics_mod
from .control_point import ANCHOR_FIRST_STOP, ArrivalPredictor, make_policy
from .scenario import ReplicationSettings, Scenario
from .stochastic import (
    PURPOSE_ALIGHT,
    PURPOSE_ARRIVALS,
    PURPOSE_LINKS,
    ArrivalSchedule,
    sample_link_times,
    stream_rng,
)
from .stop_engine import BusAtStop, PatronStreams, StopEngine

__all__ = [
    "SimulationError",
    "BusEventLog",
    "run_replication",
    "run_experiment",
    "ExperimentResult",
    "gen_spanning_schedule",
]

EVENT_COLUMNS = ("line", "bus", "stop", "a", "q", "S", "b", "d", "hold", "phase")


class SimulationError(RuntimeError):
    pass


@dataclass
class BusEventLog:
    """Per-bus, per-stop timestamps for one replication.

    Row layout matches :data:`EVENT_COLUMNS`; the ``hold`` column repeats the
    bus's holding delay.  ``anchor_stop`` is 1 when the strategy holds buses
    after service at the first stop (their actual departures there are then
    ``d + hold``), else 0.
    """

    scenario_name: str
    strategy: str
    anchor_stop: int
    rush_s: float
    rows: list = field(default_factory=list)
    buses: list = field(default_factory=list)  # (line, slot, a0, release, hold, rush, held)
    patrons: dict = field(default_factory=dict)  # stop -> generated/boarded/waiting
    created: int = 0
    exited: int = 0

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(",".join(EVENT_COLUMNS) + "\n")
            for r in self.rows:
                fh.write(
                    f"{r[0]},{r[1]},{r[2]},{r[3]!r},{r[4]!r},{r[5]!r},{r[6]!r},{r[7]!r},{r[8]!r},{r[9]}\n"
                )


def gen_spanning_schedule(
    line, warmup_s: float, rush_s: float, rng
) -> ArrivalSchedule:
    """Arrival schedule covering warm-up and rush as one continuous process.

    Slot j is scheduled at j * headway with j = 0 at rush start; warm-up
    slots carry j <= 0.  Draws are clamped at the warm-up start and sorted,
    so overtakes exchange slots across the whole span.
    """
    k_back = int(math.floor(warmup_s / line.headway_s))
    first_slot = -k_back
    slots = np.arange(first_slot, int(math.floor(rush_s / line.headway_s)) + 1)
    means = slots * line.headway_s
    if line.arrival_cv == 0.0:
        times = means.astype(float)
    else:
        times = rng.normal(means, line.arrival_cv * line.headway_s)
    np.maximum(times, -warmup_s, out=times)
    times.sort()
    return ArrivalSchedule(
        line_id=line.id,
        headway_s=line.headway_s,
        times=times,
        first_slot=first_slot,
    )


class _BusRun:
    __slots__ = (
        "line",
        "line_idx",
        "slot",
        "a0",
        "release",
        "w0",
        "rush",
        "held",
        "link_times",
        "alight_us",
    )

    def __init__(self, line, line_idx, slot, a0, link_times, alight_us):
        self.line = line
        self.line_idx = line_idx
        self.slot = slot
        self.a0 = a0
        self.release = a0
        self.w0 = 0.0
        self.rush = slot >= 1
        self.held = line.held
        self.link_times = link_times
        self.alight_us = alight_us

    def alight_uniform(self, stop_index: int) -> float:
        return float(self.alight_us[stop_index - self.line.first_stop])

    def link_time(self, stop_index: int) -> float:
        return float(self.link_times[stop_index - self.line.first_stop])


def run_replication(
    scenario: Scenario,
    seed: int,
    replication: int = 0,
    runout_cap_s: float = 7200.0,
) -> BusEventLog:
    """Simulate one replication and return its event log."""
    dt = scenario.time_step_s
    warmup = scenario.phases.warmup_s
    rush = scenario.phases.rush_s
    t0 = -warmup
    total_steps = int(round((warmup + rush + runout_cap_s) / dt))
    warmup_steps = int(round(warmup / dt))

    def grid_ceil(x: float) -> float:
        return t0 + math.ceil((x - t0) / dt - 1e-9) * dt

    streams = PatronStreams(scenario, seed, replication, total_steps, warmup_steps)
    engines = {
        stop.index: StopEngine(scenario, stop, streams, t0, dt) for stop in scenario.stops
    }

    schedules: dict[str, ArrivalSchedule] = {}
    link_draws: dict[str, np.ndarray] = {}
    alight_draws: dict[str, np.ndarray] = {}
    for idx, line in enumerate(scenario.lines):
        arr_rng = stream_rng(seed, replication, PURPOSE_ARRIVALS, idx)
        schedules[line.id] = gen_spanning_schedule(line, warmup, rush, arr_rng)
        n_buses = len(schedules[line.id])
        n_links = line.last_stop - line.first_stop
        link_rng = stream_rng(seed, replication, PURPOSE_LINKS, idx)
        draws = np.empty((n_buses, max(1, n_links)))
        for li in range(n_links):
            link = scenario.links[line.first_stop - 1 + li]
            draws[:, li] = sample_link_times(link.mean_s, link.std_s, link_rng, n_buses)
        link_draws[line.id] = draws
        alight_rng = stream_rng(seed, replication, PURPOSE_ALIGHT, idx)
        alight_draws[line.id] = alight_rng.random(
            (n_buses, line.last_stop - line.first_stop + 1)
        )

    predictor = ArrivalPredictor(scenario.strategy.prediction, schedules)
    policy = make_policy(scenario, predictor, grid=grid_ceil)
    anchored = policy.anchor == ANCHOR_FIRST_STOP

    log = BusEventLog(
        scenario_name=scenario.name,
        strategy=scenario.strategy.name,
        anchor_stop=1 if anchored else 0,
        rush_s=rush,
    )

    pointers = {line.id: 0 for line in scenario.lines}
    in_system = 0
    exited = 0
    created = 0

    def make_bus(line, line_idx, i) -> _BusRun:
        sched = schedules[line.id]
        return _BusRun(
            line,
            line_idx,
            sched.first_slot + i,
            float(sched.times[i]),
            link_draws[line.id][i],
            alight_draws[line.id][i],
        )

    def control_point_phase(t: float) -> None:
        nonlocal in_system, created
        for line_idx, line in enumerate(scenario.lines):
            sched = schedules[line.id]
            ptr = pointers[line.id]
            while ptr < len(sched) and sched.times[ptr] <= t + 1e-9:
                bus = make_bus(line, line_idx, ptr)
                if (
                    bus.held
                    and not anchored
                    and policy.name != "none"
                    and bus.a0 >= 0.0
                ):
                    dec = policy.decide(line.id, bus.slot, line.headway_s, bus.a0)
                    bus.release = dec.release_time
                    bus.w0 = dec.hold_s
                else:
                    bus.release = grid_ceil(bus.a0)
                    bus.w0 = 0.0
                    if bus.held and not anchored and policy.name != "none":
                        # warm-up passage: keep lane history warm for the rush
                        policy.record_passage(line.id, bus.release, bus.a0)
                visit = BusAtStop(
                    bus=bus,
                    line_id=line.id,
                    group_id=line.group,
                    arrival=bus.release,
                )
                engines[line.first_stop].deliver(visit, bus.slot)
                in_system += 1
                created += 1
                ptr += 1
            pointers[line.id] = ptr

    def link_phase(departed: list[BusAtStop], t: float) -> None:
        nonlocal in_system, exited
        for visit in departed:
            bus = visit.bus
            stop_idx = visit.stop_index
            d = visit.departure
            hold_here = 0.0
            if anchored and stop_idx == 1 and bus.held and d >= 0.0:
                dec = policy.decide(bus.line.id, bus.slot, bus.line.headway_s, d)
                hold_here = dec.hold_s
                bus.w0 = hold_here
            elif anchored and stop_idx == 1 and bus.held:
                policy.record_passage(bus.line.id, d, d)
            q = visit.entry - visit.arrival
            s_dwell = visit.dwell_done - visit.entry
            b = d - visit.dwell_done
            log.rows.append(
                (
                    bus.line.id,
                    bus.slot,
                    stop_idx,
                    visit.arrival,
                    q,
                    s_dwell,
                    b,
                    d,
                    bus.w0,
                    "rush" if bus.rush else "warmup",
                )
            )
            if stop_idx < bus.line.last_stop:
                start = d + hold_here
                arrival = grid_ceil(start + bus.link_time(stop_idx))
                engines[stop_idx + 1].deliver(
                    BusAtStop(
                        bus=bus,
                        line_id=bus.line.id,
                        group_id=bus.line.group,
                        arrival=arrival,
                    ),
                    bus.slot,
                )
            else:
                log.buses.append(
                    (
                        bus.line.id,
                        bus.slot,
                        bus.a0,
                        bus.release,
                        bus.w0,
                        bus.rush,
                        bus.held,
                    )
                )
                in_system -= 1
                exited += 1

    stop_order = [stop.index for stop in scenario.stops]
    last_step = total_steps - 1
    for k in range(total_steps):
        t = t0 + k * dt
        control_point_phase(t)
        departed: list[BusAtStop] = []
        for s in stop_order:
            engine = engines[s]
            engine.pull_pending(t)
            departed.extend(engine.process_exits(t))
            engine.process_entry(t)
        for s in stop_order:
            engines[s].process_boarding(t)
        link_phase(departed, t)
        if t >= rush:
            done = all(pointers[ln.id] == len(schedules[ln.id]) for ln in scenario.lines)
            if done and in_system == 0:
                last_step = k
                break
    else:
        raise SimulationError(
            f"corridor did not drain within {runout_cap_s} s after the rush"
        )

    end_step = last_step + 1
    for s in stop_order:
        engines[s].flush_waiting(end_step)
        entities = engines[s].waiting.keys()
        generated = sum(
            streams.arrivals_between(s, e, 0, end_step) for e in entities
        )
        boarded = sum(engines[s].boarded_total.values())
        waiting = sum(engines[s].waiting.values())
        log.patrons[s] = {
            "generated": generated,
            "boarded": boarded,
            "waiting": waiting,
        }
    log.created = created
    log.exited = exited
    return log


# ---------------------------------------------------------------------------
# replication control
# ---------------------------------------------------------------------------


@dataclass
class ExperimentResult:
    scenario_name: str
    strategy: str
    replications: int
    converged: bool
    metrics: "metrics_mod.AggregateMetrics"
    per_rep: list


def _one_rep(args):
    scenario, seed, rep = args
    log = run_replication(scenario, seed, rep)
    return metrics_mod.compute_metrics(log)


def run_experiment(
    scenario: Scenario,
    controller: ReplicationSettings | None = None,
    seed: int | None = None,
    jobs: int = 1,
) -> ExperimentResult:
    """Run replications until the variance stopping rule is met.

    Stops at the first replication count n >= minـreps at which the
    estimated variance of every stop's mean delay, Var across reps / n,
    drops to the threshold.  Monotone in the threshold: a smaller threshold
    can only stop later for the same seeds.  If max_reps is exhausted first
    the result is flagged ``converged=False``.
    """
    controller = controller or scenario.replications
    if controller.variance_threshold_min2 <= 0:
        raise ValueError("variance threshold must be positive")
    seed = scenario.seed if seed is None else seed
    per_rep = []
    decision_n = None

    def criterion_met(n: int) -> bool:
        if n < max(2, controller.min_reps):
            return False
        w = np.array([m.w_min for m in per_rep[:n]])
        var_of_mean = w.var(axis=0, ddof=1) / n
        return bool(var_of_mean.max() <= controller.variance_threshold_min2)

    next_rep = 0
    if jobs <= 1:
        while next_rep < controller.max_reps:
            per_rep.append(_one_rep((scenario, seed, next_rep)))
            next_rep += 1
            if criterion_met(next_rep):
                decision_n = next_rep
                break
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            while next_rep < controller.max_reps and decision_n is None:
                batch = list(
                    range(next_rep, min(next_rep + jobs, controller.max_reps))
                )
                results = list(
                    pool.map(
                        _one_rep, [(scenario, seed, rep) for rep in batch]
                    )
                )
                for res in results:
                    per_rep.append(res)
                    next_rep += 1
                    if criterion_met(next_rep):
                        decision_n = next_rep
                        break
    if decision_n is None:
        decision_n = len(per_rep)
        converged = criterion_met(decision_n)
    else:
        converged = True
    used = per_rep[:decision_n]
    return ExperimentResult(
        scenario_name=scenario.name,
        strategy=scenario.strategy.name,
        replications=decision_n,
        converged=converged,
        metrics=metrics_mod.aggregate(used),
        per_rep=used,
    )
