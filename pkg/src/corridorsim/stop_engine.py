"""Per-stop queueing dynamics: no-overtaking entry, berth assignment, dwell
with dynamic boarding, in-berth blocking, and departure.

Berth 0 is the downstream-most loading position.  A bus may enter only when
the upstream-most berth is vacant, advances to the most downstream vacant
berth short of any occupied one, serves its patrons there, and may leave only
once every berth downstream of it is empty.  Buses therefore depart each stop
in exactly the order they arrived.

Patron arrivals are pre-drawn per (stop, entity, step), where an entity is
either a single line's own demand or a group's common-line pool.  Waiting
patrons are kept as lazy counts: a stop only touches an entity's per-step
counts while one of its buses is actually dwelling, and folds the interim
arrivals in one shot when the next bus enters.  Common-line patrons (and
same-line patrons facing bunched buses) join the dwelling bus with the
fewest patrons still waiting to board, ties going to the most downstream
berth.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

import numpy as np

from .scenario import Scenario, Stop
from .stochastic import PURPOSE_PATRONS, stream_rng

__all__ = ["PatronStreams", "BusAtStop", "StopEngine"]


def line_entity(line_id: str) -> str:
    return "L:" + line_id


def group_entity(group_id: str) -> str:
    return "C:" + group_id


class PatronStreams:
    """Pre-drawn per-step patron arrival counts for every (stop, entity).

    Counts are Poisson draws at the phase-scaled rate, drawn once per
    replication from dedicated streams so that control strategies compared
    under the same (seed, replication) see identical patron traffic.
    """

    def __init__(
        self,
        scenario: Scenario,
        base_seed: int,
        replication: int,
        total_steps: int,
        warmup_steps: int,
    ):
        self.counts: dict[tuple[int, str], np.ndarray] = {}
        self.prefix: dict[tuple[int, str], np.ndarray] = {}
        dt = scenario.time_step_s
        wf = scenario.phases.warmup_demand_factor
        for stop in scenario.stops:
            for entity, rate in self._entity_rates(scenario, stop):
                rng = stream_rng(
                    base_seed, replication, PURPOSE_PATRONS, stop.index, entity
                )
                counts = np.zeros(total_steps, dtype=np.int64)
                if rate > 0:
                    counts[:warmup_steps] = rng.poisson(
                        rate * wf * dt, size=warmup_steps
                    )
                    counts[warmup_steps:] = rng.poisson(
                        rate * dt, size=total_steps - warmup_steps
                    )
                key = (stop.index, entity)
                self.counts[key] = counts
                self.prefix[key] = np.concatenate(([0], np.cumsum(counts)))

    @staticmethod
    def _entity_rates(scenario: Scenario, stop: Stop):
        for ln in scenario.lines:
            if ln.serves(stop.index):
                yield line_entity(ln.id), scenario.board_rate(stop, ln)
        for g in scenario.groups:
            yield group_entity(g.id), scenario.common_rate(stop, g.id)

    def arrivals_at(self, stop_index: int, entity: str, step: int) -> int:
        return int(self.counts[(stop_index, entity)][step])

    def arrivals_between(
        self, stop_index: int, entity: str, start_step: int, end_step: int
    ) -> int:
        """Total arrivals in steps [start_step, end_step)."""
        p = self.prefix[(stop_index, entity)]
        return int(p[end_step] - p[start_step])

    def total(self, stop_index: int, entity: str) -> int:
        return int(self.prefix[(stop_index, entity)][-1])


@dataclass
class BusAtStop:
    """Mutable visit state while a bus is at one stop, plus the finished
    record fields.  d = a + q + S + b holds by construction."""

    bus: object  # the simulator's bus runtime
    line_id: str
    group_id: str | None
    arrival: float
    stop_index: int | None = None
    entry: float | None = None
    berth: int | None = None
    alight_count: int = 0
    assigned: int = 0  # patrons committed to board this bus
    finish: float | None = None  # exact service-completion time
    dwell_done: float | None = None  # finish snapped up to the step grid
    departure: float | None = None

    def pending_boarders(self, t: float, board_s: float, alight_s: float, lost_s: float) -> int:
        """Patrons assigned but not yet aboard at time t (boarding starts
        after lost time and alighting)."""
        boarding_started = self.entry + lost_s + alight_s * self.alight_count
        if board_s <= 0:
            return 0
        done = int(max(0.0, t - boarding_started) // board_s)
        return max(0, self.assigned - done)


class StopEngine:
    """State and per-step transitions of one multi-berth stop."""

    def __init__(
        self,
        scenario: Scenario,
        stop: Stop,
        streams: PatronStreams,
        t0: float,
        dt: float,
    ):
        self.scenario = scenario
        self.stop = stop
        self.streams = streams
        self.t0 = t0
        self.dt = dt
        self.berths: list[BusAtStop | None] = [None] * stop.berths
        self.entry_queue: list[BusAtStop] = []
        self.pending: list[tuple[float, str, int, BusAtStop]] = []  # heap by (a, line, slot)
        self.waiting: dict[str, int] = {}
        self.consumed_until: dict[str, int] = {}
        self.last_line_arrival: dict[str, float] = {}
        self.boarded_total: dict[str, int] = {}
        self.dwelling_entities: dict[str, int] = {}  # entity -> dwelling bus count
        self.lines_at_stop = [ln for ln in scenario.lines if ln.serves(stop.index)]
        for ln in self.lines_at_stop:
            self.waiting[line_entity(ln.id)] = 0
            self.consumed_until[line_entity(ln.id)] = 0
            self.boarded_total[line_entity(ln.id)] = 0
        for g in scenario.groups:
            self.waiting[group_entity(g.id)] = 0
            self.consumed_until[group_entity(g.id)] = 0
            self.boarded_total[group_entity(g.id)] = 0

    # -- helpers ----------------------------------------------------------

    def _step_of(self, t: float) -> int:
        return int(round((t - self.t0) / self.dt))

    def _grid_ceil(self, x: float) -> float:
        k = math.ceil((x - self.t0) / self.dt - 1e-9)
        return self.t0 + k * self.dt

    def occupied(self) -> bool:
        return any(b is not None for b in self.berths) or bool(self.entry_queue) or bool(self.pending)

    # -- phase 2: entry and exit ------------------------------------------

    def deliver(self, visit: BusAtStop, slot: int) -> None:
        """Queue an upcoming arrival (from a link, the control point, or a
        line's corridor entry)."""
        visit.stop_index = self.stop.index
        heapq.heappush(self.pending, (visit.arrival, visit.line_id, slot, visit))

    def pull_pending(self, t: float) -> None:
        while self.pending and self.pending[0][0] <= t + 1e-9:
            _, _, _, visit = heapq.heappop(self.pending)
            self.entry_queue.append(visit)

    def process_exits(self, t: float) -> list[BusAtStop]:
        """Depart every bus whose service is done and whose downstream berths
        are clear.  Scanning downstream-first lets a platoon leave together
        while preserving arrival order."""
        departed = []
        for i in range(len(self.berths)):
            visit = self.berths[i]
            if visit is None or visit.finish is None or visit.finish > t + 1e-9:
                continue
            if any(self.berths[k] is not None for k in range(i)):
                continue  # blocked in berth: delay accrues until downstream clears
            visit.dwell_done = self._grid_ceil(visit.finish)
            visit.departure = t
            self.berths[i] = None
            self._on_dwell_end(visit)
            departed.append(visit)
        return departed

    def process_entry(self, t: float) -> None:
        """Admit the head of the entry queue if the upstream-most berth is
        vacant; one admission per step."""
        if not self.entry_queue:
            return
        if self.berths[-1] is not None:
            return
        occupied = [i for i, b in enumerate(self.berths) if b is not None]
        target = (max(occupied) + 1) if occupied else 0
        visit = self.entry_queue.pop(0)
        visit.entry = t
        visit.berth = target
        self.berths[target] = visit
        self._begin_dwell(visit, t)

    # -- dwell ------------------------------------------------------------

    def _begin_dwell(self, visit: BusAtStop, t: float) -> None:
        stop = self.stop
        bus = visit.bus
        # alightings fixed at entry: rate x the bus's line-specific arrival
        # headway at this stop, rounded stochastically
        gap = visit.arrival - self.last_line_arrival.get(
            visit.line_id, visit.arrival - bus.line.headway_s
        )
        self.last_line_arrival[visit.line_id] = visit.arrival
        rate = self.scenario.alight_rate(stop, bus.line)
        if t < 0:
            rate *= self.scenario.phases.warmup_demand_factor
        expected = rate * max(0.0, gap)
        u = bus.alight_uniform(stop.index)
        visit.alight_count = int(expected) + (1 if u < expected - int(expected) else 0)

        step = self._step_of(t)
        claimed = self._claim(line_entity(visit.line_id), step)
        if visit.group_id is not None:
            claimed += self._claim(group_entity(visit.group_id), step)
        visit.assigned = claimed
        visit.finish = (
            t
            + stop.lost_time_s
            + stop.alight_s_per_patron * visit.alight_count
            + stop.board_s_per_patron * claimed
        )
        self._bump_dwelling(line_entity(visit.line_id), +1)
        if visit.group_id is not None:
            self._bump_dwelling(group_entity(visit.group_id), +1)

    def _on_dwell_end(self, visit: BusAtStop) -> None:
        self.boarded_total[line_entity(visit.line_id)] += visit.assigned
        self._bump_dwelling(line_entity(visit.line_id), -1)
        if visit.group_id is not None:
            self._bump_dwelling(group_entity(visit.group_id), -1)

    def _bump_dwelling(self, entity: str, delta: int) -> None:
        n = self.dwelling_entities.get(entity, 0) + delta
        if n:
            self.dwelling_entities[entity] = n
        else:
            self.dwelling_entities.pop(entity, None)

    def _claim(self, entity: str, step: int) -> int:
        """Fold lazily-accumulated waiting patrons up to (excluding) this
        step and hand them to the entering bus."""
        backlog = self.streams.arrivals_between(
            self.stop.index, entity, self.consumed_until[entity], step
        )
        self.consumed_until[entity] = step
        claimed = self.waiting[entity] + backlog
        self.waiting[entity] = 0
        return claimed

    # -- phase 3: boarding ------------------------------------------------

    def _dwelling_buses(self, t: float, entity: str) -> list[BusAtStop]:
        """Buses of a line (or group) still serving patrons, downstream
        first."""
        line_key = entity.startswith("L:")
        name = entity[2:]
        out = []
        for visit in self.berths:
            if visit is None or visit.finish is None or visit.finish <= t + 1e-9:
                continue
            if line_key:
                if visit.line_id == name:
                    out.append(visit)
            elif visit.group_id == name:
                out.append(visit)
        return out

    def process_boarding(self, t: float) -> None:
        """Assign this step's patron arrivals.  Entities with no dwelling bus
        are left to lazy accumulation."""
        if not self.dwelling_entities:
            return
        stop = self.stop
        step = self._step_of(t)
        for entity in list(self.dwelling_entities):
            n = self.streams.arrivals_at(stop.index, entity, step)
            self.consumed_until[entity] = step + 1
            if n == 0:
                continue
            buses = self._dwelling_buses(t, entity)
            if not buses:
                # service ended this step; late arrivals wait for the next bus
                self.waiting[entity] += n
                continue
            for _ in range(n):
                chosen = min(
                    buses,
                    key=lambda v: (
                        v.pending_boarders(
                            t,
                            stop.board_s_per_patron,
                            stop.alight_s_per_patron,
                            stop.lost_time_s,
                        ),
                        v.berth,
                    ),
                )
                chosen.assigned += 1
                chosen.finish += stop.board_s_per_patron
        return

    # -- conservation accounting -----------------------------------------

    def flush_waiting(self, end_step: int) -> None:
        """Fold all remaining arrivals into the waiting counts (end of run)."""
        for entity in self.waiting:
            self.waiting[entity] += self.streams.arrivals_between(
                self.stop.index, entity, self.consumed_until[entity], end_step
            )
            self.consumed_until[entity] = end_step
