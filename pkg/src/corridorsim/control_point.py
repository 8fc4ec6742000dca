"""Holding decisions at the corridor entrance (and, for three comparison
strategies, at the first stop).

All release rules return a :class:`ReleaseDecision`.  Within a line (or a
group, for group holding) releases never reorder buses: every rule's release
time is clamped to be no earlier than the previous release of the same lane.
Computed negative holds mean no holding is applied.

Three of the comparison strategies are anchored at the first stop because
their formulas consume departure times and demand rates there; the rest,
including the minimum-headway rules, act upstream of the first stop.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .stochastic import ArrivalSchedule

__all__ = [
    "ConfigurationError",
    "ReleaseDecision",
    "HoldContext",
    "hold_min_headway",
    "hold_min_headway_group",
    "hold_comparison",
    "ArrivalPredictor",
    "HoldingPolicy",
    "make_policy",
    "ANCHOR_ENTRANCE",
    "ANCHOR_FIRST_STOP",
    "COMPARISON_STRATEGIES",
]

ANCHOR_ENTRANCE = 0
ANCHOR_FIRST_STOP = 1

COMPARISON_STRATEGIES = (
    "schedule_based",
    "daganzo09",
    "xuan11",
    "daganzo11",
    "bartholdi12",
    "berrebi15",
)


class ConfigurationError(ValueError):
    """A strategy was given a bus or scenario it cannot handle."""


@dataclass(frozen=True)
class ReleaseDecision:
    release_time: float
    hold_s: float

    def __post_init__(self):
        if self.hold_s < -1e-9:
            raise ValueError(f"hold must be >= 0, got {self.hold_s}")


@dataclass
class HoldContext:
    """Everything a release rule may consume for one decision.

    ``arrival`` is the decision instant: the control-point arrival for
    entrance-anchored rules, or the ready-to-depart time at the first stop
    for stop-anchored rules.  Unavailable history fields are None.
    """

    line_id: str
    j: int  # schedule slot of the bus on its line, 1-based
    headway_s: float
    arrival: float
    scheduled_arrival: float | None = None
    prev_release: float | None = None
    prev_arrival: float | None = None
    scheduled_departure: float | None = None
    predicted_next_departure: float | None = None
    predicted_arrivals: np.ndarray | None = None  # next 1..M arrivals
    beta1: float = 0.0  # demand rate x boarding time per patron at stop 1
    alpha: float = 0.5
    group_id: str | None = None


def _decide(arrival: float, hold: float, prev_release: float | None) -> ReleaseDecision:
    release = arrival + max(0.0, hold)
    if prev_release is not None and release < prev_release:
        release = prev_release
    return ReleaseDecision(release_time=release, hold_s=release - arrival)


def hold_min_headway(ctx: HoldContext, eta: float) -> ReleaseDecision:
    """Release once ``eta * headway`` has elapsed since the line's previous
    release; a bus arriving with that spacing already elapsed goes
    immediately."""
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"eta must lie in [0, 1], got {eta}")
    if ctx.prev_release is None:
        return ReleaseDecision(ctx.arrival, 0.0)
    release = max(ctx.arrival, ctx.prev_release + eta * ctx.headway_s)
    return ReleaseDecision(release, release - ctx.arrival)


def hold_min_headway_group(ctx: HoldContext, joint_headway_s: float) -> ReleaseDecision:
    """Group variant: spacing is the joint headway of the bus's line group
    and the previous release is the group's, regardless of line."""
    if ctx.group_id is None:
        raise ConfigurationError(
            f"line {ctx.line_id} belongs to no group; group holding cannot apply"
        )
    if ctx.prev_release is None:
        return ReleaseDecision(ctx.arrival, 0.0)
    release = max(ctx.arrival, ctx.prev_release + joint_headway_s)
    return ReleaseDecision(release, release - ctx.arrival)


def hold_comparison(ctx: HoldContext, strategy: str) -> ReleaseDecision:
    """One of the six comparison strategies.  Non-positive formula values
    mean no holding.  Missing history (first bus of a lane) also means no
    holding."""
    h = ctx.headway_s
    if strategy == "schedule_based":
        if ctx.scheduled_arrival is None:
            raise ConfigurationError("schedule_based needs the scheduled arrival")
        hold = ctx.scheduled_arrival - ctx.arrival
    elif strategy == "daganzo09":
        if ctx.prev_release is None:
            hold = 0.0
        else:
            gap = ctx.arrival - ctx.prev_release
            hold = (ctx.alpha + ctx.beta1) * (h - gap)
    elif strategy == "xuan11":
        if ctx.scheduled_departure is None:
            raise ConfigurationError("xuan11 needs the scheduled departure")
        gap_term = 0.0
        if ctx.prev_release is not None:
            gap_term = ctx.beta1 * (h - (ctx.arrival - ctx.prev_release))
        hold = gap_term + ctx.alpha * (ctx.scheduled_departure - ctx.arrival)
    elif strategy == "daganzo11":
        if ctx.predicted_next_departure is None:
            raise ConfigurationError("daganzo11 needs a predicted next departure")
        if ctx.prev_release is None:
            hold = 0.0
        else:
            gap = ctx.arrival - ctx.prev_release
            ahead = ctx.predicted_next_departure - ctx.arrival
            hold = (ctx.alpha + ctx.beta1) * (h - gap) - ctx.alpha * (h - ahead)
    elif strategy == "bartholdi12":
        if ctx.predicted_arrivals is None or len(ctx.predicted_arrivals) < 1:
            raise ConfigurationError("bartholdi12 needs a predicted next arrival")
        if ctx.prev_arrival is None:
            hold = 0.0
        else:
            backward = h - (ctx.arrival - ctx.prev_arrival)
            forward = ctx.alpha * (ctx.predicted_arrivals[0] - ctx.arrival)
            hold = max(backward, forward)
    elif strategy == "berrebi15":
        if ctx.predicted_arrivals is None or len(ctx.predicted_arrivals) < 1:
            raise ConfigurationError("berrebi15 needs predicted arrivals")
        if ctx.prev_arrival is None:
            hold = 0.0
        else:
            rs = np.arange(1, len(ctx.predicted_arrivals) + 1, dtype=float)
            paces = (np.asarray(ctx.predicted_arrivals) - ctx.arrival) / rs
            r_star = int(np.argmax(paces)) + 1
            backward = ctx.arrival - ctx.prev_arrival
            hold = (paces[r_star - 1] - backward) / (1.0 + 1.0 / r_star)
    else:
        raise ConfigurationError(f"unknown comparison strategy '{strategy}'")
    return _decide(ctx.arrival, hold, ctx.prev_release)


class ArrivalPredictor:
    """Future control-point arrival times, either perfectly known from the
    replication's generated schedules or read off the timetable."""

    def __init__(self, mode: str, schedules: dict[str, ArrivalSchedule]):
        if mode not in ("perfect", "schedule"):
            raise ConfigurationError(f"unknown prediction mode '{mode}'")
        self.mode = mode
        self.schedules = schedules

    def predict(self, line_id: str, j: int, r_max: int) -> np.ndarray:
        """Predicted arrivals of buses j+1 .. j+r_max on the line.  Slots
        beyond the generated schedule fall back to their timetabled times."""
        sched = self.schedules[line_id]
        slots = np.arange(j + 1, j + r_max + 1)
        out = slots * sched.headway_s
        if self.mode == "perfect":
            idx = slots - sched.first_slot
            known = (idx >= 0) & (idx < len(sched))
            out = out.astype(float)
            out[known] = sched.times[idx[known]]
        return out


def predict_arrivals(
    mode: str, schedule: ArrivalSchedule, j: int, r_max: int
) -> np.ndarray:
    """Functional form of :meth:`ArrivalPredictor.predict` for one line."""
    return ArrivalPredictor(mode, {schedule.line_id: schedule}).predict(
        schedule.line_id, j, r_max
    )


# ---------------------------------------------------------------------------
# stateful per-replication policies
# ---------------------------------------------------------------------------


@dataclass
class _LaneState:
    prev_release: float | None = None
    prev_arrival: float | None = None


class HoldingPolicy:
    """Per-replication holding strategy: owns lane release history and routes
    each decision to the matching rule.

    ``anchor`` tells the simulator where holds physically apply: at the
    corridor entrance, or after service completion at the first stop.
    """

    def __init__(
        self,
        name: str,
        eta: float = 1.0,
        alpha: float = 0.5,
        horizon: int = 5,
        predictor: ArrivalPredictor | None = None,
        joint_headways: dict[str, float] | None = None,
        line_groups: dict[str, str | None] | None = None,
        beta1: dict[str, float] | None = None,
        scheduled_dwell1: dict[str, float] | None = None,
        grid=None,
    ):
        self.name = name
        self.eta = eta
        self.alpha = alpha
        self.horizon = horizon
        self.predictor = predictor
        self.joint_headways = joint_headways or {}
        self.line_groups = line_groups or {}
        self.beta1 = beta1 or {}
        self.scheduled_dwell1 = scheduled_dwell1 or {}
        self.grid = grid or (lambda x: x)  # snap release instants to the clock
        self.anchor = (
            ANCHOR_FIRST_STOP
            if name in ("daganzo09", "xuan11", "daganzo11")
            else ANCHOR_ENTRANCE
        )
        self._lanes: dict[str, _LaneState] = {}
        if name in ("daganzo11", "bartholdi12", "berrebi15") and predictor is None:
            raise ConfigurationError(f"strategy '{name}' needs an arrival predictor")

    def _lane(self, key: str) -> _LaneState:
        return self._lanes.setdefault(key, _LaneState())

    def lane_key(self, line_id: str) -> str:
        if self.name == "min_headway_group":
            group = self.line_groups.get(line_id)
            if group is None:
                raise ConfigurationError(
                    f"line {line_id} belongs to no group; group holding cannot apply"
                )
            return f"group:{group}"
        return f"line:{line_id}"

    def record_passage(self, line_id: str, t: float, arrival: float | None = None) -> None:
        """Update lane history for a bus that passed without a decision
        (warm-up, or unheld lines)."""
        lane = self._lane(self.lane_key(line_id))
        lane.prev_release = t
        if arrival is not None:
            lane.prev_arrival = arrival

    def decide(
        self,
        line_id: str,
        j: int,
        headway_s: float,
        arrival: float,
    ) -> ReleaseDecision:
        """Release decision for a bus at the policy's anchor point, committed
        to the lane history.

        ``arrival`` is the control-point arrival for entrance-anchored
        strategies and the ready-to-depart time at the first stop otherwise.
        """
        lane = self._lane(self.lane_key(line_id))
        ctx = HoldContext(
            line_id=line_id,
            j=j,
            headway_s=headway_s,
            arrival=arrival,
            scheduled_arrival=j * headway_s,
            prev_release=lane.prev_release,
            prev_arrival=lane.prev_arrival,
            beta1=self.beta1.get(line_id, 0.0),
            alpha=self.alpha,
            group_id=self.line_groups.get(line_id),
        )
        if self.name == "none":
            decision = ReleaseDecision(arrival, 0.0)
        elif self.name == "min_headway":
            decision = hold_min_headway(ctx, self.eta)
        elif self.name == "min_headway_group":
            joint = self.joint_headways.get(ctx.group_id or "")
            if joint is None:
                raise ConfigurationError(
                    f"line {line_id} belongs to no group; group holding cannot apply"
                )
            decision = hold_min_headway_group(ctx, joint)
        elif self.name in COMPARISON_STRATEGIES:
            if self.name == "xuan11":
                ctx.scheduled_departure = j * headway_s + self.scheduled_dwell1.get(line_id, 0.0)
            if self.name == "daganzo11":
                next_arrival = self.predictor.predict(line_id, j, 1)[0]
                ctx.predicted_next_departure = next_arrival + self.scheduled_dwell1.get(line_id, 0.0)
            if self.name in ("bartholdi12", "berrebi15"):
                r_max = 1 if self.name == "bartholdi12" else self.horizon
                ctx.predicted_arrivals = self.predictor.predict(line_id, j, r_max)
            decision = hold_comparison(ctx, self.name)
        else:
            raise ConfigurationError(f"unknown strategy '{self.name}'")
        release = self.grid(decision.release_time)
        decision = ReleaseDecision(release, release - arrival)
        lane.prev_release = decision.release_time
        lane.prev_arrival = arrival
        return decision


def make_policy(
    scenario, predictor: ArrivalPredictor | None = None, grid=None
) -> HoldingPolicy:
    """Build the policy described by a scenario's strategy spec."""
    spec = scenario.strategy
    line_groups = {ln.id: ln.group for ln in scenario.lines}
    joint = {g.id: g.joint_headway_s for g in scenario.groups}
    beta1 = {}
    dwell1 = {}
    stop1 = scenario.stops[0]
    for ln in scenario.lines:
        if not ln.serves(1):
            continue
        rate = scenario.board_rate(stop1, ln)
        if ln.group is not None:
            members = scenario.group_members_at(ln.group, 1)
            fsum = sum(m.frequency for m in members)
            rate += scenario.common_rate(stop1, ln.group) * ln.frequency / fsum
        beta1[ln.id] = rate * stop1.board_s_per_patron
        dwell1[ln.id] = (
            stop1.lost_time_s
            + rate * ln.headway_s * stop1.board_s_per_patron
            + scenario.alight_rate(stop1, ln) * ln.headway_s * stop1.alight_s_per_patron
        )
    return HoldingPolicy(
        name=spec.name,
        eta=spec.eta,
        alpha=spec.alpha,
        horizon=spec.horizon,
        predictor=predictor,
        joint_headways=joint,
        line_groups=line_groups,
        beta1=beta1,
        scheduled_dwell1=dwell1,
        grid=grid,
    )
