"""Experiment description: lines, line groups, stops, links, demand, phases.

A scenario is loaded from a versioned YAML document (``schema_version: 1``)
and is immutable afterwards, so it can be shared read-only across parallel
replications.  Demand is stored as base rates plus a global multiplier;
:func:`scale_demand` composes multipliers so that scaling by ``a`` then ``b``
is bit-identical to scaling by ``a * b``.

Boarding demand for lines that belong to a group is specified as one total
rate per (group, stop) and split by the common-line share ``gamma``:
the common pool receives ``gamma * total`` and the remainder is divided
among the member lines in proportion to their service frequencies.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

import yaml

__all__ = [
    "ScenarioError",
    "ScenarioParseError",
    "ScenarioValidationError",
    "Line",
    "LineGroup",
    "Stop",
    "Link",
    "StrategySpec",
    "Phases",
    "ReplicationSettings",
    "Scenario",
    "split_common_rates",
    "load_scenario",
    "save_scenario",
    "scale_demand",
    "bundled_scenario_path",
]

SCHEMA_VERSION = 1

STRATEGY_NAMES = frozenset(
    {
        "none",
        "min_headway",
        "min_headway_group",
        "schedule_based",
        "daganzo09",
        "xuan11",
        "daganzo11",
        "bartholdi12",
        "berrebi15",
    }
)

PREDICTION_MODES = frozenset({"perfect", "schedule"})


class ScenarioError(ValueError):
    """Base class for scenario problems."""


class ScenarioParseError(ScenarioError):
    """The file is not a well-formed scenario document."""


class ScenarioValidationError(ScenarioError):
    """The document parsed but violates a scenario invariant."""


@dataclass(frozen=True)
class Line:
    id: str
    headway_s: float
    arrival_cv: float
    group: str | None
    held: bool
    first_stop: int
    last_stop: int

    @property
    def frequency(self) -> float:
        """Buses per second."""
        return 1.0 / self.headway_s

    def serves(self, stop_index: int) -> bool:
        return self.first_stop <= stop_index <= self.last_stop


@dataclass(frozen=True)
class LineGroup:
    id: str
    members: tuple[str, ...]
    joint_headway_s: float  # 1 / sum of member frequencies


@dataclass(frozen=True)
class Stop:
    index: int
    berths: int
    lost_time_s: float
    board_s_per_patron: float
    alight_s_per_patron: float
    # base rates in patrons/second, before the global demand factor;
    # per (stop, group) demand is given either as a total to be split by
    # gamma (group_totals) or as explicit common + per-line rates
    boarding_group_totals: dict[str, float] = field(default_factory=dict)
    boarding_common_rates: dict[str, float] = field(default_factory=dict)
    boarding_line_rates: dict[str, float] = field(default_factory=dict)
    alighting_rates: dict[str, float] = field(default_factory=dict)


@dataclass(frozen=True)
class Link:
    from_stop: int
    mean_s: float
    std_s: float


@dataclass(frozen=True)
class StrategySpec:
    name: str
    eta: float = 1.0
    alpha: float = 0.5
    horizon: int = 5  # look-ahead bus count for prediction-based rules
    prediction: str = "schedule"


@dataclass(frozen=True)
class Phases:
    warmup_s: float
    warmup_demand_factor: float
    rush_s: float


@dataclass(frozen=True)
class ReplicationSettings:
    min_reps: int = 10
    max_reps: int = 200
    variance_threshold_min2: float = 5.0e-4


@dataclass(frozen=True)
class Scenario:
    name: str
    time_step_s: float
    gamma: float
    lines: tuple[Line, ...]
    groups: tuple[LineGroup, ...]
    stops: tuple[Stop, ...]
    links: tuple[Link, ...]
    strategy: StrategySpec
    phases: Phases
    replications: ReplicationSettings
    demand_factor: float = 1.0
    seed: int = 0

    # -- lookups ---------------------------------------------------------

    def line(self, line_id: str) -> Line:
        for ln in self.lines:
            if ln.id == line_id:
                return ln
        raise KeyError(line_id)

    def group(self, group_id: str) -> LineGroup:
        for g in self.groups:
            if g.id == group_id:
                return g
        raise KeyError(group_id)

    @property
    def num_stops(self) -> int:
        return len(self.stops)

    def group_members_at(self, group_id: str, stop_index: int) -> list[Line]:
        g = self.group(group_id)
        return [
            self.line(m) for m in g.members if self.line(m).serves(stop_index)
        ]

    # -- effective demand rates (demand factor and gamma split applied) --

    def board_rate(self, stop: Stop, line: Line) -> float:
        """Line-specific boarding rate at a stop, patrons/second."""
        if not line.serves(stop.index):
            return 0.0
        rate = stop.boarding_line_rates.get(line.id, 0.0)
        if line.group is not None:
            total = stop.boarding_group_totals.get(line.group, 0.0)
            if total > 0.0:
                members = self.group_members_at(line.group, stop.index)
                fsum = sum(m.frequency for m in members)
                rate += (1.0 - self.gamma) * total * line.frequency / fsum
        return rate * self.demand_factor

    def common_rate(self, stop: Stop, group_id: str) -> float:
        """Common-line boarding rate for a group at a stop, patrons/second."""
        total = stop.boarding_group_totals.get(group_id, 0.0)
        explicit = stop.boarding_common_rates.get(group_id, 0.0)
        return (self.gamma * total + explicit) * self.demand_factor

    def alight_rate(self, stop: Stop, line: Line) -> float:
        return stop.alighting_rates.get(line.id, 0.0) * self.demand_factor


def split_common_rates(
    total_rate: float, gamma: float, member_frequencies: list[float]
) -> tuple[float, list[float]]:
    """Split a group total into (common rate, per-line rates).

    The common pool gets ``gamma * total``; the remainder is shared among
    member lines in proportion to their frequencies.
    """
    if total_rate < 0:
        raise ValueError(f"total rate must be >= 0, got {total_rate}")
    if not 0.0 <= gamma <= 1.0:
        raise ValueError(f"gamma must lie in [0, 1], got {gamma}")
    if not member_frequencies:
        raise ValueError("group must have at least one member line")
    common = gamma * total_rate
    fsum = sum(member_frequencies)
    per_line = [(1.0 - gamma) * total_rate * f / fsum for f in member_frequencies]
    return common, per_line


# ---------------------------------------------------------------------------
# loading / validation
# ---------------------------------------------------------------------------


def _fail(msg: str):
    raise ScenarioValidationError(msg)


def _require(doc: dict, key: str, where: str):
    if key not in doc:
        raise ScenarioParseError(f"missing key '{key}' in {where}")
    return doc[key]


def _build_scenario(doc: dict) -> Scenario:
    if not isinstance(doc, dict):
        raise ScenarioParseError("scenario document must be a mapping")
    version = _require(doc, "schema_version", "scenario")
    if version != SCHEMA_VERSION:
        _fail(f"unsupported schema_version {version}, expected {SCHEMA_VERSION}")

    gamma = float(doc.get("gamma", 0.5))
    lines = []
    for entry in _require(doc, "lines", "scenario"):
        stops_range = _require(entry, "stops", f"line {entry.get('id')}")
        lines.append(
            Line(
                id=str(_require(entry, "id", "line")),
                headway_s=float(_require(entry, "headway_s", f"line {entry.get('id')}")),
                arrival_cv=float(_require(entry, "arrival_cv", f"line {entry.get('id')}")),
                group=entry.get("group"),
                held=bool(entry.get("held", True)),
                first_stop=int(stops_range[0]),
                last_stop=int(stops_range[1]),
            )
        )

    group_ids = sorted({ln.group for ln in lines if ln.group is not None})
    groups = []
    for gid in group_ids:
        members = tuple(ln.id for ln in lines if ln.group == gid)
        fsum = sum(1.0 / ln.headway_s for ln in lines if ln.group == gid)
        groups.append(LineGroup(id=gid, members=members, joint_headway_s=1.0 / fsum))

    stops = []
    for entry in _require(doc, "stops", "scenario"):
        idx = int(_require(entry, "index", "stop"))
        boarding = entry.get("boarding", {}) or {}
        stops.append(
            Stop(
                index=idx,
                berths=int(_require(entry, "berths", f"stop {idx}")),
                lost_time_s=float(entry.get("lost_time_s", 5.0)),
                board_s_per_patron=float(entry.get("board_s_per_patron", 3.0)),
                alight_s_per_patron=float(entry.get("alight_s_per_patron", 1.5)),
                boarding_group_totals={
                    str(k): float(v)
                    for k, v in (boarding.get("group_totals", {}) or {}).items()
                },
                boarding_common_rates={
                    str(k): float(v)
                    for k, v in (boarding.get("common", {}) or {}).items()
                },
                boarding_line_rates={
                    str(k): float(v)
                    for k, v in (boarding.get("lines", {}) or {}).items()
                },
                alighting_rates={
                    str(k): float(v)
                    for k, v in (entry.get("alighting", {}) or {}).items()
                },
            )
        )

    links = tuple(
        Link(
            from_stop=int(_require(entry, "from", "link")),
            mean_s=float(_require(entry, "mean_s", "link")),
            std_s=float(_require(entry, "std_s", "link")),
        )
        for entry in _require(doc, "links", "scenario")
    )

    strat = doc.get("strategy", {}) or {}
    strategy = StrategySpec(
        name=str(strat.get("name", "none")),
        eta=float(strat.get("eta", 1.0)),
        alpha=float(strat.get("alpha", 0.5)),
        horizon=int(strat.get("horizon", 5)),
        prediction=str(strat.get("prediction", "schedule")),
    )

    ph = _require(doc, "phases", "scenario")
    phases = Phases(
        warmup_s=float(_require(ph, "warmup_s", "phases")),
        warmup_demand_factor=float(ph.get("warmup_demand_factor", 0.3)),
        rush_s=float(_require(ph, "rush_s", "phases")),
    )

    reps = doc.get("replications", {}) or {}
    replications = ReplicationSettings(
        min_reps=int(reps.get("min", 10)),
        max_reps=int(reps.get("max", 200)),
        variance_threshold_min2=float(reps.get("variance_threshold_min2", 5.0e-4)),
    )

    return Scenario(
        name=str(doc.get("name", "unnamed")),
        time_step_s=float(doc.get("time_step_s", 1.0)),
        gamma=gamma,
        lines=tuple(lines),
        groups=tuple(groups),
        stops=tuple(stops),
        links=links,
        strategy=strategy,
        phases=phases,
        replications=replications,
        demand_factor=float(doc.get("demand_factor", 1.0)),
        seed=int(doc.get("seed", 0)),
    )


def validate_scenario(sc: Scenario) -> None:
    """Check every scenario invariant; raise ScenarioValidationError on the
    first violation, naming it."""
    n = sc.num_stops
    if n == 0:
        _fail("scenario must define at least one stop")
    for i, stop in enumerate(sc.stops, start=1):
        if stop.index != i:
            _fail(f"stop indices must be 1..N in order, found {stop.index} at position {i}")
        if stop.berths < 1:
            _fail(f"stop {stop.index}: berth count must be >= 1")
        if stop.lost_time_s < 0 or stop.board_s_per_patron < 0 or stop.alight_s_per_patron < 0:
            _fail(f"stop {stop.index}: service times must be >= 0")
        for name, rates in (
            ("group_totals", stop.boarding_group_totals),
            ("common", stop.boarding_common_rates),
            ("lines", stop.boarding_line_rates),
            ("alighting", stop.alighting_rates),
        ):
            for key, rate in rates.items():
                if rate < 0:
                    _fail(f"stop {stop.index}: {name}[{key}] rate must be >= 0")

    if len(sc.links) != n - 1:
        _fail(f"expected {n - 1} links for {n} stops, got {len(sc.links)}")
    for i, link in enumerate(sc.links, start=1):
        if link.from_stop != i:
            _fail(f"links must cover stops 1..N-1 in order, found from={link.from_stop}")
        if link.mean_s <= 0:
            _fail(f"link {link.from_stop}: mean travel time must be > 0")
        if link.std_s < 0:
            _fail(f"link {link.from_stop}: travel time std must be >= 0")

    seen = set()
    for ln in sc.lines:
        if ln.id in seen:
            _fail(f"duplicate line id {ln.id}")
        seen.add(ln.id)
        if ln.headway_s <= 0:
            _fail(f"line {ln.id}: headway must be > 0")
        if ln.arrival_cv < 0:
            _fail(f"line {ln.id}: arrival cv must be >= 0")
        if not (1 <= ln.first_stop <= ln.last_stop <= n):
            _fail(f"line {ln.id}: served stops must be a contiguous range within 1..{n}")
        if ln.group is not None and not ln.held:
            _fail(f"line {ln.id}: lines that bypass the control point cannot belong to a group")
        if ln.held and ln.first_stop != 1:
            _fail(f"line {ln.id}: held lines must enter the corridor at stop 1")

    for g in sc.groups:
        for member in g.members:
            ln = sc.line(member)
            if g.joint_headway_s > ln.headway_s + 1e-12:
                _fail(f"group {g.id}: joint headway exceeds member headway {ln.id}")

    if not 0.0 <= sc.gamma <= 1.0:
        _fail(f"gamma must lie in [0, 1], got {sc.gamma}")
    if sc.demand_factor < 0:
        _fail(f"demand factor must be >= 0, got {sc.demand_factor}")
    if sc.phases.warmup_s <= 0 or sc.phases.rush_s <= 0:
        _fail("phase durations must be > 0")
    if sc.time_step_s <= 0:
        _fail("time step must be > 0")
    if sc.strategy.name not in STRATEGY_NAMES:
        _fail(f"unknown strategy '{sc.strategy.name}'")
    if not 0.0 <= sc.strategy.eta <= 1.0:
        _fail(f"strategy eta must lie in [0, 1], got {sc.strategy.eta}")
    if sc.strategy.horizon < 1:
        _fail(f"strategy horizon must be >= 1, got {sc.strategy.horizon}")
    if sc.strategy.prediction not in PREDICTION_MODES:
        _fail(f"unknown prediction mode '{sc.strategy.prediction}'")
    if sc.replications.min_reps < 2 or sc.replications.max_reps < sc.replications.min_reps:
        _fail("replication counts must satisfy 2 <= min <= max")
    if sc.replications.variance_threshold_min2 <= 0:
        _fail("variance threshold must be > 0")

    # demand references and gamma consistency
    line_ids = {ln.id for ln in sc.lines}
    group_ids = {g.id for g in sc.groups}
    for stop in sc.stops:
        for gid, total in stop.boarding_group_totals.items():
            if gid not in group_ids:
                _fail(f"stop {stop.index}: demand for unknown group '{gid}'")
            members = sc.group_members_at(gid, stop.index)
            if not members and total > 0:
                _fail(f"stop {stop.index}: group '{gid}' has demand but no member line serves the stop")
            if total > 0 and gid in stop.boarding_common_rates:
                _fail(f"stop {stop.index}: group '{gid}' demand given both as total and explicit rates")
        for gid, common in stop.boarding_common_rates.items():
            if gid not in group_ids:
                _fail(f"stop {stop.index}: common rate for unknown group '{gid}'")
            members = sc.group_members_at(gid, stop.index)
            line_sum = sum(stop.boarding_line_rates.get(m.id, 0.0) for m in members)
            denom = common + line_sum
            if denom > 0 and abs(common / denom - sc.gamma) > 1e-9:
                _fail(
                    f"stop {stop.index}: explicit common-line rate of group '{gid}' "
                    f"is inconsistent with gamma={sc.gamma}"
                )
        for lid in list(stop.boarding_line_rates) + list(stop.alighting_rates):
            if lid not in line_ids:
                _fail(f"stop {stop.index}: demand for unknown line '{lid}'")


def load_scenario(path: str | Path) -> Scenario:
    """Load and validate a scenario file."""
    path = Path(path)
    try:
        doc = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ScenarioParseError(f"{path}: {exc}") from exc
    sc = _build_scenario(doc)
    validate_scenario(sc)
    return sc


def _scenario_to_doc(sc: Scenario) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "name": sc.name,
        "time_step_s": sc.time_step_s,
        "gamma": sc.gamma,
        "demand_factor": sc.demand_factor,
        "seed": sc.seed,
        "phases": {
            "warmup_s": sc.phases.warmup_s,
            "warmup_demand_factor": sc.phases.warmup_demand_factor,
            "rush_s": sc.phases.rush_s,
        },
        "replications": {
            "min": sc.replications.min_reps,
            "max": sc.replications.max_reps,
            "variance_threshold_min2": sc.replications.variance_threshold_min2,
        },
        "strategy": {
            "name": sc.strategy.name,
            "eta": sc.strategy.eta,
            "alpha": sc.strategy.alpha,
            "horizon": sc.strategy.horizon,
            "prediction": sc.strategy.prediction,
        },
        "lines": [
            {
                "id": ln.id,
                "headway_s": ln.headway_s,
                "arrival_cv": ln.arrival_cv,
                "group": ln.group,
                "held": ln.held,
                "stops": [ln.first_stop, ln.last_stop],
            }
            for ln in sc.lines
        ],
        "stops": [
            {
                "index": st.index,
                "berths": st.berths,
                "lost_time_s": st.lost_time_s,
                "board_s_per_patron": st.board_s_per_patron,
                "alight_s_per_patron": st.alight_s_per_patron,
                "boarding": {
                    "group_totals": dict(sorted(st.boarding_group_totals.items())),
                    "common": dict(sorted(st.boarding_common_rates.items())),
                    "lines": dict(sorted(st.boarding_line_rates.items())),
                },
                "alighting": dict(sorted(st.alighting_rates.items())),
            }
            for st in sc.stops
        ],
        "links": [
            {"from": lk.from_stop, "mean_s": lk.mean_s, "std_s": lk.std_s}
            for lk in sc.links
        ],
    }


def save_scenario(sc: Scenario, path: str | Path) -> None:
    Path(path).write_text(yaml.safe_dump(_scenario_to_doc(sc), sort_keys=False))


def scale_demand(sc: Scenario, factor: float) -> Scenario:
    """Scenario with all boarding, common-line and alighting rates multiplied
    by ``factor``.  Factors compose exactly: scaling by a then b equals
    scaling by a*b on every rate."""
    if factor < 0:
        raise ValueError(f"demand factor must be >= 0, got {factor}")
    return replace(sc, demand_factor=sc.demand_factor * factor)


def bundled_scenario_path(name: str) -> Path:
    """Path of a scenario file shipped with the package (e.g. 'gbrt')."""
    path = Path(__file__).parent / "data" / f"{name}.scenario"
    if not path.exists():
        raise FileNotFoundError(f"no bundled scenario named '{name}'")
    return path
