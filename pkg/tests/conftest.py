import numpy as np
import pytest

from corridorsim.scenario import (
    Line,
    LineGroup,
    Link,
    Phases,
    ReplicationSettings,
    Scenario,
    Stop,
    StrategySpec,
    validate_scenario,
)


def build_scenario(
    lines,
    n_stops=2,
    berths=1,
    link_mean=50.0,
    link_std=0.0,
    board=None,
    alight=None,
    group_totals=None,
    gamma=0.5,
    strategy=None,
    warmup_s=600.0,
    rush_s=2400.0,
    seed=7,
    time_step_s=1.0,
    lost_time_s=5.0,
    board_s=3.0,
    alight_s=1.5,
    validate=True,
):
    """Small scenario for unit tests.  Demand dicts apply to every stop."""
    group_ids = sorted({ln.group for ln in lines if ln.group})
    groups = []
    for gid in group_ids:
        fsum = sum(ln.frequency for ln in lines if ln.group == gid)
        groups.append(
            LineGroup(
                id=gid,
                members=tuple(ln.id for ln in lines if ln.group == gid),
                joint_headway_s=1.0 / fsum,
            )
        )
    stops = tuple(
        Stop(
            index=i,
            berths=berths,
            lost_time_s=lost_time_s,
            board_s_per_patron=board_s,
            alight_s_per_patron=alight_s,
            boarding_line_rates=dict(board or {}),
            boarding_group_totals=dict(group_totals or {}),
            alighting_rates=dict(alight or {}),
        )
        for i in range(1, n_stops + 1)
    )
    links = tuple(
        Link(from_stop=i, mean_s=link_mean, std_s=link_std)
        for i in range(1, n_stops)
    )
    sc = Scenario(
        name="test",
        time_step_s=time_step_s,
        gamma=gamma,
        lines=tuple(lines),
        groups=tuple(groups),
        stops=stops,
        links=links,
        strategy=strategy or StrategySpec(name="none"),
        phases=Phases(warmup_s=warmup_s, warmup_demand_factor=0.3, rush_s=rush_s),
        replications=ReplicationSettings(3, 20, 5.0e-4),
        seed=seed,
    )
    if validate:
        validate_scenario(sc)
    return sc


def simple_line(
    line_id="A", headway=120.0, cv=0.0, group=None, held=True, first=1, last=2
):
    return Line(
        id=line_id,
        headway_s=headway,
        arrival_cv=cv,
        group=group,
        held=held,
        first_stop=first,
        last_stop=last,
    )


@pytest.fixture
def rng():
    return np.random.default_rng(2024)


# -- acceptance reporting ---------------------------------------------------

_acceptance_results = {}


def pytest_runtest_logreport(report):
    if report.when != "call":
        return
    marker = getattr(report, "_acceptance_id", None)
    if marker:
        _acceptance_results[marker] = report.outcome


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("acceptance")
    if mark and mark.args:
        report._acceptance_id = mark.args[0]


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_results:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for crit in sorted(_acceptance_results):
        outcome = _acceptance_results[crit]
        word = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"[{crit}] {word}")
