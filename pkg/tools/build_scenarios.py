"""Regenerate the scenario files shipped under src/corridorsim/data/.

Line and link parameters are the measured corridor values.  Per-stop demand
is an illustrative profile (the site's exact flows are not public): it keeps
stops 3, 8 and 10 lighter, stops 4-7 roughly even, and reproduces the
relative traffic intensities across stops, with alighting weight growing
toward the corridor's downstream end.
"""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from corridorsim.scenario import (
    Line,
    LineGroup,
    Phases,
    ReplicationSettings,
    Scenario,
    Stop,
    Link,
    StrategySpec,
    load_scenario,
    save_scenario,
    validate_scenario,
)

DATA = Path(__file__).resolve().parents[1] / "src" / "corridorsim" / "data"

TAU = 5.0
BOARD_S = 3.0
ALIGHT_S = 1.5

LINES = [
    # id, H, cv, group, held, first, last
    ("B2", 200.0, 1.10, "g1", True, 1, 10),
    ("B2A", 200.0, 0.88, "g1", True, 1, 10),
    ("B3", 300.0, 0.98, "g2", True, 1, 9),
    ("B5", 300.0, 0.25, "g2", True, 1, 9),
    ("B16", 300.0, 0.64, "g3", True, 1, 10),
    ("B20", 218.2, 0.94, "g3", True, 1, 10),
    ("B21", 218.2, 1.08, None, False, 4, 10),
    ("B19", 480.0, 1.00, None, False, 1, 1),
]

LINK_MEANS = [53.1, 58.1, 24.2, 32.5, 102.3, 35.5, 69.6, 90.6, 87.5]
LINK_STDS = [11.3, 22.5, 9.5, 8.5, 34.7, 8.5, 24.0, 25.5, 41.5]

# per-stop total boarding / alighting rates (patrons per second, summed over
# lines): heavy at stops 1-2, even across 4-7, dips at 3, 8 and 10, with
# alighting weight growing downstream
BOARD_TOTALS = [0.190, 0.195, 0.130, 0.160, 0.160, 0.160, 0.160, 0.105, 0.150, 0.125]
ALIGHT_TOTALS = [0.050, 0.060, 0.045, 0.070, 0.080, 0.090, 0.100, 0.075, 0.115, 0.105]


def make_lines():
    return tuple(
        Line(id=i, headway_s=h, arrival_cv=c, group=g, held=held,
             first_stop=f, last_stop=l)
        for i, h, c, g, held, f, l in LINES
    )


def make_groups(lines):
    gids = sorted({ln.group for ln in lines if ln.group})
    groups = []
    for gid in gids:
        members = tuple(ln.id for ln in lines if ln.group == gid)
        fsum = sum(1.0 / ln.headway_s for ln in lines if ln.group == gid)
        groups.append(LineGroup(id=gid, members=members, joint_headway_s=1.0 / fsum))
    return tuple(groups)


def demand_profile(lines, n_stops, board_totals, alight_totals):
    stops = []
    for s in range(1, n_stops + 1):
        present = [ln for ln in lines if ln.serves(s)]
        f_tot = sum(ln.frequency for ln in present)
        board_total = board_totals[s - 1]
        alight_total = alight_totals[s - 1]
        group_totals = {}
        line_rates = {}
        alighting = {}
        for ln in present:
            frac = ln.frequency / f_tot
            if ln.group:
                group_totals[ln.group] = group_totals.get(ln.group, 0.0) + round(
                    board_total * frac, 8
                )
            else:
                line_rates[ln.id] = round(board_total * frac, 8)
            alighting[ln.id] = round(alight_total * frac, 8)
        group_totals = {k: round(v, 8) for k, v in group_totals.items()}
        stops.append(
            Stop(
                index=s,
                berths=3,
                lost_time_s=TAU,
                board_s_per_patron=BOARD_S,
                alight_s_per_patron=ALIGHT_S,
                boarding_group_totals=group_totals,
                boarding_line_rates=line_rates,
                alighting_rates=alighting,
            )
        )
    return tuple(stops)


def build_gbrt(demand_factor, name, strategy):
    lines = make_lines()
    stops = demand_profile(lines, 10, BOARD_TOTALS, ALIGHT_TOTALS)
    links = tuple(
        Link(from_stop=i + 1, mean_s=LINK_MEANS[i], std_s=LINK_STDS[i])
        for i in range(9)
    )
    return Scenario(
        name=name,
        time_step_s=1.0,
        gamma=0.5,
        lines=lines,
        groups=make_groups(lines),
        stops=stops,
        links=links,
        strategy=strategy,
        phases=Phases(warmup_s=3600.0, warmup_demand_factor=0.3, rush_s=18000.0),
        replications=ReplicationSettings(10, 200, 5.0e-4),
        demand_factor=demand_factor,
        seed=12345,
    )


def build_homogeneous():
    lines = tuple(
        Line(id=i, headway_s=h, arrival_cv=c, group=g, held=True,
             first_stop=1, last_stop=10)
        for i, h, c, g, _, _, _ in LINES[:6]
    )
    stops = demand_profile(lines, 10, [0.180] * 10, [0.090] * 10)
    links = tuple(Link(from_stop=i, mean_s=60.0, std_s=20.0) for i in range(1, 10))
    return Scenario(
        name="homogeneous",
        time_step_s=1.0,
        gamma=0.5,
        lines=lines,
        groups=make_groups(lines),
        stops=stops,
        links=links,
        strategy=StrategySpec(name="none"),
        phases=Phases(warmup_s=3600.0, warmup_demand_factor=0.3, rush_s=18000.0),
        replications=ReplicationSettings(10, 200, 5.0e-4),
        demand_factor=1.0,
        seed=54321,
    )


def main():
    DATA.mkdir(parents=True, exist_ok=True)
    scenarios = {
        "gbrt": build_gbrt(1.0, "gbrt", StrategySpec(name="min_headway", eta=0.9)),
        "gbrt_prepandemic": build_gbrt(
            1.5, "gbrt_prepandemic", StrategySpec(name="min_headway", eta=0.9)
        ),
        "homogeneous": build_homogeneous(),
    }
    for fname, sc in scenarios.items():
        validate_scenario(sc)
        path = DATA / f"{fname}.scenario"
        save_scenario(sc, path)
        reloaded = load_scenario(path)
        assert reloaded == sc, f"round trip failed for {fname}"
        print(f"wrote {path}")


if __name__ == "__main__":
    main()
