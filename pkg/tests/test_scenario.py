import dataclasses

import pytest
import yaml

from corridorsim.scenario import (
    ScenarioParseError,
    ScenarioValidationError,
    bundled_scenario_path,
    load_scenario,
    save_scenario,
    scale_demand,
    split_common_rates,
    validate_scenario,
)

from conftest import build_scenario, simple_line

LINE_HEADWAYS = [200.0, 200.0, 300.0, 300.0, 300.0, 218.2, 218.2, 480.0]
LINE_ARRIVAL_CVS = [1.10, 0.88, 0.98, 0.25, 0.64, 0.94, 1.08, 1.00]
LINK_MEANS = [53.1, 58.1, 24.2, 32.5, 102.3, 35.5, 69.6, 90.6, 87.5]
LINK_STDS = [11.3, 22.5, 9.5, 8.5, 34.7, 8.5, 24.0, 25.5, 41.5]


@pytest.fixture(scope="module")
def gbrt():
    return load_scenario(bundled_scenario_path("gbrt"))


class TestShippedCorridor:
    def test_line_parameters_exact(self, gbrt):
        assert [ln.headway_s for ln in gbrt.lines] == LINE_HEADWAYS
        assert [ln.arrival_cv for ln in gbrt.lines] == LINE_ARRIVAL_CVS
        assert len(gbrt.lines) == 8

    def test_link_parameters_exact(self, gbrt):
        assert [lk.mean_s for lk in gbrt.links] == LINK_MEANS
        assert [lk.std_s for lk in gbrt.links] == LINK_STDS

    def test_groups(self, gbrt):
        assert [g.id for g in gbrt.groups] == ["g1", "g2", "g3"]
        assert gbrt.group("g1").joint_headway_s == pytest.approx(100.0)
        assert gbrt.group("g2").joint_headway_s == pytest.approx(150.0)
        assert gbrt.group("g3").joint_headway_s == pytest.approx(
            1.0 / (1.0 / 300.0 + 1.0 / 218.2)
        )

    def test_bypassing_lines_are_unheld_and_ungrouped(self, gbrt):
        for line_id in ("B21", "B19"):
            ln = gbrt.line(line_id)
            assert not ln.held
            assert ln.group is None

    def test_gamma_consistency_of_derived_rates(self, gbrt):
        for stop in gbrt.stops:
            for g in gbrt.groups:
                common = gbrt.common_rate(stop, g.id)
                members = gbrt.group_members_at(g.id, stop.index)
                line_sum = sum(gbrt.board_rate(stop, m) for m in members)
                if common + line_sum == 0:
                    continue
                assert abs(common / (common + line_sum) - gbrt.gamma) < 1e-9

    def test_demand_profile_shape(self, gbrt):
        def total(stop):
            return sum(stop.boarding_group_totals.values()) + sum(
                stop.boarding_line_rates.values()
            )

        totals = [total(s) for s in gbrt.stops]
        # stops 3, 8 and 10 are the light ones
        for light in (3, 8, 10):
            assert totals[light - 1] < min(totals[i] for i in (0, 1, 3, 4, 5, 6))

    def test_round_trip(self, gbrt, tmp_path):
        path = tmp_path / "roundtrip.scenario"
        save_scenario(gbrt, path)
        assert load_scenario(path) == gbrt

    def test_other_bundles_load(self):
        assert load_scenario(bundled_scenario_path("gbrt_prepandemic")).demand_factor == 1.5
        assert load_scenario(bundled_scenario_path("homogeneous")).strategy.name == "none"

    def test_unknown_bundle(self):
        with pytest.raises(FileNotFoundError):
            bundled_scenario_path("nope")


class TestValidation:
    def test_zero_berths_rejected(self, gbrt, tmp_path):
        doc = yaml.safe_load(bundled_scenario_path("gbrt").read_text())
        doc["stops"][0]["berths"] = 0
        path = tmp_path / "bad.scenario"
        path.write_text(yaml.safe_dump(doc))
        with pytest.raises(ScenarioValidationError, match="berth count must be >= 1"):
            load_scenario(path)

    def test_gamma_zero_with_common_rates_rejected(self, tmp_path):
        sc = build_scenario(
            [simple_line("A", group="g"), simple_line("B", group="g")],
            gamma=0.0,
        )
        stops = tuple(
            dataclasses.replace(s, boarding_common_rates={"g": 0.1}) for s in sc.stops
        )
        bad = dataclasses.replace(sc, stops=stops)
        with pytest.raises(ScenarioValidationError, match="inconsistent with gamma"):
            validate_scenario(bad)

    def test_explicit_rates_matching_gamma_accepted(self):
        sc = build_scenario(
            [simple_line("A", group="g"), simple_line("B", group="g")],
            gamma=0.5,
            board={"A": 0.05, "B": 0.05},
        )
        stops = tuple(
            dataclasses.replace(s, boarding_common_rates={"g": 0.1}) for s in sc.stops
        )
        validate_scenario(dataclasses.replace(sc, stops=stops))

    def test_malformed_file_is_parse_error(self, tmp_path):
        path = tmp_path / "broken.scenario"
        path.write_text("lines: [unclosed")
        with pytest.raises(ScenarioParseError):
            load_scenario(path)

    def test_missing_key_is_parse_error(self, tmp_path):
        path = tmp_path / "empty.scenario"
        path.write_text("schema_version: 1\n")
        with pytest.raises(ScenarioParseError):
            load_scenario(path)

    def test_unheld_line_in_group_rejected(self):
        sc = build_scenario(
            [simple_line("A", group="g"), simple_line("B", group="g", held=False)],
            validate=False,
        )
        with pytest.raises(ScenarioValidationError, match="bypass"):
            validate_scenario(sc)

    def test_held_line_must_start_at_first_stop(self):
        sc = build_scenario([simple_line("A", first=2, last=2)], n_stops=2, validate=False)
        with pytest.raises(ScenarioValidationError, match="stop 1"):
            validate_scenario(sc)

    def test_unknown_strategy_rejected(self):
        sc = build_scenario([simple_line("A")])
        bad = dataclasses.replace(
            sc, strategy=dataclasses.replace(sc.strategy, name="magic")
        )
        with pytest.raises(ScenarioValidationError, match="unknown strategy"):
            validate_scenario(bad)

    def test_demand_for_unknown_line_rejected(self):
        sc = build_scenario([simple_line("A")], board={"Z": 0.1}, validate=False)
        with pytest.raises(ScenarioValidationError, match="unknown line"):
            validate_scenario(sc)


class TestScaleDemand:
    def test_identity(self, gbrt):
        scaled = scale_demand(gbrt, 1.0)
        stop = gbrt.stops[0]
        for ln in gbrt.lines:
            assert scaled.board_rate(stop, ln) == gbrt.board_rate(stop, ln)

    def test_rates_multiply(self):
        sc = build_scenario([simple_line("A")], board={"A": 0.10})
        up = scale_demand(sc, 1.5)
        down = scale_demand(sc, 0.3)
        stop = sc.stops[0]
        line = sc.lines[0]
        assert up.board_rate(stop, line) == pytest.approx(0.15)
        assert down.board_rate(stop, line) == pytest.approx(0.03)

    def test_composition_exact(self, gbrt):
        a, b = 1.1, 1.7
        twice = scale_demand(scale_demand(gbrt, a), b)
        once = scale_demand(gbrt, a * b)
        for stop in gbrt.stops:
            for ln in gbrt.lines:
                assert twice.board_rate(stop, ln) == once.board_rate(stop, ln)
                assert twice.alight_rate(stop, ln) == once.alight_rate(stop, ln)
            for g in gbrt.groups:
                assert twice.common_rate(stop, g.id) == once.common_rate(stop, g.id)

    def test_negative_rejected(self, gbrt):
        with pytest.raises(ValueError):
            scale_demand(gbrt, -0.5)


class TestSplitCommonRates:
    def test_gamma_zero(self):
        common, lines = split_common_rates(1.0, 0.0, [0.005, 0.005])
        assert common == 0.0
        assert sum(lines) == pytest.approx(1.0)

    def test_gamma_one(self):
        common, lines = split_common_rates(1.0, 1.0, [0.005, 0.005])
        assert common == 1.0
        assert lines == [0.0, 0.0]

    def test_even_split(self):
        common, lines = split_common_rates(1.0, 0.5, [0.004, 0.004])
        assert common == pytest.approx(0.5)
        assert lines == [pytest.approx(0.25), pytest.approx(0.25)]

    def test_frequency_weighting(self):
        common, lines = split_common_rates(1.0, 0.5, [0.006, 0.002])
        assert lines[0] == pytest.approx(3 * lines[1])

    def test_rejects_bad_inputs(self):
        with pytest.raises(ValueError):
            split_common_rates(-1.0, 0.5, [0.01])
        with pytest.raises(ValueError):
            split_common_rates(1.0, 1.5, [0.01])
        with pytest.raises(ValueError):
            split_common_rates(1.0, 0.5, [])
