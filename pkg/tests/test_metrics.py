import math

import numpy as np
import pytest

from corridorsim.metrics import (
    aggregate,
    compute_metrics,
    cumulative_delay,
    grand_headway_cv,
    headway_cv,
    log_from_csv,
    savings,
    stop_delay,
)
from corridorsim.simulator import BusEventLog, run_replication
from corridorsim.scenario import bundled_scenario_path, load_scenario

from conftest import build_scenario, simple_line


def fake_log(rows, buses=None, anchor_stop=0):
    log = BusEventLog("test", "none", anchor_stop, rush_s=1000.0)
    log.rows = rows
    log.buses = buses or []
    return log


def row(line, bus, stop, a, q, S, b, hold=0.0, phase="rush"):
    return (line, bus, stop, a, q, S, b, a + q + S + b, hold, phase)


class TestStopDelay:
    def test_zero_when_no_waiting(self):
        log = fake_log([row("A", 1, 1, 100.0, 0.0, 5.0, 0.0)])
        assert stop_delay(log, 1) == 0.0

    def test_mean_of_queue_plus_blocking(self):
        log = fake_log(
            [
                row("A", 1, 1, 100.0, 10.0, 5.0, 20.0),
                row("A", 2, 1, 200.0, 60.0, 5.0, 30.0),
            ]
        )
        assert stop_delay(log, 1) == pytest.approx(1.0)  # (30 + 90)/2 s = 1 min

    def test_equals_mean_q_plus_mean_b(self):
        sc = load_scenario(bundled_scenario_path("gbrt"))
        log = run_replication(sc, 3, 0)
        rush = [r for r in log.rows if r[9] == "rush" and r[2] == 5]
        expected = (np.mean([r[4] for r in rush]) + np.mean([r[6] for r in rush])) / 60.0
        assert stop_delay(log, 5) == pytest.approx(expected, abs=1e-12)

    def test_missing_stop_reported_as_nan(self):
        log = fake_log([row("A", 1, 1, 100.0, 0.0, 5.0, 0.0)])
        assert math.isnan(stop_delay(log, 9))

    def test_warmup_rows_excluded(self):
        log = fake_log(
            [
                row("A", 1, 1, 100.0, 600.0, 5.0, 0.0, phase="warmup"),
                row("A", 2, 1, 300.0, 30.0, 5.0, 30.0),
            ]
        )
        assert stop_delay(log, 1) == pytest.approx(1.0)


class TestCumulativeDelay:
    def make_record(self, holds, ws):
        rows = []
        for s, w in enumerate(ws, start=1):
            rows.append(row("A", 1, s, 100.0 * s, w * 60.0, 5.0, 0.0, hold=holds))
        buses = [("A", 1, 0.0, 0.0, holds * 60.0, True, True)]
        return compute_metrics(fake_log(rows, buses))

    def test_intercept_is_mean_hold(self):
        record = self.make_record(holds=2.2, ws=[1.0, 2.0, 3.0])
        assert cumulative_delay(record, 0) == pytest.approx(2.2)

    def test_running_sum(self):
        record = self.make_record(holds=0.0, ws=[1.0, 2.0, 3.0])
        assert cumulative_delay(record, 3) == pytest.approx(6.0)

    def test_telescoping(self):
        record = self.make_record(holds=1.5, ws=[0.5, 1.25, 2.0, 0.75])
        for s in range(1, 5):
            diff = cumulative_delay(record, s) - cumulative_delay(record, s - 1)
            assert diff == pytest.approx(record.w_min[s - 1])

    def test_nondecreasing_in_stop(self):
        sc = load_scenario(bundled_scenario_path("gbrt"))
        record = compute_metrics(run_replication(sc, 4, 0))
        assert np.all(np.diff(record.W_min) >= 0)


class TestHeadwayCv:
    def test_constant_headways_zero(self):
        log = fake_log([row("A", j, 1, 100.0 * j, 0.0, 5.0, 0.0) for j in range(1, 6)])
        assert headway_cv(log, "A", 1) == 0.0

    def test_two_gaps(self):
        log = fake_log(
            [
                row("A", 1, 1, 0.0, 0.0, 5.0, 0.0),
                row("A", 2, 1, 100.0, 0.0, 5.0, 0.0),
                row("A", 3, 1, 400.0, 0.0, 5.0, 0.0),
            ]
        )
        # departure gaps 100 and 300: std 100, mean 200
        assert headway_cv(log, "A", 1) == pytest.approx(0.5)

    def test_too_few_departures_excluded(self):
        log = fake_log([row("A", 1, 1, 0.0, 0.0, 5.0, 0.0)])
        assert headway_cv(log, "A", 1) is None

    def test_anchored_hold_shifts_departures(self):
        rows = [
            row("A", 1, 1, 0.0, 0.0, 5.0, 0.0, hold=0.0),
            row("A", 2, 1, 100.0, 0.0, 5.0, 0.0, hold=100.0),
            row("A", 3, 1, 300.0, 0.0, 5.0, 0.0, hold=0.0),
        ]
        # unanchored: gaps (100, 200); anchored at stop 1: gaps (200, 100)
        assert headway_cv(fake_log(rows), "A", 1) == headway_cv(
            fake_log(rows, anchor_stop=1), "A", 1
        )
        shifted = fake_log(
            [
                row("A", 1, 1, 0.0, 0.0, 5.0, 0.0, hold=0.0),
                row("A", 2, 1, 100.0, 0.0, 5.0, 0.0, hold=150.0),
                row("A", 3, 1, 300.0, 0.0, 5.0, 0.0, hold=0.0),
            ],
            anchor_stop=1,
        )
        # departures 5, 255, 305: gaps 250 and 50
        assert shifted.anchor_stop == 1
        assert headway_cv(shifted, "A", 1) == pytest.approx(100.0 / 150.0)

    def test_grand_cv_unweighted_mean(self):
        rows = [row("A", j, 1, 100.0 * j, 0.0, 5.0, 0.0) for j in range(1, 4)]
        rows += [
            row("B", 1, 2, 0.0, 0.0, 5.0, 0.0),
            row("B", 2, 2, 100.0, 0.0, 5.0, 0.0),
            row("B", 3, 2, 400.0, 0.0, 5.0, 0.0),
        ]
        log = fake_log(rows)
        assert grand_headway_cv(log) == pytest.approx((0.0 + 0.5) / 2)


class TestReleasePinning:
    def test_entrance_exit_cv_near_zero_under_full_headway_holding(self):
        # heavy load and eta=1: the entrance releases one bus per scheduled
        # headway, so arrival headways at the first stop barely vary
        import dataclasses

        sc = load_scenario(bundled_scenario_path("gbrt_prepandemic"))
        sc = dataclasses.replace(
            sc, strategy=dataclasses.replace(sc.strategy, eta=1.0)
        )
        held_lines = [ln.id for ln in sc.lines if ln.held and ln.serves(1)]
        log = run_replication(sc, 2, 0)
        baseline = run_replication(
            dataclasses.replace(
                sc, strategy=dataclasses.replace(sc.strategy, name="none")
            ),
            2,
            0,
        )
        for line in held_lines:
            pinned = headway_cv(log, line, 1, on="arrival")
            free = headway_cv(baseline, line, 1, on="arrival")
            assert pinned < 0.15
            assert pinned < 0.3 * free


class TestAggregation:
    def test_aggregate_means_and_cis(self):
        sc = build_scenario(
            [simple_line("A", headway=150.0, cv=0.4)],
            board={"A": 0.02},
            warmup_s=300.0,
            rush_s=900.0,
        )
        records = [compute_metrics(run_replication(sc, 11, rep)) for rep in range(4)]
        agg = aggregate(records)
        assert agg.n_reps == 4
        w = np.vstack([r.w_min for r in records])
        assert np.allclose(agg.w_min, w.mean(axis=0))
        assert np.allclose(agg.w_var_of_mean, w.var(axis=0, ddof=1) / 4)
        assert agg.w_ci.shape == agg.w_min.shape

    def test_savings_subtracts_cumulative_delay(self):
        sc = build_scenario(
            [simple_line("A", headway=150.0, cv=0.4)],
            board={"A": 0.02},
            warmup_s=300.0,
            rush_s=900.0,
        )
        records = [compute_metrics(run_replication(sc, 11, rep)) for rep in range(3)]
        agg = aggregate(records)
        assert np.allclose(savings(agg, agg), 0.0)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            aggregate([])


class TestCsvRoundTrip:
    def test_metrics_reproduced_bit_exactly(self, tmp_path):
        sc = load_scenario(bundled_scenario_path("gbrt"))
        log = run_replication(sc, 6, 0)
        original = compute_metrics(log)
        path = tmp_path / "events.csv"
        log.to_csv(path)
        held = [ln.id for ln in sc.lines if ln.held]
        rebuilt = compute_metrics(
            log_from_csv(path, held_lines=held, anchor_stop=log.anchor_stop)
        )
        assert rebuilt.stops == original.stops
        assert np.array_equal(rebuilt.w_min, original.w_min)
        assert np.array_equal(rebuilt.W_min, original.W_min)
        assert rebuilt.mean_hold_all_min == original.mean_hold_all_min
        assert rebuilt.mean_hold_held_min == original.mean_hold_held_min
        assert rebuilt.grand_cv == original.grand_cv
        assert np.array_equal(rebuilt.arrival_cv, original.arrival_cv)
        assert rebuilt.pair_cv == original.pair_cv
