"""Performance metrics computed from bus event logs.

All metrics are pure functions of a replication's event log: per-stop mean
delay (queueing plus blocking, the part of a stop visit that is neither
service nor travel), cumulative delay whose intercept is the mean holding
delay, and coefficients of variation of same-line headways.  Times are
seconds in the log and minutes in the records, matching how results are
reported.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "MetricsRecord",
    "AggregateMetrics",
    "stop_delay",
    "cumulative_delay",
    "headway_cv",
    "grand_headway_cv",
    "compute_metrics",
    "aggregate",
    "savings",
    "log_from_csv",
]

Z_95 = 1.959963984540054  # two-sided 95% normal quantile


def _rush_rows(log):
    return [r for r in log.rows if r[9] == "rush"]


def stop_delay(log, stop: int) -> float:
    """Mean of (d - a - S) over rush buses at the stop, in minutes.

    Identical to mean queueing plus mean blocking delay.  NaN when no rush
    bus visited the stop (reported as missing, not an error).
    """
    delays = [r[7] - r[3] - r[5] for r in _rush_rows(log) if r[2] == stop]
    if not delays:
        return float("nan")
    return float(np.mean(delays)) / 60.0


def cumulative_delay(record: "MetricsRecord", stop: int) -> float:
    """Mean hold plus the running sum of stop delays through ``stop``;
    ``stop=0`` gives the holding intercept alone.  Minutes."""
    if stop == 0:
        return record.hold_intercept_min
    return record.hold_intercept_min + float(np.sum(record.w_min[:stop]))


def _effective_departures(log, rows):
    """Departure instants including any hold applied at the anchor stop."""
    if log.anchor_stop:
        return [r[7] + r[8] if r[2] == log.anchor_stop else r[7] for r in rows]
    return [r[7] for r in rows]


def headway_cv(log, line: str, stop: int, on: str = "departure") -> float | None:
    """Coefficient of variation of consecutive same-line headways at a stop,
    over rush buses.  None when fewer than two buses qualify (the pair is
    then excluded from averages)."""
    rows = [r for r in _rush_rows(log) if r[0] == line and r[2] == stop]
    if len(rows) < 2:
        return None
    if on == "departure":
        times = _effective_departures(log, rows)
    elif on == "arrival":
        times = [r[3] for r in rows]
    else:
        raise ValueError(f"unknown headway column '{on}'")
    gaps = np.diff(np.sort(np.asarray(times, dtype=float)))
    mean = gaps.mean()
    if mean <= 0:
        return None
    return float(gaps.std() / mean)


def grand_headway_cv(log, on: str = "departure") -> float:
    """Unweighted mean of the per-(line, stop) headway CVs."""
    lines = sorted({r[0] for r in log.rows})
    stops = sorted({r[2] for r in log.rows})
    cvs = []
    for line in lines:
        for stop in stops:
            cv = headway_cv(log, line, stop, on=on)
            if cv is not None:
                cvs.append(cv)
    return float(np.mean(cvs)) if cvs else float("nan")


@dataclass(eq=False)
class MetricsRecord:
    """One replication's metrics.  Arrays are indexed by stop order."""

    stops: tuple
    w_min: np.ndarray
    W_min: np.ndarray
    mean_hold_all_min: float
    mean_hold_held_min: float
    hold_intercept_min: float
    grand_cv: float
    arrival_cv: np.ndarray  # per stop, averaged over lines
    pair_cv: dict = field(default_factory=dict)


def compute_metrics(log, holds_over: str = "all") -> MetricsRecord:
    """Metrics of one replication.

    ``holds_over`` picks whose holding delays form the cumulative-delay
    intercept: every rush bus ("all", the default) or only buses of held
    lines ("held").
    """
    stops = tuple(sorted({r[2] for r in log.rows}))
    rush = _rush_rows(log)
    w = []
    for s in stops:
        delays = [r[7] - r[3] - r[5] for r in rush if r[2] == s]
        w.append(np.mean(delays) / 60.0 if delays else float("nan"))
    w = np.asarray(w)

    rush_buses = [b for b in log.buses if b[5]]
    holds_all = [b[4] for b in rush_buses]
    holds_held = [b[4] for b in rush_buses if b[6]]
    mean_hold_all = float(np.mean(holds_all)) / 60.0 if holds_all else 0.0
    mean_hold_held = float(np.mean(holds_held)) / 60.0 if holds_held else 0.0
    intercept = mean_hold_held if holds_over == "held" else mean_hold_all
    W = intercept + np.cumsum(w)

    lines = sorted({r[0] for r in log.rows})
    pair_cv = {}
    arrival_cvs = []
    for s in stops:
        per_stop = []
        for line in lines:
            cv = headway_cv(log, line, s)
            if cv is not None:
                pair_cv[(line, s)] = cv
            acv = headway_cv(log, line, s, on="arrival")
            if acv is not None:
                per_stop.append(acv)
        arrival_cvs.append(np.mean(per_stop) if per_stop else float("nan"))
    grand = float(np.mean(list(pair_cv.values()))) if pair_cv else float("nan")

    return MetricsRecord(
        stops=stops,
        w_min=w,
        W_min=W,
        mean_hold_all_min=mean_hold_all,
        mean_hold_held_min=mean_hold_held,
        hold_intercept_min=intercept,
        grand_cv=grand,
        arrival_cv=np.asarray(arrival_cvs),
        pair_cv=pair_cv,
    )


@dataclass(eq=False)
class AggregateMetrics:
    """Across-replication means with 95% confidence half-widths."""

    n_reps: int
    stops: tuple
    w_min: np.ndarray
    w_ci: np.ndarray
    w_var_of_mean: np.ndarray
    W_min: np.ndarray
    W_ci: np.ndarray
    mean_hold_all_min: float
    mean_hold_held_min: float
    grand_cv: float
    grand_cv_ci: float
    arrival_cv: np.ndarray


def _ci(values: np.ndarray) -> np.ndarray:
    n = values.shape[0]
    if n < 2:
        return np.zeros(values.shape[1:]) if values.ndim > 1 else 0.0
    return Z_95 * values.std(axis=0, ddof=1) / math.sqrt(n)


def aggregate(records: list[MetricsRecord]) -> AggregateMetrics:
    if not records:
        raise ValueError("no replications to aggregate")
    stops = records[0].stops
    w = np.vstack([r.w_min for r in records])
    W = np.vstack([r.W_min for r in records])
    cv = np.array([r.grand_cv for r in records])
    n = len(records)
    return AggregateMetrics(
        n_reps=n,
        stops=stops,
        w_min=w.mean(axis=0),
        w_ci=_ci(w),
        w_var_of_mean=w.var(axis=0, ddof=1) / n if n > 1 else np.zeros(w.shape[1]),
        W_min=W.mean(axis=0),
        W_ci=_ci(W),
        mean_hold_all_min=float(np.mean([r.mean_hold_all_min for r in records])),
        mean_hold_held_min=float(np.mean([r.mean_hold_held_min for r in records])),
        grand_cv=float(cv.mean()),
        grand_cv_ci=float(_ci(cv)),
        arrival_cv=np.vstack([r.arrival_cv for r in records]).mean(axis=0),
    )


def savings(baseline: AggregateMetrics, alternative: AggregateMetrics) -> np.ndarray:
    """Per-stop cumulative-delay savings of ``alternative`` over the
    do-nothing baseline, minutes.  Meaningful when both were run on matched
    seeds (common random numbers)."""
    return baseline.W_min - alternative.W_min


class _CsvLog:
    """Event log reconstructed from a dumped CSV (metadata supplied by the
    caller, since the CSV carries rows only)."""

    def __init__(self, rows, buses, anchor_stop):
        self.rows = rows
        self.buses = buses
        self.anchor_stop = anchor_stop


def log_from_csv(path, held_lines=None, anchor_stop: int = 0):
    """Rebuild a metrics-ready log from a dumped event CSV.

    ``held_lines`` restores the per-bus held flag (it is not a CSV column);
    metrics recomputed from the result match the original record bit for
    bit, float formatting being exact (repr round-trip).
    """
    held_lines = set(held_lines or ())
    rows = []
    with open(path) as fh:
        reader = csv.DictReader(fh)
        for rec in reader:
            rows.append(
                (
                    rec["line"],
                    int(rec["bus"]),
                    int(rec["stop"]),
                    float(rec["a"]),
                    float(rec["q"]),
                    float(rec["S"]),
                    float(rec["b"]),
                    float(rec["d"]),
                    float(rec["hold"]),
                    rec["phase"],
                )
            )
    buses = {}
    for r in rows:
        key = (r[0], r[1])
        if key not in buses:
            buses[key] = (r[0], r[1], 0.0, 0.0, r[8], r[9] == "rush", r[0] in held_lines)
    return _CsvLog(rows, list(buses.values()), anchor_stop)
