/**
 * The five figure kinds, each a pure transformation from the simulator's
 * CSV outputs to an SVG document. Nothing is recomputed here beyond
 * subtraction for savings curves; metrics come from the CSVs as written.
 *
 * Per-stop inputs use columns stop,w,W,ci_halfwidth; the strategy scatter
 * reads the sweep summary table. For eta_sweep and gamma_compare the first
 * input is the matching do-nothing baseline and each further input
 * contributes one savings curve.
 */

import { basename } from "node:path";

import { numericColumn, readCsv, requireColumns, Table } from "./csv.js";
import { Chart, extent, PALETTE } from "./svg.js";

export const FIGURE_KINDS = [
  "stop_delay",
  "cumulative_delay",
  "eta_sweep",
  "strategy_scatter",
  "gamma_compare",
] as const;

export type FigureKind = (typeof FIGURE_KINDS)[number];

export interface FigureSpec {
  kind: FigureKind;
  inputs: string[];
  output: string;
}

function label(path: string): string {
  return basename(path).replace(/_per_stop\.csv$|\.csv$/, "");
}

function perStop(path: string): { stops: number[]; w: number[]; W: number[]; table: Table } {
  const table = readCsv(path);
  requireColumns(table, ["stop", "w", "W", "ci_halfwidth"]);
  return {
    stops: numericColumn(table, "stop"),
    w: numericColumn(table, "w"),
    W: numericColumn(table, "W"),
    table,
  };
}

function curveChart(
  inputs: string[],
  column: "w" | "W",
  title: string,
  yLabel: string,
): string {
  if (inputs.length < 1) {
    throw new Error(`${title}: needs at least one per-stop CSV`);
  }
  const series = inputs.map((p) => {
    const data = perStop(p);
    return { label: label(p), stops: data.stops, values: data[column] };
  });
  const allY = series.flatMap((s) => s.values);
  const allX = series.flatMap((s) => s.stops);
  const chart = new Chart(extent(allX, 0.02), extent([0, ...allY]), title, "stop", yLabel);
  chart.axes();
  series.forEach((s, i) => {
    chart.line(s.stops, s.values, PALETTE[i % PALETTE.length], i > 0);
  });
  chart.legend(series.map((s, i) => ({ label: s.label, color: PALETTE[i % PALETTE.length] })));
  return chart.render();
}

function savingsChart(inputs: string[], title: string): string {
  if (inputs.length < 2) {
    throw new Error(`${title}: needs a baseline CSV plus at least one variant`);
  }
  const base = perStop(inputs[0]);
  const series = inputs.slice(1).map((p) => {
    const data = perStop(p);
    if (data.stops.length !== base.stops.length) {
      throw new Error(`${p}: stop count differs from the baseline`);
    }
    return {
      label: label(p),
      stops: data.stops,
      values: data.W.map((v, i) => base.W[i] - v),
    };
  });
  const allY = series.flatMap((s) => s.values);
  const chart = new Chart(
    extent(base.stops, 0.02),
    extent([0, ...allY]),
    title,
    "stop",
    "cumulative delay saved vs do-nothing (min)",
  );
  chart.axes();
  chart.hline(0);
  series.forEach((s, i) => {
    chart.line(s.stops, s.values, PALETTE[i % PALETTE.length], i > 0);
  });
  chart.legend(series.map((s, i) => ({ label: s.label, color: PALETTE[i % PALETTE.length] })));
  return chart.render();
}

function scatterChart(inputs: string[]): string {
  if (inputs.length !== 1) {
    throw new Error("strategy_scatter: needs exactly one summary CSV");
  }
  const table = readCsv(inputs[0]);
  requireColumns(table, ["label", "strategy", "grand_cv", "mean_cum_delay_min"]);
  const xs = numericColumn(table, "mean_cum_delay_min");
  const ys = numericColumn(table, "grand_cv");
  const chart = new Chart(
    extent([0, ...xs]),
    extent([0, ...ys]),
    "headway variation vs cumulative delay",
    "mean cumulative bus delay (min)",
    "grand departure-headway CV",
  );
  const baselineIdx = table.rows.findIndex((r) => r.strategy === "none");
  if (baselineIdx < 0) {
    throw new Error(`${inputs[0]}: no do-nothing row (strategy == 'none')`);
  }
  // points below and left of the do-nothing mark dominate it
  chart.shadeBelowLeft(xs[baselineIdx], ys[baselineIdx], "dominance-region");
  chart.axes();
  table.rows.forEach((row, i) => {
    if (i === baselineIdx) {
      chart.cross(xs[i], ys[i], "do-nothing", "do-nothing");
    } else {
      chart.point(xs[i], ys[i], PALETTE[i % PALETTE.length], row.label);
    }
  });
  return chart.render();
}

export function renderFigure(spec: FigureSpec): string {
  switch (spec.kind) {
    case "stop_delay":
      return curveChart(spec.inputs, "w", "bus delay per stop", "mean delay at stop (min)");
    case "cumulative_delay":
      return curveChart(
        spec.inputs,
        "W",
        "cumulative bus delay",
        "mean cumulative delay (min)",
      );
    case "eta_sweep":
      return savingsChart(spec.inputs, "effect of the release-headway fraction");
    case "gamma_compare":
      return savingsChart(spec.inputs, "holding by line vs by group");
    case "strategy_scatter":
      return scatterChart(spec.inputs);
    default:
      throw new Error(`unknown figure kind '${spec.kind}'`);
  }
}
