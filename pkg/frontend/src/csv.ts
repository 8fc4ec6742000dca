/**
 * Strict reader for the simulator's CSV contracts.
 *
 * Files are plain comma-separated tables with a header row; no quoting is
 * used by the producer. Numeric parsing is applied per requested column.
 */

import { readFileSync } from "node:fs";

export interface Table {
  path: string;
  columns: string[];
  rows: Record<string, string>[];
}

export function readCsv(path: string): Table {
  const text = readFileSync(path, "utf8").trim();
  if (text === "") {
    throw new Error(`${path}: file is empty`);
  }
  const lines = text.split(/\r?\n/);
  const columns = lines[0].split(",").map((c) => c.trim());
  const rows = lines.slice(1).map((line, i) => {
    const cells = line.split(",");
    if (cells.length !== columns.length) {
      throw new Error(
        `${path}: row ${i + 1} has ${cells.length} cells, expected ${columns.length}`,
      );
    }
    const row: Record<string, string> = {};
    columns.forEach((c, k) => (row[c] = cells[k].trim()));
    return row;
  });
  if (rows.length === 0) {
    throw new Error(`${path}: no data rows`);
  }
  return { path, columns, rows };
}

export function requireColumns(table: Table, needed: string[]): void {
  for (const c of needed) {
    if (!table.columns.includes(c)) {
      throw new Error(`${table.path}: missing column '${c}'`);
    }
  }
}

export function numericColumn(table: Table, column: string): number[] {
  requireColumns(table, [column]);
  return table.rows.map((row, i) => {
    const v = Number(row[column]);
    if (!Number.isFinite(v)) {
      throw new Error(
        `${table.path}: column '${column}' row ${i + 1} is not a number: '${row[column]}'`,
      );
    }
    return v;
  });
}
