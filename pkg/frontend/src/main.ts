/**
 * CLI: render one figure from simulator CSV outputs.
 *
 *   node dist/main.js --kind stop_delay --in baseline_per_stop.csv \
 *       --in holding_per_stop.csv --out stop_delay.svg
 *
 * --in may be repeated; order matters for eta_sweep/gamma_compare (first is
 * the do-nothing baseline). Exits 2 on usage errors, 1 on render failures;
 * no output file is written unless rendering succeeded.
 */

import { writeFileSync } from "node:fs";

import { FIGURE_KINDS, FigureKind, renderFigure } from "./figures.js";

function usage(): void {
  console.error(
    `usage: main.js --kind <${FIGURE_KINDS.join("|")}> --in <csv> [--in <csv> ...] --out <svg>`,
  );
}

export function run(argv: string[]): number {
  let kind: string | undefined;
  const inputs: string[] = [];
  let output: string | undefined;
  for (let i = 0; i < argv.length; i++) {
    switch (argv[i]) {
      case "--kind":
        kind = argv[++i];
        break;
      case "--in":
        inputs.push(argv[++i]);
        break;
      case "--out":
        output = argv[++i];
        break;
      default:
        console.error(`unknown argument '${argv[i]}'`);
        usage();
        return 2;
    }
  }
  if (!kind || !output || inputs.length === 0 || inputs.some((p) => p === undefined)) {
    usage();
    return 2;
  }
  if (!(FIGURE_KINDS as readonly string[]).includes(kind)) {
    console.error(`unknown figure kind '${kind}'`);
    usage();
    return 2;
  }
  try {
    const svg = renderFigure({ kind: kind as FigureKind, inputs, output });
    writeFileSync(output, svg);
  } catch (err) {
    console.error(`error: ${err instanceof Error ? err.message : err}`);
    return 1;
  }
  console.error(`wrote ${output}`);
  return 0;
}

if (process.argv[1] && process.argv[1].endsWith("main.js")) {
  process.exit(run(process.argv.slice(2)));
}
