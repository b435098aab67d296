#!/usr/bin/env node
/** Renders one experiment from a results CSV into an SVG figure. */

import { readFileSync, realpathSync, writeFileSync } from "node:fs";
import { fileURLToPath } from "node:url";
import { parseResults, SchemaError } from "./csv.js";
import { buildChart, DataError, EXPERIMENTS } from "./render.js";
import { renderChart } from "./chart.js";

const USAGE = `usage: plots <experiment> <csv> <out.svg>
experiments: ${EXPERIMENTS.join(", ")}`;

export function main(argv: string[]): number {
  if (argv.length !== 3) {
    process.stderr.write(USAGE + "\n");
    return 1;
  }
  const [experiment, csvPath, outPath] = argv;
  if (!EXPERIMENTS.includes(experiment)) {
    process.stderr.write(`plots: unknown experiment: ${experiment}\n${USAGE}\n`);
    return 1;
  }

  let text: string;
  try {
    text = readFileSync(csvPath, "utf8");
  } catch (err) {
    process.stderr.write(`plots: cannot read ${csvPath}: ${message(err)}\n`);
    return 2;
  }

  try {
    const rows = parseResults(text);
    const svg = renderChart(buildChart(experiment, rows));
    writeFileSync(outPath, svg, "utf8");
  } catch (err) {
    if (err instanceof SchemaError || err instanceof DataError) {
      process.stderr.write(`plots: ${err.message}\n`);
      return 2;
    }
    throw err;
  }
  return 0;
}

function message(err: unknown): string {
  return err instanceof Error ? err.message : String(err);
}

const invokedDirectly = (() => {
  if (!process.argv[1]) return false;
  try {
    return realpathSync(process.argv[1]) === fileURLToPath(import.meta.url);
  } catch {
    return false;
  }
})();

if (invokedDirectly) {
  process.exit(main(process.argv.slice(2)));
}
