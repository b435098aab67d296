/** Strict reader for the benchmark results table. */

export const COLUMNS = [
  "experiment",
  "policy",
  "sweep",
  "seed",
  "metric",
  "value",
] as const;

export interface ResultRow {
  experiment: string;
  policy: string;
  sweep: string;
  seed: number;
  metric: string;
  value: number;
}

export class SchemaError extends Error {}

/**
 * Parse the results CSV. The format is flat: no quoting, no embedded
 * separators, one header line. Anything else is a schema error that names
 * what is missing.
 */
export function parseResults(text: string): ResultRow[] {
  const lines = text.split(/\r?\n/).filter((line) => line.length > 0);
  if (lines.length === 0) {
    throw new SchemaError(`empty input: expected header ${COLUMNS.join(",")}`);
  }
  const header = lines[0].split(",");
  const missing = COLUMNS.filter((c) => !header.includes(c));
  if (missing.length > 0) {
    throw new SchemaError(
      `missing columns: ${missing.join(", ")} (header was: ${lines[0]})`,
    );
  }
  const extra = header.filter((c) => !(COLUMNS as readonly string[]).includes(c));
  if (extra.length > 0) {
    throw new SchemaError(`unknown columns: ${extra.join(", ")}`);
  }
  const index = COLUMNS.map((c) => header.indexOf(c));
  const rows: ResultRow[] = [];
  for (let i = 1; i < lines.length; i++) {
    const fields = lines[i].split(",");
    if (fields.length !== header.length) {
      throw new SchemaError(
        `line ${i + 1}: expected ${header.length} fields, got ${fields.length}`,
      );
    }
    const [experiment, policy, sweep, seedText, metric, valueText] = index.map(
      (k) => fields[k],
    );
    const seed = Number(seedText);
    const value = Number(valueText);
    if (!Number.isInteger(seed)) {
      throw new SchemaError(`line ${i + 1}: seed is not an integer: ${seedText}`);
    }
    if (Number.isNaN(value)) {
      throw new SchemaError(`line ${i + 1}: value is not a number: ${valueText}`);
    }
    rows.push({ experiment, policy, sweep, seed, metric, value });
  }
  return rows;
}
