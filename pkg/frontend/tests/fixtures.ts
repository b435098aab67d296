/** Tiny synthetic result tables, one per experiment, for tests. */

export const HEADER = "experiment,policy,sweep,seed,metric,value";

type Row = [string, string, string, number, string, number];

function table(rows: Row[]): string {
  return HEADER + "\n" + rows.map((r) => r.join(",")).join("\n") + "\n";
}

function sweepRows(
  experiment: string,
  policies: string[],
  sweeps: string[],
  metric: string,
  base: number,
): Row[] {
  const rows: Row[] = [];
  policies.forEach((policy, p) => {
    sweeps.forEach((sweep, s) => {
      for (const seed of [0, 1]) {
        rows.push([
          experiment,
          policy,
          sweep,
          seed,
          metric,
          base + p + s * 0.5 + seed * 0.01,
        ]);
      }
    });
  });
  return rows;
}

export const FIXTURES: Record<string, string> = {
  energy_vs_n: table([
    ...sweepRows(
      "energy_vs_n",
      ["pso", "dnn", "greedy", "random", "local"],
      ["10", "50"],
      "total_energy",
      1.0,
    ),
    // feasible rows ride along in the real table and must be ignored
    ["energy_vs_n", "pso", "10", 0, "feasible", 1.0],
    ["energy_vs_n", "local", "50", 1, "feasible", 1.0],
  ]),

  admitted_vs_n: table(
    sweepRows(
      "admitted_vs_n",
      ["dnn", "greedy", "random"],
      ["10", "50"],
      "admitted",
      5.0,
    ),
  ),

  admitted_vs_treq: table(
    sweepRows(
      "admitted_vs_treq",
      ["dnn", "greedy", "random"],
      ["1.0", "2.0"],
      "admitted",
      20.0,
    ),
  ),

  loss_curves: table([
    ["loss_curves", "dnn", "1", 0, "train_loss", 0.9],
    ["loss_curves", "dnn", "2", 0, "train_loss", 0.5],
    ["loss_curves", "dnn", "3", 0, "train_loss", 0.2],
    ["loss_curves", "dnn", "1", 0, "test_loss", 1.0],
    ["loss_curves", "dnn", "2", 0, "test_loss", 0.6],
    ["loss_curves", "dnn", "3", 0, "test_loss", 0.3],
  ]),

  error_hist: table([
    ["error_hist", "dnn", "0.00", 0, "label_abs_error", 290],
    ["error_hist", "dnn", "0.05", 0, "label_abs_error", 42],
    ["error_hist", "dnn", "0.10", 0, "label_abs_error", 24],
    ["error_hist", "dnn", "0.00", 0, "freq_abs_error", 400],
    ["error_hist", "dnn", "0.05", 0, "freq_abs_error", 0],
    ["error_hist", "dnn", "0.10", 0, "freq_abs_error", 0],
  ]),

  oracle_check: table([
    ["oracle_check", "oracle", "3", 1, "energy", 0.12],
    ["oracle_check", "pso", "3", 1, "energy", 0.12],
    ["oracle_check", "pso", "3", 1, "within_5pct", 1],
    ["oracle_check", "oracle", "4", 2, "energy", 0.17],
    ["oracle_check", "pso", "4", 2, "energy", 0.18],
    ["oracle_check", "pso", "4", 2, "within_5pct", 1],
  ]),

  arch_sweep: table([
    ["arch_sweep", "dnn", "2x10", 0, "final_test_loss", 0.013],
    ["arch_sweep", "dnn", "2x10", 0, "min_test_loss", 0.0129],
    ["arch_sweep", "dnn", "4x20", 0, "final_test_loss", 0.0124],
    ["arch_sweep", "dnn", "4x20", 0, "min_test_loss", 0.0123],
  ]),

  sample_source_compare: table([
    ["sample_source_compare", "pso", "energy", 0, "mean_energy", 1.84],
    ["sample_source_compare", "greedy", "energy", 0, "mean_energy", 1.93],
    ["sample_source_compare", "random", "energy", 0, "mean_energy", 1.96],
    // companion metrics that the chart must not pick up
    ["sample_source_compare", "pso", "energy", 0, "total_energy", 92.0],
    ["sample_source_compare", "pso", "loss", 0, "final_test_loss", 0.01],
  ]),

  runtime_compare: table([
    ["runtime_compare", "pso", "20", 0, "seconds", 0.15],
    ["runtime_compare", "pso", "20", 1, "seconds", 0.14],
    ["runtime_compare", "dnn", "20", 0, "seconds", 0.0013],
    ["runtime_compare", "dnn", "20", 1, "seconds", 0.0012],
  ]),
};

/** Every fixture concatenated under one header, as the real harness emits. */
export function combinedCsv(): string {
  const body = Object.values(FIXTURES)
    .map((text) => text.split("\n").slice(1).join("\n").trimEnd())
    .join("\n");
  return HEADER + "\n" + body + "\n";
}
