/** Per-experiment shaping of result rows into chart models. */

import { ResultRow } from "./csv.js";
import { Chart, Series } from "./chart.js";

export class DataError extends Error {}

/** Mean of `value` grouped by a numeric x key, sorted by x. */
function meanByX(rows: ResultRow[], x: (r: ResultRow) => number): Array<[number, number]> {
  const groups = new Map<number, number[]>();
  for (const row of rows) {
    const key = x(row);
    const bucket = groups.get(key);
    if (bucket) bucket.push(row.value);
    else groups.set(key, [row.value]);
  }
  return [...groups.entries()]
    .map(([key, values]): [number, number] => [
      key,
      values.reduce((a, b) => a + b, 0) / values.length,
    ])
    .sort((a, b) => a[0] - b[0]);
}

function need(rows: ResultRow[], what: string): ResultRow[] {
  if (rows.length === 0) {
    throw new DataError(`no rows for ${what}`);
  }
  return rows;
}

function policySeries(
  rows: ResultRow[],
  experiment: string,
  metric: string,
  policies: string[],
): Series[] {
  const data = rows.filter((r) => r.metric === metric);
  return policies.map((policy) => ({
    name: policy,
    points: meanByX(
      need(
        data.filter((r) => r.policy === policy),
        `policy ${policy}, metric ${metric} in ${experiment}`,
      ),
      (r) => Number(r.sweep),
    ),
  }));
}

function metricSeries(
  rows: ResultRow[],
  experiment: string,
  metrics: string[],
  x: (r: ResultRow) => number,
): Series[] {
  return metrics.map((metric) => ({
    name: metric,
    points: meanByX(
      need(
        rows.filter((r) => r.metric === metric),
        `metric ${metric} in ${experiment}`,
      ),
      x,
    ),
  }));
}

type Builder = (rows: ResultRow[]) => Chart;

const BUILDERS: Record<string, Builder> = {
  energy_vs_n: (rows) => ({
    kind: "line",
    title: "energy_vs_n",
    xLabel: "devices",
    yLabel: "mean total energy (J)",
    series: policySeries(rows, "energy_vs_n", "total_energy", [
      "pso",
      "dnn",
      "greedy",
      "random",
      "local",
    ]),
  }),

  admitted_vs_n: (rows) => ({
    kind: "line",
    title: "admitted_vs_n",
    xLabel: "devices",
    yLabel: "mean admitted devices",
    series: policySeries(rows, "admitted_vs_n", "admitted", [
      "dnn",
      "greedy",
      "random",
    ]),
  }),

  admitted_vs_treq: (rows) => ({
    kind: "line",
    title: "admitted_vs_treq",
    xLabel: "deadline (s)",
    yLabel: "mean admitted devices",
    series: policySeries(rows, "admitted_vs_treq", "admitted", [
      "dnn",
      "greedy",
      "random",
    ]),
  }),

  loss_curves: (rows) => ({
    kind: "line",
    title: "loss_curves",
    xLabel: "epoch",
    yLabel: "loss",
    series: metricSeries(rows, "loss_curves", ["train_loss", "test_loss"], (r) =>
      Number(r.sweep),
    ),
  }),

  error_hist: (rows) => {
    const metrics = ["label_abs_error", "freq_abs_error"];
    const bins = [...new Set(rows.map((r) => r.sweep))].sort(
      (a, b) => Number(a) - Number(b),
    );
    need(rows, "experiment error_hist");
    return {
      kind: "bar",
      title: "error_hist",
      xLabel: "absolute error bin",
      yLabel: "test samples",
      categories: bins,
      series: metrics.map((metric) => {
        const data = need(
          rows.filter((r) => r.metric === metric),
          `metric ${metric} in error_hist`,
        );
        return {
          name: metric,
          values: bins.map((bin) =>
            data
              .filter((r) => r.sweep === bin)
              .reduce((a, r) => a + r.value, 0),
          ),
        };
      }),
    };
  },

  oracle_check: (rows) => {
    const data = rows.filter((r) => r.metric === "energy");
    return {
      kind: "line",
      title: "oracle_check",
      xLabel: "instance seed",
      yLabel: "energy (J)",
      series: ["oracle", "pso"].map((policy) => ({
        name: policy,
        points: meanByX(
          need(
            data.filter((r) => r.policy === policy),
            `policy ${policy}, metric energy in oracle_check`,
          ),
          (r) => r.seed,
        ),
      })),
    };
  },

  arch_sweep: (rows) => {
    const categories = [...new Set(rows.map((r) => r.sweep))];
    need(rows, "experiment arch_sweep");
    return {
      kind: "bar",
      title: "arch_sweep",
      xLabel: "hidden layers x width",
      yLabel: "loss",
      categories,
      series: ["final_test_loss", "min_test_loss"].map((metric) => {
        const data = need(
          rows.filter((r) => r.metric === metric),
          `metric ${metric} in arch_sweep`,
        );
        return {
          name: metric,
          values: categories.map((cat) => {
            const hits = data.filter((r) => r.sweep === cat);
            return hits.reduce((a, r) => a + r.value, 0) / Math.max(hits.length, 1);
          }),
        };
      }),
    };
  },

  sample_source_compare: (rows) => {
    const sources = ["pso", "greedy", "random"];
    const data = rows.filter((r) => r.metric === "mean_energy");
    return {
      kind: "bar",
      title: "sample_source_compare",
      xLabel: "training sample source",
      yLabel: "held-out mean energy (J)",
      categories: sources,
      series: [
        {
          name: "mean_energy",
          values: sources.map((source) => {
            const hits = need(
              data.filter((r) => r.policy === source),
              `policy ${source}, metric mean_energy in sample_source_compare`,
            );
            return hits.reduce((a, r) => a + r.value, 0) / hits.length;
          }),
        },
      ],
    };
  },

  runtime_compare: (rows) => {
    const data = rows.filter((r) => r.metric === "seconds");
    return {
      kind: "line",
      title: "runtime_compare",
      xLabel: "evaluation seed",
      yLabel: "decision time (s)",
      series: ["pso", "dnn"].map((policy) => ({
        name: policy,
        points: meanByX(
          need(
            data.filter((r) => r.policy === policy),
            `policy ${policy}, metric seconds in runtime_compare`,
          ),
          (r) => r.seed,
        ),
      })),
    };
  },
};

export const EXPERIMENTS = Object.keys(BUILDERS);

/** Expected series count per experiment; rendering is checked against it. */
export const SERIES_COUNT: Record<string, number> = {
  energy_vs_n: 5,
  admitted_vs_n: 3,
  admitted_vs_treq: 3,
  loss_curves: 2,
  error_hist: 2,
  oracle_check: 2,
  arch_sweep: 2,
  sample_source_compare: 1,
  runtime_compare: 2,
};

export function buildChart(experiment: string, rows: ResultRow[]): Chart {
  const builder = BUILDERS[experiment];
  if (!builder) {
    throw new DataError(
      `unknown experiment: ${experiment} (known: ${EXPERIMENTS.join(", ")})`,
    );
  }
  const mine = rows.filter((r) => r.experiment === experiment);
  if (mine.length === 0) {
    throw new DataError(`no rows for experiment ${experiment}`);
  }
  const chart = builder(mine);
  const count = chart.series.length;
  if (count !== SERIES_COUNT[experiment]) {
    throw new DataError(
      `experiment ${experiment} produced ${count} series, expected ${SERIES_COUNT[experiment]}`,
    );
  }
  return chart;
}
