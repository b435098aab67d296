/** Deterministic SVG rendering for line and bar charts. */

export interface Series {
  name: string;
  points: Array<[number, number]>;
}

export interface LineChart {
  kind: "line";
  title: string;
  xLabel: string;
  yLabel: string;
  series: Series[];
}

export interface BarChart {
  kind: "bar";
  title: string;
  xLabel: string;
  yLabel: string;
  categories: string[];
  series: Array<{ name: string; values: number[] }>;
}

export type Chart = LineChart | BarChart;

const WIDTH = 640;
const HEIGHT = 400;
const MARGIN = { top: 40, right: 24, bottom: 52, left: 64 };

// Wong palette; distinguishable under common color-vision deficiencies.
const PALETTE = [
  "#0072b2",
  "#d55e00",
  "#009e73",
  "#cc79a7",
  "#e69f00",
  "#56b4e9",
  "#f0e442",
];

function esc(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

/** Fixed-precision number text so identical inputs give identical bytes. */
export function fmt(x: number): string {
  if (x === 0) return "0";
  const abs = Math.abs(x);
  if (abs >= 1e6 || abs < 1e-4) return x.toExponential(2);
  const text = x.toPrecision(6);
  return text.includes(".") ? text.replace(/\.?0+$/, "") : text;
}

/** Tick positions at a power-of-ten friendly step covering [lo, hi]. */
export function niceTicks(lo: number, hi: number, count = 5): number[] {
  if (!(hi > lo)) {
    const pad = Math.abs(lo) > 0 ? Math.abs(lo) * 0.5 : 1;
    return niceTicks(lo - pad, lo + pad, count);
  }
  const raw = (hi - lo) / count;
  const mag = Math.pow(10, Math.floor(Math.log10(raw)));
  const norm = raw / mag;
  const step = (norm <= 1 ? 1 : norm <= 2 ? 2 : norm <= 5 ? 5 : 10) * mag;
  const start = Math.ceil(lo / step) * step;
  const ticks: number[] = [];
  for (let v = start; v <= hi + step * 1e-9; v += step) {
    ticks.push(Math.abs(v) < step * 1e-9 ? 0 : v);
  }
  return ticks;
}

interface Scale {
  lo: number;
  hi: number;
  toPx: (v: number) => number;
}

function makeScale(lo: number, hi: number, pxLo: number, pxHi: number): Scale {
  if (hi === lo) {
    const pad = Math.abs(lo) > 0 ? Math.abs(lo) * 0.1 : 1;
    lo -= pad;
    hi += pad;
  }
  const span = hi - lo;
  return {
    lo,
    hi,
    toPx: (v: number) => pxLo + ((v - lo) / span) * (pxHi - pxLo),
  };
}

function frame(title: string, xLabel: string, yLabel: string): string[] {
  const cx = MARGIN.left + (WIDTH - MARGIN.left - MARGIN.right) / 2;
  return [
    `<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 ${WIDTH} ${HEIGHT}" font-family="sans-serif">`,
    `<rect width="${WIDTH}" height="${HEIGHT}" fill="white"/>`,
    `<text x="${cx}" y="22" text-anchor="middle" font-size="15">${esc(title)}</text>`,
    `<text class="x-label" x="${cx}" y="${HEIGHT - 12}" text-anchor="middle" font-size="12">${esc(xLabel)}</text>`,
    `<text class="y-label" x="16" y="${MARGIN.top + (HEIGHT - MARGIN.top - MARGIN.bottom) / 2}" text-anchor="middle" font-size="12" transform="rotate(-90 16 ${MARGIN.top + (HEIGHT - MARGIN.top - MARGIN.bottom) / 2})">${esc(yLabel)}</text>`,
  ];
}

function yAxis(scale: Scale): string[] {
  const parts: string[] = [];
  const x0 = MARGIN.left;
  const x1 = WIDTH - MARGIN.right;
  for (const tick of niceTicks(scale.lo, scale.hi)) {
    const y = scale.toPx(tick);
    parts.push(
      `<line x1="${x0}" y1="${fmt(y)}" x2="${x1}" y2="${fmt(y)}" stroke="#ddd"/>`,
      `<text x="${x0 - 6}" y="${fmt(y + 4)}" text-anchor="end" font-size="11">${fmt(tick)}</text>`,
    );
  }
  return parts;
}

function legend(names: string[]): string[] {
  const parts: string[] = [`<g class="legend">`];
  names.forEach((name, i) => {
    const y = MARGIN.top + 8 + i * 16;
    const x = WIDTH - MARGIN.right - 120;
    parts.push(
      `<rect x="${x}" y="${y - 8}" width="12" height="12" fill="${PALETTE[i % PALETTE.length]}"/>`,
      `<text x="${x + 18}" y="${y + 2}" font-size="11">${esc(name)}</text>`,
    );
  });
  parts.push(`</g>`);
  return parts;
}

function renderLine(chart: LineChart): string {
  const xs = chart.series.flatMap((s) => s.points.map((p) => p[0]));
  const ys = chart.series.flatMap((s) => s.points.map((p) => p[1]));
  const xScale = makeScale(
    Math.min(...xs),
    Math.max(...xs),
    MARGIN.left,
    WIDTH - MARGIN.right,
  );
  const yScale = makeScale(
    Math.min(0, ...ys),
    Math.max(...ys) * 1.05,
    HEIGHT - MARGIN.bottom,
    MARGIN.top,
  );
  const parts = frame(chart.title, chart.xLabel, chart.yLabel);
  parts.push(...yAxis(yScale));
  for (const tick of niceTicks(xScale.lo, xScale.hi, 6)) {
    const x = xScale.toPx(tick);
    parts.push(
      `<text x="${fmt(x)}" y="${HEIGHT - MARGIN.bottom + 16}" text-anchor="middle" font-size="11">${fmt(tick)}</text>`,
    );
  }
  parts.push(
    `<line x1="${MARGIN.left}" y1="${HEIGHT - MARGIN.bottom}" x2="${WIDTH - MARGIN.right}" y2="${HEIGHT - MARGIN.bottom}" stroke="#444"/>`,
    `<line x1="${MARGIN.left}" y1="${MARGIN.top}" x2="${MARGIN.left}" y2="${HEIGHT - MARGIN.bottom}" stroke="#444"/>`,
  );
  chart.series.forEach((series, i) => {
    const color = PALETTE[i % PALETTE.length];
    const coords = series.points
      .map(([x, y]) => `${fmt(xScale.toPx(x))},${fmt(yScale.toPx(y))}`)
      .join(" ");
    parts.push(`<g class="series" data-series="${esc(series.name)}">`);
    parts.push(
      `<polyline points="${coords}" fill="none" stroke="${color}" stroke-width="2"/>`,
    );
    for (const [x, y] of series.points) {
      parts.push(
        `<circle cx="${fmt(xScale.toPx(x))}" cy="${fmt(yScale.toPx(y))}" r="3" fill="${color}"/>`,
      );
    }
    parts.push(`</g>`);
  });
  parts.push(...legend(chart.series.map((s) => s.name)));
  parts.push(`</svg>`);
  return parts.join("\n") + "\n";
}

function renderBar(chart: BarChart): string {
  const ys = chart.series.flatMap((s) => s.values);
  const yScale = makeScale(
    Math.min(0, ...ys),
    Math.max(...ys) * 1.05,
    HEIGHT - MARGIN.bottom,
    MARGIN.top,
  );
  const plotWidth = WIDTH - MARGIN.left - MARGIN.right;
  const slot = plotWidth / chart.categories.length;
  const barWidth = (slot * 0.7) / chart.series.length;
  const parts = frame(chart.title, chart.xLabel, chart.yLabel);
  parts.push(...yAxis(yScale));
  const y0 = yScale.toPx(Math.max(0, yScale.lo));
  chart.categories.forEach((cat, k) => {
    const cx = MARGIN.left + slot * (k + 0.5);
    parts.push(
      `<text x="${fmt(cx)}" y="${HEIGHT - MARGIN.bottom + 16}" text-anchor="middle" font-size="11">${esc(cat)}</text>`,
    );
  });
  chart.series.forEach((series, i) => {
    const color = PALETTE[i % PALETTE.length];
    parts.push(`<g class="series" data-series="${esc(series.name)}">`);
    series.values.forEach((value, k) => {
      const cx = MARGIN.left + slot * (k + 0.5);
      const x =
        cx - (chart.series.length * barWidth) / 2 + i * barWidth;
      const yTop = yScale.toPx(value);
      const height = Math.abs(y0 - yTop);
      parts.push(
        `<rect x="${fmt(x)}" y="${fmt(Math.min(yTop, y0))}" width="${fmt(barWidth)}" height="${fmt(height)}" fill="${color}"/>`,
      );
    });
    parts.push(`</g>`);
  });
  parts.push(
    `<line x1="${MARGIN.left}" y1="${HEIGHT - MARGIN.bottom}" x2="${WIDTH - MARGIN.right}" y2="${HEIGHT - MARGIN.bottom}" stroke="#444"/>`,
    `<line x1="${MARGIN.left}" y1="${MARGIN.top}" x2="${MARGIN.left}" y2="${HEIGHT - MARGIN.bottom}" stroke="#444"/>`,
  );
  parts.push(...legend(chart.series.map((s) => s.name)));
  parts.push(`</svg>`);
  return parts.join("\n") + "\n";
}

export function renderChart(chart: Chart): string {
  return chart.kind === "line" ? renderLine(chart) : renderBar(chart);
}
