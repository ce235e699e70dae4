import { writeFileSync } from "node:fs";

import { getColumn, readCsv } from "./csv.js";
import { ExponentialFit, fitExponential } from "./fit.js";
import { renderChart } from "./svg.js";

export interface DecayPlotResult extends ExponentialFit {
  figurePath: string;
}

/**
 * Log-linear decay figure for one trajectory column.
 *
 * Fits ln(column) against t over the window, draws the data with the
 * fitted exponential, and annotates the rate and r^2.
 */
export function plotDecay(
  csvPath: string,
  column: string,
  outPath: string,
  window?: [number, number]
): DecayPlotResult {
  const table = readCsv(csvPath);
  const t = getColumn(table, "t");
  const y = getColumn(table, column);
  const result = fitExponential(t, y, window);
  for (const w of result.warnings) {
    console.warn(`warning: ${w}`);
  }
  const { rate, intercept, r_squared } = result.fit;
  const shown: [number, number][] = [];
  for (let i = 0; i < t.length; i++) {
    if ((!window || (t[i] >= window[0] && t[i] <= window[1])) && y[i] > 0) {
      shown.push([t[i], y[i]]);
    }
  }
  const fitted = shown.map(([ti]) => [ti, Math.exp(intercept - rate * ti)] as [number, number]);
  const svg = renderChart({
    title: `${column} decay (${csvPath.split("/").pop()})`,
    xLabel: "t",
    yLabel: column,
    logY: true,
    series: [
      { x: shown.map((p) => p[0]), y: shown.map((p) => p[1]), stroke: "steelblue" },
      { x: fitted.map((p) => p[0]), y: fitted.map((p) => p[1]), stroke: "black", dash: "6 4" },
    ],
    annotations: [
      `rate=${rate.toPrecision(8)}`,
      `r^2=${r_squared.toPrecision(8)}`,
      `points=${result.pointsUsed}`,
    ],
  });
  writeFileSync(outPath, svg);
  return { ...result, figurePath: outPath };
}
