import { writeFileSync } from "node:fs";

import { getColumn, readCsv } from "./csv.js";
import { Marker, renderChart } from "./svg.js";

export interface ScanPlotResult {
  figurePath: string;
  /** Interpolated zero of min_eig_H1, or null when no sign change exists. */
  d0: number | null;
  bracket: [number, number] | null;
}

/** Stability-scan figure: smallest eigenvalue vs thickness, zero crossing marked. */
export function plotScan(csvPath: string, outPath: string): ScanPlotResult {
  const table = readCsv(csvPath);
  const d = getColumn(table, "d");
  const eig = getColumn(table, "min_eig_H1");

  let d0: number | null = null;
  let bracket: [number, number] | null = null;
  for (let i = 0; i + 1 < d.length; i++) {
    if (eig[i] > 0 && eig[i + 1] <= 0) {
      const frac = eig[i] / (eig[i] - eig[i + 1]);
      d0 = d[i] + frac * (d[i + 1] - d[i]);
      bracket = [d[i], d[i + 1]];
      break;
    }
  }

  const markers: Marker[] = [];
  const annotations = ["min_eig_H1 vs d"];
  if (d0 !== null) {
    markers.push({ x: d0, y: 0, label: `d0=${d0.toPrecision(6)}` });
    annotations.push(`bracket=[${bracket![0].toPrecision(6)}, ${bracket![1].toPrecision(6)}]`);
  } else {
    annotations.push("no sign change");
  }
  const svg = renderChart({
    title: `stability scan (${csvPath.split("/").pop()})`,
    xLabel: "d",
    yLabel: "min_eig_H1",
    zeroLine: true,
    series: [{ x: d, y: eig, stroke: "steelblue" }],
    markers,
    annotations,
  });
  writeFileSync(outPath, svg);
  return { figurePath: outPath, d0, bracket };
}
