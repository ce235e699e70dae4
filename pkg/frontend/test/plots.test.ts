import { mkdtempSync, readFileSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { describe, expect, it } from "vitest";

import { getColumn, readCsv } from "../src/csv.js";
import { plotDecay } from "../src/plotDecay.js";
import { plotScan } from "../src/plotScan.js";

const FIXTURES = join(__dirname, "..", "fixtures");
const SYNTHETIC_RATE = 137.5;

function tmp(): string {
  return mkdtempSync(join(tmpdir(), "elastoflow-plots-"));
}

describe("plotDecay", () => {
  it("recovers the synthetic exponential rate to 1e-6", () => {
    const out = join(tmp(), "synthetic.svg");
    const result = plotDecay(join(FIXTURES, "synthetic_decay.csv"), "h_dev_l2", out);
    expect(Math.abs(result.fit.rate - SYNTHETIC_RATE) / SYNTHETIC_RATE).toBeLessThan(1e-6);
    expect(result.fit.r_squared).toBeGreaterThan(0.999999);
    const svg = readFileSync(out, "utf8");
    expect(svg).toContain("<svg");
    expect(svg).toContain("rate=");
    expect(svg).toContain("r^2=");
  });

  it("fits the real stable run with r^2 > 0.99 and renders the fit", () => {
    const table = readCsv(join(FIXTURES, "trajectory.csv"));
    const t = getColumn(table, "t");
    const tEnd = t[t.length - 1];
    const out = join(tmp(), "decay.svg");
    const result = plotDecay(
      join(FIXTURES, "trajectory.csv"),
      "h_dev_l2",
      out,
      [tEnd / 2, tEnd]
    );
    expect(result.fit.rate).toBeGreaterThan(0); // the film flattens
    expect(result.fit.r_squared).toBeGreaterThan(0.99);
    const svg = readFileSync(out, "utf8");
    expect(svg).toContain("rate=");
    expect(svg.split("polyline").length).toBe(3); // data and fitted line
  });

  it("regenerates byte-identical figures from the same CSV", () => {
    const dir = tmp();
    const a = join(dir, "a.svg");
    const b = join(dir, "b.svg");
    plotDecay(join(FIXTURES, "synthetic_decay.csv"), "h_dev_l2", a);
    plotDecay(join(FIXTURES, "synthetic_decay.csv"), "h_dev_l2", b);
    expect(readFileSync(a, "utf8")).toBe(readFileSync(b, "utf8"));
  });

  it("handles a constant column via rate zero", () => {
    const out = join(tmp(), "flat.svg");
    const result = plotDecay(join(FIXTURES, "synthetic_decay.csv"), "flat_col", out);
    expect(result.fit.rate).toBe(0);
  });
});

describe("plotScan", () => {
  it("marks no crossing for an all-positive scan", () => {
    const dir = tmp();
    const csv = join(dir, "pos.csv");
    writeFileSync(
      csv,
      "d,min_eig_L2,min_eig_H1\n0.05,24.7,0.61\n0.1,12.8,0.32\n0.2,2.8,0.07\n"
    );
    const out = join(dir, "pos.svg");
    const result = plotScan(csv, out);
    expect(result.d0).toBeNull();
    expect(result.bracket).toBeNull();
    const svg = readFileSync(out, "utf8");
    expect(svg).not.toContain('class="marker"');
    expect(svg).toContain("no sign change");
  });

  it("places the marker at the interpolated zero of a synthetic crossing", () => {
    const dir = tmp();
    const csv = join(dir, "cross.csv");
    // crossing between d=0.1 (value +1) and d=0.2 (value -3): zero at 0.125
    writeFileSync(
      csv,
      "d,min_eig_L2,min_eig_H1\n0.05,30,2\n0.1,10,1\n0.2,-20,-3\n"
    );
    const out = join(dir, "cross.svg");
    const result = plotScan(csv, out);
    expect(result.d0).toBeCloseTo(0.125, 12);
    expect(result.bracket).toEqual([0.1, 0.2]);
    expect(readFileSync(out, "utf8")).toContain('class="marker"');
  });

  it("puts the real scan's marker inside the bracketing interval", () => {
    const csvPath = join(FIXTURES, "scan.csv");
    const table = readCsv(csvPath);
    const d = getColumn(table, "d");
    const eig = getColumn(table, "min_eig_H1");
    let lo = NaN;
    let hi = NaN;
    for (let i = 0; i + 1 < d.length; i++) {
      if (eig[i] > 0 && eig[i + 1] <= 0) {
        lo = d[i];
        hi = d[i + 1];
        break;
      }
    }
    expect(Number.isFinite(lo)).toBe(true);
    const out = join(tmp(), "scan.svg");
    const result = plotScan(csvPath, out);
    expect(result.d0).not.toBeNull();
    expect(result.d0!).toBeGreaterThan(lo);
    expect(result.d0!).toBeLessThan(hi);
    expect(result.bracket).toEqual([lo, hi]);
  });
});
