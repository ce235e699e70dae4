/** Minimal deterministic SVG line charts; no DOM, no randomness. */

export interface Series {
  x: number[];
  y: number[];
  stroke: string;
  dash?: string;
}

export interface Marker {
  x: number;
  y: number;
  label: string;
}

export interface ChartSpec {
  title: string;
  xLabel: string;
  yLabel: string;
  series: Series[];
  annotations?: string[];
  markers?: Marker[];
  logY?: boolean;
  zeroLine?: boolean;
}

const W = 720;
const H = 440;
const M = { left: 70, right: 20, top: 40, bottom: 50 };

function fmt(v: number): string {
  return Number(v.toPrecision(6)).toString();
}

export function renderChart(spec: ChartSpec): string {
  const xs = spec.series.flatMap((s) => s.x);
  const rawYs = spec.series.flatMap((s) => s.y);
  const ys = spec.logY ? rawYs.filter((v) => v > 0).map(Math.log10) : rawYs.slice();
  if (spec.zeroLine && !spec.logY) ys.push(0);
  const x0 = Math.min(...xs);
  const x1 = Math.max(...xs);
  const y0 = Math.min(...ys);
  const y1 = Math.max(...ys);
  const xSpan = x1 - x0 || 1;
  const ySpan = y1 - y0 || 1;
  const sx = (v: number) => M.left + ((v - x0) / xSpan) * (W - M.left - M.right);
  const sy = (v: number) => {
    const t = spec.logY ? Math.log10(v) : v;
    return H - M.bottom - ((t - y0) / ySpan) * (H - M.top - M.bottom);
  };

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${W}" height="${H}" viewBox="0 0 ${W} ${H}">`
  );
  parts.push(`<rect width="${W}" height="${H}" fill="white"/>`);
  parts.push(
    `<text x="${W / 2}" y="22" text-anchor="middle" font-size="15" font-family="sans-serif">${spec.title}</text>`
  );
  // axes
  parts.push(
    `<line x1="${M.left}" y1="${H - M.bottom}" x2="${W - M.right}" y2="${H - M.bottom}" stroke="black"/>`,
    `<line x1="${M.left}" y1="${M.top}" x2="${M.left}" y2="${H - M.bottom}" stroke="black"/>`
  );
  parts.push(
    `<text x="${(M.left + W - M.right) / 2}" y="${H - 12}" text-anchor="middle" font-size="12" font-family="sans-serif">${spec.xLabel}</text>`,
    `<text x="16" y="${(M.top + H - M.bottom) / 2}" text-anchor="middle" font-size="12" font-family="sans-serif" transform="rotate(-90 16 ${(M.top + H - M.bottom) / 2})">${spec.yLabel}</text>`
  );
  // range labels
  parts.push(
    `<text x="${M.left}" y="${H - M.bottom + 16}" font-size="10" font-family="sans-serif">${fmt(x0)}</text>`,
    `<text x="${W - M.right}" y="${H - M.bottom + 16}" text-anchor="end" font-size="10" font-family="sans-serif">${fmt(x1)}</text>`,
    `<text x="${M.left - 4}" y="${H - M.bottom}" text-anchor="end" font-size="10" font-family="sans-serif">${fmt(spec.logY ? Math.pow(10, y0) : y0)}</text>`,
    `<text x="${M.left - 4}" y="${M.top + 10}" text-anchor="end" font-size="10" font-family="sans-serif">${fmt(spec.logY ? Math.pow(10, y1) : y1)}</text>`
  );
  if (spec.zeroLine && !spec.logY && y0 < 0 && y1 > 0) {
    const zy = sy(0);
    parts.push(
      `<line x1="${M.left}" y1="${zy}" x2="${W - M.right}" y2="${zy}" stroke="gray" stroke-dasharray="4 3"/>`
    );
  }
  for (const s of spec.series) {
    const pts: string[] = [];
    for (let i = 0; i < s.x.length; i++) {
      if (spec.logY && s.y[i] <= 0) continue;
      pts.push(`${sx(s.x[i]).toFixed(2)},${sy(s.y[i]).toFixed(2)}`);
    }
    const dash = s.dash ? ` stroke-dasharray="${s.dash}"` : "";
    parts.push(
      `<polyline fill="none" stroke="${s.stroke}" stroke-width="1.5"${dash} points="${pts.join(" ")}"/>`
    );
  }
  for (const mk of spec.markers ?? []) {
    const cx = sx(mk.x).toFixed(2);
    const cy = sy(mk.y).toFixed(2);
    parts.push(
      `<circle class="marker" cx="${cx}" cy="${cy}" r="5" fill="none" stroke="crimson" stroke-width="2"/>`,
      `<text x="${cx}" y="${(Number(cy) - 10).toFixed(2)}" text-anchor="middle" font-size="11" fill="crimson" font-family="sans-serif">${mk.label}</text>`
    );
  }
  (spec.annotations ?? []).forEach((a, i) => {
    parts.push(
      `<text x="${W - M.right - 6}" y="${M.top + 16 + 16 * i}" text-anchor="end" font-size="12" font-family="monospace">${a}</text>`
    );
  });
  parts.push("</svg>");
  return parts.join("\n") + "\n";
}
