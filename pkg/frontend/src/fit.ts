export interface FitResult {
  /** Decay rate a of the model c * exp(-a t); positive means decay. */
  rate: number;
  /** Intercept of the log-linear fit, i.e. ln(c). */
  intercept: number;
  /** Coefficient of determination of the log-linear fit, in [0, 1]. */
  r_squared: number;
}

export interface ExponentialFit {
  fit: FitResult;
  pointsUsed: number;
  warnings: string[];
}

/**
 * Least squares of ln(y) against t over an optional time window.
 *
 * Points with non-positive values cannot enter the log fit; they are
 * dropped and the trimming is reported as a warning.
 */
export function fitExponential(
  t: number[],
  y: number[],
  window?: [number, number]
): ExponentialFit {
  if (t.length !== y.length) {
    throw new Error("time and value arrays differ in length");
  }
  const warnings: string[] = [];
  let ts: number[] = [];
  let ys: number[] = [];
  for (let i = 0; i < t.length; i++) {
    if (window && (t[i] < window[0] || t[i] > window[1])) continue;
    ts.push(t[i]);
    ys.push(y[i]);
  }
  const positive = ys.filter((v) => v > 0).length;
  if (positive < ys.length) {
    warnings.push(
      `window auto-trimmed: dropped ${ys.length - positive} non-positive value(s) from the log fit`
    );
    const kept: [number, number][] = [];
    for (let i = 0; i < ys.length; i++) {
      if (ys[i] > 0) kept.push([ts[i], ys[i]]);
    }
    ts = kept.map((p) => p[0]);
    ys = kept.map((p) => p[1]);
  }
  if (ts.length < 2) {
    throw new Error("fewer than two usable points in the fit window");
  }

  const logs = ys.map(Math.log);
  const n = ts.length;
  const tMean = ts.reduce((a, b) => a + b, 0) / n;
  const lMean = logs.reduce((a, b) => a + b, 0) / n;
  let stt = 0;
  let stl = 0;
  let sll = 0;
  for (let i = 0; i < n; i++) {
    const dt = ts[i] - tMean;
    const dl = logs[i] - lMean;
    stt += dt * dt;
    stl += dt * dl;
    sll += dl * dl;
  }
  if (stt === 0) {
    throw new Error("degenerate fit window: all points share one time");
  }
  let slope = stl / stt;
  let rsq: number;
  const constantThreshold = n * (1e-12 * Math.max(1, Math.abs(lMean))) ** 2;
  if (sll <= constantThreshold) {
    slope = 0; // constant column up to roundoff: the flat line is exact
    rsq = 1.0;
  } else {
    let ssRes = 0;
    for (let i = 0; i < n; i++) {
      const resid = logs[i] - lMean - slope * (ts[i] - tMean);
      ssRes += resid * resid;
    }
    rsq = Math.min(1, Math.max(0, 1 - ssRes / sll));
  }
  const intercept = lMean - slope * tMean;
  return {
    fit: { rate: slope === 0 ? 0 : -slope, intercept, r_squared: rsq },
    pointsUsed: n,
    warnings,
  };
}
