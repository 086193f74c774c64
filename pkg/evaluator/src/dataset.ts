/**
 * Synthetic operator-learning dataset: 1D steady diffusion.
 *
 *   -d/dx ( a(x) du/dx ) = 1  on [0, 1],   u(0) = u(1) = 0
 *
 * a(x) is a positive piecewise-smooth field (random steps in [3, 12],
 * smoothed by repeated moving averages); u is solved with a second-order
 * finite-difference tridiagonal system.  Everything is deterministic under
 * the seed.
 */

import { Rng } from "./rng.js";

export interface OperatorDataset {
  grid: number;
  inputs: Float64Array[];
  outputs: Float64Array[];
  trainCount: number;
  valCount: number;
}

/** Random step field in [3, 12], smoothed twice with a moving average. */
export function diffusionField(grid: number, rng: Rng): Float64Array {
  const segments = 3 + rng.int(6); // 3..8 plateaus
  const breaks: number[] = [0];
  for (let s = 1; s < segments; s++) {
    breaks.push(Math.floor((s / segments) * grid) + rng.int(Math.max(1, grid / 16)));
  }
  breaks.push(grid);
  const field = new Float64Array(grid);
  for (let s = 0; s < segments; s++) {
    const value = rng.uniform(3.0, 12.0);
    const end = Math.min(grid, breaks[s + 1]);
    for (let i = breaks[s]; i < end; i++) {
      field[i] = value;
    }
  }
  const window = Math.max(3, Math.floor(grid / 32)) | 1; // odd width
  return movingAverage(movingAverage(field, window), window);
}

function movingAverage(x: Float64Array, window: number): Float64Array {
  const n = x.length;
  const half = window >> 1;
  const out = new Float64Array(n);
  for (let i = 0; i < n; i++) {
    let acc = 0.0;
    for (let k = -half; k <= half; k++) {
      const j = Math.min(n - 1, Math.max(0, i + k)); // clamp at boundaries
      acc += x[j];
    }
    out[i] = acc / window;
  }
  return out;
}

/**
 * Solve the Dirichlet diffusion problem for one coefficient field.
 *
 * Unknowns are the interior nodes; the flux coefficients live at half nodes
 * a_{i±1/2} = (a_i + a_{i±1}) / 2.
 */
export function solveDiffusion(a: Float64Array, f = 1.0): Float64Array {
  const m = a.length;
  const h = 1.0 / (m - 1);
  const n = m - 2; // interior unknowns
  const lower = new Float64Array(n);
  const diag = new Float64Array(n);
  const upper = new Float64Array(n);
  const rhs = new Float64Array(n);
  for (let i = 0; i < n; i++) {
    const aw = 0.5 * (a[i] + a[i + 1]);     // a_{i+1/2 - 1} west face
    const ae = 0.5 * (a[i + 1] + a[i + 2]); // east face
    lower[i] = -aw / (h * h);
    diag[i] = (aw + ae) / (h * h);
    upper[i] = -ae / (h * h);
    rhs[i] = f;
  }
  const interior = thomasSolve(lower, diag, upper, rhs);
  const u = new Float64Array(m);
  u.set(interior, 1); // u[0] = u[m-1] = 0 boundary conditions
  return u;
}

/** Thomas algorithm for a tridiagonal system (diagonally dominant here). */
export function thomasSolve(
  lower: Float64Array, diag: Float64Array, upper: Float64Array,
  rhs: Float64Array,
): Float64Array {
  const n = diag.length;
  const c = new Float64Array(n);
  const d = new Float64Array(n);
  c[0] = upper[0] / diag[0];
  d[0] = rhs[0] / diag[0];
  for (let i = 1; i < n; i++) {
    const denom = diag[i] - lower[i] * c[i - 1];
    c[i] = upper[i] / denom;
    d[i] = (rhs[i] - lower[i] * d[i - 1]) / denom;
  }
  const x = new Float64Array(n);
  x[n - 1] = d[n - 1];
  for (let i = n - 2; i >= 0; i--) {
    x[i] = d[i] - c[i] * x[i + 1];
  }
  return x;
}

/** Max-norm residual of the assembled system at a candidate solution. */
export function pdeResidual(a: Float64Array, u: Float64Array, f = 1.0): number {
  const m = a.length;
  const h = 1.0 / (m - 1);
  let worst = Math.max(Math.abs(u[0]), Math.abs(u[m - 1]));
  for (let i = 1; i < m - 1; i++) {
    const aw = 0.5 * (a[i - 1] + a[i]);
    const ae = 0.5 * (a[i] + a[i + 1]);
    const lhs = (-aw * u[i - 1] + (aw + ae) * u[i] - ae * u[i + 1]) / (h * h);
    worst = Math.max(worst, Math.abs(lhs - f));
  }
  return worst;
}

export function generateDataset(
  nSamples: number, grid: number, seed: number, trainFraction = 0.8,
): OperatorDataset {
  if (grid < 64) {
    throw new Error(`grid must be >= 64, got ${grid}`);
  }
  const rng = new Rng(seed);
  const inputs: Float64Array[] = [];
  const outputs: Float64Array[] = [];
  for (let s = 0; s < nSamples; s++) {
    const a = diffusionField(grid, rng);
    inputs.push(a);
    outputs.push(solveDiffusion(a));
  }
  const trainCount = Math.round(trainFraction * nSamples);
  return { grid, inputs, outputs, trainCount, valCount: nSamples - trainCount };
}

/** JSON named-array container with "input" and "output" arrays. */
export function datasetToJson(ds: OperatorDataset): string {
  return JSON.stringify({
    grid: ds.grid,
    train_count: ds.trainCount,
    input: ds.inputs.map((x) => Array.from(x)),
    output: ds.outputs.map((x) => Array.from(x)),
  });
}

export function datasetFromJson(text: string): OperatorDataset {
  const doc = JSON.parse(text);
  const inputs = (doc.input as number[][]).map((row) => Float64Array.from(row));
  const outputs = (doc.output as number[][]).map((row) => Float64Array.from(row));
  if (inputs.length !== outputs.length || inputs.length === 0) {
    throw new Error("dataset arrays must be non-empty and matched");
  }
  return {
    grid: doc.grid ?? inputs[0].length,
    inputs,
    outputs,
    trainCount: doc.train_count ?? Math.round(0.8 * inputs.length),
    valCount: inputs.length - (doc.train_count ?? Math.round(0.8 * inputs.length)),
  };
}
