/**
 * Periodized discrete wavelet transform with perfect reconstruction.
 *
 * One analysis level:   a[n] = sum_j hd[j] x[(j + 2n) mod N]
 *                       d[n] = sum_j gd[j] x[(j + 2n) mod N]
 * One synthesis level:  x[(j + 2n) mod N] += hr[j] a[n] + gr[j] d[n]
 *
 * with the highpass filters derived by modulation from the opposite bank's
 * lowpass: gd[j] = (-1)^j recLo[1 - j] and gr[j] = (-1)^j decLo[1 - j].
 * That pairing cancels aliasing for biorthogonal banks and reduces to the
 * classical quadrature mirror construction for orthogonal ones.
 *
 * Gradients need the adjoints of the linear analysis/synthesis maps, which
 * for biorthogonal banks differ from their inverses: the adjoint of analysis
 * scatters with the analysis filters, the adjoint of synthesis gathers with
 * the synthesis filters.
 *
 * The tap loops are split into an interior range (no index wrapping, raw
 * array access) and narrow boundary ranges; the transforms dominate the
 * training cost so this matters.
 */

import { Filt, FilterBank } from "./wavelets.js";

export function modulate(h: Filt): Filt {
  // g[j] = (-1)^j h[1 - j]; support maps [lo, hi] -> [1 - hi, 1 - lo]
  const hi = h.lo + h.taps.length - 1;
  const lo = 1 - hi;
  const taps = new Float64Array(h.taps.length);
  for (let i = 0; i < taps.length; i++) {
    const j = lo + i;
    const sign = j % 2 === 0 ? 1 : -1;
    taps[i] = sign * h.taps[1 - j - h.lo];
  }
  return { lo, taps };
}

export interface BankFilters {
  hd: Filt;
  gd: Filt;
  hr: Filt;
  gr: Filt;
}

export function bankFilters(bank: FilterBank): BankFilters {
  return {
    hd: bank.decLo,
    gd: modulate(bank.recLo),
    hr: bank.recLo,
    gr: modulate(bank.decLo),
  };
}

function mod(i: number, n: number): number {
  const r = i % n;
  return r < 0 ? r + n : r;
}

/** k-range [kLow, kHigh) whose whole filter support avoids wrapping. */
function interior(lo: number, len: number, n: number): [number, number] {
  const half = n >> 1;
  const kLow = Math.min(half, Math.max(0, Math.ceil(-lo / 2)));
  const kHigh = Math.min(half, Math.floor((n - lo - len) / 2) + 1);
  return [kLow, Math.max(kLow, kHigh)];
}

/** One analysis gather: out[k] = sum_i taps[i] x[(lo + i + 2k) mod n]. */
function gather(
  x: Float64Array, n: number, f: Filt, out: Float64Array,
): void {
  const { lo, taps } = f;
  const len = taps.length;
  const half = n >> 1;
  const [kLow, kHigh] = interior(lo, len, n);
  for (let k = 0; k < kLow; k++) {
    let acc = 0.0;
    for (let i = 0; i < len; i++) {
      acc += taps[i] * x[mod(lo + i + 2 * k, n)];
    }
    out[k] = acc;
  }
  for (let k = kLow; k < kHigh; k++) {
    const base = lo + 2 * k;
    let acc = 0.0;
    for (let i = 0; i < len; i++) {
      acc += taps[i] * x[base + i];
    }
    out[k] = acc;
  }
  for (let k = kHigh; k < half; k++) {
    let acc = 0.0;
    for (let i = 0; i < len; i++) {
      acc += taps[i] * x[mod(lo + i + 2 * k, n)];
    }
    out[k] = acc;
  }
}

/** One synthesis scatter: x[(lo + i + 2k) mod n] += taps[i] c[k]. */
function scatter(
  c: Float64Array, n: number, f: Filt, x: Float64Array,
): void {
  const { lo, taps } = f;
  const len = taps.length;
  const half = n >> 1;
  const [kLow, kHigh] = interior(lo, len, n);
  for (let k = 0; k < kLow; k++) {
    const v = c[k];
    for (let i = 0; i < len; i++) {
      x[mod(lo + i + 2 * k, n)] += taps[i] * v;
    }
  }
  for (let k = kLow; k < kHigh; k++) {
    const base = lo + 2 * k;
    const v = c[k];
    for (let i = 0; i < len; i++) {
      x[base + i] += taps[i] * v;
    }
  }
  for (let k = kHigh; k < half; k++) {
    const v = c[k];
    for (let i = 0; i < len; i++) {
      x[mod(lo + i + 2 * k, n)] += taps[i] * v;
    }
  }
}

/** One analysis level: x (length n) -> a, d (length n/2). */
export function dwtStep(
  x: Float64Array, n: number, f: BankFilters,
  a: Float64Array, d: Float64Array,
): void {
  gather(x, n, f.hd, a);
  gather(x, n, f.gd, d);
}

/** One synthesis level: a, d (length n/2) -> x (length n). */
export function idwtStep(
  a: Float64Array, d: Float64Array, n: number, f: BankFilters,
  x: Float64Array,
): void {
  x.fill(0.0, 0, n);
  scatter(a, n, f.hr, x);
  scatter(d, n, f.gr, x);
}

/** Adjoint of dwtStep: gradients on (a, d) scatter back onto x. */
export function dwtStepAdjoint(
  aGrad: Float64Array, dGrad: Float64Array, n: number, f: BankFilters,
  xGrad: Float64Array,
): void {
  xGrad.fill(0.0, 0, n);
  scatter(aGrad, n, f.hd, xGrad);
  scatter(dGrad, n, f.gd, xGrad);
}

/** Adjoint of idwtStep: gradient on x gathers back onto (a, d). */
export function idwtStepAdjoint(
  xGrad: Float64Array, n: number, f: BankFilters,
  aGrad: Float64Array, dGrad: Float64Array,
): void {
  gather(xGrad, n, f.hr, aGrad);
  gather(xGrad, n, f.gr, dGrad);
}

export interface Coeffs {
  approx: Float64Array;
  /** details[0] is the finest level (length n/2), last is the coarsest */
  details: Float64Array[];
}

export function maxLevels(n: number): number {
  let levels = 0;
  while (n % 2 === 0 && n > 1) {
    levels += 1;
    n >>= 1;
  }
  return levels;
}

export function allocCoeffs(n: number, levels: number): Coeffs {
  const details: Float64Array[] = [];
  for (let l = 0; l < levels; l++) {
    details.push(new Float64Array(n >> (l + 1)));
  }
  return { approx: new Float64Array(n >> levels), details };
}

/** Scratch for multilevel transforms on signals up to length n. */
export class DwtScratch {
  bufA: Float64Array;
  bufB: Float64Array;

  constructor(n: number) {
    this.bufA = new Float64Array(n);
    this.bufB = new Float64Array(n);
  }
}

/** Multilevel decomposition into preallocated coefficient arrays. */
export function wavedecInto(
  x: Float64Array, n: number, levels: number, f: BankFilters,
  out: Coeffs, scratch: DwtScratch,
): void {
  if (levels < 1 || levels > maxLevels(n)) {
    throw new Error(`cannot run ${levels} levels on a grid of ${n}`);
  }
  let current = x;
  let size = n;
  for (let l = 0; l < levels; l++) {
    const target = l === levels - 1
      ? out.approx
      : (l % 2 === 0 ? scratch.bufA : scratch.bufB);
    dwtStep(current, size, f, target, out.details[l]);
    current = target;
    size >>= 1;
  }
}

/** Multilevel reconstruction into a preallocated output of length n. */
export function waverecInto(
  coeffs: Coeffs, n: number, f: BankFilters,
  out: Float64Array, scratch: DwtScratch,
): void {
  const levels = coeffs.details.length;
  let current = coeffs.approx;
  for (let l = levels - 1; l >= 0; l--) {
    const size = 2 * coeffs.details[l].length;
    const target = l === 0 ? out : (l % 2 === 0 ? scratch.bufA : scratch.bufB);
    idwtStep(current, coeffs.details[l], size, f, target);
    current = target;
  }
}

/** Adjoint of wavedecInto: coefficient gradients -> signal gradient. */
export function wavedecAdjointInto(
  coeffGrads: Coeffs, n: number, f: BankFilters,
  out: Float64Array, scratch: DwtScratch,
): void {
  const levels = coeffGrads.details.length;
  let current = coeffGrads.approx;
  for (let l = levels - 1; l >= 0; l--) {
    const size = 2 * coeffGrads.details[l].length;
    const target = l === 0 ? out : (l % 2 === 0 ? scratch.bufA : scratch.bufB);
    dwtStepAdjoint(current, coeffGrads.details[l], size, f, target);
    current = target;
  }
}

/** Adjoint of waverecInto: signal gradient -> coefficient gradients. */
export function waverecAdjointInto(
  xGrad: Float64Array, n: number, levels: number, f: BankFilters,
  out: Coeffs, scratch: DwtScratch,
): void {
  let current = xGrad;
  let size = n;
  for (let l = 0; l < levels; l++) {
    const target = l === levels - 1
      ? out.approx
      : (l % 2 === 0 ? scratch.bufA : scratch.bufB);
    idwtStepAdjoint(current, size, f, target, out.details[l]);
    current = target;
    size >>= 1;
  }
}

// Convenience allocating wrappers (tests and one-off transforms).

export function wavedec(x: Float64Array, levels: number, f: BankFilters): Coeffs {
  const out = allocCoeffs(x.length, levels);
  wavedecInto(x, x.length, levels, f, out, new DwtScratch(x.length));
  return out;
}

export function waverec(coeffs: Coeffs, f: BankFilters): Float64Array {
  const n = 2 * coeffs.details[0].length;
  const out = new Float64Array(n);
  waverecInto(coeffs, n, f, out, new DwtScratch(n));
  return out;
}

export function wavedecAdjoint(coeffGrads: Coeffs, f: BankFilters): Float64Array {
  const n = 2 * coeffGrads.details[0].length;
  const out = new Float64Array(n);
  wavedecAdjointInto(coeffGrads, n, f, out, new DwtScratch(n));
  return out;
}

export function waverecAdjoint(
  xGrad: Float64Array, levels: number, f: BankFilters,
): Coeffs {
  const out = allocCoeffs(xGrad.length, levels);
  waverecAdjointInto(xGrad, xGrad.length, levels, f, out, new DwtScratch(xGrad.length));
  return out;
}

// ---------------------------------------------------------------------------
// Partial transforms for the integral block.
//
// The block leaves every detail band except the coarsest untouched, so with
// perfect reconstruction the layer can be written as
//
//   K * v = v + synth_sparse(KA.A - A, KD.Dc - Dc)
//
// where (A, Dc) are the approximation and coarsest detail of v.  Only the
// approximation chain is ever decomposed (plus one detail gather at the
// bottom), and the sparse synthesis scatters nothing on the fine detail
// bands.  This halves the transform work per block.
// ---------------------------------------------------------------------------

/** Approximation chain + coarsest detail only. */
export function decCoarse(
  x: Float64Array, n: number, levels: number, f: BankFilters,
  outA: Float64Array, outDc: Float64Array, scratch: DwtScratch,
): void {
  if (levels < 1 || levels > maxLevels(n)) {
    throw new Error(`cannot run ${levels} levels on a grid of ${n}`);
  }
  let current = x;
  let size = n;
  for (let l = 0; l < levels; l++) {
    const last = l === levels - 1;
    const target = last ? outA : (l % 2 === 0 ? scratch.bufA : scratch.bufB);
    gather(current, size, f.hd, target);
    if (last) {
      gather(current, size, f.gd, outDc);
    }
    current = target;
    size >>= 1;
  }
}

/** Synthesis of a pyramid whose finer detail bands are all zero. */
export function recFromCoarse(
  a: Float64Array, dc: Float64Array, n: number, levels: number,
  f: BankFilters, out: Float64Array, scratch: DwtScratch,
): void {
  const mCoarse = n >> levels;
  let current = a;
  let size = 2 * mCoarse;
  for (let l = levels - 1; l >= 0; l--) {
    const target = l === 0 ? out : (l % 2 === 0 ? scratch.bufA : scratch.bufB);
    target.fill(0.0, 0, size);
    scatter(current, size, f.hr, target);
    if (l === levels - 1) {
      scatter(dc, size, f.gr, target);
    }
    current = target;
    size <<= 1;
  }
}

/** Adjoint of decCoarse: (dA, dDc) scatter back to a signal gradient. */
export function decCoarseAdjoint(
  dA: Float64Array, dDc: Float64Array, n: number, levels: number,
  f: BankFilters, out: Float64Array, scratch: DwtScratch,
): void {
  const mCoarse = n >> levels;
  let current = dA;
  let size = 2 * mCoarse;
  for (let l = levels - 1; l >= 0; l--) {
    const target = l === 0 ? out : (l % 2 === 0 ? scratch.bufA : scratch.bufB);
    target.fill(0.0, 0, size);
    scatter(current, size, f.hd, target);
    if (l === levels - 1) {
      scatter(dDc, size, f.gd, target);
    }
    current = target;
    size <<= 1;
  }
}

/** Adjoint of recFromCoarse: signal gradient gathers to (dA, dDc). */
export function recFromCoarseAdjoint(
  xGrad: Float64Array, n: number, levels: number, f: BankFilters,
  outA: Float64Array, outDc: Float64Array, scratch: DwtScratch,
): void {
  let current = xGrad;
  let size = n;
  for (let l = 0; l < levels; l++) {
    const last = l === levels - 1;
    const target = last ? outA : (l % 2 === 0 ? scratch.bufA : scratch.bufB);
    gather(current, size, f.hr, target);
    if (last) {
      gather(current, size, f.gr, outDc);
    }
    current = target;
    size >>= 1;
  }
}
