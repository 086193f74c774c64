/**
 * Desk-scale 1D wavelet neural operator.
 *
 * Pipeline: pointwise lift (2 -> width channels), n wavelet integral blocks,
 * pointwise projection (width -> 1).  A block decomposes every channel with
 * its own wavelet basis, mixes channels with learned per-position kernels on
 * the approximation band and the coarsest detail band (finer details pass
 * through untouched), reconstructs, adds a learned pointwise bypass, and
 * applies the block's activation.
 *
 * Parameters never depend on the grid size: kernels live on the coarsest
 * band whose length is baseGrid / 2^levels, and evaluation at a finer grid
 * simply decomposes more levels, so a trained model runs unchanged at 2x
 * resolution.
 *
 * Forward/backward run against a reusable Workspace; the training loop calls
 * them hundreds of thousands of times, so nothing inside allocates.
 */

import { Activation, activationByName } from "./activations.js";
import {
  BankFilters, bankFilters, decCoarse, decCoarseAdjoint, DwtScratch,
  maxLevels, recFromCoarse, recFromCoarseAdjoint,
} from "./dwt.js";
import { Rng } from "./rng.js";
import { FilterBank, waveletByName } from "./wavelets.js";

export interface BlockSpec {
  wavelet: string;
  activation: string;
}

export interface WnoOptions {
  width?: number;
  levels?: number;
}

// input normalization constants: coefficient fields live in [3, 12]
const FIELD_CENTER = 7.5;
const FIELD_SCALE = 4.5;

interface BlockParams {
  bank: FilterBank;
  filters: BankFilters;
  act: Activation;
  ka: Float64Array; // [(i*width + o) * mCoarse + x]
  kd: Float64Array;
  w: Float64Array;  // [o * width + i]
  b: Float64Array;  // [o]
}

interface BlockSlot {
  approx: Float64Array[];  // per input channel, cached for the kernel grads
  coarse: Float64Array[];  // coarsest detail per input channel
  pre: Float64Array[];     // pre-activation per output channel
  out: Float64Array[];     // activated output channels
}

/** Preallocated per-sample buffers for one grid size. */
export class Workspace {
  grid = 0;
  levels = 0;
  in0 = new Float64Array(0);
  in1 = new Float64Array(0);
  lifted: Float64Array[] = [];
  blocks: BlockSlot[] = [];
  scratch: DwtScratch = new DwtScratch(0);
  aOut = new Float64Array(0);
  dOut = new Float64Array(0);
  kv = new Float64Array(0);
  dRows: Float64Array[] = [];
  dRowsPrev: Float64Array[] = [];
  dPre: Float64Array[] = [];
  dAIn: Float64Array[] = [];
  dDcIn: Float64Array[] = [];

  ensure(grid: number, levels: number, width: number, mCoarse: number,
         nBlocks: number): void {
    if (this.grid === grid && this.levels === levels
        && this.lifted.length === width && this.blocks.length === nBlocks) {
      return;
    }
    const rows = (n: number) =>
      Array.from({ length: width }, () => new Float64Array(n));
    this.grid = grid;
    this.levels = levels;
    this.in0 = new Float64Array(grid);
    this.in1 = new Float64Array(grid);
    this.lifted = rows(grid);
    this.scratch = new DwtScratch(grid);
    this.aOut = new Float64Array(mCoarse);
    this.dOut = new Float64Array(mCoarse);
    this.kv = new Float64Array(grid);
    this.dRows = rows(grid);
    this.dRowsPrev = rows(grid);
    this.dPre = rows(grid);
    this.dAIn = rows(mCoarse);
    this.dDcIn = rows(mCoarse);
    this.blocks = Array.from({ length: nBlocks }, () => ({
      approx: rows(mCoarse),
      coarse: rows(mCoarse),
      pre: rows(grid),
      out: rows(grid),
    }));
  }
}

export class Wno {
  readonly width: number;
  readonly baseGrid: number;
  readonly baseLevels: number;
  readonly mCoarse: number;
  readonly blocks: BlockParams[];
  liftW: Float64Array; // [c * 2 + k]
  liftB: Float64Array;
  projW: Float64Array;
  projB: Float64Array;

  constructor(spec: BlockSpec[], baseGrid: number, seed: number,
              options: WnoOptions = {}) {
    this.width = options.width ?? 16;
    this.baseLevels = options.levels ?? 4;
    this.baseGrid = baseGrid;
    if (maxLevels(baseGrid) < this.baseLevels) {
      throw new Error(`grid ${baseGrid} too small for ${this.baseLevels} levels`);
    }
    this.mCoarse = baseGrid >> this.baseLevels;
    const rng = new Rng(seed);
    const w = this.width;
    this.liftW = uniformArray(rng, w * 2, 1 / Math.sqrt(2));
    this.liftB = new Float64Array(w);
    this.blocks = spec.map(({ wavelet, activation }) => {
      const bank = waveletByName(wavelet);
      if (!bank) {
        throw new Error(`unknown wavelet: ${wavelet}`);
      }
      const act = activationByName(activation);
      if (!act) {
        throw new Error(`unknown activation: ${activation}`);
      }
      return {
        bank,
        filters: bankFilters(bank),
        act,
        ka: uniformArray(rng, w * w * this.mCoarse, 1 / w),
        kd: uniformArray(rng, w * w * this.mCoarse, 1 / w),
        w: uniformArray(rng, w * w, 1 / Math.sqrt(w)),
        b: new Float64Array(w),
      };
    });
    this.projW = uniformArray(rng, w, 1 / Math.sqrt(w));
    this.projB = new Float64Array(1);
  }

  /** Flat list of parameter arrays, fixed order (shared with gradients). */
  parameters(): Float64Array[] {
    const out: Float64Array[] = [this.liftW, this.liftB];
    for (const block of this.blocks) {
      out.push(block.ka, block.kd, block.w, block.b);
    }
    out.push(this.projW, this.projB);
    return out;
  }

  parameterCount(): number {
    return this.parameters().reduce((acc, p) => acc + p.length, 0);
  }

  levelsFor(grid: number): number {
    let levels = this.baseLevels;
    let g = this.baseGrid;
    while (g < grid) {
      g *= 2;
      levels += 1;
    }
    if (g !== grid) {
      throw new Error(
        `grid ${grid} is not baseGrid ${this.baseGrid} times a power of 2`,
      );
    }
    return levels;
  }

  forward(field: Float64Array, ws: Workspace): Float64Array {
    const grid = field.length;
    const levels = this.levelsFor(grid);
    const w = this.width;
    ws.ensure(grid, levels, w, this.mCoarse, this.blocks.length);

    const { in0, in1 } = ws;
    for (let x = 0; x < grid; x++) {
      in0[x] = (field[x] - FIELD_CENTER) / FIELD_SCALE;
      in1[x] = x / (grid - 1);
    }
    for (let c = 0; c < w; c++) {
      const row = ws.lifted[c];
      const w0 = this.liftW[c * 2];
      const w1 = this.liftW[c * 2 + 1];
      const b = this.liftB[c];
      for (let x = 0; x < grid; x++) {
        row[x] = w0 * in0[x] + w1 * in1[x] + b;
      }
    }

    let v = ws.lifted;
    for (let bi = 0; bi < this.blocks.length; bi++) {
      const block = this.blocks[bi];
      const slot = ws.blocks[bi];
      for (let i = 0; i < w; i++) {
        decCoarse(v[i], grid, levels, block.filters,
                  slot.approx[i], slot.coarse[i], ws.scratch);
      }
      for (let o = 0; o < w; o++) {
        // mix channels on the retained bands; finer details pass through,
        // which by perfect reconstruction is the same as adding v[o] and
        // synthesizing only the band differences
        const aOut = ws.aOut;
        const dOut = ws.dOut;
        aOut.fill(0);
        dOut.fill(0);
        for (let i = 0; i < w; i++) {
          const base = (i * w + o) * this.mCoarse;
          const ai = slot.approx[i];
          const di = slot.coarse[i];
          const ka = block.ka;
          const kd = block.kd;
          for (let x = 0; x < this.mCoarse; x++) {
            aOut[x] += ka[base + x] * ai[x];
            dOut[x] += kd[base + x] * di[x];
          }
        }
        const ao = slot.approx[o];
        const dco = slot.coarse[o];
        for (let x = 0; x < this.mCoarse; x++) {
          aOut[x] -= ao[x];
          dOut[x] -= dco[x];
        }
        recFromCoarse(aOut, dOut, grid, levels, block.filters, ws.kv, ws.scratch);

        const pre = slot.pre[o];
        pre.fill(0);
        for (let i = 0; i < w; i++) {
          const wv = block.w[o * w + i];
          const vi = v[i];
          for (let x = 0; x < grid; x++) {
            pre[x] += wv * vi[x];
          }
        }
        const bias = block.b[o];
        const kv = ws.kv;
        const vo = v[o];
        for (let x = 0; x < grid; x++) {
          pre[x] += bias + kv[x] + vo[x];
        }
        block.act.fRow(pre, slot.out[o], grid);
      }
      v = slot.out;
    }

    const u = new Float64Array(grid);
    const pb = this.projB[0];
    for (let x = 0; x < grid; x++) {
      u[x] = pb;
    }
    for (let c = 0; c < w; c++) {
      const pw = this.projW[c];
      const vc = v[c];
      for (let x = 0; x < grid; x++) {
        u[x] += pw * vc[x];
      }
    }
    return u;
  }

  /**
   * Accumulate parameter gradients for the sample most recently run through
   * forward() with this workspace.
   */
  backward(ws: Workspace, uGrad: Float64Array, grads: Float64Array[]): void {
    const w = this.width;
    const grid = ws.grid;
    const levels = ws.levels;
    const mC = this.mCoarse;
    const [gLiftW, gLiftB] = grads;
    const gProjW = grads[grads.length - 2];
    const gProjB = grads[grads.length - 1];
    const lastV = this.blocks.length > 0
      ? ws.blocks[this.blocks.length - 1].out
      : ws.lifted;

    // projection
    let dV = ws.dRows;
    let biasAcc = 0.0;
    for (let x = 0; x < grid; x++) {
      biasAcc += uGrad[x];
    }
    gProjB[0] += biasAcc;
    for (let c = 0; c < w; c++) {
      const vc = lastV[c];
      const row = dV[c];
      const pw = this.projW[c];
      let acc = 0.0;
      for (let x = 0; x < grid; x++) {
        acc += vc[x] * uGrad[x];
        row[x] = pw * uGrad[x];
      }
      gProjW[c] += acc;
    }

    for (let bi = this.blocks.length - 1; bi >= 0; bi--) {
      const block = this.blocks[bi];
      const slot = ws.blocks[bi];
      const vIn = bi === 0 ? ws.lifted : ws.blocks[bi - 1].out;
      const gKa = grads[2 + bi * 4];
      const gKd = grads[2 + bi * 4 + 1];
      const gW = grads[2 + bi * 4 + 2];
      const gB = grads[2 + bi * 4 + 3];

      for (let o = 0; o < w; o++) {
        block.act.dfRow(slot.pre[o], dV[o], ws.dPre[o], grid);
      }

      const dVPrev = dV === ws.dRows ? ws.dRowsPrev : ws.dRows;
      for (let i = 0; i < w; i++) {
        dVPrev[i].fill(0);
      }

      // bypass path
      for (let o = 0; o < w; o++) {
        const dpo = ws.dPre[o];
        let acc = 0.0;
        for (let x = 0; x < grid; x++) {
          acc += dpo[x];
        }
        gB[o] += acc;
        for (let i = 0; i < w; i++) {
          const vi = vIn[i];
          const wv = block.w[o * w + i];
          const target = dVPrev[i];
          let accW = 0.0;
          for (let x = 0; x < grid; x++) {
            accW += dpo[x] * vi[x];
            target[x] += wv * dpo[x];
          }
          gW[o * w + i] += accW;
        }
      }

      // kernel path: adjoint of the sparse synthesis, kernel grads, band
      // mixing; the pass-through identity adds dPre[o] to dVPrev[o] directly
      for (let i = 0; i < w; i++) {
        ws.dAIn[i].fill(0);
        ws.dDcIn[i].fill(0);
        const dpo = ws.dPre[i];
        const target = dVPrev[i];
        for (let x = 0; x < grid; x++) {
          target[x] += dpo[x];
        }
      }
      for (let o = 0; o < w; o++) {
        const gA = ws.aOut;
        const gDc = ws.dOut;
        recFromCoarseAdjoint(ws.dPre[o], grid, levels, block.filters,
                             gA, gDc, ws.scratch);
        for (let i = 0; i < w; i++) {
          const base = (i * w + o) * mC;
          const ai = slot.approx[i];
          const di = slot.coarse[i];
          const dA = ws.dAIn[i];
          const dDc = ws.dDcIn[i];
          const ka = block.ka;
          const kd = block.kd;
          for (let x = 0; x < mC; x++) {
            gKa[base + x] += gA[x] * ai[x];
            gKd[base + x] += gDc[x] * di[x];
            dA[x] += ka[base + x] * gA[x];
            dDc[x] += kd[base + x] * gDc[x];
          }
        }
        const dAo = ws.dAIn[o];
        const dDco = ws.dDcIn[o];
        for (let x = 0; x < mC; x++) {
          dAo[x] -= gA[x];
          dDco[x] -= gDc[x];
        }
      }
      for (let i = 0; i < w; i++) {
        decCoarseAdjoint(ws.dAIn[i], ws.dDcIn[i], grid, levels, block.filters,
                         ws.kv, ws.scratch);
        const target = dVPrev[i];
        for (let x = 0; x < grid; x++) {
          target[x] += ws.kv[x];
        }
      }
      dV = dVPrev;
    }

    // lift
    for (let c = 0; c < w; c++) {
      const row = dV[c];
      let acc0 = 0.0;
      let acc1 = 0.0;
      let accB = 0.0;
      for (let x = 0; x < grid; x++) {
        acc0 += row[x] * ws.in0[x];
        acc1 += row[x] * ws.in1[x];
        accB += row[x];
      }
      gLiftW[c * 2] += acc0;
      gLiftW[c * 2 + 1] += acc1;
      gLiftB[c] += accB;
    }
  }

  zeroGrads(): Float64Array[] {
    return this.parameters().map((p) => new Float64Array(p.length));
  }
}

function uniformArray(rng: Rng, n: number, bound: number): Float64Array {
  const out = new Float64Array(n);
  for (let i = 0; i < n; i++) {
    out[i] = rng.uniform(-bound, bound);
  }
  return out;
}

/** Adam with bias correction over the model's flat parameter list. */
export class Adam {
  private m: Float64Array[];
  private v: Float64Array[];
  private t = 0;
  learningRate: number;

  constructor(params: Float64Array[], learningRate = 1e-3,
              private beta1 = 0.9, private beta2 = 0.999,
              private eps = 1e-8) {
    this.learningRate = learningRate;
    this.m = params.map((p) => new Float64Array(p.length));
    this.v = params.map((p) => new Float64Array(p.length));
  }

  step(params: Float64Array[], grads: Float64Array[]): void {
    this.t += 1;
    const bc1 = 1 - Math.pow(this.beta1, this.t);
    const bc2 = 1 - Math.pow(this.beta2, this.t);
    for (let k = 0; k < params.length; k++) {
      const p = params[k];
      const g = grads[k];
      const m = this.m[k];
      const v = this.v[k];
      for (let i = 0; i < p.length; i++) {
        m[i] = this.beta1 * m[i] + (1 - this.beta1) * g[i];
        v[i] = this.beta2 * v[i] + (1 - this.beta2) * g[i] * g[i];
        p[i] -= this.learningRate * (m[i] / bc1) / (Math.sqrt(v[i] / bc2) + this.eps);
      }
    }
  }
}
