/**
 * Short supervised training of one WNO architecture, scored by the mean
 * relative L2 error on the held-out validation split.
 */

import { OperatorDataset } from "./dataset.js";
import { Rng } from "./rng.js";
import { Adam, BlockSpec, Wno, WnoOptions, Workspace } from "./wno.js";

export interface TrainOptions extends WnoOptions {
  learningRate?: number;
  batchSize?: number;
  schedulerStep?: number;   // epochs between learning-rate decays
  schedulerGamma?: number;
}

export const DIVERGENCE_SENTINEL = 1e3;

export interface TrainResult {
  valLoss: number;
  model: Wno;
  diverged: boolean;
}

/** Mean relative L2 over the validation split; sentinel on divergence. */
export function trainAndScore(
  spec: BlockSpec[], dataset: OperatorDataset, epochs: number, seed: number,
  options: TrainOptions = {},
): TrainResult {
  const model = new Wno(spec, dataset.grid, seed, options);
  const lr0 = options.learningRate ?? 1e-3;
  const batchSize = options.batchSize ?? 10;
  const stepSize = options.schedulerStep ?? 50;
  const gamma = options.schedulerGamma ?? 0.75;

  const optimizer = new Adam(model.parameters(), lr0);
  const rng = new Rng((seed ^ 0x9e3779b9) >>> 0);
  const indices = new Int32Array(dataset.trainCount);
  for (let i = 0; i < indices.length; i++) {
    indices[i] = i;
  }
  const ws = new Workspace();
  const grads = model.zeroGrads();

  for (let epoch = 0; epoch < epochs; epoch++) {
    optimizer.learningRate = lr0 * Math.pow(gamma, Math.floor(epoch / stepSize));
    rng.shuffle(indices);
    for (let start = 0; start < indices.length; start += batchSize) {
      const stop = Math.min(indices.length, start + batchSize);
      for (const g of grads) {
        g.fill(0);
      }
      for (let s = start; s < stop; s++) {
        const idx = indices[s];
        const pred = model.forward(dataset.inputs[idx], ws);
        const uGrad = relativeL2Grad(pred, dataset.outputs[idx], stop - start);
        if (!uGrad) {
          return { valLoss: DIVERGENCE_SENTINEL, model, diverged: true };
        }
        model.backward(ws, uGrad, grads);
      }
      optimizer.step(model.parameters(), grads);
    }
  }

  const valLoss = score(model, dataset);
  if (!Number.isFinite(valLoss)) {
    return { valLoss: DIVERGENCE_SENTINEL, model, diverged: true };
  }
  return { valLoss, model, diverged: false };
}

/** Mean relative L2 error of the model over the validation split. */
export function score(model: Wno, dataset: OperatorDataset): number {
  const ws = new Workspace();
  let total = 0.0;
  for (let s = dataset.trainCount; s < dataset.inputs.length; s++) {
    const pred = model.forward(dataset.inputs[s], ws);
    total += relativeL2(pred, dataset.outputs[s]);
  }
  return total / dataset.valCount;
}

export function relativeL2(pred: Float64Array, truth: Float64Array): number {
  let num = 0.0;
  let den = 0.0;
  for (let x = 0; x < pred.length; x++) {
    const d = pred[x] - truth[x];
    num += d * d;
    den += truth[x] * truth[x];
  }
  return Math.sqrt(num) / Math.sqrt(den);
}

/** d relativeL2 / d pred, pre-divided by the batch size; null if non-finite. */
function relativeL2Grad(
  pred: Float64Array, truth: Float64Array, batch: number,
): Float64Array | null {
  let num = 0.0;
  let den = 0.0;
  for (let x = 0; x < pred.length; x++) {
    const d = pred[x] - truth[x];
    num += d * d;
    den += truth[x] * truth[x];
  }
  if (!Number.isFinite(num)) {
    return null;
  }
  const errNorm = Math.sqrt(num);
  const truthNorm = Math.sqrt(den);
  const out = new Float64Array(pred.length);
  if (errNorm === 0.0) {
    return out;
  }
  const scale = 1.0 / (errNorm * truthNorm * batch);
  for (let x = 0; x < pred.length; x++) {
    out[x] = (pred[x] - truth[x]) * scale;
  }
  return out;
}
