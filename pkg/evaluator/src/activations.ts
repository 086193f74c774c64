/**
 * Pointwise nonlinearities selectable per wavelet integral block.
 *
 * Each activation provides whole-row kernels (apply, and gradient
 * chain-multiply) so the hot training loops stay monomorphic.
 */

export interface Activation {
  name: string;
  f(x: number): number;
  /** derivative evaluated at the pre-activation value */
  df(x: number): number;
  /** out[i] = f(pre[i]) for i < n */
  fRow(pre: Float64Array, out: Float64Array, n: number): void;
  /** out[i] = upstream[i] * df(pre[i]) for i < n */
  dfRow(pre: Float64Array, upstream: Float64Array, out: Float64Array,
        n: number): void;
}

const SQRT_2_OVER_PI = Math.sqrt(2 / Math.PI);
const GELU_C = 0.044715;

const SELU_LAMBDA = 1.0507009873554805;
const SELU_ALPHA = 1.6732632423543772;

function geluF(x: number): number {
  const t = Math.tanh(SQRT_2_OVER_PI * (x + GELU_C * x * x * x));
  return 0.5 * x * (1 + t);
}

function geluDf(x: number): number {
  const inner = SQRT_2_OVER_PI * (x + GELU_C * x * x * x);
  const t = Math.tanh(inner);
  const dInner = SQRT_2_OVER_PI * (1 + 3 * GELU_C * x * x);
  return 0.5 * (1 + t) + 0.5 * x * (1 - t * t) * dInner;
}

const ACTIVATIONS: Record<string, Activation> = {
  gelu: {
    name: "gelu",
    f: geluF,
    df: geluDf,
    fRow(pre, out, n) {
      for (let i = 0; i < n; i++) {
        out[i] = geluF(pre[i]);
      }
    },
    dfRow(pre, upstream, out, n) {
      for (let i = 0; i < n; i++) {
        out[i] = upstream[i] * geluDf(pre[i]);
      }
    },
  },
  elu: {
    name: "elu",
    f: (x) => (x >= 0 ? x : Math.expm1(x)),
    df: (x) => (x >= 0 ? 1 : Math.exp(x)),
    fRow(pre, out, n) {
      for (let i = 0; i < n; i++) {
        const x = pre[i];
        out[i] = x >= 0 ? x : Math.expm1(x);
      }
    },
    dfRow(pre, upstream, out, n) {
      for (let i = 0; i < n; i++) {
        const x = pre[i];
        out[i] = upstream[i] * (x >= 0 ? 1 : Math.exp(x));
      }
    },
  },
  leaky_relu: {
    name: "leaky_relu",
    f: (x) => (x >= 0 ? x : 0.01 * x),
    df: (x) => (x >= 0 ? 1 : 0.01),
    fRow(pre, out, n) {
      for (let i = 0; i < n; i++) {
        const x = pre[i];
        out[i] = x >= 0 ? x : 0.01 * x;
      }
    },
    dfRow(pre, upstream, out, n) {
      for (let i = 0; i < n; i++) {
        out[i] = upstream[i] * (pre[i] >= 0 ? 1 : 0.01);
      }
    },
  },
  selu: {
    name: "selu",
    f: (x) => (x >= 0 ? SELU_LAMBDA * x : SELU_LAMBDA * SELU_ALPHA * Math.expm1(x)),
    df: (x) => (x >= 0 ? SELU_LAMBDA : SELU_LAMBDA * SELU_ALPHA * Math.exp(x)),
    fRow(pre, out, n) {
      for (let i = 0; i < n; i++) {
        const x = pre[i];
        out[i] = x >= 0
          ? SELU_LAMBDA * x
          : SELU_LAMBDA * SELU_ALPHA * Math.expm1(x);
      }
    },
    dfRow(pre, upstream, out, n) {
      for (let i = 0; i < n; i++) {
        const x = pre[i];
        out[i] = upstream[i]
          * (x >= 0 ? SELU_LAMBDA : SELU_LAMBDA * SELU_ALPHA * Math.exp(x));
      }
    },
  },
  sigmoid: {
    name: "sigmoid",
    f: (x) => 1 / (1 + Math.exp(-x)),
    df: (x) => {
      const s = 1 / (1 + Math.exp(-x));
      return s * (1 - s);
    },
    fRow(pre, out, n) {
      for (let i = 0; i < n; i++) {
        out[i] = 1 / (1 + Math.exp(-pre[i]));
      }
    },
    dfRow(pre, upstream, out, n) {
      for (let i = 0; i < n; i++) {
        const s = 1 / (1 + Math.exp(-pre[i]));
        out[i] = upstream[i] * s * (1 - s);
      }
    },
  },
};

export const ACTIVATION_NAMES = Object.keys(ACTIVATIONS);

export function activationByName(name: string): Activation | undefined {
  return ACTIVATIONS[name];
}
