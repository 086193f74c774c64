/**
 * NDJSON reward server over stdin/stdout.
 *
 * First line out is the hello; every request line {id, architecture, budget}
 * is answered with {id, reward, metrics} where reward = exp(-val_loss), or
 * {id, error}.  Lines of type "log" may be interleaved and must be ignored
 * by clients' request/response state machines.  {"type": "shutdown"} ends
 * the process with exit code 0.
 *
 * Flags: --grid N --samples N --seed N --proxy-epochs N --width N
 *        --levels N --dataset-cache PATH
 */

import { createInterface } from "node:readline";
import { existsSync, readFileSync, writeFileSync } from "node:fs";

import {
  datasetFromJson, datasetToJson, generateDataset, OperatorDataset,
} from "./dataset.js";
import { fnv1a } from "./rng.js";
import { trainAndScore } from "./train.js";
import { BlockSpec } from "./wno.js";

interface Flags {
  grid: number;
  samples: number;
  seed: number;
  proxyEpochs: number;
  width: number;
  levels: number;
  datasetCache?: string;
}

function parseFlags(argv: string[]): Flags {
  const flags: Flags = {
    grid: 256, samples: 250, seed: 0, proxyEpochs: 20, width: 16, levels: 4,
  };
  for (let i = 0; i < argv.length; i += 2) {
    const key = argv[i];
    const value = argv[i + 1];
    if (value === undefined) {
      throw new Error(`flag ${key} needs a value`);
    }
    switch (key) {
      case "--grid": flags.grid = Number(value); break;
      case "--samples": flags.samples = Number(value); break;
      case "--seed": flags.seed = Number(value); break;
      case "--proxy-epochs": flags.proxyEpochs = Number(value); break;
      case "--width": flags.width = Number(value); break;
      case "--levels": flags.levels = Number(value); break;
      case "--dataset-cache": flags.datasetCache = value; break;
      default: throw new Error(`unknown flag ${key}`);
    }
  }
  return flags;
}

function loadDataset(flags: Flags): OperatorDataset {
  if (flags.datasetCache && existsSync(flags.datasetCache)) {
    return datasetFromJson(readFileSync(flags.datasetCache, "utf8"));
  }
  const ds = generateDataset(flags.samples, flags.grid, flags.seed);
  if (flags.datasetCache) {
    writeFileSync(flags.datasetCache, datasetToJson(ds));
  }
  return ds;
}

function parseArchitecture(raw: unknown): BlockSpec[] {
  if (!Array.isArray(raw) || raw.length === 0) {
    throw new Error("architecture must be a non-empty array");
  }
  return raw.map((entry) => {
    if (typeof entry !== "object" || entry === null ||
        typeof (entry as any).wavelet !== "string" ||
        typeof (entry as any).activation !== "string") {
      throw new Error("each block needs wavelet and activation strings");
    }
    return {
      wavelet: (entry as any).wavelet,
      activation: (entry as any).activation,
    };
  });
}

function emit(doc: unknown): void {
  process.stdout.write(JSON.stringify(doc) + "\n");
}

export function main(): void {
  const flags = parseFlags(process.argv.slice(2));
  const dataset = loadDataset(flags);

  emit({ type: "hello", protocol: 1, deterministic: true, concurrent_safe: false });

  const rl = createInterface({ input: process.stdin, terminal: false });
  rl.on("line", (line) => {
    const text = line.trim();
    if (!text) {
      return;
    }
    let msg: any;
    try {
      msg = JSON.parse(text);
    } catch {
      emit({ id: -1, error: "unparseable request line" });
      return;
    }
    if (msg && msg.type === "shutdown") {
      process.exit(0);
    }
    const id = typeof msg?.id === "number" ? msg.id : -1;
    try {
      const spec = parseArchitecture(msg.architecture);
      const epochs = msg.budget && typeof msg.budget.epochs === "number"
        ? msg.budget.epochs
        : flags.proxyEpochs;
      const archKey = spec.map((b) => `${b.wavelet}/${b.activation}`).join(",");
      const seed = (flags.seed ^ fnv1a(archKey)) >>> 0;
      const started = Date.now();
      const { valLoss } = trainAndScore(spec, dataset, epochs, seed, {
        width: flags.width,
        levels: flags.levels,
      });
      emit({
        type: "log",
        message: `arch=${archKey} epochs=${epochs} val_loss=${valLoss.toFixed(6)} ` +
          `wall_ms=${Date.now() - started}`,
      });
      emit({
        id,
        reward: Math.exp(-valLoss),
        metrics: { val_loss: valLoss, epochs },
      });
    } catch (err) {
      emit({ id, error: err instanceof Error ? err.message : String(err) });
    }
  });
  rl.on("close", () => {
    process.exit(0);
  });
}

main();
