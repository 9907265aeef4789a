/**
 * Desk-scale gradient boosting: enough of the framework to emit realistic
 * booster dumps for the exporter. Second-order boosting on logistic loss
 * (binary) or one-vs-rest softmax (multiclass), exact greedy splits at
 * midpoints, round-robin tree ordering per class.
 */

import { BoosterDump, DumpNode } from "./dump.js";

export interface TrainOptions {
  rounds: number; // boosting rounds (trees per class)
  maxDepth: number;
  learningRate?: number;
  lambda?: number; // L2 on leaf weights
  gamma?: number; // min split gain
  minChild?: number; // min hessian per side
  numClass?: number; // >= 2 switches to multi:softprob with 2 meaning 2 one-vs-rest heads
  featureNames?: string[];
}

interface SplitChoice {
  feature: number;
  threshold: number;
  gain: number;
  left: number[];
  right: number[];
}

function leafWeight(g: number, h: number, lambda: number, lr: number): number {
  return (-g / (h + lambda)) * lr;
}

function bestSplit(
  X: number[][],
  rows: number[],
  grad: number[],
  hess: number[],
  lambda: number,
  gamma: number,
  minChild: number,
): SplitChoice | null {
  const numFeatures = X[0].length;
  let totalG = 0;
  let totalH = 0;
  for (const r of rows) {
    totalG += grad[r];
    totalH += hess[r];
  }
  const parentScore = (totalG * totalG) / (totalH + lambda);
  let best: SplitChoice | null = null;
  for (let f = 0; f < numFeatures; f++) {
    const order = [...rows].sort((a, b) => X[a][f] - X[b][f] || a - b);
    let gl = 0;
    let hl = 0;
    for (let i = 0; i + 1 < order.length; i++) {
      const r = order[i];
      gl += grad[r];
      hl += hess[r];
      const here = X[r][f];
      const next = X[order[i + 1]][f];
      if (here === next) continue;
      const gr = totalG - gl;
      const hr = totalH - hl;
      if (hl < minChild || hr < minChild) continue;
      const gain =
        0.5 * ((gl * gl) / (hl + lambda) + (gr * gr) / (hr + lambda) - parentScore) - gamma;
      if (gain > 1e-12 && (best === null || gain > best.gain)) {
        best = {
          feature: f,
          threshold: (here + next) / 2, // strict "<" sends `here` left
          gain,
          left: order.slice(0, i + 1),
          right: order.slice(i + 1),
        };
      }
    }
  }
  return best;
}

function buildTree(
  X: number[][],
  rows: number[],
  grad: number[],
  hess: number[],
  depth: number,
  opts: Required<Pick<TrainOptions, "maxDepth" | "lambda" | "gamma" | "minChild">> & {
    learningRate: number;
    featureNames?: string[];
  },
  nextId: { id: number },
): DumpNode {
  const nodeid = nextId.id++;
  const mkLeaf = () => {
    let g = 0;
    let h = 0;
    for (const r of rows) {
      g += grad[r];
      h += hess[r];
    }
    return { nodeid, leaf: leafWeight(g, h, opts.lambda, opts.learningRate) };
  };
  if (depth >= opts.maxDepth || rows.length < 2) return mkLeaf();
  const split = bestSplit(X, rows, grad, hess, opts.lambda, opts.gamma, opts.minChild);
  if (!split) return mkLeaf();
  const yesChild = buildTree(X, split.left, grad, hess, depth + 1, opts, nextId);
  const noChild = buildTree(X, split.right, grad, hess, depth + 1, opts, nextId);
  const name = opts.featureNames ? opts.featureNames[split.feature] : `f${split.feature}`;
  return {
    nodeid,
    split: name,
    split_condition: split.threshold,
    yes: yesChild.nodeid,
    no: noChild.nodeid,
    children: [yesChild, noChild],
  };
}

/** Train a booster and return its native dump. Labels are 0/1 or 0..C-1. */
export function train(X: number[][], y: number[], opts: TrainOptions): BoosterDump {
  if (X.length === 0 || X.length !== y.length) {
    throw new Error("training data and labels must be non-empty and aligned");
  }
  const numClass = opts.numClass ?? 2;
  const multi = numClass > 2;
  const heads = multi ? numClass : 1;
  const lr = opts.learningRate ?? 0.3;
  const common = {
    maxDepth: opts.maxDepth,
    lambda: opts.lambda ?? 1.0,
    gamma: opts.gamma ?? 0.0,
    minChild: opts.minChild ?? 1e-6,
    learningRate: lr,
    featureNames: opts.featureNames,
  };
  const n = X.length;
  const margins: number[][] = Array.from({ length: n }, () => new Array(heads).fill(0));
  const trees: DumpNode[] = [];
  const allRows = Array.from({ length: n }, (_, i) => i);

  for (let round = 0; round < opts.rounds; round++) {
    const probs: number[][] = margins.map((m) => {
      if (!multi) {
        const p = 1 / (1 + Math.exp(-m[0]));
        return [p];
      }
      const mx = Math.max(...m);
      const exps = m.map((v) => Math.exp(v - mx));
      const total = exps.reduce((a, b) => a + b, 0);
      return exps.map((v) => v / total);
    });
    for (let c = 0; c < heads; c++) {
      const grad = new Array<number>(n);
      const hess = new Array<number>(n);
      for (let i = 0; i < n; i++) {
        const target = multi ? (y[i] === c ? 1 : 0) : y[i];
        const p = probs[i][c];
        grad[i] = p - target;
        hess[i] = Math.max(p * (1 - p), 1e-16);
      }
      const tree = buildTree(X, allRows, grad, hess, 0, common, { id: 0 });
      trees.push(tree);
      for (let i = 0; i < n; i++) {
        margins[i][c] += evalNode(tree, X[i], opts.featureNames);
      }
    }
  }
  return {
    objective: multi ? "multi:softprob" : "binary:logistic",
    num_features: X[0].length,
    ...(multi ? { num_class: numClass } : {}),
    base_score: 0.0,
    ...(opts.featureNames ? { feature_names: opts.featureNames } : {}),
    decision_type: "<",
    trees,
  };
}

function evalNode(node: DumpNode, row: number[], names?: string[]): number {
  while (!("leaf" in node)) {
    const split = node as Extract<DumpNode, { split: string }>;
    const f = names ? names.indexOf(split.split) : Number(split.split.slice(1));
    const goYes = row[f] < (split.split_condition as number);
    const target = goYes ? split.yes : split.no;
    node = split.children.find((c) => c.nodeid === target)!;
  }
  return (node as { leaf: number }).leaf;
}

/** Deterministic synthetic classification data for the parity tests. */
export function syntheticData(
  n: number,
  numFeatures: number,
  numClass: number,
  seed: number,
): { X: number[][]; y: number[] } {
  const rand = mulberry32(seed);
  const X: number[][] = [];
  const y: number[] = [];
  for (let i = 0; i < n; i++) {
    const row = Array.from({ length: numFeatures }, () => rand() * 10 - 5);
    X.push(row);
    const score = row[0] - 0.5 * row[1 % numFeatures] + Math.sin(row[(2 % numFeatures)]);
    if (numClass === 2) {
      y.push(score > 0 ? 1 : 0);
    } else {
      const bucket = Math.min(numClass - 1, Math.max(0, Math.floor((score + 6) / (12 / numClass))));
      y.push(bucket);
    }
  }
  return { X, y };
}

export function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a |= 0;
    a = (a + 0x6d2b79f5) | 0;
    let t = Math.imul(a ^ (a >>> 15), 1 | a);
    t = (t + Math.imul(t ^ (t >>> 7), 61 | t)) ^ t;
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}
