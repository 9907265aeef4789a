/**
 * Reference evaluator for canonical model JSON, used by the parity tests:
 * strict `X_f < threshold` guards, yes on true; per-class sums plus
 * base_score; sigmoid (binary) or softmax (multiclass).
 */

import { CanonicalModel, CanonicalNode } from "./export.js";

function evalTree(node: CanonicalNode, row: number[]): number {
  while (node.leaf === undefined) {
    node = row[node.feature!] < node.threshold! ? node.yes! : node.no!;
  }
  return node.leaf;
}

export function rawScores(model: CanonicalModel, row: number[]): number[] {
  if (model.num_classes === 2) {
    let s = model.base_score;
    for (const t of model.trees) s += evalTree(t.root, row);
    return [-s, s];
  }
  const out = new Array<number>(model.num_classes).fill(model.base_score);
  for (const t of model.trees) out[t.class_id] += evalTree(t.root, row);
  return out;
}

export function probabilities(model: CanonicalModel, row: number[]): number[] {
  if (model.num_classes === 2) {
    const s = rawScores(model, row)[1];
    const p = 1 / (1 + Math.exp(-s));
    return [1 - p, p];
  }
  const raws = rawScores(model, row);
  const m = Math.max(...raws);
  const exps = raws.map((v) => Math.exp(v - m));
  const total = exps.reduce((a, b) => a + b, 0);
  return exps.map((v) => v / total);
}
