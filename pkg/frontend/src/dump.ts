/**
 * Framework-side booster dump format (the training framework's native JSON).
 *
 * Trees are nested nodes in the classic booster-dump style: internal nodes
 * carry `split` (a feature name), `split_condition`, `yes`/`no` child ids and
 * a `children` array; leaves carry `leaf`. `decision_type` declares the split
 * comparison the framework used: "<" (strict) or "<=". Categorical splits
 * carry a `categories` array and are not supported by the exporter.
 */

export interface DumpSplitNode {
  nodeid: number;
  split: string;
  split_condition?: number;
  categories?: Array<string | number>;
  yes: number;
  no: number;
  children: DumpNode[];
}

export interface DumpLeafNode {
  nodeid: number;
  leaf: number;
}

export type DumpNode = DumpSplitNode | DumpLeafNode;

export type Objective = "binary:logistic" | "multi:softprob";

export interface BoosterDump {
  objective: Objective;
  num_features: number;
  num_class?: number;
  base_score: number;
  feature_names?: string[];
  decision_type: "<" | "<=";
  trees: DumpNode[];
}

export function isLeaf(node: DumpNode): node is DumpLeafNode {
  return (node as DumpLeafNode).leaf !== undefined;
}

/** Feature index from a dump split label: a listed name, or the f{i} form. */
export function featureIndex(dump: BoosterDump, split: string): number {
  if (dump.feature_names) {
    const idx = dump.feature_names.indexOf(split);
    if (idx >= 0) return idx;
  }
  const m = /^f(\d+)$/.exec(split);
  if (m) {
    const idx = Number(m[1]);
    if (idx < dump.num_features) return idx;
  }
  throw new Error(`unknown split feature ${JSON.stringify(split)}`);
}

/** Evaluate one dump tree on a row, honoring the dump's decision type. */
export function evalDumpTree(dump: BoosterDump, node: DumpNode, row: number[]): number {
  while (!isLeaf(node)) {
    if (node.split_condition === undefined) {
      throw new Error(`node ${node.nodeid}: categorical splits are not supported`);
    }
    const x = row[featureIndex(dump, node.split)];
    const goYes = dump.decision_type === "<" ? x < node.split_condition : x <= node.split_condition;
    const target = goYes ? node.yes : node.no;
    const child = node.children.find((c) => c.nodeid === target);
    if (!child) throw new Error(`node ${node.nodeid}: missing child ${target}`);
    node = child;
  }
  return node.leaf;
}

/** Per-class raw margins of the dump on a row (length 1 for binary). */
export function dumpMargins(dump: BoosterDump, row: number[]): number[] {
  const numClass = dump.objective === "multi:softprob" ? dump.num_class ?? 0 : 1;
  if (dump.objective === "multi:softprob" && (!numClass || numClass < 2)) {
    throw new Error("multi:softprob dump needs num_class >= 2");
  }
  const out = new Array<number>(numClass).fill(dump.base_score);
  dump.trees.forEach((tree, t) => {
    out[t % numClass] += evalDumpTree(dump, tree, row);
  });
  return out;
}

/** Predicted class probabilities of the dump on a row. */
export function dumpProbabilities(dump: BoosterDump, row: number[]): number[] {
  const margins = dumpMargins(dump, row);
  if (dump.objective === "binary:logistic") {
    const p = 1 / (1 + Math.exp(-margins[0]));
    return [1 - p, p];
  }
  const m = Math.max(...margins);
  const exps = margins.map((v) => Math.exp(v - m));
  const total = exps.reduce((a, b) => a + b, 0);
  return exps.map((v) => v / total);
}
