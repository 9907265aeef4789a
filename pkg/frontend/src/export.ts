/**
 * Booster dump -> canonical model JSON (the verifier's model schema).
 *
 * The canonical format fixes guard semantics to strict `X_f < t` with the
 * true branch on `yes`; dumps that split on `<=` are converted by nudging
 * each threshold up to the next representable double, which preserves the
 * decision boundary exactly. Multiclass dumps keep the framework's
 * round-robin tree order as class ids.
 */

import { BoosterDump, DumpNode, featureIndex, isLeaf } from "./dump.js";

export interface CanonicalNode {
  feature?: number;
  threshold?: number;
  yes?: CanonicalNode;
  no?: CanonicalNode;
  leaf?: number;
}

export interface CanonicalModel {
  num_features: number;
  num_classes: number;
  base_score: number;
  feature_names?: string[];
  trees: Array<{ class_id: number; root: CanonicalNode }>;
}

const f64 = new Float64Array(1);
const u64 = new BigUint64Array(f64.buffer);

/** Next representable double above x. */
export function nextUp(x: number): number {
  if (!Number.isFinite(x)) return x;
  if (x === 0) return Number.MIN_VALUE;
  f64[0] = x;
  u64[0] = x > 0 ? u64[0] + 1n : u64[0] - 1n;
  return f64[0];
}

function convertNode(dump: BoosterDump, node: DumpNode): CanonicalNode {
  if (isLeaf(node)) {
    return { leaf: node.leaf };
  }
  if (node.categories !== undefined) {
    throw new Error(`node ${node.nodeid}: categorical splits are not supported`);
  }
  if (node.split_condition === undefined || !Number.isFinite(node.split_condition)) {
    throw new Error(`node ${node.nodeid}: missing numeric split_condition`);
  }
  const yes = node.children.find((c) => c.nodeid === node.yes);
  const no = node.children.find((c) => c.nodeid === node.no);
  if (!yes || !no) {
    throw new Error(`node ${node.nodeid}: yes/no ids do not match children`);
  }
  const threshold =
    dump.decision_type === "<=" ? nextUp(node.split_condition) : node.split_condition;
  return {
    feature: featureIndex(dump, node.split),
    threshold,
    yes: convertNode(dump, yes),
    no: convertNode(dump, no),
  };
}

/** Convert a framework dump to the canonical model document. */
export function exportModel(dump: BoosterDump): CanonicalModel {
  if (dump.objective !== "binary:logistic" && dump.objective !== "multi:softprob") {
    throw new Error(`unsupported objective ${JSON.stringify((dump as BoosterDump).objective)}`);
  }
  const multi = dump.objective === "multi:softprob";
  const numClasses = multi ? dump.num_class ?? 0 : 2;
  if (multi) {
    if (!numClasses || numClasses < 2) {
      throw new Error("multi:softprob dump needs num_class >= 2");
    }
    if (dump.trees.length % numClasses !== 0) {
      throw new Error(
        `tree count ${dump.trees.length} is not divisible by num_class ${numClasses}`,
      );
    }
  }
  const trees = dump.trees.map((tree, t) => ({
    class_id: multi ? t % numClasses : 1,
    root: convertNode(dump, tree),
  }));
  const model: CanonicalModel = {
    num_features: dump.num_features,
    num_classes: numClasses,
    base_score: dump.base_score,
    trees,
  };
  if (dump.feature_names) model.feature_names = dump.feature_names;
  return model;
}
