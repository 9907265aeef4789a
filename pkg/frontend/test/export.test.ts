import { describe, expect, it } from "vitest";

import { BoosterDump, dumpMargins } from "../src/dump.js";
import { exportModel, nextUp } from "../src/export.js";
import { rawScores } from "../src/evaluate.js";
import { mulberry32, train, syntheticData } from "../src/trainer.js";

function depth1Dump(): BoosterDump {
  return {
    objective: "binary:logistic",
    num_features: 2,
    base_score: 0.5,
    decision_type: "<",
    trees: [
      {
        nodeid: 0, split: "f0", split_condition: 1.5, yes: 1, no: 2,
        children: [{ nodeid: 1, leaf: 0.4 }, { nodeid: 2, leaf: -0.4 }],
      },
      {
        nodeid: 0, split: "f1", split_condition: -0.5, yes: 1, no: 2,
        children: [{ nodeid: 1, leaf: -0.2 }, { nodeid: 2, leaf: 0.7 }],
      },
    ],
  };
}

describe("exportModel", () => {
  it("converts a depth-1 two-tree binary booster with margin parity", () => {
    const dump = depth1Dump();
    const model = exportModel(dump);
    expect(model.trees).toHaveLength(2);
    expect(model.num_classes).toBe(2);
    expect(model.trees.every((t) => t.class_id === 1)).toBe(true);
    const rand = mulberry32(7);
    for (let i = 0; i < 1000; i++) {
      const row = [rand() * 10 - 5, rand() * 10 - 5];
      const margin = dumpMargins(dump, row)[0];
      expect(Math.abs(rawScores(model, row)[1] - margin)).toBeLessThanOrEqual(1e-6);
    }
  });

  it("assigns round-robin class ids to a 3-class booster", () => {
    const { X, y } = syntheticData(120, 3, 3, 11);
    const dump = train(X, y, { rounds: 2, maxDepth: 2, numClass: 3 });
    expect(dump.trees).toHaveLength(6);
    const model = exportModel(dump);
    expect(model.trees.map((t) => t.class_id)).toEqual([0, 1, 2, 0, 1, 2]);
  });

  it("rejects categorical splits", () => {
    const dump = depth1Dump();
    const node = dump.trees[0] as Extract<typeof dump.trees[0], { split: string }>;
    delete (node as { split_condition?: number }).split_condition;
    node.categories = ["a", "b"];
    expect(() => exportModel(dump)).toThrow(/categorical/);
  });

  it("rejects unsupported objectives", () => {
    const dump = depth1Dump();
    (dump as { objective: string }).objective = "reg:squarederror";
    expect(() => exportModel(dump)).toThrow(/objective/);
  });

  it("rejects tree counts not divisible by num_class", () => {
    const { X, y } = syntheticData(60, 3, 3, 5);
    const dump = train(X, y, { rounds: 1, maxDepth: 2, numClass: 3 });
    dump.trees.pop();
    expect(() => exportModel(dump)).toThrow(/divisible/);
  });

  it("nudges <= splits to the next representable double", () => {
    const t = 1.5;
    expect(nextUp(t)).toBeGreaterThan(t);
    const dump = depth1Dump();
    dump.decision_type = "<=";
    const model = exportModel(dump);
    // boundary value: <= semantics sends x == t to yes; strict < with the
    // nudged threshold must agree
    const margin = dumpMargins(dump, [t, 0.0])[0];
    expect(rawScores(model, [t, 0.0])[1]).toBeCloseTo(margin, 12);
    expect(model.trees[0].root.threshold).toBe(nextUp(1.5));
  });
});
