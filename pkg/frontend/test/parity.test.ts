import { execFileSync } from "node:child_process";
import { mkdtempSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { describe, expect, it } from "vitest";

import { dumpProbabilities } from "../src/dump.js";
import { exportModel } from "../src/export.js";
import { probabilities } from "../src/evaluate.js";
import { mulberry32, syntheticData, train } from "../src/trainer.js";

function maxProbGap(dump: ReturnType<typeof train>, n = 1000): number {
  const model = exportModel(dump);
  const rand = mulberry32(123);
  let worst = 0;
  for (let i = 0; i < n; i++) {
    const row = Array.from({ length: dump.num_features }, () => rand() * 12 - 6);
    const a = dumpProbabilities(dump, row);
    const b = probabilities(model, row);
    for (let c = 0; c < a.length; c++) {
      worst = Math.max(worst, Math.abs(a[c] - b[c]));
    }
  }
  return worst;
}

describe("export parity (acceptance)", () => {
  it("binary booster, 20 trees depth 4: probabilities match within 1e-6", () => {
    const { X, y } = syntheticData(400, 5, 2, 31);
    const dump = train(X, y, { rounds: 20, maxDepth: 4 });
    expect(dump.trees).toHaveLength(20);
    expect(maxProbGap(dump)).toBeLessThanOrEqual(1e-6);
  });

  it("3-class booster, 18 trees depth 4: probabilities match within 1e-6", () => {
    const { X, y } = syntheticData(400, 5, 3, 32);
    const dump = train(X, y, { rounds: 6, maxDepth: 4, numClass: 3 });
    expect(dump.trees).toHaveLength(18);
    expect(maxProbGap(dump)).toBeLessThanOrEqual(1e-6);
  });

  it("exported model is accepted end-to-end by the verifier CLI", () => {
    const { X, y } = syntheticData(200, 4, 2, 33);
    const dump = train(X, y, { rounds: 6, maxDepth: 3 });
    const model = exportModel(dump);
    const dir = mkdtempSync(join(tmpdir(), "ts-export-"));
    const modelPath = join(dir, "model.json");
    writeFileSync(modelPath, JSON.stringify(model));
    let out: string;
    try {
      out = execFileSync(
        "python3",
        ["-m", "treesense.cli", "verify", "--model", modelPath, "--features", "0",
         "--gap-prob", "0.1", "--json"],
        { encoding: "utf-8" },
      );
    } catch (err) {
      const e = err as { status?: number; stdout?: string };
      // exit 1 = verified not sensitive, still a successful round trip
      if (e.status === 1 && e.stdout) {
        out = e.stdout;
      } else {
        throw err;
      }
    }
    const report = JSON.parse(out);
    expect(["sensitive", "not_sensitive"]).toContain(report.verdict);
  });
});
