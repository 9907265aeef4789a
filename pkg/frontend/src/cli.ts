#!/usr/bin/env node
/**
 * treesense-export: bridge from booster dumps and raw CSVs to the verifier's
 * file formats.
 *
 *   export-model     --dump booster.json --output model.json
 *   prepare-dataset  --input raw.csv --categorical colA,colB --output out.csv
 *   train-demo       --rounds 6 --depth 3 --classes 3 --output-dir out/
 */

import { readFileSync, writeFileSync, mkdirSync } from "node:fs";
import { join } from "node:path";

import { BoosterDump, dumpProbabilities } from "./dump.js";
import { exportModel } from "./export.js";
import { prepareDataset, toCsv } from "./dataset.js";
import { syntheticData, train } from "./trainer.js";

function argValue(args: string[], flag: string): string | undefined {
  const i = args.indexOf(flag);
  return i >= 0 ? args[i + 1] : undefined;
}

function need(args: string[], flag: string): string {
  const v = argValue(args, flag);
  if (v === undefined) {
    throw new Error(`missing required flag ${flag}`);
  }
  return v;
}

function cmdExportModel(args: string[]): number {
  const dump = JSON.parse(readFileSync(need(args, "--dump"), "utf-8")) as BoosterDump;
  const model = exportModel(dump);
  writeFileSync(need(args, "--output"), JSON.stringify(model, null, 2) + "\n");
  console.log(`exported ${model.trees.length} trees (${model.num_classes} classes)`);
  return 0;
}

function cmdPrepareDataset(args: string[]): number {
  const text = readFileSync(need(args, "--input"), "utf-8");
  const categorical = (argValue(args, "--categorical") ?? "")
    .split(",")
    .filter((c) => c.length > 0);
  const prepared = prepareDataset(text, { categorical });
  writeFileSync(need(args, "--output"), toCsv(prepared));
  console.log(
    `wrote ${prepared.rows.length} rows (${prepared.droppedRows} dropped), ` +
      `${Object.keys(prepared.encodings).length} columns encoded`,
  );
  return 0;
}

function cmdTrainDemo(args: string[]): number {
  const rounds = Number(argValue(args, "--rounds") ?? 6);
  const depth = Number(argValue(args, "--depth") ?? 3);
  const classes = Number(argValue(args, "--classes") ?? 2);
  const outDir = need(args, "--output-dir");
  mkdirSync(outDir, { recursive: true });
  const { X, y } = syntheticData(300, 4, classes, 42);
  const dump = train(X, y, { rounds, maxDepth: depth, numClass: classes });
  const model = exportModel(dump);
  writeFileSync(join(outDir, "booster-dump.json"), JSON.stringify(dump, null, 2) + "\n");
  writeFileSync(join(outDir, "model.json"), JSON.stringify(model, null, 2) + "\n");
  const header = Array.from({ length: 4 }, (_, i) => `f${i}`).join(",");
  const csv = [header, ...X.map((row) => row.join(","))].join("\n") + "\n";
  writeFileSync(join(outDir, "train.csv"), csv);
  const p = dumpProbabilities(dump, X[0]);
  console.log(
    `trained ${dump.trees.length} trees; wrote model.json, booster-dump.json, train.csv ` +
      `(first-row probs ${p.map((v) => v.toFixed(4)).join("/")})`,
  );
  return 0;
}

export function main(argv: string[]): number {
  const [command, ...rest] = argv;
  try {
    switch (command) {
      case "export-model":
        return cmdExportModel(rest);
      case "prepare-dataset":
        return cmdPrepareDataset(rest);
      case "train-demo":
        return cmdTrainDemo(rest);
      default:
        console.error(
          "usage: treesense-export <export-model|prepare-dataset|train-demo> [flags]",
        );
        return 2;
    }
  } catch (err) {
    console.error(`error: ${(err as Error).message}`);
    return 1;
  }
}

if (process.argv[1] && process.argv[1].endsWith("cli.js")) {
  process.exit(main(process.argv.slice(2)));
}
