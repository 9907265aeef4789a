export * from "./dump.js";
export * from "./trainer.js";
export * from "./export.js";
export * from "./evaluate.js";
export * from "./dataset.js";
