/**
 * Dataset preparation for the verifier's CSV interface: deterministic label
 * encoding of categorical columns (lexicographic category order) and removal
 * of rows with missing values. Output is a numeric CSV with the header
 * preserved.
 */

export interface DatasetSchema {
  /** Column names to label-encode; all other columns must already be numeric. */
  categorical: string[];
}

export interface PreparedDataset {
  header: string[];
  rows: number[][];
  /** Per categorical column: category -> code, in lexicographic order. */
  encodings: Record<string, Record<string, number>>;
  droppedRows: number;
}

export function parseCsv(text: string): string[][] {
  const lines = text.split(/\r?\n/).filter((line) => line.length > 0);
  return lines.map((line) => line.split(",").map((cell) => cell.trim()));
}

function isMissing(cell: string): boolean {
  return cell === "" || cell === "NA" || cell === "?";
}

export function prepareDataset(csvText: string, schema: DatasetSchema): PreparedDataset {
  const table = parseCsv(csvText);
  if (table.length < 1) throw new Error("CSV is empty");
  const header = table[0];
  for (const col of schema.categorical) {
    if (!header.includes(col)) throw new Error(`categorical column ${JSON.stringify(col)} not in header`);
  }
  const catIdx = new Set(schema.categorical.map((c) => header.indexOf(c)));

  const kept: string[][] = [];
  let dropped = 0;
  for (const row of table.slice(1)) {
    if (row.length !== header.length) {
      throw new Error(`row has ${row.length} cells, expected ${header.length}`);
    }
    if (row.some(isMissing)) {
      dropped++;
      continue;
    }
    kept.push(row);
  }

  const encodings: Record<string, Record<string, number>> = {};
  for (const col of schema.categorical) {
    const idx = header.indexOf(col);
    const categories = [...new Set(kept.map((row) => row[idx]))].sort();
    encodings[col] = Object.fromEntries(categories.map((c, i) => [c, i]));
  }

  const rows = kept.map((row, r) =>
    row.map((cell, i) => {
      if (catIdx.has(i)) {
        return encodings[header[i]][cell];
      }
      const v = Number(cell);
      if (!Number.isFinite(v)) {
        throw new Error(`row ${r + 2}, column ${JSON.stringify(header[i])}: non-numeric value ${JSON.stringify(cell)}`);
      }
      return v;
    }),
  );
  return { header, rows, encodings, droppedRows: dropped };
}

/** Serialize with full round-trip precision; shortest form via Number -> string. */
export function toCsv(prepared: PreparedDataset): string {
  const lines = [prepared.header.join(",")];
  for (const row of prepared.rows) {
    lines.push(row.map((v) => String(v)).join(","));
  }
  return lines.join("\n") + "\n";
}
