import { readFileSync } from "node:fs";

export interface CsvTable {
  header: string[];
  columns: Map<string, number[]>;
  rows: number;
}

/** Parse the simulator's plain numeric CSV (header row, comma separated). */
export function parseCsv(text: string): CsvTable {
  const lines = text
    .split(/\r?\n/)
    .map((l) => l.trim())
    .filter((l) => l.length > 0);
  if (lines.length < 2) {
    throw new Error("CSV needs a header and at least one data row");
  }
  const header = lines[0].split(",").map((h) => h.trim());
  const columns = new Map<string, number[]>(header.map((h) => [h, []]));
  for (const line of lines.slice(1)) {
    const parts = line.split(",");
    if (parts.length !== header.length) {
      throw new Error(`row has ${parts.length} fields, header has ${header.length}`);
    }
    parts.forEach((p, i) => {
      const v = Number(p);
      if (!Number.isFinite(v)) {
        throw new Error(`non-numeric value ${JSON.stringify(p)} in column ${header[i]}`);
      }
      columns.get(header[i])!.push(v);
    });
  }
  return { header, columns, rows: lines.length - 1 };
}

export function readCsv(path: string): CsvTable {
  return parseCsv(readFileSync(path, "utf8"));
}

export function getColumn(table: CsvTable, name: string): number[] {
  const col = table.columns.get(name);
  if (!col) {
    throw new Error(
      `column ${JSON.stringify(name)} not in CSV (have: ${table.header.join(", ")})`
    );
  }
  return col;
}
