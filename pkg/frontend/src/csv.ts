/**
 * CSV ingestion for the two simulation export schemas.
 *
 * tracking:  t,x1..xn,xhat_avg1..xhat_avgn   (one realization per file)
 * sweep:     param,t,mean_max_err,divergent_runs
 *
 * Parsing is strictly read-only: no simulation quantity is recomputed here.
 * "nan" cells (divergent aggregates) become null so chart lines show gaps.
 */

export class SchemaError extends Error {}

export interface CsvTable {
  header: string[];
  rows: string[][];
}

export function parseCsv(text: string): CsvTable {
  const lines = text
    .split(/\r?\n/)
    .map((l) => l.trim())
    .filter((l) => l.length > 0);
  if (lines.length === 0) {
    throw new SchemaError("empty CSV: no header row");
  }
  const header = lines[0].split(",").map((h) => h.trim());
  const rows = lines.slice(1).map((l) => l.split(",").map((c) => c.trim()));
  return { header, rows };
}

export function requireColumns(table: CsvTable, needed: string[]): Map<string, number> {
  const index = new Map<string, number>();
  table.header.forEach((name, i) => index.set(name, i));
  const missing = needed.filter((name) => !index.has(name));
  if (missing.length > 0) {
    throw new SchemaError(
      `missing required columns: ${missing.join(", ")} (header: ${table.header.join(",")})`
    );
  }
  return index;
}

function toNumber(cell: string): number | null {
  if (cell === "nan" || cell === "-nan" || cell === "") return null;
  const v = Number(cell);
  if (Number.isNaN(v)) {
    throw new SchemaError(`non-numeric cell: ${JSON.stringify(cell)}`);
  }
  return v;
}

export interface TrackingData {
  t: number[];
  /** state columns x1..xn, column-major */
  states: number[][];
  /** average-estimate columns xhat_avg1..xhat_avgn */
  estimates: number[][];
}

export function parseTracking(text: string): TrackingData {
  const table = parseCsv(text);
  const stateCols = table.header.filter((h) => /^x\d+$/.test(h));
  const estCols = table.header.filter((h) => /^xhat_avg\d+$/.test(h));
  if (stateCols.length === 0 || estCols.length !== stateCols.length) {
    throw new SchemaError(
      `tracking schema needs t,x1..xn,xhat_avg1..xhat_avgn; got: ${table.header.join(",")}`
    );
  }
  const index = requireColumns(table, ["t", ...stateCols, ...estCols]);
  if (table.rows.length === 0) {
    throw new SchemaError("tracking CSV has a header but no data rows");
  }
  const t: number[] = [];
  const states: number[][] = stateCols.map(() => []);
  const estimates: number[][] = estCols.map(() => []);
  for (const row of table.rows) {
    t.push(toNumber(row[index.get("t")!]) ?? NaN);
    stateCols.forEach((c, j) => states[j].push(toNumber(row[index.get(c)!]) ?? NaN));
    estCols.forEach((c, j) => estimates[j].push(toNumber(row[index.get(c)!]) ?? NaN));
  }
  return { t, states, estimates };
}

export interface SweepSeries {
  param: string;
  t: number[];
  mean: (number | null)[];
  divergentRuns: number;
}

export function parseSweep(text: string): SweepSeries[] {
  const table = parseCsv(text);
  const index = requireColumns(table, ["param", "t", "mean_max_err", "divergent_runs"]);
  if (table.rows.length === 0) {
    throw new SchemaError("sweep CSV has a header but no data rows");
  }
  const byParam = new Map<string, SweepSeries>();
  for (const row of table.rows) {
    const param = row[index.get("param")!];
    let series = byParam.get(param);
    if (!series) {
      series = { param, t: [], mean: [], divergentRuns: 0 };
      byParam.set(param, series);
    }
    series.t.push(toNumber(row[index.get("t")!]) ?? NaN);
    series.mean.push(toNumber(row[index.get("mean_max_err")!]));
    series.divergentRuns = toNumber(row[index.get("divergent_runs")!]) ?? 0;
  }
  return [...byParam.values()];
}
