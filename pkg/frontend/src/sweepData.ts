/**
 * Sweep CSV parsing and validation.
 *
 * The simulator emits one row per (sweep value, policy) cell:
 *   experiment,value,policy,metric,mean,std,n_seeds
 * with mean/std aggregated over seeds.
 */

import { readFileSync } from "node:fs";
import Papa from "papaparse";

export interface SweepRow {
  experiment: string;
  value: number;
  policy: string;
  metric: string;
  mean: number;
  std: number;
  nSeeds: number;
}

export const REQUIRED_COLUMNS = [
  "experiment",
  "value",
  "policy",
  "metric",
  "mean",
  "std",
  "n_seeds",
] as const;

export class SchemaError extends Error {}

export function parseSweepCsv(text: string, source = "<csv>"): SweepRow[] {
  const parsed = Papa.parse<Record<string, string>>(text.trim(), {
    header: true,
    skipEmptyLines: true,
  });
  const fields = parsed.meta.fields ?? [];
  for (const column of REQUIRED_COLUMNS) {
    if (!fields.includes(column)) {
      throw new SchemaError(`${source}: missing column "${column}"`);
    }
  }
  if (parsed.data.length === 0) {
    throw new SchemaError(`${source}: no data rows`);
  }
  return parsed.data.map((row, i) => {
    const num = (column: string): number => {
      const v = Number(row[column]);
      if (!Number.isFinite(v)) {
        throw new SchemaError(`${source}: row ${i + 2}: ${column} is not a number`);
      }
      return v;
    };
    return {
      experiment: row.experiment,
      value: num("value"),
      policy: row.policy,
      metric: row.metric,
      mean: num("mean"),
      std: num("std"),
      nSeeds: num("n_seeds"),
    };
  });
}

export function loadSweepCsv(path: string): SweepRow[] {
  return parseSweepCsv(readFileSync(path, "utf8"), path);
}

/** Distinct sweep values in ascending order. */
export function sweepValues(rows: SweepRow[]): number[] {
  return [...new Set(rows.map((r) => r.value))].sort((a, b) => a - b);
}

/** Distinct policies in stable alphabetical order. */
export function policies(rows: SweepRow[]): string[] {
  return [...new Set(rows.map((r) => r.policy))].sort();
}
