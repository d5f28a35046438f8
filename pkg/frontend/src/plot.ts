/** plotSweep: turn one sweep CSV into one static SVG figure. */

import { writeFileSync } from "node:fs";
import { figureSpec } from "./figures";
import { renderFigureSvg } from "./render";
import { loadSweepCsv, SchemaError, SweepRow } from "./sweepData";

export { SchemaError } from "./sweepData";

/**
 * Reads the sweep CSV, checks it carries the figure's metric, and writes
 * the rendered SVG. Nothing is written when validation fails.
 */
export function plotSweep(csvPath: string, figure: string, outPath: string): void {
  const spec = figureSpec(figure);
  const rows = loadSweepCsv(csvPath);
  const usable: SweepRow[] = rows.filter((r) => r.metric === spec.metric);
  if (usable.length === 0) {
    throw new SchemaError(
      `${csvPath}: no rows with metric "${spec.metric}" for ${figure} ` +
        `(found: ${[...new Set(rows.map((r) => r.metric))].join(", ")})`,
    );
  }
  const svg = renderFigureSvg(spec, usable);
  writeFileSync(outPath, svg);
}
