/** Command line: plot <figure> <sweep.csv> <out.svg> */

import { FIGURES } from "./figures";
import { plotSweep } from "./plot";

export function main(argv: string[]): number {
  if (argv.length !== 3) {
    console.error("usage: plot <figure> <sweep.csv> <out.svg>");
    console.error(`figures: ${Object.keys(FIGURES).join(", ")}`);
    return 1;
  }
  const [figure, csvPath, outPath] = argv;
  try {
    plotSweep(csvPath, figure, outPath);
  } catch (err) {
    console.error(`error: ${err instanceof Error ? err.message : err}`);
    return 1;
  }
  console.log(`wrote ${outPath}`);
  return 0;
}

const entry = process.argv[1] ?? "";
if (entry.endsWith("cli.js") || entry.endsWith("cli.ts")) {
  process.exit(main(process.argv.slice(2)));
}
