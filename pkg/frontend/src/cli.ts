/**
 * Figure renderer for sdcf simulation CSVs.
 *
 *   node dist/cli.js render --csv PATH --kind tracking|sweep --out PATH.svg
 *                           [--param-label NAME] [--width W] [--height H]
 *
 * Exit codes: 0 success, 1 usage, 2 bad input (missing file, schema
 * mismatch), 3 render failure.
 */

import { readFileSync, writeFileSync } from "fs";

import { parseSweep, parseTracking, SchemaError } from "./csv.js";
import { buildSweepChart, buildTrackingChart } from "./figures.js";
import { renderToSvg } from "./render.js";

interface Args {
  csv: string;
  kind: "tracking" | "sweep";
  out: string;
  paramLabel: string;
  width: number;
  height: number;
}

class UsageError extends Error {}

function parseArgs(argv: string[]): Args {
  if (argv[0] !== "render") {
    throw new UsageError("expected the 'render' subcommand");
  }
  const flags = new Map<string, string>();
  for (let i = 1; i < argv.length; i += 2) {
    const key = argv[i];
    const value = argv[i + 1];
    if (!key.startsWith("--") || value === undefined) {
      throw new UsageError(`malformed flag pair near ${key}`);
    }
    flags.set(key.slice(2), value);
  }
  const csv = flags.get("csv");
  const kind = flags.get("kind");
  const out = flags.get("out");
  if (!csv || !kind || !out) {
    throw new UsageError("--csv, --kind and --out are required");
  }
  if (kind !== "tracking" && kind !== "sweep") {
    throw new UsageError(`--kind must be tracking or sweep, got ${kind}`);
  }
  return {
    csv,
    kind,
    out,
    paramLabel: flags.get("param-label") ?? "value",
    width: Number(flags.get("width") ?? 960),
    height: Number(flags.get("height") ?? 640),
  };
}

export function runCli(argv: string[]): number {
  let args: Args;
  try {
    args = parseArgs(argv);
  } catch (err) {
    console.error(`usage error: ${(err as Error).message}`);
    return 1;
  }
  let text: string;
  try {
    text = readFileSync(args.csv, "utf8");
  } catch (err) {
    console.error(`cannot read ${args.csv}: ${(err as Error).message}`);
    return 2;
  }
  try {
    const option =
      args.kind === "tracking"
        ? buildTrackingChart(parseTracking(text))
        : buildSweepChart(parseSweep(text), args.paramLabel);
    const svg = renderToSvg(option, { width: args.width, height: args.height });
    writeFileSync(args.out, svg);
    console.log(`wrote ${args.out}`);
    return 0;
  } catch (err) {
    if (err instanceof SchemaError) {
      console.error(`schema error in ${args.csv}: ${err.message}`);
      return 2;
    }
    console.error(`render failed: ${(err as Error).message}`);
    return 3;
  }
}

