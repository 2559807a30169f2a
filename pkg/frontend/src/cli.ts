#!/usr/bin/env node
import { writeFileSync } from "node:fs";
import { pathToFileURL } from "node:url";
import { parseArgs } from "node:util";

import { SchemaError } from "./csv.js";
import { FigureKind, PlotJob, renderFigure, TraceRef } from "./plots.js";

const USAGE = `usage: obsmpc-plot <error|trajectory> --traces a.csv:label [b.csv:label ...] --out fig.svg [--landmark x,y]

Renders simulator trace logs to SVG figures:
  error       estimation-error magnitude vs time, one curve per trace
  trajectory  planar robot paths with the landmark marked (equal aspect)

The landmark is read from a config.echo.json next to a trace when present,
or can be given explicitly with --landmark.`;

function parseTraceRef(spec: string): TraceRef {
  const sep = spec.lastIndexOf(":");
  if (sep <= 0 || sep === spec.length - 1) {
    throw new SchemaError(`trace ${JSON.stringify(spec)} is not of the form path:label`);
  }
  return { path: spec.slice(0, sep), label: spec.slice(sep + 1) };
}

function parseLandmark(spec: string): [number, number] {
  const parts = spec.split(",").map(Number);
  if (parts.length !== 2 || parts.some((v) => !Number.isFinite(v))) {
    throw new SchemaError(`landmark ${JSON.stringify(spec)} is not of the form x,y`);
  }
  return [parts[0], parts[1]];
}

export function main(argv: string[]): number {
  let parsed;
  try {
    parsed = parseArgs({
      args: argv,
      allowPositionals: true,
      options: {
        traces: { type: "string", multiple: true },
        out: { type: "string" },
        landmark: { type: "string" },
        help: { type: "boolean", short: "h" },
      },
    });
  } catch (err) {
    console.error((err as Error).message);
    console.error(USAGE);
    return 2;
  }
  if (parsed.values.help) {
    console.log(USAGE);
    return 0;
  }
  const kind = parsed.positionals[0];
  if (kind !== "error" && kind !== "trajectory") {
    console.error(`unknown figure kind ${JSON.stringify(kind)}`);
    console.error(USAGE);
    return 2;
  }
  const traceSpecs = parsed.values.traces ?? [];
  const out = parsed.values.out;
  if (traceSpecs.length === 0 || !out) {
    console.error("--traces and --out are required");
    console.error(USAGE);
    return 2;
  }
  try {
    const job: PlotJob = {
      kind: kind as FigureKind,
      traces: traceSpecs.map(parseTraceRef),
      out,
      landmark: parsed.values.landmark
        ? parseLandmark(parsed.values.landmark)
        : undefined,
    };
    writeFileSync(out, renderFigure(job));
    console.log(`wrote ${out}`);
    return 0;
  } catch (err) {
    if (err instanceof SchemaError) {
      console.error(`schema error: ${err.message}`);
      return 2;
    }
    if ((err as NodeJS.ErrnoException).code) {
      console.error(`io error: ${(err as Error).message}`);
      return 3;
    }
    throw err;
  }
}

const invokedDirectly =
  process.argv[1] !== undefined &&
  import.meta.url === pathToFileURL(process.argv[1]).href;
if (invokedDirectly) {
  process.exit(main(process.argv.slice(2)));
}
