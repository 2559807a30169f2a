import { readFileSync } from "node:fs";

/** Fixed column set written by the simulator; order matters. */
export const TRACE_COLUMNS = [
  "t", "x1", "x2", "x01", "x02", "y1", "y2", "u1", "u2",
  "uobs1", "uobs2", "phat1", "phat2", "err", "lammin", "delta",
  "feasible", "V", "W", "budget", "pstar1", "pstar2",
] as const;

export type TraceColumn = (typeof TRACE_COLUMNS)[number];

export type Trace = Record<TraceColumn, number[]>;

export class SchemaError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "SchemaError";
  }
}

/** Parse a simulator trace CSV, validating the exact header. */
export function parseTrace(text: string, source = "<string>"): Trace {
  const lines = text.split(/\r?\n/).filter((line) => line.length > 0);
  if (lines.length === 0) {
    throw new SchemaError(`${source}: empty file`);
  }
  const header = lines[0].split(",");
  if (
    header.length !== TRACE_COLUMNS.length ||
    header.some((name, i) => name !== TRACE_COLUMNS[i])
  ) {
    throw new SchemaError(`${source}: unexpected trace header`);
  }
  const trace = Object.fromEntries(
    TRACE_COLUMNS.map((c) => [c, [] as number[]]),
  ) as Trace;
  for (let row = 1; row < lines.length; row++) {
    const cells = lines[row].split(",");
    if (cells.length !== TRACE_COLUMNS.length) {
      throw new SchemaError(`${source}: row ${row} has ${cells.length} cells`);
    }
    for (let i = 0; i < TRACE_COLUMNS.length; i++) {
      trace[TRACE_COLUMNS[i]].push(Number(cells[i]));
    }
  }
  return trace;
}

export function readTrace(path: string): Trace {
  return parseTrace(readFileSync(path, "utf8"), path);
}

/** Landmark position from the run's echoed configuration. */
export function readLandmark(configEchoPath: string): [number, number] {
  const doc = JSON.parse(readFileSync(configEchoPath, "utf8"));
  const p = doc?.scenario?.p_true;
  if (!Array.isArray(p) || p.length !== 2 || p.some((v) => typeof v !== "number")) {
    throw new SchemaError(`${configEchoPath}: missing scenario.p_true`);
  }
  return [p[0], p[1]];
}
