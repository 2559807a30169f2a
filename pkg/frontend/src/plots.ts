import { existsSync } from "node:fs";
import { dirname, join } from "node:path";

import { readLandmark, readTrace, SchemaError, Trace } from "./csv.js";
import { renderChart, Series } from "./svg.js";

export type FigureKind = "error" | "trajectory";

export interface TraceRef {
  path: string;
  label: string;
}

export interface PlotJob {
  traces: TraceRef[];
  out: string;
  kind: FigureKind;
  /** Explicit landmark; otherwise looked up from a sibling config.echo.json. */
  landmark?: [number, number];
}

function loadAll(job: PlotJob): { ref: TraceRef; trace: Trace }[] {
  if (job.traces.length === 0) {
    throw new SchemaError("at least one trace is required");
  }
  return job.traces.map((ref) => ({ ref, trace: readTrace(ref.path) }));
}

/** Estimation-error magnitude against time, one curve per trace. */
export function plotError(job: PlotJob): string {
  const series: Series[] = loadAll(job).map(({ ref, trace }) => ({
    label: ref.label,
    xs: trace.t,
    ys: trace.err,
  }));
  return renderChart(series, {
    title: "Landmark estimation error",
    xLabel: "time step",
    yLabel: "estimation error",
  });
}

function findLandmark(job: PlotJob): [number, number] | undefined {
  if (job.landmark) return job.landmark;
  for (const ref of job.traces) {
    const echo = join(dirname(ref.path), "config.echo.json");
    if (existsSync(echo)) return readLandmark(echo);
  }
  return undefined;
}

/** Planar robot paths with the landmark marked, equal-aspect axes. */
export function plotTrajectory(job: PlotJob): string {
  const series: Series[] = loadAll(job).map(({ ref, trace }) => ({
    label: ref.label,
    xs: trace.x1,
    ys: trace.x2,
  }));
  const landmark = findLandmark(job);
  return renderChart(series, {
    title: "Robot trajectories",
    xLabel: "x1",
    yLabel: "x2",
    equalAspect: true,
    markers: landmark
      ? [{ x: landmark[0], y: landmark[1], label: "landmark" }]
      : [],
  });
}

export function renderFigure(job: PlotJob): string {
  return job.kind === "error" ? plotError(job) : plotTrajectory(job);
}
