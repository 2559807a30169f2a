/** Minimal deterministic SVG chart builder (no runtime dependencies). */

export interface Series {
  label: string;
  xs: number[];
  ys: number[];
}

export interface ChartOptions {
  title: string;
  xLabel: string;
  yLabel: string;
  width?: number;
  height?: number;
  /** Force identical x/y scale (planar trajectories). */
  equalAspect?: boolean;
  /** Extra point markers, e.g. the landmark. */
  markers?: { x: number; y: number; label: string }[];
}

const PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];
const MARGIN = { top: 40, right: 24, bottom: 48, left: 64 };

function escapeXml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

function niceTicks(lo: number, hi: number, count = 6): number[] {
  if (!(hi > lo)) return [lo];
  const rawStep = (hi - lo) / count;
  const mag = 10 ** Math.floor(Math.log10(rawStep));
  const step = [1, 2, 5, 10].map((m) => m * mag).find((s) => s >= rawStep) ?? rawStep;
  const ticks: number[] = [];
  for (let v = Math.ceil(lo / step) * step; v <= hi + 1e-12 * step; v += step) {
    ticks.push(Math.abs(v) < 1e-12 * step ? 0 : v);
  }
  return ticks;
}

function formatTick(v: number): string {
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 1e4 || a < 1e-3) return v.toExponential(1);
  return Number(v.toPrecision(4)).toString();
}

export function renderChart(series: Series[], options: ChartOptions): string {
  const width = options.width ?? 720;
  const height = options.height ?? 480;
  const plotW = width - MARGIN.left - MARGIN.right;
  const plotH = height - MARGIN.top - MARGIN.bottom;

  const finite = (vals: number[]) => vals.filter((v) => Number.isFinite(v));
  const allX = series.flatMap((s) => finite(s.xs));
  const allY = series.flatMap((s) => finite(s.ys));
  for (const m of options.markers ?? []) {
    allX.push(m.x);
    allY.push(m.y);
  }
  let xLo = Math.min(...allX);
  let xHi = Math.max(...allX);
  let yLo = Math.min(...allY);
  let yHi = Math.max(...allY);
  const pad = (lo: number, hi: number) => (hi > lo ? 0.05 * (hi - lo) : 1);
  xLo -= pad(xLo, xHi);
  xHi += pad(xLo, xHi);
  yLo -= pad(yLo, yHi);
  yHi += pad(yLo, yHi);

  if (options.equalAspect) {
    const scale = Math.min(plotW / (xHi - xLo), plotH / (yHi - yLo));
    const xMid = 0.5 * (xLo + xHi);
    const yMid = 0.5 * (yLo + yHi);
    xLo = xMid - 0.5 * plotW / scale;
    xHi = xMid + 0.5 * plotW / scale;
    yLo = yMid - 0.5 * plotH / scale;
    yHi = yMid + 0.5 * plotH / scale;
  }

  const sx = (x: number) => MARGIN.left + ((x - xLo) / (xHi - xLo)) * plotW;
  const sy = (y: number) => MARGIN.top + (1 - (y - yLo) / (yHi - yLo)) * plotH;

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" ` +
      `viewBox="0 0 ${width} ${height}" font-family="sans-serif" font-size="12">`,
    `<rect width="${width}" height="${height}" fill="white"/>`,
    `<text x="${width / 2}" y="22" text-anchor="middle" font-size="15">` +
      `${escapeXml(options.title)}</text>`,
  );

  // axes, grid and tick labels
  for (const tx of niceTicks(xLo, xHi)) {
    const px = sx(tx);
    parts.push(
      `<line x1="${px.toFixed(1)}" y1="${MARGIN.top}" x2="${px.toFixed(1)}" ` +
        `y2="${MARGIN.top + plotH}" stroke="#ddd"/>`,
      `<text x="${px.toFixed(1)}" y="${MARGIN.top + plotH + 16}" ` +
        `text-anchor="middle">${formatTick(tx)}</text>`,
    );
  }
  for (const ty of niceTicks(yLo, yHi)) {
    const py = sy(ty);
    parts.push(
      `<line x1="${MARGIN.left}" y1="${py.toFixed(1)}" x2="${MARGIN.left + plotW}" ` +
        `y2="${py.toFixed(1)}" stroke="#ddd"/>`,
      `<text x="${MARGIN.left - 8}" y="${(py + 4).toFixed(1)}" ` +
        `text-anchor="end">${formatTick(ty)}</text>`,
    );
  }
  parts.push(
    `<rect x="${MARGIN.left}" y="${MARGIN.top}" width="${plotW}" height="${plotH}" ` +
      `fill="none" stroke="#333"/>`,
    `<text x="${MARGIN.left + plotW / 2}" y="${height - 10}" text-anchor="middle">` +
      `${escapeXml(options.xLabel)}</text>`,
    `<text x="18" y="${MARGIN.top + plotH / 2}" text-anchor="middle" ` +
      `transform="rotate(-90 18 ${MARGIN.top + plotH / 2})">` +
      `${escapeXml(options.yLabel)}</text>`,
  );

  // one polyline per series, broken at non-finite samples
  series.forEach((s, idx) => {
    const color = PALETTE[idx % PALETTE.length];
    let points: string[] = [];
    const flush = () => {
      if (points.length > 1) {
        parts.push(
          `<polyline fill="none" stroke="${color}" stroke-width="1.8" ` +
            `points="${points.join(" ")}"/>`,
        );
      }
      points = [];
    };
    for (let i = 0; i < s.xs.length; i++) {
      if (Number.isFinite(s.xs[i]) && Number.isFinite(s.ys[i])) {
        points.push(`${sx(s.xs[i]).toFixed(2)},${sy(s.ys[i]).toFixed(2)}`);
      } else {
        flush();
      }
    }
    flush();
  });

  for (const m of options.markers ?? []) {
    const px = sx(m.x);
    const py = sy(m.y);
    parts.push(
      `<path d="M ${px - 6} ${py} L ${px + 6} ${py} M ${px} ${py - 6} L ${px} ${py + 6}" ` +
        `stroke="#000" stroke-width="2"/>`,
      `<circle cx="${px.toFixed(1)}" cy="${py.toFixed(1)}" r="5" fill="none" stroke="#000"/>`,
      `<text x="${(px + 9).toFixed(1)}" y="${(py - 9).toFixed(1)}">` +
        `${escapeXml(m.label)}</text>`,
    );
  }

  // legend
  series.forEach((s, idx) => {
    const y = MARGIN.top + 14 + 18 * idx;
    const x = MARGIN.left + plotW - 170;
    parts.push(
      `<line x1="${x}" y1="${y - 4}" x2="${x + 26}" y2="${y - 4}" ` +
        `stroke="${PALETTE[idx % PALETTE.length]}" stroke-width="2.5"/>`,
      `<text x="${x + 32}" y="${y}">${escapeXml(s.label)}</text>`,
    );
  });

  parts.push("</svg>");
  return parts.join("\n");
}
