/**
 * Fan chart for one stock: posterior smolt history and projection as
 * nested uncertainty bands (5-95 outer, 25-75 inner) around the median.
 *
 * The data builder only rearranges server arrays; it never aggregates,
 * interpolates, or recomputes quantiles. Scaling to pixels happens in the
 * renderer and is the sole arithmetic performed on the values.
 */

import type { ProjectionSummary, SmoltSeries } from './types.js';

export interface LineSeries {
  years: number[];
  values: number[];
}

export interface BandSeries {
  years: number[];
  lo: number[];
  hi: number[];
}

export interface FanSegment {
  median: LineSeries;
  inner: BandSeries; // 25-75
  outer: BandSeries; // 5-95
}

export interface FanChartData {
  stock: string;
  historical: FanSegment | null;
  projected: FanSegment;
  /** All band edges coincide: draw the median line only. */
  degenerate: boolean;
}

const BAND_PROBS = [0.05, 0.25, 0.5, 0.75, 0.95] as const;

function rowIndex(probs: number[], q: number): number {
  const i = probs.indexOf(q);
  if (i < 0) throw new Error(`quantile ${q} not in payload (has ${probs})`);
  return i;
}

function segmentFromRows(years: number[], rows: number[][], probs: number[]): FanSegment {
  const [q05, q25, q50, q75, q95] = BAND_PROBS.map((q) => {
    const row = rows[rowIndex(probs, q)];
    if (!row) throw new Error(`payload missing quantile row for ${q}`);
    return row;
  }) as [number[], number[], number[], number[], number[]];
  return {
    median: { years, values: q50 },
    inner: { years, lo: q25, hi: q75 },
    outer: { years, lo: q05, hi: q95 },
  };
}

function historySegment(series: SmoltSeries): FanSegment {
  const { years, q05, q25, q50, q75, q95 } = series;
  if (!q05 || !q25 || !q50 || !q75 || !q95) {
    throw new Error('history series must carry all five quantile keys');
  }
  return {
    median: { years, values: q50 },
    inner: { years, lo: q25, hi: q75 },
    outer: { years, lo: q05, hi: q95 },
  };
}

function isFlat(seg: FanSegment): boolean {
  return seg.outer.lo.every((lo, i) => lo === seg.outer.hi[i]);
}

/**
 * Assemble chart data for one stock from a projection payload, optionally
 * prefixed with the stock's fitted posterior series. Projected years
 * continue the historical axis; without history they count from 1.
 */
export function fanChartData(
  stock: string,
  projection: ProjectionSummary,
  history?: SmoltSeries,
): FanChartData {
  const rows = projection.smolt_quantiles[stock];
  if (!rows) throw new Error(`stock ${stock} not in projection payload`);

  const lastHistYear = history?.years.length
    ? history.years[history.years.length - 1]!
    : 0;
  const years = Array.from({ length: projection.horizon }, (_, t) => lastHistYear + 1 + t);

  const projected = segmentFromRows(years, rows, projection.quantile_probs);
  const historical = history ? historySegment(history) : null;
  const degenerate = isFlat(projected) && (historical === null || isFlat(historical));
  return { stock, historical, projected, degenerate };
}

// --- SVG rendering ---------------------------------------------------

export const CHART_WIDTH = 640;
export const CHART_HEIGHT = 260;
const MARGIN = { top: 12, right: 14, bottom: 24, left: 58 };

const SVG_NS = 'http://www.w3.org/2000/svg';

interface Scales {
  x: (year: number) => number;
  y: (value: number) => number;
}

function makeScales(data: FanChartData): Scales {
  const segs = data.historical ? [data.historical, data.projected] : [data.projected];
  const years = segs.flatMap((s) => s.median.years);
  let vals: number[];
  if (data.degenerate) {
    vals = segs.flatMap((s) => s.median.values);
  } else {
    vals = segs.flatMap((s) => [...s.outer.lo, ...s.outer.hi]);
  }
  const x0 = Math.min(...years);
  const x1 = Math.max(...years);
  let v0 = Math.min(...vals);
  let v1 = Math.max(...vals);
  if (v0 === v1) {
    // flat series still needs a finite y range
    const pad = Math.max(1, Math.abs(v0) * 0.1);
    v0 -= pad;
    v1 += pad;
  }
  const innerW = CHART_WIDTH - MARGIN.left - MARGIN.right;
  const innerH = CHART_HEIGHT - MARGIN.top - MARGIN.bottom;
  const xSpan = Math.max(1, x1 - x0);
  return {
    x: (year) => MARGIN.left + ((year - x0) / xSpan) * innerW,
    y: (value) => MARGIN.top + (1 - (value - v0) / (v1 - v0)) * innerH,
  };
}

function el(name: string, attrs: Record<string, string>): SVGElement {
  const node = document.createElementNS(SVG_NS, name);
  for (const [k, v] of Object.entries(attrs)) node.setAttribute(k, v);
  return node;
}

function bandPath(band: BandSeries, s: Scales): string {
  const fwd = band.years.map((yr, i) => `${s.x(yr).toFixed(2)},${s.y(band.hi[i]!).toFixed(2)}`);
  const back = band.years
    .map((yr, i) => `${s.x(yr).toFixed(2)},${s.y(band.lo[i]!).toFixed(2)}`)
    .reverse();
  return `M${fwd.join(' L')} L${back.join(' L')} Z`;
}

function linePoints(line: LineSeries, s: Scales): string {
  return line.years
    .map((yr, i) => `${s.x(yr).toFixed(2)},${s.y(line.values[i]!).toFixed(2)}`)
    .join(' ');
}

function drawSegment(svg: SVGElement, seg: FanSegment, kind: 'hist' | 'proj',
                     s: Scales, bandsVisible: boolean): void {
  if (bandsVisible) {
    svg.appendChild(el('path', { class: `band outer ${kind}`, d: bandPath(seg.outer, s) }));
    svg.appendChild(el('path', { class: `band inner ${kind}`, d: bandPath(seg.inner, s) }));
  }
  const media = el('polyline', {
    class: `median ${kind}`,
    points: linePoints(seg.median, s),
    fill: 'none',
  });
  if (kind === 'proj') media.setAttribute('stroke-dasharray', '6 3');
  svg.appendChild(media);

  // one marker per median point; data-value is the payload number verbatim
  seg.median.years.forEach((yr, i) => {
    const v = seg.median.values[i]!;
    const dot = el('circle', {
      class: `pt ${kind}`,
      cx: s.x(yr).toFixed(2),
      cy: s.y(v).toFixed(2),
      r: '2',
      'data-year': String(yr),
      'data-value': String(v),
    });
    const tip = document.createElementNS(SVG_NS, 'title');
    tip.textContent = `${yr}: ${v}`;
    dot.appendChild(tip);
    svg.appendChild(dot);
  });
}

/** Render the chart into `container`, replacing any previous chart. */
export function renderFanChart(container: HTMLElement, data: FanChartData): SVGSVGElement {
  const svg = el('svg', {
    viewBox: `0 0 ${CHART_WIDTH} ${CHART_HEIGHT}`,
    class: 'fan-chart',
    role: 'img',
    'data-stock': data.stock,
    'data-degenerate': String(data.degenerate),
  }) as SVGSVGElement;

  const s = makeScales(data);
  if (data.historical) {
    drawSegment(svg, data.historical, 'hist', s, !data.degenerate);
    // divider between fitted years and the projection
    const lastHist = data.historical.median.years[data.historical.median.years.length - 1]!;
    const firstProj = data.projected.median.years[0]!;
    const xDiv = (s.x(lastHist) + s.x(firstProj)) / 2;
    svg.appendChild(el('line', {
      class: 'divider',
      x1: xDiv.toFixed(2),
      x2: xDiv.toFixed(2),
      y1: String(MARGIN.top),
      y2: String(CHART_HEIGHT - MARGIN.bottom),
    }));
  }
  drawSegment(svg, data.projected, 'proj', s, !data.degenerate);

  container.replaceChildren(svg);
  return svg;
}
