import { describe, expect, it } from 'vitest';

import { fanChartData, renderFanChart } from '../src/fanchart.js';
import type { FanChartData } from '../src/fanchart.js';
import { historySeries, projectionPayload, smoltSeriesPayload } from './fixtures.js';

const SID = 'Tornionjoki';

function render(data: FanChartData): SVGSVGElement {
  const mount = document.createElement('div');
  return renderFanChart(mount, data);
}

describe('fanChartData', () => {
  it('passes payload arrays through untouched', () => {
    const proj = projectionPayload();
    const hist = smoltSeriesPayload().stocks[SID]!;
    const data = fanChartData(SID, proj, hist);

    const rows = proj.smolt_quantiles[SID]!;
    // same array objects, not copies: nothing was recomputed
    expect(data.projected.outer.lo).toBe(rows[0]);
    expect(data.projected.inner.lo).toBe(rows[1]);
    expect(data.projected.median.values).toBe(rows[2]);
    expect(data.projected.inner.hi).toBe(rows[3]);
    expect(data.projected.outer.hi).toBe(rows[4]);

    expect(data.historical!.median.values).toBe(hist.q50);
    expect(data.historical!.outer.lo).toBe(hist.q05);
    expect(data.historical!.outer.hi).toBe(hist.q95);
  });

  it('locates quantile rows by probability, not by position', () => {
    const proj = projectionPayload();
    const rows = proj.smolt_quantiles[SID]!;
    const shuffled = {
      ...proj,
      quantile_probs: [0.5, 0.05, 0.95, 0.25, 0.75],
      smolt_quantiles: {
        [SID]: [rows[2]!, rows[0]!, rows[4]!, rows[1]!, rows[3]!],
      },
    };
    const data = fanChartData(SID, shuffled);
    expect(data.projected.median.values).toBe(rows[2]);
    expect(data.projected.outer.lo).toBe(rows[0]);
    expect(data.projected.outer.hi).toBe(rows[4]);
  });

  it('continues the year axis from the end of the history', () => {
    const proj = projectionPayload({ horizon: 6 });
    const hist = smoltSeriesPayload().stocks[SID]!; // ends 1992
    const data = fanChartData(SID, proj, hist);
    expect(data.projected.median.years).toEqual([1993, 1994, 1995, 1996, 1997, 1998]);

    const bare = fanChartData(SID, proj);
    expect(bare.projected.median.years).toEqual([1, 2, 3, 4, 5, 6]);
    expect(bare.historical).toBeNull();
  });

  it('keeps band edges monotone nested at every year', () => {
    const data = fanChartData(SID, projectionPayload(), smoltSeriesPayload().stocks[SID]);
    for (const seg of [data.historical!, data.projected]) {
      seg.median.years.forEach((_, i) => {
        expect(seg.outer.lo[i]!).toBeLessThanOrEqual(seg.inner.lo[i]!);
        expect(seg.inner.lo[i]!).toBeLessThanOrEqual(seg.median.values[i]!);
        expect(seg.median.values[i]!).toBeLessThanOrEqual(seg.inner.hi[i]!);
        expect(seg.inner.hi[i]!).toBeLessThanOrEqual(seg.outer.hi[i]!);
      });
    }
  });

  it('flags a degenerate posterior', () => {
    const proj = projectionPayload({ spread: 0 });
    const flatHist = historySeries([1000, 1000, 1200], [1990, 1991, 1992], 0);
    expect(fanChartData(SID, proj, flatHist).degenerate).toBe(true);
    // any width anywhere means bands are drawn
    expect(fanChartData(SID, projectionPayload(), flatHist).degenerate).toBe(false);
    expect(fanChartData(SID, proj, smoltSeriesPayload().stocks[SID]).degenerate).toBe(false);
  });

  it('rejects unknown stocks and incomplete inputs', () => {
    const proj = projectionPayload();
    expect(() => fanChartData('Atlantis', proj)).toThrow(/not in projection/);
    const noMedian = { ...proj, quantile_probs: [0.05, 0.25, 0.75, 0.95, 0.99] };
    expect(() => fanChartData(SID, noMedian)).toThrow(/quantile 0.5/);
    const { years, q05, q25, q75, q95 } = smoltSeriesPayload().stocks[SID]!;
    expect(() => fanChartData(SID, proj, { years, q05, q25, q75, q95 }))
      .toThrow(/five quantile keys/);
  });
});

describe('renderFanChart', () => {
  it('draws both band pairs, the medians, and a history divider', () => {
    const svg = render(fanChartData(SID, projectionPayload(), smoltSeriesPayload().stocks[SID]));
    expect(svg.querySelectorAll('path.band.outer')).toHaveLength(2);
    expect(svg.querySelectorAll('path.band.inner')).toHaveLength(2);
    expect(svg.querySelectorAll('polyline.median.hist')).toHaveLength(1);
    expect(svg.querySelectorAll('polyline.median.proj')).toHaveLength(1);
    expect(svg.querySelectorAll('line.divider')).toHaveLength(1);
  });

  it('distinguishes projected years from fitted ones', () => {
    const svg = render(fanChartData(SID, projectionPayload(), smoltSeriesPayload().stocks[SID]));
    const proj = svg.querySelector('polyline.median.proj')!;
    const hist = svg.querySelector('polyline.median.hist')!;
    expect(proj.getAttribute('stroke-dasharray')).toBeTruthy();
    expect(hist.getAttribute('stroke-dasharray')).toBeNull();
  });

  it('renders a degenerate posterior as a single line without bands', () => {
    const svg = render(fanChartData(SID, projectionPayload({ spread: 0 })));
    expect(svg.getAttribute('data-degenerate')).toBe('true');
    expect(svg.querySelectorAll('path.band')).toHaveLength(0);
    expect(svg.querySelectorAll('polyline.median')).toHaveLength(1);
  });

  it('stamps every median marker with the payload value verbatim', () => {
    const proj = projectionPayload();
    const hist = smoltSeriesPayload().stocks[SID]!;
    const svg = render(fanChartData(SID, proj, hist));

    const projValues = Array.from(svg.querySelectorAll('circle.pt.proj'))
      .map((c) => c.getAttribute('data-value'));
    expect(projValues).toEqual(proj.smolt_quantiles[SID]![2]!.map(String));

    const histValues = Array.from(svg.querySelectorAll('circle.pt.hist'))
      .map((c) => c.getAttribute('data-value'));
    expect(histValues).toEqual(hist.q50!.map(String));
  });

  it('replaces a previous chart instead of stacking new ones', () => {
    const mount = document.createElement('div');
    renderFanChart(mount, fanChartData(SID, projectionPayload()));
    renderFanChart(mount, fanChartData(SID, projectionPayload({ horizon: 4 })));
    expect(mount.querySelectorAll('svg')).toHaveLength(1);
  });
});
