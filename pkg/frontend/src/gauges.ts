/**
 * Headline recovery gauges: the server-reported probabilities of reaching
 * 50% and 75% of smolt production capacity, one row per stock.
 *
 * The probability text is the payload value passed through String() with
 * no rounding or rescaling, so what the manager reads is byte-for-byte
 * the API field. Only the decorative bar width and the baseline delta
 * touch the numbers, and the delta is a difference of two payload fields.
 */

import type { ProjectionPayload } from './types.js';

export interface GaugeModel {
  stock: string;
  threshold: string; // key into prob_recovery, e.g. "0.5"
  value: number;
  baselineValue: number | null;
}

export function gaugeModels(
  result: ProjectionPayload,
  baseline: ProjectionPayload | null,
): GaugeModel[] {
  const thresholds = Object.keys(result.prob_recovery).sort(
    (a, b) => Number(a) - Number(b),
  );
  const out: GaugeModel[] = [];
  for (const th of thresholds) {
    const values = result.prob_recovery[th]!;
    const baseValues = baseline?.prob_recovery[th] ?? null;
    result.stocks.forEach((stock, i) => {
      out.push({
        stock,
        threshold: th,
        value: values[i]!,
        baselineValue: baseValues ? baseValues[i]! : null,
      });
    });
  }
  return out;
}

export function formatDelta(delta: number): string {
  const sign = delta < 0 ? '-' : '+';
  return `${sign}${Math.abs(delta).toFixed(3)}`;
}

export function renderGauges(
  container: HTMLElement,
  result: ProjectionPayload,
  baseline: ProjectionPayload | null,
): void {
  const [w0, w1] = result.recovery_window;
  const frag = document.createDocumentFragment();
  const byThreshold = new Map<string, GaugeModel[]>();
  for (const g of gaugeModels(result, baseline)) {
    const group = byThreshold.get(g.threshold) ?? [];
    group.push(g);
    byThreshold.set(g.threshold, group);
  }

  for (const [th, group] of byThreshold) {
    const section = document.createElement('section');
    section.className = 'gauge-group';
    const heading = document.createElement('h3');
    heading.textContent = `P(smolts reach ${th} x capacity in years ${w0}-${w1})`;
    section.appendChild(heading);

    for (const g of group) {
      const row = document.createElement('div');
      row.className = 'gauge-row';
      row.dataset.stock = g.stock;
      row.dataset.threshold = g.threshold;

      const label = document.createElement('span');
      label.className = 'gauge-stock';
      label.textContent = g.stock;
      row.appendChild(label);

      const bar = document.createElement('div');
      bar.className = 'gauge-bar';
      const fill = document.createElement('div');
      fill.className = 'gauge-fill';
      fill.style.width = `${g.value * 100}%`;
      bar.appendChild(fill);
      row.appendChild(bar);

      const value = document.createElement('span');
      value.className = 'gauge-value';
      value.dataset.field = `prob_recovery.${g.threshold}`;
      value.textContent = String(g.value); // exact passthrough, no formatting
      row.appendChild(value);

      if (g.baselineValue !== null) {
        const delta = document.createElement('span');
        delta.className = 'gauge-delta';
        delta.title = 'change vs status quo';
        delta.textContent = formatDelta(g.value - g.baselineValue);
        row.appendChild(delta);
      }
      section.appendChild(row);
    }
    frag.appendChild(section);
  }
  container.replaceChildren(frag);
}
