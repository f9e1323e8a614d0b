/**
 * Composition root: builds the scenario explorer DOM, wires the slider
 * inputs to the controller, and re-renders gauges and the fan chart on
 * every state change. All numbers shown come from API payloads; this
 * module only moves them into the document.
 */

import { ApiClient } from './api.js';
import { fanChartData, renderFanChart } from './fanchart.js';
import { renderGauges } from './gauges.js';
import { MULTIPLIER_MAX, MULTIPLIER_MIN, ScenarioController } from './scenario.js';
import type { ScenarioState } from './scenario.js';
import type { SmoltSeriesPayload, StocksPayload } from './types.js';

export interface AppHandle {
  controller: ScenarioController;
  selectStock: (stock: string) => void;
  root: HTMLElement;
}

function div(className: string, parent: HTMLElement): HTMLDivElement {
  const node = document.createElement('div');
  node.className = className;
  parent.appendChild(node);
  return node;
}

function buildSliders(
  mount: HTMLElement,
  fisheries: string[],
  controller: ScenarioController,
): HTMLInputElement[] {
  const inputs: HTMLInputElement[] = [];
  fisheries.forEach((fid, i) => {
    const row = div('slider-row', mount);
    const label = document.createElement('label');
    label.textContent = fid;
    label.htmlFor = `mult-${i}`;
    row.appendChild(label);

    const input = document.createElement('input');
    input.type = 'range';
    input.id = `mult-${i}`;
    input.min = String(MULTIPLIER_MIN);
    input.max = String(MULTIPLIER_MAX);
    input.step = '0.05';
    input.value = '1';
    row.appendChild(input);

    const readout = document.createElement('span');
    readout.className = 'slider-readout';
    readout.textContent = 'x1.00';
    row.appendChild(readout);

    input.addEventListener('input', () => {
      controller.setMultiplier(i, Number(input.value));
      readout.textContent = `x${Number(input.value).toFixed(2)}`;
    });
    inputs.push(input);
  });
  return inputs;
}

/**
 * Mount the app under `root`. The client is injectable for tests; by
 * default it talks to the origin the page was served from, or to
 * ?api=<base url> when given.
 */
export async function initApp(root: HTMLElement, api?: ApiClient): Promise<AppHandle | null> {
  const params = new URLSearchParams(window.location.search);
  const client = api ?? new ApiClient(params.get('api') ?? '');

  root.replaceChildren();
  const banner = div('banner hidden', root);
  const controls = div('controls', root);
  const gaugesMount = div('gauges', root);
  const chartBlock = div('chart-block', root);
  const picker = document.createElement('select');
  picker.className = 'stock-picker';
  chartBlock.appendChild(picker);
  const chartMount = div('chart-mount', chartBlock);
  const status = div('status', root);

  let stocksInfo: StocksPayload;
  let history: SmoltSeriesPayload;
  try {
    stocksInfo = await client.stocks();
    history = await client.smoltSeries();
  } catch (err) {
    banner.className = 'banner error';
    banner.textContent = `cannot reach the posterior service: ${
      err instanceof Error ? err.message : String(err)}`;
    return null;
  }

  for (const sid of stocksInfo.stocks) {
    const opt = document.createElement('option');
    opt.value = sid;
    opt.textContent = sid;
    picker.appendChild(opt);
  }
  let currentStock = stocksInfo.stocks[0] ?? '';

  const controller = new ScenarioController(client, stocksInfo.fisheries.length);
  buildSliders(controls, stocksInfo.fisheries, controller);

  const reset = document.createElement('button');
  reset.textContent = 'reset to status quo';
  reset.addEventListener('click', () => {
    controller.resetDraft();
    controls.querySelectorAll('input[type=range]').forEach((node) => {
      (node as HTMLInputElement).value = '1';
    });
    controls.querySelectorAll('.slider-readout').forEach((node) => {
      node.textContent = 'x1.00';
    });
  });
  controls.appendChild(reset);

  const drawChart = (state: ScenarioState) => {
    if (!state.result || !currentStock) return;
    const series = history.stocks[currentStock];
    renderFanChart(chartMount, fanChartData(currentStock, state.result, series));
  };

  const render = (state: ScenarioState) => {
    if (state.stale) {
      banner.className = 'banner stale';
      banner.textContent = state.error
        ? `projection failed (${state.error}); showing the last successful result`
        : 'showing a stale result';
    } else {
      banner.className = 'banner hidden';
      banner.textContent = '';
    }
    status.textContent = state.inFlight ? 'projecting...' : '';
    if (state.result) {
      renderGauges(gaugesMount, state.result, state.baseline);
      drawChart(state);
    }
  };

  controller.subscribe(render);
  picker.addEventListener('change', () => {
    currentStock = picker.value;
    drawChart(controller.state);
  });

  try {
    await controller.loadBaseline();
  } catch {
    // no baseline: gauges simply render without deltas
  }
  // first projection: dispatch the untouched (status quo) draft
  controller.resetDraft();

  return { controller, selectStock: (s) => { currentStock = s; drawChart(controller.state); }, root };
}
