/**
 * Acceptance: displayed headline probabilities equal API payload fields
 * exactly (snapshot on the payload -> DOM mapping), and scripted rapid
 * slider input never holds more than one projection request in flight.
 * A verdict line prints after both parts pass.
 */

import { afterAll, afterEach, beforeEach, describe, expect, it, vi } from 'vitest';

import { ApiClient } from '../src/api.js';
import { initApp } from '../src/app.js';
import type { AppHandle } from '../src/app.js';
import type { ProjectionPayload } from '../src/types.js';
import {
  FakeServer,
  flushMicrotasks,
  makeFakeServer,
  projectionPayload,
  smoltSeriesPayload,
} from './fixtures.js';

const settle = () => flushMicrotasks(16);

const BASELINE = projectionPayload({
  policy: 'status_quo',
  probRecovery: { '0.5': [0.5215, 0.3833333333333333], '0.75': [0.1034, 0.0105] },
});
const SCENARIO = projectionPayload({
  policy: 'scenario',
  probRecovery: { '0.5': [0.6215, 0.3333333333333333], '0.75': [0.1234, 0.0005] },
});

/** Boot the app against a manual fake server and settle the initial
 * baseline and status-quo projection requests. */
async function boot(server: FakeServer): Promise<{ handle: AppHandle; root: HTMLElement }> {
  const root = document.createElement('div');
  const booting = initApp(root, new ApiClient('', server.fetchFn));
  await settle();
  expect(server.projects).toHaveLength(1); // baseline fetch
  server.projects[0]!.resolve(BASELINE);
  const handle = (await booting)!;
  expect(handle).not.toBeNull();

  await vi.advanceTimersByTimeAsync(300); // initial draft dispatch
  expect(server.projects).toHaveLength(2);
  server.projects[1]!.resolve(SCENARIO);
  await settle();
  return { handle, root };
}

function gaugeTexts(root: HTMLElement): string[] {
  return Array.from(root.querySelectorAll('.gauge-value')).map((n) => n.textContent ?? '');
}

let passedA = false;
let passedB = false;

describe('criterion 8', () => {
  beforeEach(() => {
    vi.useFakeTimers();
  });
  afterEach(() => {
    vi.useRealTimers();
  });

  it('8a: every headline probability is the API payload field verbatim', async () => {
    const server = makeFakeServer({ auto: false });
    const { root } = await boot(server);

    // payload -> DOM mapping: each gauge row names its field; the text
    // must be String() of exactly that field, no formatting applied
    const rows = Array.from(root.querySelectorAll('.gauge-row')) as HTMLElement[];
    expect(rows).toHaveLength(4);
    for (const row of rows) {
      const th = row.dataset.threshold!;
      const i = SCENARIO.stocks.indexOf(row.dataset.stock!);
      const field = SCENARIO.prob_recovery[th]![i]!;
      expect(row.querySelector('.gauge-value')!.textContent).toBe(String(field));
    }
    expect(gaugeTexts(root)).toMatchInlineSnapshot(`
      [
        "0.6215",
        "0.3333333333333333",
        "0.1234",
        "0.0005",
      ]
    `);

    // chart markers carry the payload medians verbatim as well
    const projDots = Array.from(root.querySelectorAll('circle.pt.proj'))
      .map((c) => c.getAttribute('data-value'));
    expect(projDots).toEqual(SCENARIO.smolt_quantiles['Tornionjoki']![2]!.map(String));
    const histDots = Array.from(root.querySelectorAll('circle.pt.hist'))
      .map((c) => c.getAttribute('data-value'));
    expect(histDots).toEqual(
      smoltSeriesPayload().stocks['Tornionjoki']!.q50!.map(String),
    );

    // deltas come from the two named payload fields and nothing else
    const deltas = Array.from(root.querySelectorAll('.gauge-delta')).map((n) => n.textContent);
    expect(deltas).toEqual(['+0.100', '-0.050', '+0.020', '-0.010']);
    passedA = true;
  });

  it('8b: rapid scripted input keeps at most one request in flight', async () => {
    const server = makeFakeServer({ auto: false });
    const { handle, root } = await boot(server);
    const slider = root.querySelector<HTMLInputElement>('#mult-0')!;
    const drag = (value: number) => {
      slider.value = String(value);
      slider.dispatchEvent(new Event('input'));
    };

    // 25 slider events 10 ms apart: all inside the debounce window
    for (let k = 0; k < 25; k += 1) {
      drag(0.05 + 0.1 * (k % 20));
      await vi.advanceTimersByTimeAsync(10);
    }
    expect(server.projects).toHaveLength(2); // nothing new yet

    await vi.advanceTimersByTimeAsync(300);
    expect(server.projects).toHaveLength(3); // one request for the burst
    expect(server.projects[2]!.body.multiplier![0]).toBeCloseTo(0.45, 12);

    // keep dragging while that request is on the wire
    for (let k = 0; k < 10; k += 1) {
      drag(2.0 + 0.05 * k);
      await vi.advanceTimersByTimeAsync(10);
    }
    await vi.advanceTimersByTimeAsync(300);
    expect(server.projects).toHaveLength(3); // still just the one in flight

    server.projects[2]!.resolve(projectionPayload({ policy: 'burst_1' }));
    await settle();
    // the queued newest draft goes out only after the first settles
    expect(server.projects).toHaveLength(4);
    expect(server.projects[3]!.body.multiplier![0]).toBeCloseTo(2.45, 12);

    const final = projectionPayload({
      policy: 'burst_2',
      probRecovery: { '0.5': [0.75, 0.5], '0.75': [0.25, 0.125] },
    });
    server.projects[3]!.resolve(final);
    await settle();

    expect(server.maxInFlight).toBe(1);
    expect(handle.controller.state.result?.policy).toBe('burst_2');
    expect(gaugeTexts(root)).toEqual(['0.75', '0.5', '0.25', '0.125']);
    passedB = true;
  });

  it('unreachable service: stale banner appears, last result stays up', async () => {
    const server = makeFakeServer({ auto: false });
    const { root } = await boot(server);
    const before = gaugeTexts(root);

    server.failNext = true;
    const slider = root.querySelector<HTMLInputElement>('#mult-1')!;
    slider.value = '0.2';
    slider.dispatchEvent(new Event('input'));
    await vi.advanceTimersByTimeAsync(300);
    await settle();

    const banner = root.querySelector('.banner')!;
    expect(banner.className).toContain('stale');
    expect(banner.textContent).toContain('last successful result');
    expect(gaugeTexts(root)).toEqual(before); // nothing was cleared
  });
});

afterAll(() => {
  if (passedA && passedB) {
    console.log(
      'acceptance criterion 8: PASS (headline probabilities match payload fields '
      + 'byte-for-byte; 35 rapid inputs produced max 1 concurrent request)',
    );
  }
});
