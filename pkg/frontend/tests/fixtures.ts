/** Canned API payloads and a controllable fetch double for the tests.
 * Shapes mirror the posterior service's canonical JSON exactly. */

import type {
  PolicyRequest,
  ProjectionPayload,
  SmoltSeries,
  SmoltSeriesPayload,
  StocksPayload,
} from '../src/types.js';

export const STOCKS = ['Tornionjoki', 'Simojoki'];
export const FISHERIES = ['offshore_driftnet', 'coastal_trapnet'];
export const QUANTILE_PROBS = [0.05, 0.25, 0.5, 0.75, 0.95];

export function stocksPayload(): StocksPayload {
  return {
    schema: 'v1',
    stocks: [...STOCKS],
    fisheries: [...FISHERIES],
    years: [1988, 1989, 1990, 1991, 1992],
    policies: ['moratorium', 'status_quo'],
  };
}

function quantileRows(median: number[], spread: number): number[][] {
  // nested rows around a given median path; test input only
  const factors = [1 - 2 * spread, 1 - spread, 1, 1 + spread, 1 + 2 * spread];
  return factors.map((f) => median.map((m) => m * f));
}

export function historySeries(median: number[], years: number[], spread = 0.2): SmoltSeries {
  const [q05, q25, q50, q75, q95] = quantileRows(median, spread);
  return { years, q05: q05!, q25: q25!, q50: q50!, q75: q75!, q95: q95! };
}

export function smoltSeriesPayload(): SmoltSeriesPayload {
  const years = [1988, 1989, 1990, 1991, 1992];
  return {
    schema: 'v1',
    stocks: {
      Tornionjoki: historySeries([420000, 455000, 430000, 510000, 560000], years),
      Simojoki: historySeries([26000, 24500, 28000, 31000, 30500], years),
    },
  };
}

export interface ProjectionOverrides {
  policy?: string;
  horizon?: number;
  seed?: number;
  probRecovery?: Record<string, number[]>;
  medians?: Record<string, number[]>;
  spread?: number;
}

export function projectionPayload(over: ProjectionOverrides = {}): ProjectionPayload {
  const horizon = over.horizon ?? 6;
  const medians = over.medians ?? {
    Tornionjoki: Array.from({ length: horizon }, (_, t) => 580000 + 21000 * t),
    Simojoki: Array.from({ length: horizon }, (_, t) => 31500 + 900 * t),
  };
  const stocks = Object.keys(medians);
  return {
    schema: 'v1',
    seed: over.seed ?? 0,
    policy: over.policy ?? 'scenario',
    horizon,
    n_draws: 1000,
    stocks,
    quantile_probs: [...QUANTILE_PROBS],
    smolt_quantiles: Object.fromEntries(
      stocks.map((sid) => [sid, quantileRows(medians[sid]!, over.spread ?? 0.25)]),
    ),
    prob_recovery: over.probRecovery ?? {
      '0.5': [0.6215, 0.3333333333333333],
      '0.75': [0.1234, 0.0005],
    },
    recovery_window: [4, 6],
    prob_any_collapse: 0.031,
    collapse_frac: 0.1,
    expected_cumulative_catch: 187432.5,
    catch_quantiles: [91000.5, 140200.25, 186000, 232100.75, 280400.125],
  };
}

// --- fetch double ------------------------------------------------------

export function jsonResponse(data: unknown, status = 200): Response {
  return {
    ok: status >= 200 && status < 300,
    status,
    json: async () => data,
  } as unknown as Response;
}

export interface PendingProject {
  body: PolicyRequest;
  resolve: (payload: ProjectionPayload) => void;
  reject: (err: unknown) => void;
}

export interface FakeServer {
  fetchFn: (url: string, init?: RequestInit) => Promise<Response>;
  /** Every captured POST /project, in arrival order. */
  projects: PendingProject[];
  /** Highest number of simultaneously unsettled /project requests. */
  maxInFlight: number;
  /** When true, /project resolves by itself with a payload echoing the
   * request's policy name; when false the test settles each PendingProject. */
  auto: boolean;
  failNext: boolean;
}

export function makeFakeServer(opts: { auto?: boolean } = {}): FakeServer {
  let inFlight = 0;
  const server: FakeServer = {
    projects: [],
    maxInFlight: 0,
    auto: opts.auto ?? true,
    failNext: false,
    fetchFn: async (url, init) => {
      if (url.endsWith('/stocks')) return jsonResponse(stocksPayload());
      if (url.includes('/posterior/smolts')) return jsonResponse(smoltSeriesPayload());
      if (url.endsWith('/project') && init?.method === 'POST') {
        const body = JSON.parse(String(init.body)) as PolicyRequest;
        inFlight += 1;
        server.maxInFlight = Math.max(server.maxInFlight, inFlight);
        const done = new Promise<ProjectionPayload>((resolve, reject) => {
          server.projects.push({ body, resolve, reject });
        });
        if (server.failNext) {
          server.failNext = false;
          const last = server.projects[server.projects.length - 1]!;
          last.reject(new Error('connection refused'));
        } else if (server.auto) {
          const last = server.projects[server.projects.length - 1]!;
          // settle on a later microtask so synchronous double-dispatch
          // would be observed as overlapping requests
          void Promise.resolve().then(() =>
            last.resolve(projectionPayload({ policy: body.name ?? 'scenario' })));
        }
        try {
          const payload = await done;
          return jsonResponse(payload);
        } finally {
          inFlight -= 1;
        }
      }
      return jsonResponse({ detail: `no route for ${url}` }, 404);
    },
  };
  return server;
}

export function flushMicrotasks(rounds = 8): Promise<void> {
  let p = Promise.resolve();
  for (let i = 0; i < rounds; i += 1) p = p.then(() => undefined);
  return p;
}
