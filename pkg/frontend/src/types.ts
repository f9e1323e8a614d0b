/**
 * Response shapes for the posterior service HTTP API (schema "v1").
 *
 * Fields mirror the server's canonical JSON exactly; nothing here is
 * derived client-side. Quantile rows in `smolt_quantiles` follow the
 * order given by `quantile_probs`.
 */

export interface HealthPayload {
  schema: string;
  status: string;
  version: string;
}

export interface StocksPayload {
  schema: string;
  stocks: string[];
  fisheries: string[];
  years: number[];
  policies: string[];
}

/** One stock's stored posterior smolt series. Quantile keys present
 * depend on the ?quantiles= filter; unfiltered responses carry all five. */
export interface SmoltSeries {
  years: number[];
  q05?: number[];
  q25?: number[];
  q50?: number[];
  q75?: number[];
  q95?: number[];
}

export interface SmoltSeriesPayload {
  schema: string;
  stocks: Record<string, SmoltSeries>;
}

/** Summary of one projection, as embedded per policy in comparisons. */
export interface ProjectionSummary {
  policy: string;
  horizon: number;
  n_draws: number;
  stocks: string[];
  quantile_probs: number[];
  smolt_quantiles: Record<string, number[][]>;
  prob_recovery: Record<string, number[]>;
  recovery_window: number[];
  prob_any_collapse: number;
  collapse_frac: number;
  expected_cumulative_catch: number;
  catch_quantiles: number[];
}

/** POST /project response body. */
export interface ProjectionPayload extends ProjectionSummary {
  schema: string;
  seed: number;
}

/** GET /policies/compare response body. */
export interface ComparisonPayload {
  schema: string;
  horizon: number;
  seed: number;
  policies: Record<string, ProjectionSummary>;
}

/** POST /project request body: a constant per-fishery effort multiplier
 * or an explicit (fishery x year) schedule, never both. */
export interface PolicyRequest {
  name?: string;
  multiplier?: number[];
  schedule?: number[][];
}
