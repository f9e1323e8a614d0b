/**
 * What-if scenario controller.
 *
 * Holds the draft policy under edit (one effort multiplier per fishery),
 * the last projection fetched for it, and a status-quo baseline for
 * comparison. Slider edits are debounced; at most one projection request
 * is in flight at a time, with the newest draft re-dispatched once the
 * current request settles. Responses carry a sequence number and are
 * discarded when a newer request has been issued since.
 *
 * The controller never computes probabilities or quantiles itself; it
 * only stores server payloads (frozen on receipt) for the view layer.
 */

import { ApiClient } from './api.js';
import type { ProjectionPayload } from './types.js';

export const DEBOUNCE_MS = 300;
export const MULTIPLIER_MIN = 0;
export const MULTIPLIER_MAX = 3;

export interface ScenarioState {
  /** Draft policy under edit; length = number of fisheries. */
  multipliers: number[];
  /** Status-quo projection, fetched once for comparison deltas. */
  baseline: ProjectionPayload | null;
  /** Last successfully fetched projection for the draft. */
  result: ProjectionPayload | null;
  /** True when `result` no longer reflects the draft (request failed). */
  stale: boolean;
  /** Inline error message for the last failure, if any. */
  error: string | null;
  inFlight: boolean;
}

export function clampMultiplier(value: number): number {
  if (Number.isNaN(value)) return MULTIPLIER_MIN;
  return Math.min(MULTIPLIER_MAX, Math.max(MULTIPLIER_MIN, value));
}

function deepFreeze<T>(obj: T): T {
  if (obj && typeof obj === 'object' && !Object.isFrozen(obj)) {
    Object.freeze(obj);
    for (const value of Object.values(obj)) deepFreeze(value);
  }
  return obj;
}

type Listener = (state: ScenarioState) => void;

export class ScenarioController {
  private readonly api: ApiClient;
  private multipliers: number[];
  private baseline: ProjectionPayload | null = null;
  private result: ProjectionPayload | null = null;
  private stale = false;
  private error: string | null = null;

  private seq = 0;            // stamp of the most recently issued request
  private inFlightSeq: number | null = null;
  private redispatch = false; // an edit arrived while a request was in flight
  private timer: ReturnType<typeof setTimeout> | null = null;
  private listeners: Listener[] = [];

  constructor(api: ApiClient, nFisheries: number) {
    if (nFisheries < 1) throw new Error('need at least one fishery');
    this.api = api;
    this.multipliers = new Array(nFisheries).fill(1);
  }

  get state(): ScenarioState {
    return {
      multipliers: [...this.multipliers],
      baseline: this.baseline,
      result: this.result,
      stale: this.stale,
      error: this.error,
      inFlight: this.inFlightSeq !== null,
    };
  }

  subscribe(fn: Listener): () => void {
    this.listeners.push(fn);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== fn);
    };
  }

  /** Fetch the status-quo projection used for comparison deltas. */
  async loadBaseline(): Promise<void> {
    const nf = this.multipliers.length;
    const payload = await this.api.project({
      name: 'status_quo',
      multiplier: new Array(nf).fill(1),
    });
    this.baseline = deepFreeze(payload);
    this.notify();
  }

  /** Edit one slider. Clamps, then (re)arms the debounce timer. */
  setMultiplier(index: number, value: number): void {
    if (index < 0 || index >= this.multipliers.length) {
      throw new RangeError(`fishery index ${index} out of range`);
    }
    this.multipliers[index] = clampMultiplier(value);
    this.schedule();
  }

  /** Return the draft to status quo and invalidate any in-flight request. */
  resetDraft(): void {
    this.multipliers.fill(1);
    if (this.timer !== null) {
      clearTimeout(this.timer);
      this.timer = null;
    }
    // bump the sequence so a late response for the old draft is discarded
    this.seq += 1;
    this.inFlightSeq = null;
    this.redispatch = false;
    this.schedule();
  }

  private schedule(): void {
    if (this.timer !== null) clearTimeout(this.timer);
    this.timer = setTimeout(() => {
      this.timer = null;
      if (this.inFlightSeq !== null) {
        this.redispatch = true; // dispatched again as soon as the wire frees
      } else {
        void this.dispatch();
      }
    }, DEBOUNCE_MS);
    this.notify();
  }

  private async dispatch(): Promise<void> {
    const seq = ++this.seq;
    this.inFlightSeq = seq;
    this.notify();
    try {
      const payload = await this.api.project({
        name: 'scenario',
        multiplier: [...this.multipliers],
      });
      if (seq !== this.seq) return; // stale: a newer request owns the state
      this.result = deepFreeze(payload);
      this.stale = false;
      this.error = null;
    } catch (err) {
      if (seq !== this.seq) return;
      // keep the previous result on screen; just flag it as stale
      this.stale = true;
      this.error = err instanceof Error ? err.message : String(err);
    } finally {
      if (seq === this.seq) {
        this.inFlightSeq = null;
        if (this.redispatch) {
          this.redispatch = false;
          void this.dispatch();
        } else {
          this.notify();
        }
      }
    }
  }

  private notify(): void {
    const snapshot = this.state;
    for (const fn of this.listeners) fn(snapshot);
  }
}
