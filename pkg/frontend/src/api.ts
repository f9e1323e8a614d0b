import type {
  HealthPayload,
  PolicyRequest,
  ProjectionPayload,
  SmoltSeriesPayload,
  StocksPayload,
} from './types.js';

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
    this.name = 'ApiError';
  }
}

/** Pull a readable message out of a FastAPI error body, which is either
 * {"detail": "text"} or {"detail": [{"field": ..., "msg": ...}]}. */
function detailMessage(body: unknown, fallback: string): string {
  if (body && typeof body === 'object' && 'detail' in body) {
    const detail = (body as { detail: unknown }).detail;
    if (typeof detail === 'string') return detail;
    if (Array.isArray(detail)) {
      const parts = detail.map((d) => {
        if (d && typeof d === 'object' && 'msg' in d) {
          const msg = String((d as { msg: unknown }).msg);
          const field = 'field' in d ? String((d as { field: unknown }).field) : '';
          // server messages usually open with the field name already
          return field && !msg.startsWith(field) ? `${field}: ${msg}` : msg;
        }
        return String(d);
      });
      if (parts.length) return parts.join('; ');
    }
  }
  return fallback;
}

/**
 * Thin client for the read-only posterior service. The fetch function is
 * injectable so tests can run without a network.
 */
export class ApiClient {
  private readonly base: string;
  private readonly fetchFn: FetchLike;

  constructor(baseUrl: string, fetchFn?: FetchLike) {
    this.base = baseUrl.replace(/\/+$/, '');
    // bind: bare `fetch` detaches from window and throws in browsers
    this.fetchFn = fetchFn ?? ((url, init) => fetch(url, init));
  }

  health(): Promise<HealthPayload> {
    return this.get('/health');
  }

  stocks(): Promise<StocksPayload> {
    return this.get('/stocks');
  }

  smoltSeries(stock?: string): Promise<SmoltSeriesPayload> {
    const qs = stock ? `?stock=${encodeURIComponent(stock)}` : '';
    return this.get(`/posterior/smolts${qs}`);
  }

  async project(body: PolicyRequest): Promise<ProjectionPayload> {
    const res = await this.fetchFn(`${this.base}/project`, {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify(body),
    });
    return this.decode<ProjectionPayload>(res);
  }

  private async get<T>(path: string): Promise<T> {
    const res = await this.fetchFn(this.base + path);
    return this.decode<T>(res);
  }

  private async decode<T>(res: Response): Promise<T> {
    if (!res.ok) {
      let body: unknown = null;
      try {
        body = await res.json();
      } catch {
        // non-JSON error body; fall through to the status line
      }
      throw new ApiError(res.status, detailMessage(body, `HTTP ${res.status}`));
    }
    return res.json() as Promise<T>;
  }
}
