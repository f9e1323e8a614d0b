import { describe, expect, it } from 'vitest';

import { ApiClient, ApiError } from '../src/api.js';
import { jsonResponse } from './fixtures.js';

function clientReturning(data: unknown, status: number): ApiClient {
  return new ApiClient('http://x', async () => jsonResponse(data, status));
}

describe('ApiClient error decoding', () => {
  it('uses a plain string detail as the message', async () => {
    const api = clientReturning({ detail: "unknown stock 'atlantis'" }, 404);
    await expect(api.stocks()).rejects.toThrowError(ApiError);
    await expect(api.stocks()).rejects.toThrow("unknown stock 'atlantis'");
  });

  it('joins field errors without repeating the field prefix', async () => {
    const api = clientReturning(
      { detail: [{ field: 'policy.name', msg: 'policy.name: required string' }] },
      400,
    );
    await expect(api.project({})).rejects.toThrow(/^policy.name: required string$/);
  });

  it('prefixes the field when the message lacks it', async () => {
    const api = clientReturning(
      { detail: [{ field: 'quantiles', msg: "'0.33' not stored" }] },
      400,
    );
    await expect(api.smoltSeries()).rejects.toThrow("quantiles: '0.33' not stored");
  });

  it('falls back to the status line for non-JSON bodies', async () => {
    const api = new ApiClient('http://x', async () =>
      ({ ok: false, status: 502, json: async () => { throw new Error('not json'); } }) as unknown as Response);
    await expect(api.health()).rejects.toThrow('HTTP 502');
  });

  it('carries the HTTP status on the error object', async () => {
    const api = clientReturning({ detail: 'nope' }, 404);
    const err = await api.stocks().catch((e) => e as ApiError);
    expect(err.status).toBe(404);
  });
});

describe('ApiClient requests', () => {
  it('strips trailing slashes from the base url and encodes query params', async () => {
    const urls: string[] = [];
    const api = new ApiClient('http://host:9//', async (url) => {
      urls.push(url);
      return jsonResponse({ schema: 'v1', stocks: {} });
    });
    await api.smoltSeries('Kalix älven');
    expect(urls[0]).toBe('http://host:9/posterior/smolts?stock=Kalix%20%C3%A4lven');
  });

  it('posts policies as JSON with the right content type', async () => {
    let captured: RequestInit | undefined;
    const api = new ApiClient('http://h', async (_url, init) => {
      captured = init;
      return jsonResponse({});
    });
    await api.project({ name: 'p', multiplier: [1, 0.5] });
    expect(captured?.method).toBe('POST');
    expect((captured?.headers as Record<string, string>)['content-type'])
      .toBe('application/json');
    expect(JSON.parse(String(captured?.body))).toEqual({ name: 'p', multiplier: [1, 0.5] });
  });
});
