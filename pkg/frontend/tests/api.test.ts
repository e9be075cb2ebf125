import { afterEach, describe, expect, it, vi } from 'vitest'

import { ApiClient, ApiRequestError, LatestFetcher } from '../src/api.js'

function jsonResponse(payload: unknown, status = 200): Response {
  return new Response(JSON.stringify(payload), {
    status,
    headers: { 'Content-Type': 'application/json' },
  })
}

afterEach(() => {
  vi.unstubAllGlobals()
})

describe('ApiClient', () => {
  it('deduplicates concurrent identical GETs into one network call', async () => {
    const fetchMock = vi.fn(async () => jsonResponse({ ok: 1 }))
    vi.stubGlobal('fetch', fetchMock)
    const api = new ApiClient('')
    const [a, b] = await Promise.all([
      api.get('/alerts/leaks', { limit: 5 }),
      api.get('/alerts/leaks', { limit: 5 }),
    ])
    expect(a).toEqual(b)
    expect(fetchMock).toHaveBeenCalledTimes(1)
    await api.get('/alerts/leaks', { limit: 5 }) // resolved entries are not reused
    expect(fetchMock).toHaveBeenCalledTimes(2)
  })

  it('raises machine-coded errors for non-2xx responses', async () => {
    vi.stubGlobal('fetch', vi.fn(async () =>
      jsonResponse({ code: 'unknown_mode', message: 'nope' }, 404)))
    const api = new ApiClient('')
    await expect(api.get('/hypertable', { mode: 'x' })).rejects.toThrowError(ApiRequestError)
    await api.get('/hypertable', { mode: 'x' }).catch((exc: ApiRequestError) => {
      expect(exc.status).toBe(404)
      expect(exc.payload.code).toBe('unknown_mode')
    })
  })

  it('sends the bearer token only on writes', async () => {
    const fetchMock = vi.fn(async () => jsonResponse({ ok: true }))
    vi.stubGlobal('fetch', fetchMock)
    const api = new ApiClient('', 'secret')
    await api.get('/objects')
    await api.put('/hypertable/mode', { mode_id: 'x' })
    const getHeaders = (fetchMock.mock.calls[0][1] as RequestInit).headers as Record<string, string>
    const putHeaders = (fetchMock.mock.calls[1][1] as RequestInit).headers as Record<string, string>
    expect(getHeaders.Authorization).toBeUndefined()
    expect(putHeaders.Authorization).toBe('Bearer secret')
  })
})

describe('LatestFetcher', () => {
  it('discards responses superseded by a newer request', async () => {
    const fetcher = new LatestFetcher()
    let releaseFirst!: (v: string) => void
    const slow = new Promise<string>((resolve) => {
      releaseFirst = resolve
    })
    const first = fetcher.fetch(() => slow)
    const second = fetcher.fetch(async () => 'fresh')
    expect(await second).toBe('fresh')
    releaseFirst('stale')
    expect(await first).toBeNull()
  })
})
