// API client: concurrent identical GETs share one request, and every view
// slot discards responses that a newer request has superseded.

import type { ApiError } from './types.js'

export class ApiRequestError extends Error {
  constructor(readonly status: number, readonly payload: ApiError) {
    super(`${payload.code}: ${payload.message}`)
  }
}

export class ApiClient {
  private inflight = new Map<string, Promise<unknown>>()

  constructor(readonly base: string = '', readonly token: string | null = null) {}

  get canWrite(): boolean {
    return !!this.token
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const headers: Record<string, string> = { ...(init?.headers as Record<string, string>) }
    if (init?.method && init.method !== 'GET' && this.token) {
      headers['Authorization'] = `Bearer ${this.token}`
    }
    if (init?.body) headers['Content-Type'] = 'application/json'
    const response = await fetch(this.base + path, { ...init, headers })
    const payload = await response.json()
    if (!response.ok) {
      throw new ApiRequestError(response.status, payload as ApiError)
    }
    return payload as T
  }

  /** GET with in-flight deduplication keyed by the full request path. */
  get<T>(path: string, params?: Record<string, string | number | null | undefined>): Promise<T> {
    const search = new URLSearchParams()
    for (const [k, v] of Object.entries(params ?? {})) {
      if (v !== null && v !== undefined) search.set(k, String(v))
    }
    const qs = search.toString()
    const url = qs ? `${path}?${qs}` : path
    const pending = this.inflight.get(url)
    if (pending) return pending as Promise<T>
    const promise = this.request<T>(url).finally(() => this.inflight.delete(url))
    this.inflight.set(url, promise)
    return promise as Promise<T>
  }

  post<T>(path: string, body: unknown): Promise<T> {
    return this.request<T>(path, { method: 'POST', body: JSON.stringify(body) })
  }

  put<T>(path: string, body: unknown): Promise<T> {
    return this.request<T>(path, { method: 'PUT', body: JSON.stringify(body) })
  }
}

/**
 * One logical view target (e.g. "the hyper table"): only the newest
 * request may deliver; anything older resolves to null and is dropped.
 */
export class LatestFetcher {
  private seq = 0

  async fetch<T>(run: () => Promise<T>): Promise<T | null> {
    const mine = ++this.seq
    const result = await run()
    return mine === this.seq ? result : null
  }
}
