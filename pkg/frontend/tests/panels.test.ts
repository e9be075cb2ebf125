import { afterEach, describe, expect, it, vi } from 'vitest'

import { ApiClient } from '../src/api.js'
import { ForecastPanel, renderAlerts, renderPlot } from '../src/panels.js'
import type { ForecastJob, LeakAlert } from '../src/types.js'

import alertsJson from './fixtures/alerts.json'
import forecastJson from './fixtures/forecast-done.json'
import sliceJson from './fixtures/slice-actuals.json'

const alerts = (alertsJson as { items: LeakAlert[] }).items
const forecastDone = forecastJson as unknown as ForecastJob

afterEach(() => vi.unstubAllGlobals())

describe('alerts panel', () => {
  it('shows an explicit empty state, not a blank box', () => {
    const box = document.createElement('div')
    renderAlerts(box, [], '')
    expect(box.querySelector('.empty-state')!.textContent).toContain('no active leak alerts')
  })

  it('renders alert fields verbatim and honors the filter', () => {
    const box = document.createElement('div')
    renderAlerts(box, alerts, '')
    const item = box.querySelector('li')!
    const first = alerts[0]
    expect(item.textContent).toContain(`${first.segment[0]}–${first.segment[1]}`)
    expect(item.textContent).toContain(String(first.est_pos))
    expect(item.textContent).toContain(String(first.confidence))
    renderAlerts(box, alerts, 'no-such-pipeline')
    expect(box.querySelector('.empty-state')).not.toBeNull()
  })
})

describe('forecast panel', () => {
  it('polls a pending job to completion and plots payload points verbatim', async () => {
    let polls = 0
    const fetchMock = vi.fn(async (url: string, init?: RequestInit) => {
      if (url === '/forecast/run') {
        expect(init?.method).toBe('POST')
        return json({ job_id: 'fj-1', status: 'pending' }, 202)
      }
      if (url.startsWith('/forecast/jobs/fj-1')) {
        polls += 1
        return json(polls < 3 ? { status: 'pending' } : forecastDone)
      }
      if (url.startsWith('/slice')) return json(sliceJson)
      throw new Error(`unexpected ${url}`)
    })
    vi.stubGlobal('fetch', fetchMock)
    const panel = new ForecastPanel(new ApiClient(''), { onScenarioChange: () => undefined }, 5)
    const status = panel.element.querySelector('.forecast-status') as HTMLElement
    await panel.run()
    expect(status.classList.contains('pending')).toBe(true)
    await vi.waitFor(() => {
      expect(status.classList.contains('done')).toBe(true)
    })
    const line = panel.element.querySelector('polyline[data-series="forecast"]')!
    const points = forecastDone.forecast!.points
    expect(line.getAttribute('points')!.split(' ')).toHaveLength(points.length)
    // the raw values ride along verbatim in the series tooltip
    const tooltip = line.querySelector('title')!.textContent!
    for (const p of points.slice(0, 5)) {
      expect(tooltip).toContain(`${p.ts}: ${String(p.value)}`)
    }
    panel.dispose()
  })

  it('surfaces fit failures from the job payload', async () => {
    const fetchMock = vi.fn(async (url: string) => {
      if (url === '/forecast/run') return json({ job_id: 'fj-2', status: 'pending' }, 202)
      return json({ status: 'error', error: { code: 'series_too_short', message: 'too short' } })
    })
    vi.stubGlobal('fetch', fetchMock)
    const panel = new ForecastPanel(new ApiClient(''), { onScenarioChange: () => undefined }, 5)
    await panel.run()
    await vi.waitFor(() => {
      const status = panel.element.querySelector('.forecast-status')!
      expect(status.textContent).toContain('series_too_short')
      expect(status.classList.contains('error')).toBe(true)
    })
  })

  it('announces scenario switches so the hyper table can refetch', () => {
    const onScenarioChange = vi.fn()
    const panel = new ForecastPanel(new ApiClient(''), { onScenarioChange })
    const input = panel.element.querySelector('input.scenario-input') as HTMLInputElement
    input.value = 'plan-b'
    input.dispatchEvent(new Event('change'))
    expect(onScenarioChange).toHaveBeenCalledWith('plan-b')
    input.value = ''
    input.dispatchEvent(new Event('change'))
    expect(onScenarioChange).toHaveBeenLastCalledWith(null)
  })
})

describe('plot', () => {
  it('handles the nothing-to-plot case explicitly', () => {
    const box = document.createElement('div')
    renderPlot(box, [{ label: 'actual', color: '#000', points: [] }])
    expect(box.querySelector('.empty-state')).not.toBeNull()
  })
})

function json(payload: unknown, status = 200): Response {
  return new Response(JSON.stringify(payload), {
    status,
    headers: { 'Content-Type': 'application/json' },
  })
}
