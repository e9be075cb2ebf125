// Leak alerts and the forecast panel (plot, run-forecast button with job
// polling, scenario selector feeding the hyper table's forecast columns).

import type { ApiClient } from './api.js'
import type { ForecastJob, LeakAlert, Page, SliceCell, SliceResponse } from './types.js'

export function renderAlerts(container: HTMLElement, alerts: LeakAlert[], filter: string): void {
  container.textContent = ''
  const matching = filter
    ? alerts.filter((a) => a.pipeline_id.includes(filter))
    : alerts
  if (!matching.length) {
    const empty = document.createElement('p')
    empty.className = 'empty-state'
    empty.textContent = 'no active leak alerts'
    container.appendChild(empty)
    return
  }
  const list = document.createElement('ul')
  list.className = 'alerts'
  for (const alert of matching) {
    const item = document.createElement('li')
    item.dataset.pipeline = alert.pipeline_id
    item.textContent =
      `${alert.pipeline_id} ${alert.segment[0]}–${alert.segment[1]} ` +
      `at ${String(alert.est_pos)} m (confidence ${String(alert.confidence)}, ` +
      `onset ${String(alert.onset)})`
    list.appendChild(item)
  }
  container.appendChild(list)
}

interface PlotSeries {
  label: string
  points: { ts: number; value: number }[]
  color: string
}

/** SVG line plot. Coordinate scaling is layout; labels show raw values. */
export function renderPlot(container: HTMLElement, series: PlotSeries[]): void {
  container.textContent = ''
  const all = series.flatMap((s) => s.points)
  if (!all.length) {
    const empty = document.createElement('p')
    empty.className = 'empty-state'
    empty.textContent = 'nothing to plot'
    container.appendChild(empty)
    return
  }
  const width = 640
  const height = 220
  const pad = 30
  const ts = all.map((p) => p.ts)
  const vs = all.map((p) => p.value)
  const t0 = Math.min(...ts)
  const t1 = Math.max(...ts)
  const v0 = Math.min(...vs, 0)
  const v1 = Math.max(...vs)
  const x = (t: number) => pad + ((t - t0) / Math.max(t1 - t0, 1)) * (width - 2 * pad)
  const y = (v: number) => height - pad - ((v - v0) / Math.max(v1 - v0, 1e-9)) * (height - 2 * pad)
  const svg = document.createElementNS('http://www.w3.org/2000/svg', 'svg')
  svg.setAttribute('viewBox', `0 0 ${width} ${height}`)
  svg.setAttribute('class', 'forecast-plot')
  for (const s of series) {
    if (!s.points.length) continue
    const line = document.createElementNS('http://www.w3.org/2000/svg', 'polyline')
    line.setAttribute('fill', 'none')
    line.setAttribute('stroke', s.color)
    line.setAttribute('stroke-width', '1.5')
    line.setAttribute('data-series', s.label)
    line.setAttribute('points', s.points.map((p) => `${x(p.ts)},${y(p.value)}`).join(' '))
    const title = document.createElementNS('http://www.w3.org/2000/svg', 'title')
    title.textContent = s.points.map((p) => `${p.ts}: ${String(p.value)}`).join('\n')
    line.appendChild(title)
    svg.appendChild(line)
  }
  container.appendChild(svg)
}

export interface ForecastPanelCallbacks {
  onScenarioChange(scenario: string | null): void
}

export class ForecastPanel {
  readonly element: HTMLElement
  private status: HTMLElement
  private plot: HTMLElement
  private scenarioInput: HTMLInputElement
  private pollHandle: ReturnType<typeof setTimeout> | null = null

  constructor(
    private api: ApiClient,
    private callbacks: ForecastPanelCallbacks,
    private pollIntervalMs = 500,
  ) {
    this.element = document.createElement('div')
    this.element.className = 'forecast-panel'
    this.status = document.createElement('div')
    this.status.className = 'forecast-status'
    this.plot = document.createElement('div')
    this.plot.className = 'forecast-plot-box'
    this.scenarioInput = document.createElement('input')
    this.scenarioInput.placeholder = 'scenario namespace (blank = live)'
    this.scenarioInput.className = 'scenario-input'
    this.scenarioInput.addEventListener('change', () => {
      this.callbacks.onScenarioChange(this.scenarioInput.value.trim() || null)
    })
    const run = document.createElement('button')
    run.textContent = 'run forecast'
    run.className = 'run-forecast'
    run.addEventListener('click', () => void this.run())
    this.element.append(this.scenarioInput, run, this.status, this.plot)
  }

  objectId = 'obj-01'
  metric = 'heat_energy_kwh'

  async run(): Promise<void> {
    this.status.textContent = 'pending…'
    this.status.className = 'forecast-status pending'
    try {
      const started = await this.api.post<ForecastJob>('/forecast/run', {
        object_id: this.objectId,
        metric: this.metric,
        scenario: this.scenarioInput.value.trim() || null,
      })
      this.poll(started.job_id as string)
    } catch (exc) {
      this.showError(exc)
    }
  }

  private poll(jobId: string): void {
    const tick = async () => {
      try {
        const job = await this.api.get<ForecastJob>(`/forecast/jobs/${jobId}`)
        if (job.status === 'pending') {
          this.pollHandle = setTimeout(tick, this.pollIntervalMs)
          return
        }
        if (job.status === 'error') {
          this.status.textContent = `fit failed: ${job.error?.code}: ${job.error?.message}`
          this.status.className = 'forecast-status error'
          return
        }
        this.status.textContent = `done (${job.forecast?.model?.model ?? 'model'})`
        this.status.className = 'forecast-status done'
        await this.plotForecast(job)
      } catch (exc) {
        this.showError(exc)
      }
    }
    void tick()
  }

  private async plotForecast(job: ForecastJob): Promise<void> {
    const points = job.forecast?.points ?? []
    const horizon = points.length
    let actuals: SliceCell[] = []
    if (horizon && job.object_id) {
      const from = points[0].ts - 3600 * 3 * horizon
      const slice = await this.api.get<SliceResponse>('/slice', {
        metrics: this.metric,
        objects: job.object_id,
        ts_from: from,
        ts_to: points[0].ts,
        grain: 'raw',
      })
      actuals = slice.cells
    }
    renderPlot(this.plot, [
      {
        label: 'actual',
        color: '#27567d',
        points: actuals.map((c) => ({ ts: c.bucket_ts, value: c.value })),
      },
      { label: 'forecast', color: '#b4452e', points },
    ])
  }

  private showError(exc: unknown): void {
    this.status.textContent = String(exc)
    this.status.className = 'forecast-status error'
  }

  dispose(): void {
    if (this.pollHandle !== null) clearTimeout(this.pollHandle)
  }
}

export function alertsFromPage(page: Page<LeakAlert>): LeakAlert[] {
  return page.items
}
