// Dashboard wiring: hyper-table explorer with a time-cursor slider, mode
// editor, alerts/forecast panels and the map. State round-trips through
// the URL; data refreshes by polling (the API is stateless by design).

import { ApiClient, ApiRequestError, LatestFetcher } from './api.js'
import { ModeEditor } from './editor.js'
import { renderMap, type FeatureCollection } from './map.js'
import { ForecastPanel, alertsFromPage, renderAlerts } from './panels.js'
import {
  DEFAULT_STATE,
  pruneExpanded,
  stateFromQuery,
  stateToQuery,
  type ViewState,
} from './state.js'
import { renderTree } from './tree.js'
import type { AggModeJson, HypertableReport, LeakAlert, Page } from './types.js'

export interface AppConfig {
  apiBase?: string
  token?: string | null
  pollSeconds?: number
  sliderSteps?: number
  sliderStepSeconds?: number
  geojsonUrl?: string
}

export class DashboardApp {
  readonly api: ApiClient
  state: ViewState
  report: HypertableReport | null = null
  private tableFetcher = new LatestFetcher()
  private banner: HTMLElement
  private tableBox: HTMLElement
  private alertsBox: HTMLElement
  private mapBox: HTMLElement
  private slider: HTMLInputElement
  private modeSelect: HTMLSelectElement
  private editor: ModeEditor
  private forecastPanel: ForecastPanel
  private stepSeconds: number
  private sliderBase: [number, number]
  private pollHandle: ReturnType<typeof setInterval> | null = null

  constructor(readonly root: HTMLElement, readonly config: AppConfig = {}) {
    this.api = new ApiClient(config.apiBase ?? '', config.token ?? null)
    this.state = stateFromQuery(window.location.search.slice(1), DEFAULT_STATE)
    this.sliderBase = [this.state.tsFrom, this.state.tsTo]
    this.stepSeconds = config.sliderStepSeconds ?? 3600

    this.banner = el('div', 'banner hidden')
    this.modeSelect = document.createElement('select')
    this.modeSelect.className = 'mode-select'
    this.modeSelect.addEventListener('change', () => {
      this.update({ mode: this.modeSelect.value })
    })
    this.slider = document.createElement('input')
    this.slider.type = 'range'
    this.slider.className = 'cursor-slider'
    this.slider.min = '0'
    this.slider.max = String(config.sliderSteps ?? 48)
    this.slider.value = '0'
    this.slider.addEventListener('input', () => {
      const shift = Number(this.slider.value) * this.stepSeconds
      this.update({ tsFrom: this.sliderBase[0] + shift, tsTo: this.sliderBase[1] + shift })
    })
    this.tableBox = el('div', 'table-box')
    this.alertsBox = el('div', 'alerts-box')
    this.mapBox = el('div', 'map-panel')
    this.editor = new ModeEditor(this.api, { onSaved: () => void this.refreshTable() })
    this.forecastPanel = new ForecastPanel(this.api, {
      onScenarioChange: (scenario) => {
        this.update({ scenario, cursorMode: scenario ? 'scenario' : 'archive' })
      },
    })

    const controls = el('div', 'controls')
    controls.append(this.modeSelect, this.slider)
    this.root.append(this.banner, controls, this.tableBox, this.alertsBox,
                     this.forecastPanel.element, this.mapBox, this.editor.element)
  }

  async start(): Promise<void> {
    await this.loadModes()
    await Promise.all([this.refreshTable(), this.refreshAlerts(), this.refreshMap()])
    const seconds = this.config.pollSeconds ?? 10
    if (seconds > 0) {
      this.pollHandle = setInterval(() => {
        void this.refreshTable()
        void this.refreshAlerts()
      }, seconds * 1000)
    }
  }

  stop(): void {
    if (this.pollHandle !== null) clearInterval(this.pollHandle)
    this.forecastPanel.dispose()
  }

  /** Apply a state change, sync the URL, refetch what depends on it. */
  update(patch: Partial<ViewState>): void {
    this.state = { ...this.state, ...patch }
    const query = stateToQuery(this.state)
    window.history.replaceState(null, '', `${window.location.pathname}?${query}`)
    void this.refreshTable()
  }

  private async loadModes(): Promise<void> {
    try {
      const modes = await this.api.get<{ items: AggModeJson[] }>('/hypertable/modes')
      this.modeSelect.textContent = ''
      for (const mode of modes.items) {
        const option = document.createElement('option')
        option.value = mode.mode_id
        option.textContent = mode.mode_id
        this.modeSelect.appendChild(option)
      }
      this.modeSelect.value = this.state.mode
      const current = modes.items.find((m) => m.mode_id === this.state.mode)
      if (current) this.editor.load(current)
    } catch (exc) {
      this.showError(exc)
    }
  }

  async refreshTable(): Promise<void> {
    const { mode, tsFrom, tsTo, cursorMode, scenario } = this.state
    try {
      const report = await this.tableFetcher.fetch(() =>
        this.api.get<HypertableReport>('/hypertable', {
          mode,
          ts_from: tsFrom,
          ts_to: tsTo,
          cursor_mode: cursorMode,
          scenario,
        }),
      )
      if (report === null) return // superseded by a newer cursor move
      this.report = report
      this.state.expanded = pruneExpanded(this.state.expanded, report.tree)
      this.renderTable()
      this.clearError()
    } catch (exc) {
      this.showError(exc)
    }
  }

  private renderTable(): void {
    if (!this.report) return
    renderTree(this.tableBox, this.report, new Set(this.state.expanded), {
      onToggle: (path, expanded) => {
        const set = new Set(this.state.expanded)
        if (expanded) set.add(path)
        else set.delete(path)
        this.state = { ...this.state, expanded: [...set].sort() }
        window.history.replaceState(
          null, '', `${window.location.pathname}?${stateToQuery(this.state)}`)
        this.renderTable() // pure re-render; the tree arrived whole
      },
    })
  }

  async refreshAlerts(): Promise<void> {
    try {
      const page = await this.api.get<Page<LeakAlert>>('/alerts/leaks')
      renderAlerts(this.alertsBox, alertsFromPage(page), this.state.alertFilter)
    } catch (exc) {
      this.showError(exc)
    }
  }

  async refreshMap(): Promise<void> {
    const url = this.config.geojsonUrl
    if (!url) return
    try {
      const response = await fetch(url)
      const collection = (await response.json()) as FeatureCollection
      renderMap(this.mapBox, collection, 'heat_energy_kwh')
    } catch {
      this.mapBox.textContent = 'map layer unavailable'
    }
  }

  /** API problems surface as a non-blocking banner with the machine code. */
  private showError(exc: unknown): void {
    this.banner.classList.remove('hidden')
    this.banner.textContent =
      exc instanceof ApiRequestError
        ? `API error ${exc.payload.code}: ${exc.payload.message}`
        : `request failed: ${String(exc)}`
  }

  private clearError(): void {
    this.banner.classList.add('hidden')
    this.banner.textContent = ''
  }
}

function el(tag: string, className: string): HTMLElement {
  const node = document.createElement(tag)
  node.className = className
  return node
}

export function boot(): DashboardApp {
  const root = document.getElementById('app')
  if (!root) throw new Error('missing #app container')
  const params = new URLSearchParams(window.location.search)
  const app = new DashboardApp(root, {
    apiBase: params.get('api') ?? '',
    token: params.get('token'),
    geojsonUrl: params.get('geojson') ?? undefined,
  })
  void app.start()
  return app
}

declare global {
  interface Window {
    heatmonBootDisabled?: boolean
  }
}

if (typeof window !== 'undefined' && !window.heatmonBootDisabled) {
  if (document.readyState === 'loading') {
    document.addEventListener('DOMContentLoaded', () => {
      if (document.getElementById('app')) void boot()
    })
  } else if (document.getElementById('app')) {
    void boot()
  }
}
