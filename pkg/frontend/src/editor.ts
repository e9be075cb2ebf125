// Aggregation-mode editor. Edits are validated with the same rules the
// service enforces before any request leaves the browser; a dashboard
// without a write token renders the editor read-only.

import type { AggModeJson } from './types.js'
import type { ApiClient } from './api.js'

export function validateMode(mode: AggModeJson): string[] {
  const errors: string[] = []
  if (!mode.mode_id) errors.push('mode_id must be non-empty')
  if (!mode.visible_columns.length) errors.push('at least one visible column is required')
  if (!mode.levels.length) errors.push('levels must be non-empty')
  for (const [column, agg] of Object.entries(mode.agg_per_column)) {
    if (agg !== 'sum' && agg !== 'mean') errors.push(`${column}: agg must be sum or mean`)
  }
  for (const rule of mode.color_rules) {
    for (let i = 1; i < rule.thresholds.length; i++) {
      if (!(rule.thresholds[i] > rule.thresholds[i - 1])) {
        errors.push(`${rule.column}: thresholds must be strictly ascending`)
        break
      }
    }
    if (rule.classes.length !== rule.thresholds.length + 1) {
      errors.push(`${rule.column}: need ${rule.thresholds.length + 1} color classes`)
    }
  }
  return errors
}

export interface EditorCallbacks {
  onSaved(mode: AggModeJson): void
}

export class ModeEditor {
  readonly element: HTMLElement
  private errorBox: HTMLElement
  private textarea: HTMLTextAreaElement

  constructor(private api: ApiClient, private callbacks: EditorCallbacks) {
    this.element = document.createElement('div')
    this.element.className = 'mode-editor'
    this.textarea = document.createElement('textarea')
    this.textarea.rows = 14
    this.errorBox = document.createElement('div')
    this.errorBox.className = 'editor-errors'
    const save = document.createElement('button')
    save.textContent = 'save mode'
    save.className = 'save-mode'
    save.addEventListener('click', () => void this.save())
    if (!api.canWrite) {
      this.textarea.disabled = true
      save.disabled = true
      this.errorBox.textContent = 'read-only: no write token configured'
    }
    this.element.append(this.textarea, this.errorBox, save)
  }

  load(mode: AggModeJson): void {
    this.textarea.value = JSON.stringify(mode, null, 2)
    if (this.api.canWrite) this.errorBox.textContent = ''
  }

  /** Validate locally; only a clean mode is PUT to the service. */
  async save(): Promise<boolean> {
    let mode: AggModeJson
    try {
      mode = JSON.parse(this.textarea.value) as AggModeJson
    } catch (exc) {
      this.errorBox.textContent = `not valid JSON: ${(exc as Error).message}`
      return false
    }
    const errors = validateMode(mode)
    if (errors.length) {
      this.errorBox.textContent = errors.join('; ')
      return false
    }
    try {
      await this.api.put('/hypertable/mode', mode)
    } catch (exc) {
      this.errorBox.textContent = String(exc)
      return false
    }
    this.errorBox.textContent = 'saved'
    this.callbacks.onSaved(mode)
    return true
  }
}
