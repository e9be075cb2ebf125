// ViewState lives in the URL so a dispatcher can share an exact view.

import type { HTNodeJson } from './types.js'

export type CursorMode = 'archive' | 'current' | 'forecast' | 'scenario'

export interface ViewState {
  mode: string
  tsFrom: number
  tsTo: number
  cursorMode: CursorMode
  scenario: string | null
  expanded: string[]
  alertFilter: string
}

export const DEFAULT_STATE: ViewState = {
  mode: 'default',
  tsFrom: 1609459200,
  tsTo: 1609545600,
  cursorMode: 'archive',
  scenario: null,
  expanded: [],
  alertFilter: '',
}

const CURSOR_MODES: CursorMode[] = ['archive', 'current', 'forecast', 'scenario']

export function stateToQuery(state: ViewState): string {
  const q = new URLSearchParams()
  q.set('mode', state.mode)
  q.set('from', String(state.tsFrom))
  q.set('to', String(state.tsTo))
  q.set('cursor', state.cursorMode)
  if (state.scenario) q.set('scenario', state.scenario)
  if (state.expanded.length) q.set('expanded', state.expanded.join('|'))
  if (state.alertFilter) q.set('alerts', state.alertFilter)
  return q.toString()
}

export function stateFromQuery(query: string, defaults: ViewState = DEFAULT_STATE): ViewState {
  const q = new URLSearchParams(query)
  const tsFrom = Number(q.get('from') ?? defaults.tsFrom)
  const tsTo = Number(q.get('to') ?? defaults.tsTo)
  const cursor = q.get('cursor') as CursorMode | null
  const state: ViewState = {
    mode: q.get('mode') ?? defaults.mode,
    tsFrom,
    tsTo,
    cursorMode: cursor && CURSOR_MODES.includes(cursor) ? cursor : defaults.cursorMode,
    scenario: q.get('scenario'),
    expanded: (q.get('expanded') ?? '').split('|').filter(Boolean),
    alertFilter: q.get('alerts') ?? defaults.alertFilter,
  }
  if (!Number.isFinite(state.tsFrom) || !Number.isFinite(state.tsTo) || state.tsFrom >= state.tsTo) {
    state.tsFrom = defaults.tsFrom
    state.tsTo = defaults.tsTo
  }
  if (state.cursorMode !== 'scenario') state.scenario = null
  return state
}

/** Node path string used as the expansion key: labels joined by '/'. */
export function nodePath(ancestors: string[], label: string): string {
  return [...ancestors, label].join('/')
}

export function collectPaths(tree: HTNodeJson): Set<string> {
  const out = new Set<string>()
  const walk = (node: HTNodeJson, ancestors: string[]) => {
    const path = nodePath(ancestors, node.label)
    out.add(path)
    for (const child of node.children) walk(child, [...ancestors, node.label])
  }
  walk(tree, [])
  return out
}

/** Invariant: expanded paths must exist in the last-fetched tree. */
export function pruneExpanded(expanded: string[], tree: HTNodeJson | null): string[] {
  if (!tree) return []
  const valid = collectPaths(tree)
  return expanded.filter((p) => valid.has(p))
}
