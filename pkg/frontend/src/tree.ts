// Collapsible hyper-table view. The tree arrives whole from the API:
// expanding and collapsing only touches the DOM, never the network, and
// each displayed number is the String() of the payload field.

import type { HTNodeJson, HypertableReport } from './types.js'
import { nodePath } from './state.js'

export const ABSENT = '·' // the absent marker; absent is never shown as 0

export interface TreeCallbacks {
  onToggle(path: string, expanded: boolean): void
}

export function cellText(value: number | null): string {
  return value === null ? ABSENT : String(value)
}

export function renderTree(
  container: HTMLElement,
  report: HypertableReport,
  expanded: Set<string>,
  callbacks: TreeCallbacks,
): void {
  container.textContent = ''
  const table = document.createElement('table')
  table.className = 'hypertable'
  const head = table.createTHead().insertRow()
  const nameTh = document.createElement('th')
  nameTh.textContent = 'node'
  head.appendChild(nameTh)
  for (const column of report.mode.visible_columns) {
    const th = document.createElement('th')
    th.textContent = column
    head.appendChild(th)
  }
  const body = table.createTBody()

  const addRows = (node: HTNodeJson, ancestors: string[], visible: boolean) => {
    const path = nodePath(ancestors, node.label)
    const isExpanded = expanded.has(path)
    const row = body.insertRow()
    row.dataset.path = path
    row.dataset.level = node.level
    row.className = `level-${node.level}`
    if (!visible) row.classList.add('hidden')
    const name = row.insertCell()
    name.className = 'node-label'
    name.style.paddingLeft = `${ancestors.length * 1.2}em`
    if (node.children.length) {
      const toggle = document.createElement('button')
      toggle.className = 'toggle'
      toggle.textContent = isExpanded ? '−' : '+'
      toggle.addEventListener('click', () => callbacks.onToggle(path, !isExpanded))
      name.appendChild(toggle)
    }
    name.appendChild(document.createTextNode(` ${node.label}`))
    for (const column of report.mode.visible_columns) {
      const cell = row.insertCell()
      const payload = node.cells[column]
      cell.className = 'cell'
      cell.dataset.column = column
      if (!payload || payload.value === null) {
        cell.textContent = ABSENT
        cell.classList.add('absent')
      } else {
        cell.textContent = cellText(payload.value)
        cell.title = `count ${payload.count}`
        if (payload.color) cell.classList.add(`color-${payload.color}`)
      }
    }
    for (const child of node.children) {
      addRows(child, [...ancestors, node.label], visible && isExpanded)
    }
  }

  addRows(report.tree, [], true)
  container.appendChild(table)
}

/** Structural signature of the rendered tree: labels and shape only. */
export function treeShape(node: HTNodeJson): string {
  const children = node.children.map(treeShape).join(',')
  return `${node.level}:${node.label}(${children})`
}
