// API payload shapes, mirroring docs/api.md. The dashboard renders these
// verbatim: no field is ever recomputed client-side.

export interface HTCellJson {
  value: number | null
  count: number
  color: string | null
}

export interface HTNodeJson {
  level: string
  label: string
  cells: Record<string, HTCellJson>
  children: HTNodeJson[]
}

export interface ColorRuleJson {
  column: string
  thresholds: number[]
  classes: string[]
}

export interface AggModeJson {
  mode_id: string
  visible_columns: string[]
  levels: string[]
  agg_per_column: Record<string, 'sum' | 'mean'>
  grain: string
  color_rules: ColorRuleJson[]
}

export interface CursorJson {
  ts_from: number
  ts_to: number
  mode: string
  scenario: string | null
}

export interface HypertableReport {
  schema: string
  mode: AggModeJson
  cursor: CursorJson
  version: number
  unmapped: string[]
  tree: HTNodeJson
}

export interface Page<T> {
  items: T[]
  total: number
  limit: number
  offset: number
}

export interface LeakAlert {
  pipeline_id: string
  segment: [string, string]
  est_pos: number
  confidence: number
  onset: number
  detected_at: number
}

export interface SliceCell {
  object_id: string
  metric: string
  bucket_ts: number
  value: number
  count: number
  quality: string
}

export interface SliceResponse {
  version: number
  grain: string
  agg: string | null
  blocks: number
  cells: SliceCell[]
  total_cells: number
  limit: number
  offset: number
}

export interface ForecastPoint {
  ts: number
  value: number
}

export interface ForecastJob {
  status: 'pending' | 'done' | 'error'
  job_id?: string
  object_id?: string
  metric?: string
  scenario?: string | null
  forecast?: { points: ForecastPoint[]; model?: { model: string } }
  error?: { code: string; message: string }
}

export interface ObjectRow {
  object_id: string
  lon?: number
  lat?: number
  city?: string
  district?: string
  network?: string
}

export interface ApiError {
  code: string
  message: string
}
