/** Wire types of the mvforge JSON API (api_version 1). */

export type ChartTypeName = "scatter" | "bar" | "line" | "pie" | "area";

export const CHART_TYPES: ChartTypeName[] = ["scatter", "bar", "line", "pie", "area"];

export interface ColumnSummary {
  index: number;
  header: string;
  type: string;
  profile: Record<string, number>;
}

export interface TableSummary {
  table_id: string;
  name: string;
  row_count: number;
  columns: ColumnSummary[];
}

export interface GridCell {
  x: number;
  y: number;
  w: number;
  h: number;
}

export interface ChartPayload {
  columns: number[];
  chart_type: ChartTypeName;
  encodings: Record<string, number | null>;
  transforms: Record<string, Record<string, unknown>>;
  vegalite: Record<string, unknown>;
  valid_channels: string[];
  locked: boolean;
  layout?: GridCell;
  position?: number;
}

export interface MVPayload {
  charts: ChartPayload[];
  locked: boolean[];
  size: number;
}

export interface ChartIdea extends ChartPayload {
  projected_score: number;
}

export interface HistoryEntry {
  seq: number;
  kind: string;
  n_charts: number;
}

export interface TableData {
  columns: string[];
  types: string[];
  rows: (string | null)[][];
}

export interface RecommendResponse {
  mv: MVPayload;
  scores: { mv_score: number; per_chart: number[] };
}

/** The chart fields the server accepts back as a chart reference. */
export interface ChartRef {
  columns: number[];
  chart_type: ChartTypeName;
  encodings: Record<string, number | null>;
  transforms: Record<string, Record<string, unknown>>;
}

export function chartRef(chart: ChartPayload): ChartRef {
  return {
    columns: chart.columns,
    chart_type: chart.chart_type,
    encodings: chart.encodings,
    transforms: chart.transforms,
  };
}

/** Identity used for de-duplication: the column set, optionally with type. */
export function chartIdentity(chart: { columns: number[]; chart_type: string },
                              dropAlternativeTypes = true): string {
  const cols = [...chart.columns].sort((a, b) => a - b).join(",");
  return dropAlternativeTypes ? cols : `${cols}|${chart.chart_type}`;
}
