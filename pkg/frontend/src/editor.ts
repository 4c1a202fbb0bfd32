/** Chart-editor logic: which channels are selectable (server-declared),
 * and how edit gestures translate into PATCH bodies. */

import type { ChartPayload, ChartTypeName, ColumnSummary } from "./types.js";

export interface ChannelOption {
  channel: string;
  current: number | null; // column index, null = count aggregate
  selectable: boolean;
}

/** One row per known channel; channels outside the server-declared set for
 * the chart's type are visible but not selectable. */
export function channelOptions(chart: ChartPayload): ChannelOption[] {
  const known = ["x", "y", "theta", "color", "size", "column", "row"];
  return known.map((channel) => ({
    channel,
    current: channel in chart.encodings ? chart.encodings[channel] : null,
    selectable: chart.valid_channels.includes(channel),
  }));
}

export function columnChoices(columns: ColumnSummary[]): { index: number; label: string }[] {
  return columns.map((c) => ({ index: c.index, label: `${c.header} (${c.type})` }));
}

/** PATCH body for assigning a column (or clearing) one channel. */
export function encodingPatch(
  chart: ChartPayload,
  channel: string,
  column: number | null,
): { encodings: Record<string, number | null> } {
  if (!chart.valid_channels.includes(channel)) {
    throw new Error(`channel ${channel} is not valid for ${chart.chart_type}`);
  }
  const encodings: Record<string, number | null> = { ...chart.encodings };
  if (column === null) delete encodings[channel];
  else encodings[channel] = column;
  return { encodings };
}

export function chartTypePatch(chartType: ChartTypeName): { chart_type: ChartTypeName } {
  return { chart_type: chartType };
}

/** PATCH body toggling bin on a channel or cycling an aggregate. */
export function transformPatch(
  chart: ChartPayload,
  channel: string,
  transform: { bin?: boolean; aggregate?: "mean" | "sum" | "count" } | null,
): { encodings: Record<string, number | null>; transforms: Record<string, Record<string, unknown>> } {
  const transforms: Record<string, Record<string, unknown>> = { ...chart.transforms };
  if (transform === null) delete transforms[channel];
  else transforms[channel] = { ...transform };
  return { encodings: { ...chart.encodings }, transforms };
}

/** First declared-valid channel the chart has not encoded yet, if any. */
export function firstFreeChannel(chart: ChartPayload): string | null {
  for (const channel of chart.valid_channels) {
    if (!(channel in chart.encodings)) return channel;
  }
  return null;
}
