/**
 * Chart construction. Tracking data becomes a two-panel figure (full
 * horizon, then a zoom on the final fifth); each panel overlays every
 * state element with the network-average estimate of the same element,
 * so a panel holds exactly n state curves and n estimate curves.
 * Sweep data becomes one log-scale error curve per swept value.
 */

import type { LineSeriesOption } from "echarts/charts";
import type {
  GridComponentOption,
  LegendComponentOption,
  TitleComponentOption,
} from "echarts/components";
import type { ComposeOption } from "echarts/core";

import { SweepSeries, TrackingData } from "./csv.js";

export type FigureOption = ComposeOption<
  LineSeriesOption | GridComponentOption | LegendComponentOption | TitleComponentOption
>;

const PANEL_TOPS = ["8%", "58%"];
const PANEL_HEIGHT = "32%";

function trackingPanelSeries(data: TrackingData, panel: number, from: number): LineSeriesOption[] {
  const slice = (col: number[]) =>
    data.t.slice(from).map((t, i) => [t, col[from + i]] as [number, number]);
  const series: LineSeriesOption[] = [];
  data.states.forEach((col, j) => {
    series.push({
      name: `state x${j + 1}`,
      type: "line",
      xAxisIndex: panel,
      yAxisIndex: panel,
      showSymbol: false,
      lineStyle: { width: 2 },
      data: slice(col),
    });
  });
  data.estimates.forEach((col, j) => {
    series.push({
      name: `avg estimate x${j + 1}`,
      type: "line",
      xAxisIndex: panel,
      yAxisIndex: panel,
      showSymbol: false,
      lineStyle: { width: 2, type: "dashed" },
      data: slice(col),
    });
  });
  return series;
}

export function buildTrackingChart(data: TrackingData): FigureOption {
  const zoomFrom = Math.max(0, Math.floor(data.t.length * 0.8) - 1);
  return {
    animation: false,
    title: [
      { text: "network tracking: full horizon", left: "center", top: "1%" },
      { text: "final fifth of the horizon", left: "center", top: "51%" },
    ],
    legend: { bottom: 0 },
    grid: PANEL_TOPS.map((top) => ({ left: 60, right: 30, top, height: PANEL_HEIGHT })),
    xAxis: [0, 1].map((i) => ({ gridIndex: i, type: "value", name: "t" })),
    yAxis: [0, 1].map((i) => ({ gridIndex: i, type: "value", scale: true })),
    series: [
      ...trackingPanelSeries(data, 0, 0),
      ...trackingPanelSeries(data, 1, zoomFrom),
    ],
  };
}

export function buildSweepChart(
  series: SweepSeries[],
  paramLabel: string,
  valueLabel = "mean worst error"
): FigureOption {
  return {
    animation: false,
    title: [{ text: `${valueLabel} vs t`, left: "center", top: "1%" }],
    legend: { bottom: 0 },
    grid: [{ left: 70, right: 30, top: "10%", height: "74%" }],
    xAxis: [{ type: "value", name: "t" }],
    yAxis: [{ type: "log", name: valueLabel }],
    series: series.map((s) => {
      const allGaps = s.mean.every((v) => v === null);
      const suffix =
        s.divergentRuns > 0
          ? allGaps
            ? " (all runs divergent)"
            : ` (${s.divergentRuns} divergent)`
          : "";
      return {
        name: `${paramLabel}=${s.param}${suffix}`,
        type: "line",
        showSymbol: false,
        data: s.t.map((t, i) => [t, s.mean[i]] as [number, number | null]),
      } satisfies LineSeriesOption;
    }),
  };
}

export interface PanelSummary {
  stateCurves: number;
  estimateCurves: number;
}

/** Per-panel curve counts, for verifying figure structure. */
export function trackingPanelSummary(option: FigureOption): PanelSummary[] {
  const series = option.series as Array<{ name?: string; xAxisIndex?: number }>;
  const panels = new Map<number, PanelSummary>();
  for (const s of series) {
    const panel = s.xAxisIndex ?? 0;
    const entry = panels.get(panel) ?? { stateCurves: 0, estimateCurves: 0 };
    if ((s.name ?? "").startsWith("state ")) entry.stateCurves += 1;
    if ((s.name ?? "").startsWith("avg estimate ")) entry.estimateCurves += 1;
    panels.set(panel, entry);
  }
  return [...panels.keys()].sort((a, b) => a - b).map((k) => panels.get(k)!);
}
