/**
 * Server-side SVG rendering of one figure: one line per policy over the
 * swept values, with +/- one-seed-sigma error bars.
 */

import * as echarts from "echarts";
import type { FigureSpec } from "./figures";
import { policies, SweepRow, sweepValues } from "./sweepData";

const WIDTH = 860;
const HEIGHT = 520;
const WHISKER_STROKE = "#555555";

interface ErrorPoint {
  x: number; // category index
  lo: number;
  hi: number;
}

/** The subset of the custom-series render API the whiskers need. */
interface RenderApi {
  value(dim: number): unknown;
  coord(point: unknown[]): number[];
}

function errorBarSeries(name: string, points: ErrorPoint[]) {
  const renderItem = (_params: unknown, api: RenderApi) => {
    const x = api.value(0) as number;
    const [xPix, loPix] = api.coord([x, api.value(1)]);
    const hiPix = api.coord([x, api.value(2)])[1];
    const cap = 5;
    const style = { stroke: WHISKER_STROKE, lineWidth: 1 };
    return {
      type: "group",
      children: [
        { type: "line", shape: { x1: xPix, y1: loPix, x2: xPix, y2: hiPix }, style },
        { type: "line", shape: { x1: xPix - cap, y1: loPix, x2: xPix + cap, y2: loPix }, style },
        { type: "line", shape: { x1: xPix - cap, y1: hiPix, x2: xPix + cap, y2: hiPix }, style },
      ],
    };
  };
  return {
    type: "custom" as const,
    name: `${name} spread`,
    silent: true,
    z: 3,
    data: points.map((p) => [p.x, p.lo, p.hi]),
    renderItem,
  };
}

export function renderFigureSvg(spec: FigureSpec, rows: SweepRow[]): string {
  const xs = sweepValues(rows);
  const seriesNames = policies(rows);
  const cell = new Map<string, SweepRow>();
  for (const row of rows) {
    cell.set(`${row.policy}@${row.value}`, row);
  }

  const series: Record<string, unknown>[] = [];
  for (const policy of seriesNames) {
    const means: (number | null)[] = [];
    const errors: ErrorPoint[] = [];
    xs.forEach((v, i) => {
      const row = cell.get(`${policy}@${v}`);
      means.push(row ? row.mean : null);
      if (row && row.std > 0) {
        errors.push({ x: i, lo: row.mean - row.std, hi: row.mean + row.std });
      }
    });
    series.push({
      type: "line",
      name: policy,
      data: means,
      symbol: "circle",
      symbolSize: 7,
    });
    if (errors.length > 0) {
      series.push(errorBarSeries(policy, errors));
    }
  }

  const chart = echarts.init(null, null, {
    renderer: "svg",
    ssr: true,
    width: WIDTH,
    height: HEIGHT,
  });
  chart.setOption({
    animation: false,
    title: { text: spec.title, left: "center" },
    legend: { data: seriesNames, bottom: 0 },
    grid: { left: 90, right: 30, top: 60, bottom: 70 },
    xAxis: {
      type: "category",
      name: spec.xLabel,
      nameLocation: "middle",
      nameGap: 32,
      data: xs.map(String),
    },
    yAxis: {
      type: "value",
      name: spec.yLabel,
      nameLocation: "middle",
      nameGap: 70,
      scale: true,
    },
    series,
  });
  const svg = chart.renderToSVGString();
  chart.dispose();
  return svg;
}
