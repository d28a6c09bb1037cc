// SVG demand chart: history line, forecast point line, and the interval band.

import type { ForecastPayload, HistoryPoint } from "./types.js";

export interface ChartGeometry {
  width: number;
  height: number;
  historyPath: string;
  pointPath: string;
  bandPath: string;
}

const WIDTH = 640;
const HEIGHT = 200;
const PAD = 8;

function scaleFactory(values: number[], span: number, pad: number): (v: number) => number {
  const lo = Math.min(...values);
  const hi = Math.max(...values);
  const range = hi - lo || 1;
  return (v: number) => pad + ((v - lo) / range) * (span - 2 * pad);
}

function pathFrom(points: Array<[number, number]>): string {
  return points
    .map(([x, y], i) => `${i === 0 ? "M" : "L"}${x.toFixed(1)},${y.toFixed(1)}`)
    .join(" ");
}

export function chartGeometry(history: HistoryPoint[], forecast: ForecastPayload): ChartGeometry {
  const n = history.length;
  const h = forecast.horizon;
  const total = n + h;
  const xs = scaleFactory([0, total - 1], WIDTH, PAD);
  const allValues = [
    ...history.map((p) => p.value),
    ...forecast.point,
    ...forecast.lower,
    ...forecast.upper,
  ];
  const ys = scaleFactory(allValues, HEIGHT, PAD);
  const flip = (v: number) => HEIGHT - ys(v);

  const historyPts: Array<[number, number]> = history.map((p, i) => [xs(i), flip(p.value)]);
  const pointPts: Array<[number, number]> = forecast.point.map((v, i) => [xs(n + i), flip(v)]);
  const upperPts: Array<[number, number]> = forecast.upper.map((v, i) => [xs(n + i), flip(v)]);
  const lowerPts: Array<[number, number]> = forecast.lower.map((v, i) => [xs(n + i), flip(v)]);
  const band = upperPts.concat(lowerPts.slice().reverse());
  return {
    width: WIDTH,
    height: HEIGHT,
    historyPath: pathFrom(historyPts),
    pointPath: pathFrom(pointPts),
    bandPath: band.length ? pathFrom(band) + " Z" : "",
  };
}

export function renderChart(history: HistoryPoint[], forecast: ForecastPayload): SVGSVGElement {
  const geo = chartGeometry(history, forecast);
  const svg = document.createElementNS("http://www.w3.org/2000/svg", "svg");
  svg.setAttribute("viewBox", `0 0 ${geo.width} ${geo.height}`);
  svg.setAttribute("class", "demand-chart");

  const band = document.createElementNS("http://www.w3.org/2000/svg", "path");
  band.setAttribute("d", geo.bandPath);
  band.setAttribute("class", "interval-band");
  band.setAttribute("fill", "#93c5fd");
  band.setAttribute("opacity", "0.4");

  const historyLine = document.createElementNS("http://www.w3.org/2000/svg", "path");
  historyLine.setAttribute("d", geo.historyPath);
  historyLine.setAttribute("class", "history-line");
  historyLine.setAttribute("fill", "none");
  historyLine.setAttribute("stroke", "#334155");

  const pointLine = document.createElementNS("http://www.w3.org/2000/svg", "path");
  pointLine.setAttribute("d", geo.pointPath);
  pointLine.setAttribute("class", "point-line");
  pointLine.setAttribute("fill", "none");
  pointLine.setAttribute("stroke", "#1d4ed8");

  svg.append(band, historyLine, pointLine);
  return svg;
}
