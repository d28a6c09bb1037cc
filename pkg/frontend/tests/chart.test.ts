import { describe, expect, it } from "vitest";

import { chartGeometry, renderChart } from "../src/chart.js";
import { cardModel } from "./fixtures.js";

describe("chartGeometry", () => {
  it("produces closed band and open line paths", () => {
    const model = cardModel();
    const geo = chartGeometry(model.history, model.forecast);
    expect(geo.bandPath.endsWith("Z")).toBe(true);
    expect(geo.historyPath.startsWith("M")).toBe(true);
    // one band vertex per horizon step per edge
    const vertices = geo.bandPath.match(/[ML]/g) ?? [];
    expect(vertices.length).toBe(2 * model.forecast.horizon);
  });

  it("keeps every coordinate inside the viewport", () => {
    const model = cardModel();
    const geo = chartGeometry(model.history, model.forecast);
    const coords = [...geo.bandPath.matchAll(/(-?\d+\.?\d*),(-?\d+\.?\d*)/g)];
    for (const [, x, y] of coords) {
      expect(parseFloat(x)).toBeGreaterThanOrEqual(0);
      expect(parseFloat(x)).toBeLessThanOrEqual(geo.width);
      expect(parseFloat(y)).toBeGreaterThanOrEqual(0);
      expect(parseFloat(y)).toBeLessThanOrEqual(geo.height);
    }
  });

  it("renders an svg with three layers", () => {
    const model = cardModel();
    const svg = renderChart(model.history, model.forecast);
    expect(svg.querySelectorAll("path").length).toBe(3);
  });
});
