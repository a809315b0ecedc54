/** SVG line charts for figure payloads.
 *
 * One chart per figure, one series per curve, plain polylines with axes
 * and a hover readout. Rendering is lossless: every curve's exact data
 * rides along in data-x/data-y attributes (JSON round-trips doubles
 * exactly), so nothing is limited by pixel coordinates.
 */

import type { FigureData } from "./api.js";

const SVG_NS = "http://www.w3.org/2000/svg";
const PALETTE = ["#1f6feb", "#d1242f", "#1a7f37", "#9a6700", "#8250df", "#bf3989"];

export interface ChartOptions {
  width?: number;
  height?: number;
}

interface Extent {
  x0: number;
  x1: number;
  y0: number;
  y1: number;
}

function svgElement<T extends SVGElement>(name: string): T {
  return document.createElementNS(SVG_NS, name) as T;
}

function extent(fig: FigureData): Extent | null {
  let x0 = Infinity;
  let x1 = -Infinity;
  let y0 = Infinity;
  let y1 = -Infinity;
  for (const curve of fig.curves) {
    for (const v of curve.x) {
      if (v < x0) x0 = v;
      if (v > x1) x1 = v;
    }
    for (const v of curve.y) {
      if (v < y0) y0 = v;
      if (v > y1) y1 = v;
    }
  }
  if (!isFinite(x0) || !isFinite(y0)) return null;
  if (x0 === x1) {
    x0 -= 0.5;
    x1 += 0.5;
  }
  if (y0 === y1) {
    y0 -= 0.5;
    y1 += 0.5;
  }
  return { x0, x1, y0, y1 };
}

function formatTick(v: number): string {
  if (Number.isInteger(v)) return String(v);
  return String(Number(v.toPrecision(4)));
}

/** Data point closest (along x) to the given data-space x coordinate. */
export function nearestPoint(
  fig: FigureData,
  dataX: number,
): { curve: number; index: number; x: number; y: number } | null {
  let best: { curve: number; index: number; x: number; y: number } | null = null;
  let bestDistance = Infinity;
  fig.curves.forEach((curve, curveIndex) => {
    curve.x.forEach((x, i) => {
      const distance = Math.abs(x - dataX);
      const y = curve.y[i];
      if (distance < bestDistance && y !== undefined) {
        bestDistance = distance;
        best = { curve: curveIndex, index: i, x, y };
      }
    });
  });
  return best;
}

export function renderFigure(fig: FigureData, options: ChartOptions = {}): SVGSVGElement {
  const width = options.width ?? 440;
  const height = options.height ?? 280;
  const box = { left: 52, top: 30, width: width - 70, height: height - 68 };

  const svg = svgElement<SVGSVGElement>("svg");
  svg.setAttribute("class", "chart");
  svg.setAttribute("viewBox", `0 0 ${width} ${height}`);
  svg.setAttribute("width", String(width));
  svg.setAttribute("height", String(height));
  svg.setAttribute("data-figure", String(fig.number));

  const title = svgElement<SVGTextElement>("text");
  title.setAttribute("class", "chart-title");
  title.setAttribute("x", String(width / 2));
  title.setAttribute("y", "18");
  title.setAttribute("text-anchor", "middle");
  title.textContent = fig.title ?? `Figure ${fig.number}`;
  svg.appendChild(title);

  const range = extent(fig);
  if (range === null) {
    const empty = svgElement<SVGTextElement>("text");
    empty.setAttribute("class", "chart-empty");
    empty.setAttribute("x", String(width / 2));
    empty.setAttribute("y", String(height / 2));
    empty.setAttribute("text-anchor", "middle");
    empty.textContent = "no data";
    svg.appendChild(empty);
    return svg;
  }

  const scaleX = (v: number) => box.left + ((v - range.x0) / (range.x1 - range.x0)) * box.width;
  const scaleY = (v: number) => box.top + box.height - ((v - range.y0) / (range.y1 - range.y0)) * box.height;
  const unscaleX = (px: number) => range.x0 + ((px - box.left) / box.width) * (range.x1 - range.x0);

  const axes = svgElement<SVGGElement>("g");
  axes.setAttribute("class", "axes");
  const xAxis = svgElement<SVGLineElement>("line");
  xAxis.setAttribute("class", "axis axis-x");
  xAxis.setAttribute("x1", String(box.left));
  xAxis.setAttribute("y1", String(box.top + box.height));
  xAxis.setAttribute("x2", String(box.left + box.width));
  xAxis.setAttribute("y2", String(box.top + box.height));
  const yAxis = svgElement<SVGLineElement>("line");
  yAxis.setAttribute("class", "axis axis-y");
  yAxis.setAttribute("x1", String(box.left));
  yAxis.setAttribute("y1", String(box.top));
  yAxis.setAttribute("x2", String(box.left));
  yAxis.setAttribute("y2", String(box.top + box.height));
  axes.append(xAxis, yAxis);

  const ticks: Array<[number, number, string, string]> = [
    [box.left, box.top + box.height + 16, formatTick(range.x0), "tick tick-x"],
    [box.left + box.width, box.top + box.height + 16, formatTick(range.x1), "tick tick-x"],
    [box.left - 6, box.top + box.height, formatTick(range.y0), "tick tick-y"],
    [box.left - 6, box.top + 8, formatTick(range.y1), "tick tick-y"],
  ];
  for (const [x, y, label, cls] of ticks) {
    const tick = svgElement<SVGTextElement>("text");
    tick.setAttribute("class", cls);
    tick.setAttribute("x", String(x));
    tick.setAttribute("y", String(y));
    tick.setAttribute("text-anchor", cls.endsWith("-y") ? "end" : "middle");
    tick.textContent = label;
    axes.appendChild(tick);
  }
  if (fig.xlabel) {
    const label = svgElement<SVGTextElement>("text");
    label.setAttribute("class", "axis-label axis-label-x");
    label.setAttribute("x", String(box.left + box.width / 2));
    label.setAttribute("y", String(height - 8));
    label.setAttribute("text-anchor", "middle");
    label.textContent = fig.xlabel;
    axes.appendChild(label);
  }
  if (fig.ylabel) {
    const label = svgElement<SVGTextElement>("text");
    label.setAttribute("class", "axis-label axis-label-y");
    label.setAttribute("x", "14");
    label.setAttribute("y", String(box.top + box.height / 2));
    label.setAttribute("text-anchor", "middle");
    label.setAttribute("transform", `rotate(-90 14 ${box.top + box.height / 2})`);
    label.textContent = fig.ylabel;
    axes.appendChild(label);
  }
  svg.appendChild(axes);

  fig.curves.forEach((curve, curveIndex) => {
    const group = svgElement<SVGGElement>("g");
    group.setAttribute("class", "curve");
    group.setAttribute("data-x", JSON.stringify(curve.x));
    group.setAttribute("data-y", JSON.stringify(curve.y));
    const color = PALETTE[curveIndex % PALETTE.length] ?? "#000";
    const style = curve.style ?? "";
    const markers = style.includes("o");
    const line = !markers || style.includes("-");
    if (line) {
      const polyline = svgElement<SVGPolylineElement>("polyline");
      polyline.setAttribute("fill", "none");
      polyline.setAttribute("stroke", color);
      const points: string[] = [];
      for (let i = 0; i < curve.x.length; i++) {
        const x = curve.x[i];
        const y = curve.y[i];
        if (x === undefined || y === undefined) continue;
        points.push(`${scaleX(x)},${scaleY(y)}`);
      }
      polyline.setAttribute("points", points.join(" "));
      group.appendChild(polyline);
    }
    if (markers) {
      for (let i = 0; i < curve.x.length; i++) {
        const x = curve.x[i];
        const y = curve.y[i];
        if (x === undefined || y === undefined) continue;
        const dot = svgElement<SVGCircleElement>("circle");
        dot.setAttribute("class", "marker");
        dot.setAttribute("cx", String(scaleX(x)));
        dot.setAttribute("cy", String(scaleY(y)));
        dot.setAttribute("r", "2.5");
        dot.setAttribute("fill", color);
        group.appendChild(dot);
      }
    }
    svg.appendChild(group);
  });

  const readout = svgElement<SVGTextElement>("text");
  readout.setAttribute("class", "readout");
  readout.setAttribute("x", String(box.left + box.width));
  readout.setAttribute("y", String(box.top - 8));
  readout.setAttribute("text-anchor", "end");
  svg.appendChild(readout);

  svg.addEventListener("mousemove", (event) => {
    const mouse = event as MouseEvent & { offsetX?: number };
    const hit = nearestPoint(fig, unscaleX(mouse.offsetX ?? box.left));
    if (hit) readout.textContent = `(${hit.x}, ${hit.y})`;
  });
  svg.addEventListener("mouseleave", () => {
    readout.textContent = "";
  });

  return svg;
}
