/**
 * Minimal SVG chart builder: one plot area with linear scales, axes with
 * ticks, polylines, point markers and a legend. No dependencies; output is
 * a self-contained <svg> document.
 */

export const WIDTH = 760;
export const HEIGHT = 480;
export const MARGIN = { left: 70, right: 24, top: 40, bottom: 56 };

export const PALETTE = [
  "#1b6ca8",
  "#d1495b",
  "#66a182",
  "#edae49",
  "#7d5ba6",
  "#3c6e71",
  "#a26769",
  "#2e4057",
];

export interface Scale {
  (v: number): number;
  min: number;
  max: number;
}

export function linearScale(
  min: number,
  max: number,
  rangeMin: number,
  rangeMax: number,
): Scale {
  const span = max - min || 1;
  const fn = ((v: number) =>
    rangeMin + ((v - min) / span) * (rangeMax - rangeMin)) as Scale;
  fn.min = min;
  fn.max = max;
  return fn;
}

export function extent(values: number[], padFraction = 0.06): [number, number] {
  let lo = Math.min(...values);
  let hi = Math.max(...values);
  if (lo === hi) {
    lo -= 0.5;
    hi += 0.5;
  }
  const pad = (hi - lo) * padFraction;
  return [lo - pad, hi + pad];
}

export function ticks(min: number, max: number, count = 6): number[] {
  const span = max - min;
  const step = Math.pow(10, Math.floor(Math.log10(span / count)));
  const candidates = [step, 2 * step, 2.5 * step, 5 * step, 10 * step];
  const chosen =
    candidates.find((s) => span / s <= count) ?? candidates[candidates.length - 1];
  const out: number[] = [];
  for (let v = Math.ceil(min / chosen) * chosen; v <= max + 1e-9; v += chosen) {
    out.push(Number(v.toFixed(10)));
  }
  return out;
}

function fmt(v: number): string {
  return Math.abs(v) >= 1000 ? v.toFixed(0) : String(Number(v.toPrecision(4)));
}

export class Chart {
  parts: string[] = [];
  x: Scale;
  y: Scale;

  constructor(
    xDomain: [number, number],
    yDomain: [number, number],
    readonly title: string,
    readonly xLabel: string,
    readonly yLabel: string,
  ) {
    this.x = linearScale(xDomain[0], xDomain[1], MARGIN.left, WIDTH - MARGIN.right);
    this.y = linearScale(yDomain[0], yDomain[1], HEIGHT - MARGIN.bottom, MARGIN.top);
  }

  axes(): void {
    const x0 = MARGIN.left;
    const x1 = WIDTH - MARGIN.right;
    const y0 = HEIGHT - MARGIN.bottom;
    const y1 = MARGIN.top;
    for (const t of ticks(this.x.min, this.x.max)) {
      const px = this.x(t);
      this.parts.push(
        `<line x1="${px}" y1="${y0}" x2="${px}" y2="${y1}" stroke="#eee"/>`,
        `<text x="${px}" y="${y0 + 18}" text-anchor="middle" class="tick">${fmt(t)}</text>`,
      );
    }
    for (const t of ticks(this.y.min, this.y.max)) {
      const py = this.y(t);
      this.parts.push(
        `<line x1="${x0}" y1="${py}" x2="${x1}" y2="${py}" stroke="#eee"/>`,
        `<text x="${x0 - 8}" y="${py + 4}" text-anchor="end" class="tick">${fmt(t)}</text>`,
      );
    }
    this.parts.push(
      `<line x1="${x0}" y1="${y0}" x2="${x1}" y2="${y0}" stroke="#333"/>`,
      `<line x1="${x0}" y1="${y0}" x2="${x0}" y2="${y1}" stroke="#333"/>`,
      `<text x="${(x0 + x1) / 2}" y="${HEIGHT - 14}" text-anchor="middle" class="label">${this.xLabel}</text>`,
      `<text transform="translate(16,${(y0 + y1) / 2}) rotate(-90)" text-anchor="middle" class="label">${this.yLabel}</text>`,
      `<text x="${(x0 + x1) / 2}" y="${MARGIN.top - 16}" text-anchor="middle" class="title">${this.title}</text>`,
    );
  }

  line(xs: number[], ys: number[], color: string, dashed = false): void {
    const pts = xs.map((v, i) => `${this.x(v)},${this.y(ys[i])}`).join(" ");
    const dash = dashed ? ' stroke-dasharray="6 4"' : "";
    this.parts.push(
      `<polyline points="${pts}" fill="none" stroke="${color}" stroke-width="2"${dash}/>`,
    );
    xs.forEach((v, i) => {
      this.parts.push(
        `<circle cx="${this.x(v)}" cy="${this.y(ys[i])}" r="3" fill="${color}"/>`,
      );
    });
  }

  point(x: number, y: number, color: string, label?: string): void {
    this.parts.push(
      `<circle cx="${this.x(x)}" cy="${this.y(y)}" r="5" fill="${color}"/>`,
    );
    if (label) {
      this.parts.push(
        `<text x="${this.x(x) + 8}" y="${this.y(y) - 6}" class="tick">${label}</text>`,
      );
    }
  }

  cross(x: number, y: number, cssClass: string, label?: string): void {
    const px = this.x(x);
    const py = this.y(y);
    const r = 7;
    this.parts.push(
      `<g class="${cssClass}">` +
        `<line x1="${px - r}" y1="${py - r}" x2="${px + r}" y2="${py + r}" stroke="#111" stroke-width="2.5"/>` +
        `<line x1="${px - r}" y1="${py + r}" x2="${px + r}" y2="${py - r}" stroke="#111" stroke-width="2.5"/>` +
        `</g>`,
    );
    if (label) {
      this.parts.push(
        `<text x="${px + 10}" y="${py - 8}" class="tick">${label}</text>`,
      );
    }
  }

  shadeBelowLeft(x: number, y: number, cssClass: string): void {
    const px = this.x(x);
    const py = this.y(y);
    const x0 = MARGIN.left;
    const y0 = HEIGHT - MARGIN.bottom;
    this.parts.push(
      `<rect class="${cssClass}" x="${x0}" y="${py}" width="${Math.max(0, px - x0)}" ` +
        `height="${Math.max(0, y0 - py)}" fill="#9ecae1" opacity="0.25"/>`,
    );
  }

  hline(y: number, color = "#999"): void {
    this.parts.push(
      `<line x1="${MARGIN.left}" y1="${this.y(y)}" x2="${WIDTH - MARGIN.right}" ` +
        `y2="${this.y(y)}" stroke="${color}" stroke-dasharray="3 3"/>`,
    );
  }

  legend(entries: { label: string; color: string }[]): void {
    entries.forEach((e, i) => {
      const y = MARGIN.top + 8 + 18 * i;
      const x = WIDTH - MARGIN.right - 170;
      this.parts.push(
        `<line x1="${x}" y1="${y}" x2="${x + 24}" y2="${y}" stroke="${e.color}" stroke-width="3"/>`,
        `<text x="${x + 30}" y="${y + 4}" class="tick">${e.label}</text>`,
      );
    });
  }

  render(): string {
    return (
      `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}" ` +
      `viewBox="0 0 ${WIDTH} ${HEIGHT}">` +
      `<style>text{font-family:sans-serif}.tick{font-size:11px;fill:#444}` +
      `.label{font-size:13px;fill:#222}.title{font-size:15px;fill:#111}</style>` +
      `<rect width="${WIDTH}" height="${HEIGHT}" fill="white"/>` +
      this.parts.join("\n") +
      `</svg>\n`
    );
  }
}
