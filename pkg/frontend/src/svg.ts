/**
 * Minimal deterministic SVG line charts: no timestamps, no randomness, fixed
 * styling, so identical inputs produce byte-identical files.
 */

export interface Series {
  label: string;
  x: number[];
  y: number[];
  color: string;
  dashed?: boolean;
}

export interface ChartOptions {
  title: string;
  xLabel: string;
  yLabel: string;
  logY?: boolean;
  width?: number;
  height?: number;
}

const FONT = `font-family="monospace" font-size="11"`;

function fmt(v: number): string {
  return Number.isFinite(v) ? v.toPrecision(6) : "0";
}

function ticks(lo: number, hi: number, count = 5): number[] {
  if (!(hi > lo)) return [lo];
  const out: number[] = [];
  for (let i = 0; i <= count; i++) out.push(lo + ((hi - lo) * i) / count);
  return out;
}

export function lineChart(seriesList: Series[], opts: ChartOptions): string {
  const width = opts.width ?? 720;
  const height = opts.height ?? 460;
  const margin = { left: 70, right: 160, top: 40, bottom: 50 };
  const plotW = width - margin.left - margin.right;
  const plotH = height - margin.top - margin.bottom;

  const floor = 1e-16; // display floor for exact zeros on log scale
  const transform = (v: number) => (opts.logY ? Math.log10(Math.max(Math.abs(v), floor)) : v);

  const xs = seriesList.flatMap((s) => s.x);
  const ys = seriesList.flatMap((s) => s.y.map(transform));
  let xLo = Math.min(...xs);
  let xHi = Math.max(...xs);
  let yLo = Math.min(...ys);
  let yHi = Math.max(...ys);
  if (xHi === xLo) {
    xLo -= 0.5;
    xHi += 0.5;
  }
  if (yHi === yLo) {
    yLo -= 0.5;
    yHi += 0.5;
  }
  const px = (x: number) => margin.left + ((x - xLo) / (xHi - xLo)) * plotW;
  const py = (y: number) => margin.top + plotH - ((transform(y) - yLo) / (yHi - yLo)) * plotH;

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" viewBox="0 0 ${width} ${height}">`,
  );
  parts.push(`<rect width="${width}" height="${height}" fill="white"/>`);
  parts.push(
    `<text x="${width / 2}" y="20" text-anchor="middle" font-family="monospace" font-size="14">${opts.title}</text>`,
  );

  // axes
  parts.push(
    `<line x1="${margin.left}" y1="${margin.top}" x2="${margin.left}" y2="${margin.top + plotH}" stroke="black"/>`,
  );
  parts.push(
    `<line x1="${margin.left}" y1="${margin.top + plotH}" x2="${margin.left + plotW}" y2="${margin.top + plotH}" stroke="black"/>`,
  );
  parts.push(
    `<text x="${margin.left + plotW / 2}" y="${height - 10}" text-anchor="middle" ${FONT}>${opts.xLabel}</text>`,
  );
  parts.push(
    `<text x="16" y="${margin.top + plotH / 2}" text-anchor="middle" ${FONT} transform="rotate(-90 16 ${margin.top + plotH / 2})">${opts.yLabel}</text>`,
  );

  for (const tx of ticks(xLo, xHi)) {
    const x = px(tx);
    parts.push(
      `<line x1="${fmt(x)}" y1="${margin.top + plotH}" x2="${fmt(x)}" y2="${margin.top + plotH + 4}" stroke="black"/>`,
    );
    parts.push(
      `<text x="${fmt(x)}" y="${margin.top + plotH + 18}" text-anchor="middle" ${FONT}>${tx.toPrecision(3)}</text>`,
    );
  }
  for (const tyRaw of ticks(yLo, yHi)) {
    const y = margin.top + plotH - ((tyRaw - yLo) / (yHi - yLo)) * plotH;
    const label = opts.logY ? `1e${tyRaw.toFixed(1)}` : tyRaw.toPrecision(3);
    parts.push(
      `<line x1="${margin.left - 4}" y1="${fmt(y)}" x2="${margin.left}" y2="${fmt(y)}" stroke="black"/>`,
    );
    parts.push(
      `<text x="${margin.left - 8}" y="${fmt(y + 4)}" text-anchor="end" ${FONT}>${label}</text>`,
    );
  }

  // series
  seriesList.forEach((s, idx) => {
    const pts = s.x.map((x, i) => `${fmt(px(x))},${fmt(py(s.y[i]))}`);
    const dash = s.dashed ? ` stroke-dasharray="6 3"` : "";
    if (pts.length === 1) {
      const [cx, cy] = pts[0].split(",");
      parts.push(`<circle cx="${cx}" cy="${cy}" r="3" fill="${s.color}"/>`);
    } else {
      parts.push(
        `<polyline points="${pts.join(" ")}" fill="none" stroke="${s.color}" stroke-width="1.5"${dash}/>`,
      );
    }
    const ly = margin.top + 14 * (idx + 1);
    const lx = margin.left + plotW + 10;
    parts.push(
      `<line x1="${lx}" y1="${ly - 4}" x2="${lx + 18}" y2="${ly - 4}" stroke="${s.color}" stroke-width="1.5"${dash}/>`,
    );
    parts.push(`<text x="${lx + 24}" y="${ly}" ${FONT}>${s.label}</text>`);
  });

  parts.push("</svg>");
  return parts.join("\n") + "\n";
}

/** Small secondary panel appended below a chart (used for residual insets). */
export function withInset(main: string, inset: string): string {
  const mainH = Number(/height="(\d+)"/.exec(main)?.[1] ?? 460);
  const insetH = Number(/height="(\d+)"/.exec(inset)?.[1] ?? 200);
  const width = Number(/width="(\d+)"/.exec(main)?.[1] ?? 720);
  const body =
    main.replace(/<svg[^>]*>/, "").replace("</svg>", "") +
    `<g transform="translate(0 ${mainH})">` +
    inset.replace(/<svg[^>]*>/, "").replace("</svg>", "") +
    "</g>";
  return (
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${mainH + insetH}" viewBox="0 0 ${width} ${mainH + insetH}">` +
    body +
    "</svg>\n"
  );
}
