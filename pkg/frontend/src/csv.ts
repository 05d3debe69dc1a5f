/**
 * Readers for the grid-function CSV format written by the symmetrize package:
 * a header line `N,<dim>,kind,<ball|box>,extent,<R>,n,<cells>` followed by
 * one value per line in row-major cell order.
 */

import { readFileSync } from "fs";

export interface GridFunctionFile {
  dim: number;
  kind: "ball" | "box";
  extent: number;
  n: number;
  h: number;
  values: number[]; // row-major
}

export function parseGridCsv(path: string): GridFunctionFile {
  const text = readFileSync(path, "utf8");
  const lines = text.split(/\r?\n/).filter((line) => line.length > 0);
  if (lines.length === 0) {
    throw new Error(`${path}: empty grid-function file`);
  }
  const tokens = lines[0].split(",");
  if (
    tokens.length !== 8 ||
    tokens[0] !== "N" ||
    tokens[2] !== "kind" ||
    tokens[4] !== "extent" ||
    tokens[6] !== "n"
  ) {
    throw new Error(`${path}: malformed header '${lines[0]}'`);
  }
  const dim = Number(tokens[1]);
  const kind = tokens[3];
  const extent = Number(tokens[5]);
  const n = Number(tokens[7]);
  if (kind !== "ball" && kind !== "box") {
    throw new Error(`${path}: unknown domain kind '${kind}'`);
  }
  if (!Number.isInteger(dim) || dim < 1 || !Number.isFinite(extent) || !Number.isInteger(n)) {
    throw new Error(`${path}: bad header numbers`);
  }
  const values = lines.slice(1).map((line, i) => {
    const v = Number(line);
    if (!Number.isFinite(v)) {
      throw new Error(`${path}: non-numeric value on line ${i + 2}`);
    }
    return v;
  });
  if (values.length !== n ** dim) {
    throw new Error(`${path}: expected ${n ** dim} values, found ${values.length}`);
  }
  return { dim, kind, extent, n, h: (2 * extent) / n, values };
}

/** Cell-center coordinate along one axis. */
export function axisCenter(g: GridFunctionFile, i: number): number {
  return -g.extent + (i + 0.5) * g.h;
}

export function sameDomain(a: GridFunctionFile, b: GridFunctionFile): boolean {
  return a.dim === b.dim && a.kind === b.kind && a.extent === b.extent && a.n === b.n;
}
