/** Radial reduction of grid functions to 1D profiles for plotting. */

import { GridFunctionFile, axisCenter } from "./csv.js";

export interface Profile {
  r: number[];
  value: number[];
}

/** 1D functions plot as-is against the cell-center coordinate. */
export function lineProfile(g: GridFunctionFile, shift = 0): Profile {
  if (g.dim !== 1) {
    throw new Error("lineProfile expects a 1D grid function");
  }
  const r: number[] = [];
  const value: number[] = [];
  for (let i = 0; i < g.n; i++) {
    r.push(axisCenter(g, i) + shift);
    value.push(g.values[i]);
  }
  return { r, value };
}

/**
 * Mean value over spherical shells of width h: the radial average used for
 * dim >= 2.  An optional center shift (in physical units) is applied before
 * binning, matching the translation reported by the experiment.
 */
export function radialAverage(g: GridFunctionFile, shift: number[] = []): Profile {
  if (g.dim < 2) {
    throw new Error("radialAverage expects dim >= 2");
  }
  const nShells = Math.ceil((g.extent * Math.sqrt(g.dim)) / g.h) + 1;
  const sums = new Array<number>(nShells).fill(0);
  const counts = new Array<number>(nShells).fill(0);
  const idx = new Array<number>(g.dim).fill(0);
  for (let flat = 0; flat < g.values.length; flat++) {
    let rem = flat;
    for (let axis = g.dim - 1; axis >= 0; axis--) {
      idx[axis] = rem % g.n;
      rem = Math.floor(rem / g.n);
    }
    let r2 = 0;
    for (let axis = 0; axis < g.dim; axis++) {
      const c = axisCenter(g, idx[axis]) - (shift[axis] ?? 0);
      r2 += c * c;
    }
    const shell = Math.floor(Math.sqrt(r2) / g.h);
    if (shell < nShells) {
      sums[shell] += g.values[flat];
      counts[shell] += 1;
    }
  }
  const r: number[] = [];
  const value: number[] = [];
  for (let k = 0; k < nShells; k++) {
    if (counts[k] > 0) {
      r.push((k + 0.5) * g.h);
      value.push(sums[k] / counts[k]);
    }
  }
  return { r, value };
}
