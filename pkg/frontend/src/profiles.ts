/**
 * Profile overlay: the minimizer shifted by the reported translation against
 * its rearrangement, with a residual inset underneath.  2D inputs are reduced
 * to radial averages over shells of width h.
 */

import { writeFileSync } from "fs";

import { parseGridCsv, sameDomain } from "./csv.js";
import { Profile, lineProfile, radialAverage } from "./radial.js";
import { Series, lineChart, withInset } from "./svg.js";

function resample(profile: Profile, at: number[]): number[] {
  // linear interpolation onto a common abscissa, zero outside the data range
  const out: number[] = [];
  for (const x of at) {
    let v = 0;
    if (x >= profile.r[0] && x <= profile.r[profile.r.length - 1]) {
      let k = profile.r.findIndex((r) => r >= x);
      if (k <= 0) {
        v = profile.value[0];
      } else {
        const t = (x - profile.r[k - 1]) / (profile.r[k] - profile.r[k - 1]);
        v = (1 - t) * profile.value[k - 1] + t * profile.value[k];
      }
    }
    out.push(v);
  }
  return out;
}

export function renderProfiles(
  uPath: string,
  ustarPath: string,
  tau: number[],
  outPath: string,
): void {
  const u = parseGridCsv(uPath);
  const ustar = parseGridCsv(ustarPath);
  if (!sameDomain(u, ustar)) {
    throw new Error(`domain mismatch between ${uPath} and ${ustarPath}`);
  }
  let pu: Profile;
  let ps: Profile;
  if (u.dim === 1) {
    pu = lineProfile(u, -(tau[0] ?? 0)); // plot u(. + tau) against u*
    ps = lineProfile(ustar);
  } else {
    pu = radialAverage(u, tau);
    ps = radialAverage(ustar);
  }
  const main = lineChart(
    [
      { label: "u(x + tau)", x: pu.r, y: pu.value, color: "#c0392b" },
      { label: "u*", x: ps.r, y: ps.value, color: "#2471a3", dashed: true },
    ],
    {
      title: u.dim === 1 ? "minimizer vs rearrangement" : "radial averages",
      xLabel: u.dim === 1 ? "x" : "r",
      yLabel: "value",
    },
  );
  const residual = ps.r.map((_, i) => {
    const uv = resample(pu, [ps.r[i]])[0];
    return Math.abs(uv - ps.value[i]);
  });
  const inset = lineChart(
    [{ label: "|u(x + tau) - u*|", x: ps.r, y: residual, color: "#273746" }],
    { title: "residual", xLabel: u.dim === 1 ? "x" : "r", yLabel: "abs diff", height: 220 },
  );
  writeFileSync(outPath, withInset(main, inset));
}
