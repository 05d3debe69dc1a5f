/**
 * Convergence figure: distance-to-rearrangement curves on a log scale with
 * the conserved energy and gradient-norm traces overlaid as flat references.
 */

import { writeFileSync } from "fs";

import { parseReport } from "./report.js";
import { Series, lineChart } from "./svg.js";

export function renderConvergence(reportPath: string, outPath: string): void {
  const report = parseReport(reportPath);
  const steps = report.traces.lp_distance.map((_, i) => i);
  const series: Series[] = [
    {
      label: "|u_m - u*|_p",
      x: steps,
      y: report.traces.lp_distance,
      color: "#c0392b",
    },
  ];
  if (report.traces.grad_distance && report.traces.grad_distance.length === steps.length) {
    series.push({
      label: "|Du_m - Du*|_p",
      x: steps,
      y: report.traces.grad_distance,
      color: "#8e44ad",
    });
  }
  series.push(
    {
      label: "energy integral",
      x: steps,
      y: report.traces.j_energy,
      color: "#2471a3",
      dashed: true,
    },
    {
      label: "|Du|_p^p",
      x: steps,
      y: report.traces.grad_pnorm,
      color: "#1e8449",
      dashed: true,
    },
  );
  const svg = lineChart(series, {
    title: `polarization convergence (verdict: ${report.verdict})`,
    xLabel: "polarization step",
    yLabel: "value (log scale)",
    logY: true,
  });
  writeFileSync(outPath, svg);
}
