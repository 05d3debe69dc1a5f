/** Schema of the symmetry-experiment report JSON and its validation. */

import { readFileSync } from "fs";

export interface SymmetryReport {
  config: Record<string, unknown>;
  traces: {
    j_energy: number[];
    grad_pnorm: number[];
    lp_distance: number[];
    f_term: number[];
    constraint: number[];
    grad_distance?: number[];
  };
  lambda: number;
  translation: number[];
  symmetry_defect: number;
  critical_measure: number;
  verdict: string;
  tolerances: Record<string, number>;
  runtime_ms: number;
}

const REQUIRED_FIELDS = [
  "config",
  "traces",
  "lambda",
  "translation",
  "symmetry_defect",
  "critical_measure",
  "verdict",
  "tolerances",
  "runtime_ms",
] as const;

const REQUIRED_TRACES = ["j_energy", "grad_pnorm", "lp_distance", "f_term", "constraint"] as const;

export function parseReport(path: string): SymmetryReport {
  const data = JSON.parse(readFileSync(path, "utf8"));
  for (const field of REQUIRED_FIELDS) {
    if (!(field in data)) {
      throw new Error(`${path}: report is missing field '${field}'`);
    }
  }
  for (const trace of REQUIRED_TRACES) {
    if (!(trace in data.traces)) {
      throw new Error(`${path}: report is missing trace '${trace}'`);
    }
    if (!Array.isArray(data.traces[trace])) {
      throw new Error(`${path}: trace '${trace}' is not an array`);
    }
  }
  const lengths = new Set<number>(
    Object.values(data.traces as Record<string, number[]>)
      .filter((t) => Array.isArray(t) && t.length > 0)
      .map((t) => t.length),
  );
  if (lengths.size > 1) {
    throw new Error(`${path}: trace arrays have differing lengths`);
  }
  return data as SymmetryReport;
}

export function isNonIncreasing(series: number[], slack = 1e-12): boolean {
  for (let i = 1; i < series.length; i++) {
    if (series[i] > series[i - 1] + slack) return false;
  }
  return true;
}
