#!/usr/bin/env node
/**
 * plots convergence <report.json> <out.svg>
 * plots profiles <u.csv> <ustar.csv> [--tau <t1[,t2,...]>] <out.svg>
 */

import { renderConvergence } from "./convergence.js";
import { renderProfiles } from "./profiles.js";

function usage(): never {
  process.stderr.write(
    "usage:\n" +
      "  plots convergence <report.json> <out.svg>\n" +
      "  plots profiles <u.csv> <ustar.csv> [--tau <t1[,t2,...]>] <out.svg>\n",
  );
  process.exit(1);
}

export function main(argv: string[]): number {
  const args = [...argv];
  const command = args.shift();
  try {
    if (command === "convergence") {
      if (args.length !== 2) usage();
      renderConvergence(args[0], args[1]);
      return 0;
    }
    if (command === "profiles") {
      let tau: number[] = [];
      const tauIdx = args.indexOf("--tau");
      if (tauIdx >= 0) {
        const spec = args[tauIdx + 1];
        if (spec === undefined) usage();
        tau = spec.split(",").map(Number);
        if (tau.some((t) => !Number.isFinite(t))) {
          throw new Error(`bad --tau value '${spec}'`);
        }
        args.splice(tauIdx, 2);
      }
      if (args.length !== 3) usage();
      renderProfiles(args[0], args[1], tau, args[2]);
      return 0;
    }
    usage();
  } catch (err) {
    process.stderr.write(`error: ${err instanceof Error ? err.message : String(err)}\n`);
    return 1;
  }
}

process.exit(main(process.argv.slice(2)));
