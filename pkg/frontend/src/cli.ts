#!/usr/bin/env node
import yargs from "yargs";
import { hideBin } from "yargs/helpers";

import { plotDecay } from "./plotDecay.js";
import { plotScan } from "./plotScan.js";

function requireSvg(path: string): void {
  if (!path.endsWith(".svg")) {
    throw new Error(`figures are written as SVG; got ${path}`);
  }
}

await yargs(hideBin(process.argv))
  .scriptName("elastoflow-plots")
  .command(
    "decay",
    "log-linear decay figure with fitted rate",
    (y) =>
      y
        .option("csv", { type: "string", demandOption: true, describe: "trajectory.csv path" })
        .option("column", { type: "string", default: "h_dev_l2" })
        .option("out", { type: "string", demandOption: true, describe: "output .svg path" })
        .option("t0", { type: "number", describe: "fit window start" })
        .option("t1", { type: "number", describe: "fit window end" }),
    (argv) => {
      requireSvg(argv.out);
      const window: [number, number] | undefined =
        argv.t0 !== undefined || argv.t1 !== undefined
          ? [argv.t0 ?? -Infinity, argv.t1 ?? Infinity]
          : undefined;
      const result = plotDecay(argv.csv, argv.column, argv.out, window);
      console.log(
        JSON.stringify(
          { figure: result.figurePath, fit: result.fit, points: result.pointsUsed },
          null,
          2
        )
      );
    }
  )
  .command(
    "scan",
    "stability-scan figure with sign-change marker",
    (y) =>
      y
        .option("csv", { type: "string", demandOption: true, describe: "scan.csv path" })
        .option("out", { type: "string", demandOption: true, describe: "output .svg path" }),
    (argv) => {
      requireSvg(argv.out);
      const result = plotScan(argv.csv, argv.out);
      console.log(JSON.stringify(result, null, 2));
    }
  )
  .demandCommand(1)
  .strict()
  .help()
  .parseAsync();
