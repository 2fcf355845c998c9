#!/usr/bin/env node
/**
 * CLI: ncmapss-convert --input <h5> --subset DS01 [--input ... --subset ...]
 *                      --out-dir <dir>
 *
 * Exit codes: 0 success, 2 usage error, 3 conversion error.
 */

import { convert, ConvertError, SUBSET_NAMES, type SubsetName } from "./convert.js";

function usage(): string {
  return (
    "usage: ncmapss-convert --input <file.h5> --subset <name> " +
    "[--input <file.h5> --subset <name> ...] --out-dir <dir>\n" +
    `subsets: ${SUBSET_NAMES.join(", ")}`
  );
}

export async function main(argv: string[]): Promise<number> {
  const inputs: string[] = [];
  const subsets: string[] = [];
  let outDir: string | undefined;

  for (let i = 0; i < argv.length; i++) {
    const arg = argv[i];
    const value = argv[i + 1];
    if (arg === "--input" && value !== undefined) {
      inputs.push(value);
      i++;
    } else if (arg === "--subset" && value !== undefined) {
      subsets.push(value);
      i++;
    } else if (arg === "--out-dir" && value !== undefined) {
      outDir = value;
      i++;
    } else if (arg === "--help" || arg === "-h") {
      console.log(usage());
      return 0;
    } else {
      console.error(`unknown or incomplete argument: ${arg}\n${usage()}`);
      return 2;
    }
  }

  if (inputs.length === 0 || inputs.length !== subsets.length || !outDir) {
    console.error(
      `need equally many --input and --subset flags plus --out-dir\n${usage()}`,
    );
    return 2;
  }

  try {
    const summary = await convert({
      inputs: inputs.map((p, i) => ({ path: p, subset: subsets[i] as SubsetName })),
      outDir,
    });
    console.log(
      `wrote ${summary.units} units, ${summary.cycles} cycles, ` +
        `${summary.rows} rows to ${summary.csvPath}`,
    );
    return 0;
  } catch (err) {
    if (err instanceof ConvertError) {
      console.error(`conversion error: ${err.message}`);
      return 3;
    }
    throw err;
  }
}

const invokedDirectly =
  process.argv[1] !== undefined &&
  import.meta.url === new URL(`file://${process.argv[1]}`).href;
if (invokedDirectly) {
  main(process.argv.slice(2)).then((code) => {
    process.exitCode = code;
  });
}
