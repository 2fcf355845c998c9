/**
 * Converter from the NASA N-CMAPSS HDF5 release to the canonical telemetry
 * CSV + manifest JSON.
 *
 * Each release file carries a development and a test partition as separate
 * datasets: W_dev/W_test (4 flight descriptors), X_s_dev/X_s_test (14
 * sensors), and A_dev/A_test (auxiliary columns unit, cycle, Fc, hs). The
 * converter validates that layout, refuses to guess on anything else, and
 * emits rows in (unit, cycle, time) order with every numeric value
 * preserved through shortest round-trip decimal serialization.
 *
 * This tool is standalone: the canonical CSV and manifest JSON are its only
 * contract with the training pipeline.
 */

import * as fs from "node:fs";
import * as path from "node:path";

import { File as H5File, ready, type Dataset } from "h5wasm/node";

export const SIGNAL_NAMES = [
  "alt", "Mach", "TRA", "T2",
  "Wf", "Nf", "Nc", "T24", "T30", "T48", "T50",
  "P15", "P2", "P21", "P24", "Ps30", "P40", "P50",
] as const;

export const W_NAMES = SIGNAL_NAMES.slice(0, 4);
export const XS_NAMES = SIGNAL_NAMES.slice(4);
export const AUX_NAMES = ["unit", "cycle", "Fc", "hs"] as const;

export const CSV_HEADER = [...AUX_NAMES, ...SIGNAL_NAMES].join(",");

export const SUBSET_NAMES = [
  "DS01", "DS03", "DS04", "DS05", "DS06", "DS07", "DS08a", "DS08c",
] as const;
export type SubsetName = (typeof SUBSET_NAMES)[number];

type Flags = Record<"fan" | "lpc" | "hpc" | "hpt" | "lpt", number>;

const SUBSET_FAILURES: Record<SubsetName, Flags> = {
  DS01: { fan: 0, lpc: 0, hpc: 0, hpt: 1, lpt: 0 },
  DS03: { fan: 0, lpc: 0, hpc: 0, hpt: 1, lpt: 1 },
  DS04: { fan: 1, lpc: 0, hpc: 0, hpt: 0, lpt: 0 },
  DS05: { fan: 0, lpc: 0, hpc: 1, hpt: 0, lpt: 0 },
  DS06: { fan: 0, lpc: 1, hpc: 1, hpt: 0, lpt: 0 },
  DS07: { fan: 0, lpc: 0, hpc: 0, hpt: 0, lpt: 1 },
  DS08a: { fan: 1, lpc: 1, hpc: 1, hpt: 1, lpt: 1 },
  DS08c: { fan: 1, lpc: 1, hpc: 1, hpt: 1, lpt: 1 },
};

export class ConvertError extends Error {}

export interface ConversionInput {
  path: string;
  subset: SubsetName;
}

export interface ConversionSpec {
  inputs: ConversionInput[];
  outDir: string;
}

export interface ConversionSummary {
  units: number;
  cycles: number;
  rows: number;
  csvPath: string;
  manifestPath: string;
}

interface ManifestEntry {
  unit: number;
  subset: SubsetName;
  split: "train" | "test";
  t_eol: number;
  failures: Flags;
}

/** One maximal run of rows sharing (unit, cycle) within a partition. */
interface CycleRun {
  unit: number; // remapped, global
  cycle: number;
  fc: number;
  hs: number;
  start: number; // row range within the partition datasets
  end: number;
  w: Dataset;
  xs: Dataset;
}

function getDataset(file: InstanceType<typeof H5File>, key: string): Dataset {
  const entity = file.get(key);
  if (entity === null || entity === undefined || !(entity as Dataset).shape) {
    const found = file.keys().join(", ");
    throw new ConvertError(
      `dataset ${key} not found in ${file.filename}; found: [${found}]`,
    );
  }
  return entity as Dataset;
}

function shapeOf(ds: Dataset, key: string): number[] {
  const shape = ds.shape;
  if (shape === null) {
    throw new ConvertError(`${key} has no shape (not a numeric dataset)`);
  }
  return shape;
}

function checkWidth(ds: Dataset, key: string, expected: number): void {
  const shape = shapeOf(ds, key);
  if (shape.length !== 2 || shape[1] !== expected) {
    throw new ConvertError(
      `${key} must be n x ${expected}, got shape [${shape.join(", ")}]`,
    );
  }
}

function stringList(ds: Dataset): string[] {
  const value = ds.value;
  if (!Array.isArray(value)) {
    throw new ConvertError("variable-name table is not a string array");
  }
  return value.map((v) => String(v).trim());
}

/** Column order check when the file carries a *_var name table. */
function checkNames(
  file: InstanceType<typeof H5File>,
  varKey: string,
  expected: readonly string[],
): void {
  if (!file.keys().includes(varKey)) return;
  const names = stringList(getDataset(file, varKey));
  if (
    names.length !== expected.length ||
    names.some((n, i) => n !== expected[i])
  ) {
    throw new ConvertError(
      `${varKey} names [${names.join(", ")}] do not match the documented ` +
        `order [${expected.join(", ")}]`,
    );
  }
}

function readAux(file: InstanceType<typeof H5File>, key: string): number[][] {
  const ds = getDataset(file, key);
  checkWidth(ds, key, AUX_NAMES.length);
  const flat = ds.value as ArrayLike<number>;
  const n = shapeOf(ds, key)[0];
  const cols: number[][] = AUX_NAMES.map(() => new Array<number>(n));
  for (let i = 0; i < n; i++) {
    for (let j = 0; j < 4; j++) {
      const v = Number(flat[i * 4 + j]);
      if (!Number.isInteger(v)) {
        throw new ConvertError(
          `${key} row ${i}: ${AUX_NAMES[j]} = ${v} is not an integer`,
        );
      }
      cols[j][i] = v;
    }
  }
  return cols;
}

function partitionRuns(
  file: InstanceType<typeof H5File>,
  suffix: "dev" | "test",
  unitOffset: number,
): { runs: CycleRun[]; units: Set<number>; rows: number } {
  const w = getDataset(file, `W_${suffix}`);
  const xs = getDataset(file, `X_s_${suffix}`);
  checkWidth(w, `W_${suffix}`, W_NAMES.length);
  checkWidth(xs, `X_s_${suffix}`, XS_NAMES.length);
  const [unit, cycle, fc, hs] = readAux(file, `A_${suffix}`);
  const n = unit.length;
  const wRows = shapeOf(w, `W_${suffix}`)[0];
  const xsRows = shapeOf(xs, `X_s_${suffix}`)[0];
  if (wRows !== n || xsRows !== n) {
    throw new ConvertError(
      `row counts disagree in ${file.filename} (${suffix} partition): ` +
        `A=${n}, W=${wRows}, X_s=${xsRows}`,
    );
  }

  const runs: CycleRun[] = [];
  const units = new Set<number>();
  let start = 0;
  for (let i = 1; i <= n; i++) {
    if (i === n || unit[i] !== unit[start] || cycle[i] !== cycle[start]) {
      for (let k = start; k < i; k++) {
        if (fc[k] !== fc[start] || hs[k] !== hs[start]) {
          throw new ConvertError(
            `unit ${unit[start]} cycle ${cycle[start]} (${suffix}): ` +
              `Fc/hs not constant within the cycle`,
          );
        }
      }
      units.add(unit[start] + unitOffset);
      runs.push({
        unit: unit[start] + unitOffset,
        cycle: cycle[start],
        fc: fc[start],
        hs: hs[start],
        start,
        end: i,
        w,
        xs,
      });
      start = i;
    }
  }
  return { runs, units, rows: n };
}

function sliceRows(ds: Dataset, start: number, end: number): ArrayLike<number> {
  return ds.slice([[start, end]]) as ArrayLike<number>;
}

function writeRun(out: number, run: CycleRun): void {
  const m = run.end - run.start;
  const w = sliceRows(run.w, run.start, run.end);
  const xs = sliceRows(run.xs, run.start, run.end);
  const prefix = `${run.unit},${run.cycle},${run.fc},${run.hs}`;
  const lines: string[] = new Array(m);
  for (let i = 0; i < m; i++) {
    const parts: string[] = [prefix];
    for (let j = 0; j < 4; j++) parts.push(String(w[i * 4 + j]));
    for (let j = 0; j < 14; j++) parts.push(String(xs[i * 14 + j]));
    lines[i] = parts.join(",");
  }
  fs.writeSync(out, lines.join("\n") + "\n");
}

export async function convert(spec: ConversionSpec): Promise<ConversionSummary> {
  await ready;
  for (const input of spec.inputs) {
    if (!(SUBSET_NAMES as readonly string[]).includes(input.subset)) {
      throw new ConvertError(
        `unknown subset ${input.subset}; expected one of ${SUBSET_NAMES.join(", ")}`,
      );
    }
    if (!fs.existsSync(input.path)) {
      throw new ConvertError(`input file not found: ${input.path}`);
    }
  }
  if (spec.inputs.length === 0) {
    throw new ConvertError("no input files given");
  }

  fs.mkdirSync(spec.outDir, { recursive: true });
  const csvPath = path.join(spec.outDir, "data.csv");
  const manifestPath = path.join(spec.outDir, "manifest.json");
  const out = fs.openSync(csvPath, "w");
  fs.writeSync(out, CSV_HEADER + "\n");

  const manifest: ManifestEntry[] = [];
  let totalRows = 0;
  let totalCycles = 0;
  let unitOffset = 0;

  try {
    for (const input of spec.inputs) {
      const file = new H5File(input.path, "r");
      try {
        checkNames(file, "W_var", W_NAMES);
        checkNames(file, "X_s_var", XS_NAMES);
        checkNames(file, "A_var", AUX_NAMES);

        const dev = partitionRuns(file, "dev", unitOffset);
        const test = partitionRuns(file, "test", unitOffset);
        const overlap = [...dev.units].filter((u) => test.units.has(u));
        if (overlap.length > 0) {
          throw new ConvertError(
            `${input.path}: units appear in both partitions: ` +
              overlap.map((u) => u - unitOffset).join(", "),
          );
        }

        const split = new Map<number, "train" | "test">();
        for (const u of dev.units) split.set(u, "train");
        for (const u of test.units) split.set(u, "test");

        const runs = [...dev.runs, ...test.runs].sort(
          (a, b) => a.unit - b.unit || a.cycle - b.cycle,
        );
        const tEol = new Map<number, number>();
        for (const run of runs) {
          tEol.set(run.unit, Math.max(tEol.get(run.unit) ?? 0, run.cycle));
        }
        for (const run of runs) {
          writeRun(out, run);
        }

        for (const u of [...split.keys()].sort((a, b) => a - b)) {
          manifest.push({
            unit: u,
            subset: input.subset,
            split: split.get(u)!,
            t_eol: tEol.get(u)!,
            failures: SUBSET_FAILURES[input.subset],
          });
        }
        totalRows += dev.rows + test.rows;
        totalCycles += runs.length;
        unitOffset = Math.max(unitOffset, ...split.keys());
      } finally {
        file.close();
      }
    }
  } finally {
    fs.closeSync(out);
  }

  const sources = spec.inputs.map((i) => path.basename(i.path)).join(", ");
  fs.writeFileSync(
    manifestPath,
    JSON.stringify(
      { source: `ncmapss-convert(${sources})`, units: manifest },
      null,
      2,
    ) + "\n",
  );
  return {
    units: manifest.length,
    cycles: totalCycles,
    rows: totalRows,
    csvPath,
    manifestPath,
  };
}
