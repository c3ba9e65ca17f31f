/** Strict CSV access for the simulator's output tables. */

import Papa from "papaparse";

/** A named, user-actionable problem with an input table or directory layout. */
export class SchemaError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "SchemaError";
  }
}

export type Row = Record<string, string>;

/**
 * Parse CSV text into header-keyed string rows.
 *
 * `required` columns must all be present in the header; anything beyond them
 * is carried through untouched.
 */
export function parseCsv(text: string, required: readonly string[], source: string): Row[] {
  const res = Papa.parse<Row>(text.trim(), {
    header: true,
    delimiter: ",",
    skipEmptyLines: true,
  });
  if (res.errors.length > 0) {
    const first = res.errors[0]!;
    throw new SchemaError(`${source}: ${first.message} (row ${first.row ?? "?"})`);
  }
  const header = res.meta.fields ?? [];
  for (const col of required) {
    if (!header.includes(col)) {
      throw new SchemaError(`${source}: missing column "${col}"`);
    }
  }
  return res.data;
}

/** Read a numeric field, rejecting blanks and non-finite garbage. */
export function num(row: Row, col: string, source: string): number {
  const raw = row[col];
  if (raw === undefined || raw === "") {
    throw new SchemaError(`${source}: empty value in column "${col}"`);
  }
  const v = Number(raw);
  if (!Number.isFinite(v)) {
    throw new SchemaError(`${source}: non-numeric value "${raw}" in column "${col}"`);
  }
  return v;
}
