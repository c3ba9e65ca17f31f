#!/usr/bin/env node
/** `plots` command: render the figure suite from a results directory. */

import { mkdirSync, statSync, writeFileSync } from "node:fs";
import { join } from "node:path";
import { pathToFileURL } from "node:url";
import { parseArgs } from "node:util";
import { SchemaError } from "./csv.js";
import { FIGURES, FIGURE_IDS, buildFigure } from "./figures.js";
import { renderFigure } from "./svg.js";

export interface Io {
  out: (line: string) => void;
  err: (line: string) => void;
}

const USAGE =
  "usage: plots --in DIR --out DIR [--only F3,F5]\n" +
  `  figure ids: ${FIGURE_IDS.join(", ")}`;

export function main(argv: string[], io?: Io): number {
  const out = io?.out ?? ((s) => process.stdout.write(s + "\n"));
  const err = io?.err ?? ((s) => process.stderr.write(s + "\n"));

  let args;
  try {
    args = parseArgs({
      args: argv,
      options: {
        in: { type: "string" },
        out: { type: "string" },
        only: { type: "string" },
      },
      allowPositionals: false,
    }).values;
  } catch (e) {
    err((e as Error).message);
    err(USAGE);
    return 2;
  }
  if (!args.in || !args.out) {
    err(USAGE);
    return 2;
  }

  try {
    if (!statSync(args.in).isDirectory()) {
      err(`error: --in ${args.in} is not a directory`);
      return 2;
    }
  } catch {
    err(`error: --in ${args.in} does not exist`);
    return 2;
  }

  let selected = FIGURES;
  if (args.only !== undefined) {
    const ids = args.only.split(",").map((s) => s.trim().toUpperCase()).filter((s) => s !== "");
    for (const id of ids) {
      if (!FIGURE_IDS.includes(id)) {
        err(`error: unknown figure id "${id}" (expected one of ${FIGURE_IDS.join(", ")})`);
        return 2;
      }
    }
    selected = FIGURES.filter((f) => ids.includes(f.id));
  }

  mkdirSync(args.out, { recursive: true });
  let warnings = 0;
  const warn = (msg: string) => {
    warnings += 1;
    err(`warning: ${msg}`);
  };

  let written = 0;
  for (const def of selected) {
    let model;
    try {
      model = buildFigure(def, args.in, warn);
    } catch (e) {
      if (e instanceof SchemaError) {
        err(`error: ${e.message}`);
        return 2;
      }
      throw e;
    }
    if (model === null) continue;
    writeFileSync(join(args.out, def.file), renderFigure(model));
    out(def.file);
    written += 1;
  }
  err(`${written} figure(s) written, ${warnings} warning(s)`);
  return 0;
}

if (process.argv[1] && import.meta.url === pathToFileURL(process.argv[1]).href) {
  process.exit(main(process.argv.slice(2)));
}
