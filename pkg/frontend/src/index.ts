export { SchemaError, parseCsv, num } from "./csv.js";
export {
  AGGREGATE_COLUMNS, ERROR_COLUMNS, loadSweep, metricSeries,
  loadErrorTrace, subdirs,
} from "./data.js";
export type { AggregatePoint, Sweep, ErrorTrace } from "./data.js";
export type { FigureModel, Series, SeriesPoint } from "./model.js";
export { FIGURES, FIGURE_IDS, figureById, buildFigure } from "./figures.js";
export type { FigureDef, Warn } from "./figures.js";
export {
  renderFigure, figureScales, makeScale, linearTicks, logTicks, fmtTick,
  WIDTH, HEIGHT, MARGIN, PALETTE,
} from "./svg.js";
export { main } from "./cli.js";
