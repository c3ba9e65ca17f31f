/** Chart model shared between figure assembly and SVG rendering. */

export interface SeriesPoint {
  x: number;
  y: number;
  /** Half-height of the error bar (one standard deviation), if drawn. */
  spread?: number;
}

export interface Series {
  label: string;
  points: SeriesPoint[];
}

export interface FigureModel {
  id: string;          // "F3".."F11"
  file: string;        // output file name, e.g. "fig4_nodes.svg"
  title: string;
  xLabel: string;
  yLabel: string;
  logX: boolean;
  errorBars: boolean;
  /** Line markers are dropped for dense traces (temporal figure). */
  markers: boolean;
  series: Series[];
}
