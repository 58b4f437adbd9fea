export { METRICS_COLUMNS, SchemaError, parseMetricsCsv, readMetrics } from './csv.js';
export { METRICS, aggregate, meanSem } from './aggregate.js';
export { METRIC_LABELS, PlotError, buildSeries, defaultScale, renderMetrics,
         renderPanel } from './plot.js';
export { main, parseArgs } from './cli.js';
export type { MetricsRow } from './csv.js';
export type { AggregateRow, Metric } from './aggregate.js';
export type { PanelSpec, Series } from './plot.js';
export type { CliOptions } from './cli.js';
