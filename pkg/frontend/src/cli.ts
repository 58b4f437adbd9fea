import fs from 'node:fs';
import path from 'node:path';
import { pathToFileURL } from 'node:url';

import { METRICS } from './aggregate.js';
import type { Metric } from './aggregate.js';
import { SchemaError, readMetrics } from './csv.js';
import { PlotError, renderMetrics } from './plot.js';

const USAGE = `usage: plot --input metrics.csv [--input more.csv ...]
            [--metric score|value_loss|policy_loss ...] [--out-dir DIR]
            [--scale linear|log]

Renders one SVG panel per metric (mean line per es/lr group, SEM band)
from benchmark metrics CSVs. Losses default to log-y, score to linear.`;

const METRIC_ALIASES: Record<string, Metric> = {
  score: 'mean_score', mean_score: 'mean_score',
  value_loss: 'value_loss', policy_loss: 'policy_loss',
};

export interface CliOptions {
  inputs: string[];
  metrics: Metric[];
  outDir: string;
  scale?: 'linear' | 'log';
}

export function parseArgs(argv: string[]): CliOptions {
  const opts: CliOptions = { inputs: [], metrics: [], outDir: '.' };
  for (let i = 0; i < argv.length; i++) {
    const arg = argv[i];
    const next = () => {
      if (i + 1 >= argv.length) throw new Error(`${arg} needs a value`);
      return argv[++i];
    };
    if (arg === '--input') opts.inputs.push(next());
    else if (arg === '--metric') {
      const name = next();
      const metric = METRIC_ALIASES[name];
      if (!metric) throw new Error(`unknown metric ${name}; pick score, value_loss or policy_loss`);
      opts.metrics.push(metric);
    } else if (arg === '--out-dir') opts.outDir = next();
    else if (arg === '--scale') {
      const scale = next();
      if (scale !== 'linear' && scale !== 'log') throw new Error(`--scale must be linear or log, got ${scale}`);
      opts.scale = scale;
    } else if (arg === '--help' || arg === '-h') {
      console.log(USAGE);
      process.exit(0);
    } else throw new Error(`unknown flag ${arg}`);
  }
  if (opts.inputs.length === 0) throw new Error('at least one --input is required');
  if (opts.metrics.length === 0) opts.metrics = [...METRICS];
  return opts;
}

export function main(argv: string[]): number {
  let opts: CliOptions;
  try {
    opts = parseArgs(argv);
  } catch (err) {
    console.error(String(err instanceof Error ? err.message : err));
    console.error(USAGE);
    return 2;
  }
  try {
    const rows = readMetrics(opts.inputs);
    fs.mkdirSync(opts.outDir, { recursive: true });
    for (const [metric, svg] of renderMetrics(rows, opts.metrics, opts.scale)) {
      const file = path.join(opts.outDir, `${metric}.svg`);
      fs.writeFileSync(file, svg);
      console.log(`wrote ${file}`);
    }
    return 0;
  } catch (err) {
    if (err instanceof SchemaError || err instanceof PlotError) {
      console.error(`error: ${err.message}`);
      return 1;
    }
    throw err;
  }
}

if (process.argv[1] && import.meta.url === pathToFileURL(process.argv[1]).href) {
  process.exit(main(process.argv.slice(2)));
}
