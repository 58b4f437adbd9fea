import fs from 'node:fs';

// Schema written by the benchmark driver. The lr column is kept as text:
// it is a group key, and reformatting floats would merge or split groups
// that the producer kept distinct.
export const METRICS_COLUMNS = [
  'env', 'es', 'lr', 'trial', 'epoch', 'mean_score', 'value_loss', 'policy_loss',
] as const;

export interface MetricsRow {
  env: string;
  es: number;
  lr: string;
  trial: number;
  epoch: number;
  mean_score: number;
  value_loss: number;
  policy_loss: number;
}

export class SchemaError extends Error {}

function parseIntStrict(field: string, text: string, line: number): number {
  const value = Number(text);
  if (!Number.isInteger(value)) {
    throw new SchemaError(`line ${line}: ${field} must be an integer, got ${JSON.stringify(text)}`);
  }
  return value;
}

function parseFloatStrict(field: string, text: string, line: number): number {
  // the producer renders non-finite floats the C way: nan, inf, -inf
  const t = text.trim().toLowerCase();
  const value = t === 'inf' ? Infinity : t === '-inf' ? -Infinity : Number(text);
  if (t === '' || (Number.isNaN(value) && t !== 'nan')) {
    throw new SchemaError(`line ${line}: ${field} must be a number, got ${JSON.stringify(text)}`);
  }
  return value;
}

export function parseMetricsCsv(text: string, source = '<string>'): MetricsRow[] {
  const lines = text.split(/\r?\n/).filter((line) => line.length > 0);
  if (lines.length === 0) {
    throw new SchemaError(`${source}: empty file`);
  }
  const header = lines[0].split(',');
  if (header.join(',') !== METRICS_COLUMNS.join(',')) {
    throw new SchemaError(
      `${source}: expected columns ${METRICS_COLUMNS.join(',')}, got ${lines[0]}`);
  }
  const rows: MetricsRow[] = [];
  for (let i = 1; i < lines.length; i++) {
    const parts = lines[i].split(',');
    if (parts.length !== METRICS_COLUMNS.length) {
      throw new SchemaError(`${source} line ${i + 1}: expected ${METRICS_COLUMNS.length} fields, got ${parts.length}`);
    }
    rows.push({
      env: parts[0],
      es: parseIntStrict('es', parts[1], i + 1),
      lr: parts[2],
      trial: parseIntStrict('trial', parts[3], i + 1),
      epoch: parseIntStrict('epoch', parts[4], i + 1),
      mean_score: parseFloatStrict('mean_score', parts[5], i + 1),
      value_loss: parseFloatStrict('value_loss', parts[6], i + 1),
      policy_loss: parseFloatStrict('policy_loss', parts[7], i + 1),
    });
  }
  return rows;
}

export function readMetrics(paths: string[]): MetricsRow[] {
  const rows: MetricsRow[] = [];
  const seen = new Set<string>();
  for (const path of paths) {
    for (const row of parseMetricsCsv(fs.readFileSync(path, 'utf8'), path)) {
      const key = `${row.env},${row.es},${row.lr},${row.trial},${row.epoch}`;
      if (seen.has(key)) {
        throw new SchemaError(`duplicate row for (${key}) across inputs`);
      }
      seen.add(key);
      rows.push(row);
    }
  }
  return rows;
}
