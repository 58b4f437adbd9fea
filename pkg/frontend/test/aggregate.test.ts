import fs from 'node:fs';
import { fileURLToPath } from 'node:url';

import { describe, expect, it } from 'vitest';

import { aggregate, meanSem } from '../src/aggregate.js';
import { parseMetricsCsv, readMetrics } from '../src/csv.js';

const FIXTURES = fileURLToPath(new URL('../fixtures/', import.meta.url));
const SAMPLE = FIXTURES + 'sample_metrics.csv';

function sampleRows() {
  return parseMetricsCsv(fs.readFileSync(SAMPLE, 'utf8'), 'sample');
}

describe('meanSem', () => {
  it('computes the n-1 standard error', () => {
    const [mean, sem] = meanSem([1, 3]);
    expect(mean).toBe(2);
    expect(sem).toBe(1); // std = sqrt(2), sem = sqrt(2)/sqrt(2)
  });

  it('is zero for a single value', () => {
    expect(meanSem([4.25])).toEqual([4.25, 0]);
  });
});

describe('aggregate', () => {
  it('matches the producer aggregate on the bundled sample within 1e-12', () => {
    // reference file written by the benchmark tool's own aggregate command
    const reference = fs.readFileSync(FIXTURES + 'sample_aggregate.csv', 'utf8')
      .trim().split('\n');
    const header = reference[0].split(',');
    const rows = aggregate(sampleRows());
    expect(rows.length).toBe(reference.length - 1);
    let worst = 0;
    reference.slice(1).forEach((line, i) => {
      const want = Object.fromEntries(line.split(',').map((v, j) => [header[j], v]));
      const got = rows[i];
      expect(`${got.env},${got.es},${got.lr},${got.epoch},${got.trials}`)
        .toBe(`${want.env},${want.es},${want.lr},${want.epoch},${want.trials}`);
      for (const col of ['mean_score_mean', 'mean_score_sem', 'value_loss_mean',
                         'value_loss_sem', 'policy_loss_mean', 'policy_loss_sem'] as const) {
        worst = Math.max(worst, Math.abs(got[col] - Number(want[col])));
      }
    });
    expect(worst).toBeLessThanOrEqual(1e-12);
  });

  it('counts trials per group', () => {
    const rows = aggregate(sampleRows());
    expect(rows.every((r) => r.trials === 3)).toBe(true);
    expect(rows.length).toBe(2 * 2 * 25); // es flags x lrs x epochs
  });

  it('sorts by env, trainer flag, numeric lr, epoch', () => {
    const rows = aggregate(sampleRows());
    const keys = rows.map((r) => [r.es, Number(r.lr), r.epoch]);
    const sorted = [...keys].sort((a, b) => a[0] - b[0] || a[1] - b[1] || a[2] - b[2]);
    expect(keys).toEqual(sorted);
  });

  it('keeps textually distinct lrs apart', () => {
    const text = 'env,es,lr,trial,epoch,mean_score,value_loss,policy_loss\n'
      + 'tsp,0,0.01,0,0,1,1,1\n'
      + 'tsp,0,0.010,0,0,3,1,1\n';
    const rows = aggregate(parseMetricsCsv(text));
    expect(rows.length).toBe(2);
    expect(rows.map((r) => r.mean_score_mean)).toEqual([1, 3]);
  });
});

describe('csv parsing', () => {
  it('rejects a wrong header', () => {
    expect(() => parseMetricsCsv('env,es,lr\n')).toThrow(/expected columns/);
  });

  it('rejects a short row', () => {
    const text = 'env,es,lr,trial,epoch,mean_score,value_loss,policy_loss\ntsp,0,0.01\n';
    expect(() => parseMetricsCsv(text)).toThrow(/expected 8 fields/);
  });

  it('rejects non-numeric metrics', () => {
    const text = 'env,es,lr,trial,epoch,mean_score,value_loss,policy_loss\n'
      + 'tsp,0,0.01,0,0,abc,1,1\n';
    expect(() => parseMetricsCsv(text)).toThrow(/mean_score must be a number/);
  });

  it('accepts the producer rendering of non-finite floats', () => {
    const text = 'env,es,lr,trial,epoch,mean_score,value_loss,policy_loss\n'
      + 'tsp,0,0.01,0,0,-1.5,inf,nan\n';
    const [row] = parseMetricsCsv(text);
    expect(row.value_loss).toBe(Infinity);
    expect(Number.isNaN(row.policy_loss)).toBe(true);
  });

  it('rejects duplicate rows across inputs', () => {
    expect(() => readMetrics([SAMPLE, SAMPLE])).toThrow(/duplicate row/);
  });

  it('round-trips every sample value exactly', () => {
    // 17-significant-digit decimal is lossless for binary64
    const rows = sampleRows();
    expect(rows.length).toBe(300);
    const text = fs.readFileSync(SAMPLE, 'utf8').trim().split('\n').slice(1);
    rows.forEach((row, i) => {
      expect(row.mean_score).toBe(Number(text[i].split(',')[5]));
    });
  });
});
