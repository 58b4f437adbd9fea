import fs from 'node:fs';
import os from 'node:os';
import path from 'node:path';
import { fileURLToPath } from 'node:url';

import { afterEach, beforeEach, describe, expect, it, vi } from 'vitest';

import { main, parseArgs } from '../src/cli.js';

const SAMPLE = fileURLToPath(new URL('../fixtures/sample_metrics.csv', import.meta.url));

let tmp: string;
beforeEach(() => {
  tmp = fs.mkdtempSync(path.join(os.tmpdir(), 'plots-'));
  vi.spyOn(console, 'log').mockImplementation(() => {});
  vi.spyOn(console, 'error').mockImplementation(() => {});
});
afterEach(() => {
  fs.rmSync(tmp, { recursive: true, force: true });
  vi.restoreAllMocks();
});

describe('parseArgs', () => {
  it('collects repeated inputs and metrics', () => {
    const opts = parseArgs(['--input', 'a.csv', '--input', 'b.csv',
                            '--metric', 'score', '--out-dir', 'x']);
    expect(opts.inputs).toEqual(['a.csv', 'b.csv']);
    expect(opts.metrics).toEqual(['mean_score']);
    expect(opts.outDir).toBe('x');
  });

  it('defaults to all three metrics', () => {
    expect(parseArgs(['--input', 'a.csv']).metrics)
      .toEqual(['mean_score', 'value_loss', 'policy_loss']);
  });

  it('rejects unknown metrics and flags', () => {
    expect(() => parseArgs(['--input', 'a.csv', '--metric', 'speed'])).toThrow(/unknown metric/);
    expect(() => parseArgs(['--frobnicate'])).toThrow(/unknown flag/);
    expect(() => parseArgs([])).toThrow(/--input is required/);
  });
});

describe('main', () => {
  it('writes one svg per metric from the sample CSV', () => {
    const code = main(['--input', SAMPLE, '--out-dir', tmp]);
    expect(code).toBe(0);
    for (const name of ['mean_score.svg', 'value_loss.svg', 'policy_loss.svg']) {
      const svg = fs.readFileSync(path.join(tmp, name), 'utf8');
      expect(svg.startsWith('<svg ')).toBe(true);
      expect(svg).toContain('data-series-hash=');
    }
  });

  it('exits nonzero on a schema mismatch', () => {
    const bad = path.join(tmp, 'bad.csv');
    fs.writeFileSync(bad, 'time,score\n1,2\n');
    expect(main(['--input', bad, '--out-dir', tmp])).toBe(1);
    expect(fs.existsSync(path.join(tmp, 'mean_score.svg'))).toBe(false);
  });

  it('exits nonzero on flag errors', () => {
    expect(main(['--metric', 'score'])).toBe(2);
  });

  it('reports a descriptive error for unplottable scales', () => {
    expect(main(['--input', SAMPLE, '--metric', 'score', '--scale', 'log',
                 '--out-dir', tmp])).toBe(1);
  });
});
