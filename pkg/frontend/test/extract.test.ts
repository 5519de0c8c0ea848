import { spawnSync } from 'node:child_process';
import { mkdtempSync, readFileSync, writeFileSync } from 'node:fs';
import { tmpdir } from 'node:os';
import { join } from 'node:path';

import { beforeAll, describe, expect, it } from 'vitest';

import { loadConfig } from '../src/config.js';
import { decodeDmat } from '../src/dmat.js';
import { runExtraction } from '../src/extract.js';
import { main as cliMain } from '../src/cli.js';

const FRUIT = ['apple', 'pear', 'plum', 'grape', 'cherry', 'melon'];
const METAL = ['iron', 'copper', 'zinc', 'nickel', 'cobalt', 'silver'];

function sampleCsv(rows = 50): string {
  const lines = ['id,text,label'];
  for (let i = 0; i < rows; i++) {
    const label = i % 2;
    const vocab = label === 0 ? FRUIT : METAL;
    const words: string[] = [];
    for (let w = 0; w < 6; w++) words.push(vocab[(i * 3 + w * 7) % vocab.length]);
    lines.push(`r${i},"${words.join(' ')}",${label}`);
  }
  return lines.join('\n') + '\n';
}

function writeSample(dir: string): string {
  const path = join(dir, 'sample.csv');
  writeFileSync(path, sampleCsv());
  return path;
}

function writeConfig(dir: string, input: string, extra: Record<string, unknown> = {}): string {
  const path = join(dir, 'extract.json');
  writeFileSync(path, JSON.stringify({
    input,
    representations: [
      { name: 'hashing-tfidf', width: 64 },
      { name: 'char-ngram', width: 96 },
    ],
    output_dir: join(dir, 'views'),
    ...extra,
  }));
  return path;
}

let workdir: string;
beforeAll(() => {
  workdir = mkdtempSync(join(tmpdir(), 'dres-extract-'));
});

describe('extraction end to end', () => {
  it('emits views the engine validates and evaluates (exit 0)', async () => {
    const input = writeSample(workdir);
    const configPath = writeConfig(workdir, input);
    const result = await runExtraction(loadConfig(configPath));
    expect(result.views.map((v) => v.name)).toEqual(['hashing-tfidf', 'char-ngram']);
    for (const view of result.views) {
      const mat = decodeDmat(readFileSync(join(workdir, 'views', view.file)));
      expect(mat.rows).toBe(50);
      expect(mat.cols).toBe(view.dim);
      expect(mat.name).toBe(view.name);
    }
    const labels = readFileSync(result.labelsFile, 'utf-8');
    expect(labels.startsWith('id,label\n')).toBe(true);
    expect(labels.trim().split('\n')).toHaveLength(51);

    const viewPaths = result.views.map((v) => join(workdir, 'views', v.file));
    const validate = spawnSync('python3', ['-m', 'dres.cli', 'validate',
      '--views', ...viewPaths, '--labels', result.labelsFile],
      { encoding: 'utf-8' });
    expect(validate.stderr).toBe('');
    expect(validate.status).toBe(0);
    expect(validate.stdout).toContain('instances: 50');

    const runConfig = join(workdir, 'run.json');
    writeFileSync(runConfig, JSON.stringify({
      views: viewPaths,
      labels: result.labelsFile,
      methods: ['knora_e'],
      folds: 2,
      dsel_fraction: 0.3,
      seed: 1,
      output_dir: join(workdir, 'out'),
    }));
    const evaluate = spawnSync('python3', ['-m', 'dres.cli', 'evaluate',
      '--config', runConfig], { encoding: 'utf-8' });
    expect(evaluate.stderr).toBe('');
    expect(evaluate.status).toBe(0);
    const report = JSON.parse(
      readFileSync(join(workdir, 'out', 'report.json'), 'utf-8'));
    expect(report.methods.knora_e.mean.macro_f1).toBeGreaterThan(0.9);
  }, 120_000);

  it('is byte-identical across repeated runs', async () => {
    const dirA = mkdtempSync(join(tmpdir(), 'dres-extract-a-'));
    const dirB = mkdtempSync(join(tmpdir(), 'dres-extract-b-'));
    const input = writeSample(dirA);
    for (const dir of [dirA, dirB]) {
      const config = loadConfig(writeConfig(dir, input));
      await runExtraction(config);
    }
    for (const name of ['hashing-tfidf.dmat', 'char-ngram.dmat', 'labels.csv']) {
      const a = readFileSync(join(dirA, 'views', name));
      const b = readFileSync(join(dirB, 'views', name));
      expect(a.equals(b)).toBe(true);
    }
  }, 60_000);

  it('skips unavailable transformer models with a warning', async () => {
    const dir = mkdtempSync(join(tmpdir(), 'dres-extract-skip-'));
    const input = writeSample(dir);
    const configPath = join(dir, 'extract.json');
    writeFileSync(configPath, JSON.stringify({
      input,
      representations: ['bert-base', { name: 'hashing-tfidf', width: 32 }],
      output_dir: join(dir, 'views'),
    }));
    const result = await runExtraction(loadConfig(configPath));
    expect(result.views.map((v) => v.name)).toEqual(['hashing-tfidf']);
    expect(result.skipped).toHaveLength(1);
    expect(result.skipped[0].name).toBe('bert-base');
    expect(result.warnings.some((w) => w.includes('bert-base'))).toBe(true);
  });

  it('fails in strict mode when a model is unavailable', async () => {
    const dir = mkdtempSync(join(tmpdir(), 'dres-extract-strict-'));
    const input = writeSample(dir);
    const configPath = join(dir, 'extract.json');
    writeFileSync(configPath, JSON.stringify({
      input,
      representations: ['bert-base'],
      output_dir: join(dir, 'views'),
      strict: true,
    }));
    await expect(runExtraction(loadConfig(configPath))).rejects.toThrow(/strict/);
  });

  it('declares dim 768 for bert-base in the roster', async () => {
    const { TRANSFORMER_ROSTER } = await import('../src/config.js');
    expect(TRANSFORMER_ROSTER['bert-base'].dim).toBe(768);
  });

  it('records row alignment in the manifest', async () => {
    const dir = mkdtempSync(join(tmpdir(), 'dres-extract-manifest-'));
    const input = writeSample(dir);
    const config = loadConfig(writeConfig(dir, input));
    const result = await runExtraction(config);
    const manifest = JSON.parse(readFileSync(result.manifestFile, 'utf-8'));
    expect(manifest.input_rows).toBe(50);
    expect(manifest.ids).toHaveLength(50);
    expect(manifest.ids[0]).toBe('r0');
    for (const v of manifest.views) expect(v.rows).toBe(50);
  });

  it('cli returns usage and config exit codes', async () => {
    expect(await cliMain([])).toBe(1);
    expect(await cliMain(['extract'])).toBe(1);
    expect(await cliMain(['extract', '--config', '/nonexistent.toml'])).toBe(2);
  });

  it('cli extract succeeds with a toml config', async () => {
    const dir = mkdtempSync(join(tmpdir(), 'dres-extract-toml-'));
    const input = writeSample(dir);
    const configPath = join(dir, 'extract.toml');
    writeFileSync(configPath, [
      `input = ${JSON.stringify(input)}`,
      `output_dir = ${JSON.stringify(join(dir, 'views'))}`,
      'representations = [ { name = "hashing-tfidf", width = 48 } ]',
      'pooling = "mean"',
      'max_length = 256',
    ].join('\n'));
    expect(await cliMain(['extract', '--config', configPath])).toBe(0);
    const mat = decodeDmat(readFileSync(join(dir, 'views', 'hashing-tfidf.dmat')));
    expect(mat.cols).toBe(48);
  });
});
