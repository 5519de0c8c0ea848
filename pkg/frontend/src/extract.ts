import { createHash } from 'node:crypto';
import { mkdirSync, readFileSync, writeFileSync } from 'node:fs';
import { join } from 'node:path';

import { labelsCsv, parseTextDataset, TextRow } from './csv.js';
import { encodeDmat } from './dmat.js';
import { ExtractionConfig, FALLBACK_NAMES, TRANSFORMER_ROSTER } from './config.js';
import { charNgramCounts, hashingTfidf } from './vectorizers.js';
import { embedWithTransformer } from './transformer.js';

export interface ViewSummary {
  name: string;
  file: string;
  dim: number;
  rows: number;
  sha256: string;
}

export interface ExtractionResult {
  views: ViewSummary[];
  skipped: { name: string; reason: string }[];
  warnings: string[];
  labelsFile: string;
  manifestFile: string;
}

const DEFAULT_WIDTHS: Record<string, number> = {
  'hashing-tfidf': 256,
  'char-ngram': 512,
};

async function buildView(name: string, width: number | undefined,
                         texts: string[], config: ExtractionConfig,
): Promise<{ data: Float32Array; dim: number }> {
  if (name === 'hashing-tfidf') {
    const w = width ?? DEFAULT_WIDTHS[name];
    return { data: hashingTfidf(texts, w), dim: w };
  }
  if (name === 'char-ngram') {
    const w = width ?? DEFAULT_WIDTHS[name];
    return { data: charNgramCounts(texts, w), dim: w };
  }
  return embedWithTransformer(name, texts, config.pooling, config.maxLength);
}

function stableJson(value: unknown): string {
  const normalize = (v: unknown): unknown => {
    if (Array.isArray(v)) return v.map(normalize);
    if (v !== null && typeof v === 'object') {
      const entries = Object.entries(v as Record<string, unknown>)
        .sort(([a], [b]) => (a < b ? -1 : a > b ? 1 : 0))
        .map(([k, val]) => [k, normalize(val)]);
      return Object.fromEntries(entries);
    }
    return v;
  };
  return JSON.stringify(normalize(value), null, 2) + '\n';
}

export async function runExtraction(config: ExtractionConfig): Promise<ExtractionResult> {
  const rows: TextRow[] = parseTextDataset(readFileSync(config.input, 'utf-8'), config.input);
  const warnings: string[] = [];
  rows.forEach((row, i) => {
    if (row.text.trim() === '') {
      warnings.push(`row ${i} (id ${row.id}): empty text, emitting zero vectors`);
    }
  });
  const texts = rows.map((r) => r.text);

  mkdirSync(config.outputDir, { recursive: true });
  const views: ViewSummary[] = [];
  const skipped: { name: string; reason: string }[] = [];
  for (const rep of config.representations) {
    let built;
    try {
      built = await buildView(rep.name, rep.width, texts, config);
    } catch (err) {
      const reason = err instanceof Error ? err.message : String(err);
      if (config.strict) {
        throw new Error(`representation ${rep.name} failed in strict mode: ${reason}`);
      }
      skipped.push({ name: rep.name, reason });
      warnings.push(`skipping ${rep.name}: ${reason}`);
      continue;
    }
    const file = join(config.outputDir, `${rep.name}.dmat`);
    const blob = encodeDmat({
      rows: rows.length, cols: built.dim, data: built.data, name: rep.name,
    });
    writeFileSync(file, blob);
    views.push({
      name: rep.name,
      file: `${rep.name}.dmat`,
      dim: built.dim,
      rows: rows.length,
      sha256: createHash('sha256').update(blob).digest('hex'),
    });
  }
  if (views.length === 0) {
    throw new Error('no representation could be produced');
  }

  const labelsFile = join(config.outputDir, 'labels.csv');
  writeFileSync(labelsFile, labelsCsv(rows));
  const manifestFile = join(config.outputDir, 'manifest.json');
  writeFileSync(manifestFile, stableJson({
    input_rows: rows.length,
    ids: rows.map((r) => r.id),
    pooling: config.pooling,
    max_length: config.maxLength,
    views,
    skipped,
  }));
  return { views, skipped, warnings, labelsFile, manifestFile };
}

export { FALLBACK_NAMES, TRANSFORMER_ROSTER };
