import { readFileSync } from 'node:fs';
import { parse as parseToml } from 'smol-toml';

export interface RepresentationSpec {
  /** roster name (e.g. bert-base) or fallback (hashing-tfidf, char-ngram) */
  name: string;
  /** output width for the hashing fallbacks */
  width?: number;
}

export interface ExtractionConfig {
  input: string;
  representations: RepresentationSpec[];
  pooling: 'mean' | 'cls';
  maxLength: number;
  outputDir: string;
  strict: boolean;
}

export const FALLBACK_NAMES = ['hashing-tfidf', 'char-ngram'] as const;

/** Pretrained roster: representation name -> model id and embedding width. */
export const TRANSFORMER_ROSTER: Record<string, { model: string; dim: number }> = {
  'bert-base': { model: 'Xenova/bert-base-uncased', dim: 768 },
  'distilbert-base': { model: 'Xenova/distilbert-base-uncased', dim: 768 },
  'albert-base': { model: 'Xenova/albert-base-v2', dim: 768 },
  'roberta-base': { model: 'Xenova/roberta-base', dim: 768 },
  'electra-base': { model: 'Xenova/electra-base-discriminator', dim: 768 },
};

export function knownRepresentation(name: string): boolean {
  return (FALLBACK_NAMES as readonly string[]).includes(name)
    || name in TRANSFORMER_ROSTER;
}

function asConfig(raw: Record<string, unknown>, path: string): ExtractionConfig {
  const reps = raw['representations'];
  if (!Array.isArray(reps) || reps.length === 0) {
    throw new Error(`${path}: config needs at least one representation`);
  }
  const representations: RepresentationSpec[] = reps.map((entry) => {
    if (typeof entry === 'string') return { name: entry };
    const obj = entry as Record<string, unknown>;
    return { name: String(obj['name']), width: obj['width'] as number | undefined };
  });
  const names = representations.map((r) => r.name);
  if (new Set(names).size !== names.length) {
    throw new Error(`${path}: representation names must be unique`);
  }
  for (const name of names) {
    if (!knownRepresentation(name)) {
      throw new Error(`${path}: unknown representation '${name}'`);
    }
  }
  const pooling = (raw['pooling'] as string) ?? 'mean';
  if (pooling !== 'mean' && pooling !== 'cls') {
    throw new Error(`${path}: pooling must be 'mean' or 'cls'`);
  }
  if (typeof raw['input'] !== 'string') {
    throw new Error(`${path}: config needs an input CSV path`);
  }
  return {
    input: raw['input'],
    representations,
    pooling,
    maxLength: (raw['max_length'] as number) ?? 512,
    outputDir: (raw['output_dir'] as string) ?? 'views',
    strict: Boolean(raw['strict'] ?? false),
  };
}

export function loadConfig(path: string): ExtractionConfig {
  const text = readFileSync(path, 'utf-8');
  const raw = path.endsWith('.json')
    ? JSON.parse(text) as Record<string, unknown>
    : parseToml(text) as Record<string, unknown>;
  return asConfig(raw, path);
}
