/**
 * Offline deterministic text representations: a hashing TF-IDF vectorizer
 * over word tokens and a hashed character n-gram vectorizer. Both are
 * seed-free and byte-stable across runs and machines (FNV-1a hashing,
 * fixed iteration order, plain double arithmetic).
 */

/** 32-bit FNV-1a over UTF-8 bytes. */
export function fnv1a(text: string): number {
  let hash = 0x811c9dc5;
  const bytes = Buffer.from(text, 'utf-8');
  for (let i = 0; i < bytes.length; i++) {
    hash ^= bytes[i];
    hash = Math.imul(hash, 0x01000193) >>> 0;
  }
  return hash >>> 0;
}

export function wordTokens(text: string): string[] {
  return text.toLowerCase().match(/[\p{L}\p{N}]+/gu) ?? [];
}

/** Character n-grams with word-boundary padding. */
export function charNgrams(text: string, minN: number, maxN: number): string[] {
  const grams: string[] = [];
  for (const word of wordTokens(text)) {
    const padded = ` ${word} `;
    for (let n = minN; n <= maxN; n++) {
      for (let i = 0; i + n <= padded.length; i++) {
        grams.push(padded.slice(i, i + n));
      }
    }
  }
  return grams;
}

function hashedCounts(tokens: string[], width: number): Float64Array {
  const counts = new Float64Array(width);
  for (const token of tokens) {
    counts[fnv1a(token) % width] += 1;
  }
  return counts;
}

function l2NormalizeRows(rows: Float64Array[]): void {
  for (const row of rows) {
    let sq = 0;
    for (let j = 0; j < row.length; j++) sq += row[j] * row[j];
    if (sq > 0) {
      const inv = 1 / Math.sqrt(sq);
      for (let j = 0; j < row.length; j++) row[j] *= inv;
    }
  }
}

function toMatrix(rows: Float64Array[], width: number): Float32Array {
  const out = new Float32Array(rows.length * width);
  for (let i = 0; i < rows.length; i++) out.set(Float32Array.from(rows[i]), i * width);
  return out;
}

/**
 * Hashed term counts reweighted by smoothed idf over the input corpus,
 * then l2-normalized per row: idf(t) = ln((1+N)/(1+df)) + 1.
 */
export function hashingTfidf(texts: string[], width: number): Float32Array {
  const tf = texts.map((t) => hashedCounts(wordTokens(t), width));
  const df = new Float64Array(width);
  for (const row of tf) {
    for (let j = 0; j < width; j++) if (row[j] > 0) df[j] += 1;
  }
  const n = texts.length;
  const idf = new Float64Array(width);
  for (let j = 0; j < width; j++) idf[j] = Math.log((1 + n) / (1 + df[j])) + 1;
  for (const row of tf) {
    for (let j = 0; j < width; j++) row[j] *= idf[j];
  }
  l2NormalizeRows(tf);
  return toMatrix(tf, width);
}

/** Hashed character n-gram counts, l2-normalized per row. */
export function charNgramCounts(texts: string[], width: number,
                                minN = 3, maxN = 4): Float32Array {
  const rows = texts.map((t) => hashedCounts(charNgrams(t, minN, maxN), width));
  l2NormalizeRows(rows);
  return toMatrix(rows, width);
}
