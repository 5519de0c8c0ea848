import { describe, expect, it } from 'vitest';

import { decodeDmat, encodeDmat } from '../src/dmat.js';

describe('dmat codec', () => {
  it('round-trips bit-identically', () => {
    const data = Float32Array.from([1.5, -2.25, 0.125, 42, 3.0e-7, 9]);
    const blob = encodeDmat({ rows: 3, cols: 2, data, name: 'emb' });
    const back = decodeDmat(blob);
    expect(back.rows).toBe(3);
    expect(back.cols).toBe(2);
    expect(back.name).toBe('emb');
    expect(Array.from(back.data)).toEqual(Array.from(data));
    expect(encodeDmat(back as Parameters<typeof encodeDmat>[0]).equals(blob)).toBe(true);
  });

  it('writes the exact header layout', () => {
    const blob = encodeDmat({ rows: 1, cols: 1, data: Float32Array.from([1]), name: 'v' });
    expect(blob.toString('ascii', 0, 4)).toBe('DMAT');
    expect(blob.readUInt32LE(4)).toBe(1);  // format version
    expect(blob.readUInt32LE(8)).toBe(1);  // rows
    expect(blob.readUInt32LE(12)).toBe(1); // cols
    expect(blob.readFloatLE(16)).toBe(1);
    expect(blob.readUInt32LE(20)).toBe(1); // name byte length
    expect(blob.toString('utf-8', 24)).toBe('v');
  });

  it('rejects malformed input', () => {
    expect(() => decodeDmat(Buffer.from('NOPE'))).toThrow(/magic/);
    const blob = encodeDmat({ rows: 2, cols: 2, data: Float32Array.from([1, 2, 3, 4]) });
    expect(() => decodeDmat(blob.subarray(0, 20))).toThrow(/truncated/);
  });

  it('rejects shape mismatch at encode time', () => {
    expect(() => encodeDmat({ rows: 2, cols: 2, data: Float32Array.from([1]) }))
      .toThrow(/length/);
  });
});
