/**
 * DMAT binary matrix format, matching the engine byte for byte:
 * magic "DMAT", version u32 LE = 1, rows u32 LE, cols u32 LE,
 * rows*cols float32 LE row-major, then an optional trailing name block
 * (u32 LE byte length + UTF-8 bytes). No padding anywhere.
 */

export const DMAT_MAGIC = 'DMAT';
export const DMAT_VERSION = 1;

export interface Matrix {
  rows: number;
  cols: number;
  /** row-major, length rows*cols */
  data: Float32Array;
  name?: string;
}

export function encodeDmat(matrix: Matrix): Buffer {
  const { rows, cols, data, name } = matrix;
  if (data.length !== rows * cols) {
    throw new Error(`matrix data length ${data.length} != ${rows}x${cols}`);
  }
  const nameBytes = Buffer.from(name ?? '', 'utf-8');
  const out = Buffer.alloc(16 + rows * cols * 4 + 4 + nameBytes.length);
  let off = 0;
  out.write(DMAT_MAGIC, off, 'ascii'); off += 4;
  off = out.writeUInt32LE(DMAT_VERSION, off);
  off = out.writeUInt32LE(rows, off);
  off = out.writeUInt32LE(cols, off);
  for (let i = 0; i < data.length; i++) {
    off = out.writeFloatLE(data[i], off);
  }
  off = out.writeUInt32LE(nameBytes.length, off);
  nameBytes.copy(out, off);
  return out;
}

export function decodeDmat(buf: Buffer): Matrix {
  if (buf.length < 4 || buf.toString('ascii', 0, 4) !== DMAT_MAGIC) {
    throw new Error('bad magic at byte 0');
  }
  if (buf.length < 16) {
    throw new Error(`truncated header at byte ${buf.length}`);
  }
  const version = buf.readUInt32LE(4);
  if (version !== DMAT_VERSION) {
    throw new Error(`unsupported format version ${version}`);
  }
  const rows = buf.readUInt32LE(8);
  const cols = buf.readUInt32LE(12);
  const need = 16 + rows * cols * 4;
  if (buf.length < need) {
    throw new Error(`truncated payload at byte ${buf.length} (need ${need})`);
  }
  const data = new Float32Array(rows * cols);
  for (let i = 0; i < data.length; i++) {
    data[i] = buf.readFloatLE(16 + i * 4);
  }
  let name: string | undefined;
  if (buf.length > need) {
    const nameLen = buf.readUInt32LE(need);
    name = buf.toString('utf-8', need + 4, need + 4 + nameLen);
  }
  return { rows, cols, data, name };
}
