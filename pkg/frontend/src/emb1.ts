/**
 * EMB1 binary embedding format, little-endian:
 *
 *   magic   4 bytes  "EMB1"
 *   count   u32
 *   dim     u32
 *   entry   u16 key length, UTF-8 key bytes, dim * f32 vector
 *   (repeated count times)
 *
 * The Python side reads this bit-for-bit; keep the layout frozen.
 */

export const MAGIC = "EMB1";
export const HEADER_SIZE = 4 + 4 + 4;

export interface Entry {
  key: string;
  vector: Float32Array;
}

export class Emb1FormatError extends Error {}

/** Exact file size in bytes for the given keys and dimension. */
export function emb1Size(keys: string[], dim: number): number {
  let size = HEADER_SIZE;
  for (const key of keys) {
    size += 2 + Buffer.byteLength(key, "utf-8") + dim * 4;
  }
  return size;
}

export function encodeEmb1(entries: Entry[], dim: number): Buffer {
  const seen = new Set<string>();
  for (const { key, vector } of entries) {
    if (seen.has(key)) {
      throw new Emb1FormatError(`duplicate key ${JSON.stringify(key)}`);
    }
    seen.add(key);
    if (vector.length !== dim) {
      throw new Emb1FormatError(
        `vector for ${JSON.stringify(key)} has ${vector.length} dims, expected ${dim}`,
      );
    }
  }
  const buf = Buffer.alloc(emb1Size(entries.map((e) => e.key), dim));
  buf.write(MAGIC, 0, "ascii");
  buf.writeUInt32LE(entries.length, 4);
  buf.writeUInt32LE(dim, 8);
  let off = HEADER_SIZE;
  for (const { key, vector } of entries) {
    const keyBytes = Buffer.from(key, "utf-8");
    if (keyBytes.length > 0xffff) {
      throw new Emb1FormatError(`key too long: ${key.slice(0, 40)}...`);
    }
    buf.writeUInt16LE(keyBytes.length, off);
    off += 2;
    keyBytes.copy(buf, off);
    off += keyBytes.length;
    for (let i = 0; i < dim; i++) {
      buf.writeFloatLE(vector[i], off);
      off += 4;
    }
  }
  return buf;
}

/** Reader used by the tests to prove round-trip bit-exactness. */
export function decodeEmb1(buf: Buffer): { dim: number; entries: Entry[] } {
  if (buf.length < HEADER_SIZE) {
    throw new Emb1FormatError("file too short for an EMB1 header");
  }
  if (buf.toString("ascii", 0, 4) !== MAGIC) {
    throw new Emb1FormatError(`bad magic ${JSON.stringify(buf.toString("ascii", 0, 4))}`);
  }
  const count = buf.readUInt32LE(4);
  const dim = buf.readUInt32LE(8);
  const entries: Entry[] = [];
  const seen = new Set<string>();
  let off = HEADER_SIZE;
  for (let i = 0; i < count; i++) {
    if (off + 2 > buf.length) throw new Emb1FormatError(`truncated entry ${i}`);
    const keyLen = buf.readUInt16LE(off);
    off += 2;
    if (off + keyLen + dim * 4 > buf.length) {
      throw new Emb1FormatError(`truncated entry ${i}`);
    }
    const key = buf.toString("utf-8", off, off + keyLen);
    off += keyLen;
    const vector = new Float32Array(dim);
    for (let j = 0; j < dim; j++) {
      vector[j] = buf.readFloatLE(off);
      off += 4;
    }
    if (seen.has(key)) throw new Emb1FormatError(`duplicate key ${JSON.stringify(key)}`);
    seen.add(key);
    entries.push({ key, vector });
  }
  if (off !== buf.length) {
    throw new Emb1FormatError(`${buf.length - off} trailing bytes after ${count} entries`);
  }
  return { dim, entries };
}
