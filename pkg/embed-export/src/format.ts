/**
 * Binary embedding file codec.
 *
 * Format (little-endian):
 * - 8 bytes: magic "GNATEMB1"
 * - u32 version (1)
 * - u32 dimension
 * - u32 record count
 * - records, each:
 *   - u32 doc-id byte length
 *   - UTF-8 doc id
 *   - u32 segment index
 *   - dimension x float32
 *
 * Vectors must be L2-normalized to within 1e-4 of 1; the reader on the
 * consuming side enforces the same bound.
 */

export const MAGIC = Buffer.from("GNATEMB1", "ascii");
export const FORMAT_VERSION = 1;

export interface EmbeddingRecord {
  docId: string;
  index: number;
  vector: Float32Array;
}

export function recordByteLength(record: EmbeddingRecord): number {
  return 4 + Buffer.byteLength(record.docId, "utf-8") + 4 + record.vector.length * 4;
}

export function fileByteLength(dim: number, records: EmbeddingRecord[]): number {
  let total = MAGIC.length + 12;
  for (const record of records) {
    if (record.vector.length !== dim) {
      throw new Error(
        `record (${record.docId}, ${record.index}) has dimension ${record.vector.length}, expected ${dim}`,
      );
    }
    total += recordByteLength(record);
  }
  return total;
}

function checkNorm(record: EmbeddingRecord): void {
  let sumSq = 0;
  for (let i = 0; i < record.vector.length; i++) {
    sumSq += record.vector[i] * record.vector[i];
  }
  const norm = Math.sqrt(sumSq);
  if (Math.abs(norm - 1) > 1e-4) {
    throw new Error(
      `record (${record.docId}, ${record.index}) has L2 norm ${norm.toFixed(6)}, expected 1 +/- 1e-4`,
    );
  }
}

/** Serialize records (sorted by doc id, then segment index) to a buffer. */
export function serializeEmbeddings(dim: number, records: EmbeddingRecord[]): Buffer {
  const ordered = [...records].sort((a, b) =>
    a.docId < b.docId ? -1 : a.docId > b.docId ? 1 : a.index - b.index,
  );
  const buffer = Buffer.alloc(fileByteLength(dim, ordered));
  MAGIC.copy(buffer, 0);
  let offset = MAGIC.length;
  offset = buffer.writeUInt32LE(FORMAT_VERSION, offset);
  offset = buffer.writeUInt32LE(dim, offset);
  offset = buffer.writeUInt32LE(ordered.length, offset);
  for (const record of ordered) {
    checkNorm(record);
    const id = Buffer.from(record.docId, "utf-8");
    offset = buffer.writeUInt32LE(id.length, offset);
    offset += id.copy(buffer, offset);
    offset = buffer.writeUInt32LE(record.index, offset);
    for (let i = 0; i < record.vector.length; i++) {
      offset = buffer.writeFloatLE(record.vector[i], offset);
    }
  }
  return buffer;
}

/** Parse a buffer produced by serializeEmbeddings (or the Python reader's input). */
export function deserializeEmbeddings(buffer: Buffer): { dim: number; records: EmbeddingRecord[] } {
  if (buffer.length < MAGIC.length + 12 || !buffer.subarray(0, MAGIC.length).equals(MAGIC)) {
    throw new Error("not an embedding file (bad magic)");
  }
  let offset = MAGIC.length;
  const version = buffer.readUInt32LE(offset);
  offset += 4;
  if (version !== FORMAT_VERSION) {
    throw new Error(`unsupported format version ${version}`);
  }
  const dim = buffer.readUInt32LE(offset);
  offset += 4;
  const count = buffer.readUInt32LE(offset);
  offset += 4;
  const records: EmbeddingRecord[] = [];
  for (let r = 0; r < count; r++) {
    if (offset + 4 > buffer.length) {
      throw new Error(`truncated record header at byte ${offset}`);
    }
    const idLength = buffer.readUInt32LE(offset);
    offset += 4;
    if (offset + idLength + 4 + dim * 4 > buffer.length) {
      throw new Error(`truncated record at byte ${offset}`);
    }
    const docId = buffer.subarray(offset, offset + idLength).toString("utf-8");
    offset += idLength;
    const index = buffer.readUInt32LE(offset);
    offset += 4;
    const vector = new Float32Array(dim);
    for (let i = 0; i < dim; i++) {
      vector[i] = buffer.readFloatLE(offset);
      offset += 4;
    }
    records.push({ docId, index, vector });
  }
  return { dim, records };
}
