/**
 * Long-text handling: texts over the chunk budget are encoded chunk by
 * chunk and mean-pooled into one vector; the final vector is always
 * L2-normalized (pooling first, normalization once at the end).
 */

import { Encoder } from "./encoder.js";
import { chunkText, wordCount } from "./tokenizer.js";

export function l2Normalize(v: Float64Array): Float64Array {
  let sumSq = 0;
  for (let i = 0; i < v.length; i++) {
    sumSq += v[i] * v[i];
  }
  const norm = Math.sqrt(sumSq);
  if (norm === 0) {
    throw new Error("cannot normalize a zero vector");
  }
  const out = new Float64Array(v.length);
  for (let i = 0; i < v.length; i++) {
    out[i] = v[i] / norm;
  }
  return out;
}

export function meanPool(vectors: Float64Array[]): Float64Array {
  const dim = vectors[0].length;
  const out = new Float64Array(dim);
  for (const v of vectors) {
    for (let i = 0; i < dim; i++) {
      out[i] += v[i];
    }
  }
  for (let i = 0; i < dim; i++) {
    out[i] /= vectors.length;
  }
  return out;
}

/**
 * Encode a batch of segments with one encoder call. Each text at or under
 * `chunkWords` words is a single encoder input; longer texts contribute
 * one input per consecutive `chunkWords`-word chunk (last may be short)
 * and are mean-pooled afterwards. Every result is unit length.
 */
export function encodeSegments(texts: string[], encoder: Encoder, chunkWords = 400): Float64Array[] {
  const chunksPerText: string[][] = texts.map((text) => {
    if (wordCount(text) === 0) {
      throw new Error("EmptySegment: segment has no words to encode");
    }
    return chunkText(text, chunkWords);
  });
  const encoded = encoder.encode(chunksPerText.flat());
  const out: Float64Array[] = [];
  let cursor = 0;
  for (const chunks of chunksPerText) {
    const vectors = encoded.slice(cursor, cursor + chunks.length);
    cursor += chunks.length;
    out.push(l2Normalize(vectors.length === 1 ? vectors[0] : meanPool(vectors)));
  }
  return out;
}

/** Single-segment convenience wrapper around encodeSegments. */
export function encodeSegment(text: string, encoder: Encoder, chunkWords = 400): Float64Array {
  return encodeSegments([text], encoder, chunkWords)[0];
}
