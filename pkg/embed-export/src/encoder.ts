/**
 * Text encoders. An encoder turns a batch of texts into fixed-dimension
 * vectors; callers can plug in any model behind this interface. The
 * built-in `stub-<dim>` family is fully deterministic (token-hash
 * projections) and exists for tests, fixtures and offline pipelines.
 */

import { tokenizeWithSpans } from "./tokenizer.js";

export interface Encoder {
  readonly id: string;
  readonly dim: number;
  encode(texts: string[]): Float64Array[];
}

/** FNV-1a 32-bit hash. */
function fnv1a(text: string): number {
  let h = 0x811c9dc5;
  for (let i = 0; i < text.length; i++) {
    h ^= text.charCodeAt(i);
    h = Math.imul(h, 0x01000193);
  }
  return h >>> 0;
}

/** mulberry32 PRNG: deterministic stream from a 32-bit seed. */
function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) >>> 0;
    let t = a;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

/**
 * Deterministic bag-of-words encoder: each token hashes to a fixed random
 * direction, a text is the sum of its token directions. Similar token
 * multisets get similar vectors, which is all the tests and fixtures need.
 */
export class StubEncoder implements Encoder {
  readonly id: string;
  readonly dim: number;

  constructor(dim: number) {
    if (!Number.isInteger(dim) || dim < 1) {
      throw new Error(`stub encoder dimension must be a positive integer, got ${dim}`);
    }
    this.id = `stub-${dim}`;
    this.dim = dim;
  }

  private tokenDirection(token: string): Float64Array {
    const rand = mulberry32(fnv1a(token));
    const v = new Float64Array(this.dim);
    for (let i = 0; i < this.dim; i++) {
      v[i] = rand() * 2 - 1;
    }
    return v;
  }

  encode(texts: string[]): Float64Array[] {
    return texts.map((text) => {
      const out = new Float64Array(this.dim);
      const words = tokenizeWithSpans(text);
      for (const { token } of words) {
        const dir = this.tokenDirection(token);
        for (let i = 0; i < this.dim; i++) {
          out[i] += dir[i];
        }
      }
      if (words.length === 0) {
        throw new Error("cannot encode a text with no words");
      }
      return out;
    });
  }
}

const STUB_RE = /^stub-(\d+)$/;

/**
 * Resolve a model id to an encoder. Only the deterministic `stub-<dim>`
 * family is built in; other ids need an Encoder instance supplied in code.
 */
export function resolveEncoder(modelId: string): Encoder {
  const stub = STUB_RE.exec(modelId);
  if (stub) {
    return new StubEncoder(parseInt(stub[1], 10));
  }
  throw new Error(
    `unknown model id ${JSON.stringify(modelId)}: built-in encoders are "stub-<dim>"; ` +
      "pass a custom Encoder to exportEmbeddings for real models",
  );
}
