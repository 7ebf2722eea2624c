/**
 * Word counting and chunk boundaries, matching the alignment library's
 * tokenizer convention: lowercase alphanumeric runs are words, everything
 * else separates them.
 */

export interface WordSpan {
  /** word text, lowercased */
  token: string;
  /** start offset in the original text */
  start: number;
  /** end offset, exclusive */
  end: number;
}

const WORD_RE = /[0-9a-z]+/g;

export function tokenizeWithSpans(text: string): WordSpan[] {
  const lowered = text.toLowerCase();
  const spans: WordSpan[] = [];
  for (const match of lowered.matchAll(WORD_RE)) {
    spans.push({ token: match[0], start: match.index ?? 0, end: (match.index ?? 0) + match[0].length });
  }
  return spans;
}

export function wordCount(text: string): number {
  return tokenizeWithSpans(text).length;
}

/**
 * Split text into consecutive chunks of `chunkWords` words (the last chunk
 * may be shorter). Each chunk is the original substring from its first
 * word's start to its last word's end, so punctuation between words is
 * preserved for the encoder.
 */
export function chunkText(text: string, chunkWords: number): string[] {
  if (chunkWords < 1) {
    throw new Error(`chunkWords must be >= 1, got ${chunkWords}`);
  }
  const words = tokenizeWithSpans(text);
  if (words.length === 0) {
    return [];
  }
  if (words.length <= chunkWords) {
    return [text];
  }
  const chunks: string[] = [];
  for (let i = 0; i < words.length; i += chunkWords) {
    const last = Math.min(i + chunkWords, words.length) - 1;
    chunks.push(text.slice(words[i].start, words[last].end));
  }
  return chunks;
}
