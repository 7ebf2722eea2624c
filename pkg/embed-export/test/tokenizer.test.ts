import { describe, expect, it } from "vitest";

import { chunkText, tokenizeWithSpans, wordCount } from "../src/tokenizer.js";

describe("tokenizeWithSpans", () => {
  it("lowercases and splits on non-alphanumeric runs", () => {
    const words = tokenizeWithSpans("Don't stop-thief! The Dodger ran!");
    expect(words.map((w) => w.token)).toEqual(["don", "t", "stop", "thief", "the", "dodger", "ran"]);
  });

  it("keeps spans into the original text", () => {
    const text = "Alpha, beta. GAMMA";
    for (const { token, start, end } of tokenizeWithSpans(text)) {
      expect(text.slice(start, end).toLowerCase()).toBe(token);
    }
  });

  it("empty text has no words", () => {
    expect(wordCount("")).toBe(0);
    expect(wordCount("!!! --- ...")).toBe(0);
  });
});

describe("chunkText", () => {
  it("returns the original text when at or under the budget", () => {
    const text = "one two three four five";
    expect(chunkText(text, 5)).toEqual([text]);
    expect(chunkText(text, 400)).toEqual([text]);
  });

  it("splits into consecutive word chunks, last may be short", () => {
    const words = Array.from({ length: 10 }, (_, i) => `w${i}`);
    const text = words.join(" ");
    const chunks = chunkText(text, 4);
    expect(chunks).toHaveLength(3);
    expect(chunks[0]).toBe("w0 w1 w2 w3");
    expect(chunks[1]).toBe("w4 w5 w6 w7");
    expect(chunks[2]).toBe("w8 w9");
  });

  it("chunk word counts follow the budget", () => {
    const text = Array.from({ length: 1001 }, (_, i) => `t${i}`).join(" ");
    const chunks = chunkText(text, 400);
    expect(chunks.map(wordCount)).toEqual([400, 400, 201]);
  });

  it("preserves punctuation between words inside a chunk", () => {
    const text = "alpha, beta; gamma delta";
    const chunks = chunkText(text, 2);
    expect(chunks[0]).toBe("alpha, beta");
    expect(chunks[1]).toBe("gamma delta");
  });
});
