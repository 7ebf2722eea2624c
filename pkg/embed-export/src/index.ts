export { Encoder, StubEncoder, resolveEncoder } from "./encoder.js";
export { chunkText, tokenizeWithSpans, wordCount } from "./tokenizer.js";
export { encodeSegment, encodeSegments, l2Normalize, meanPool } from "./pooling.js";
export {
  EmbeddingRecord,
  FORMAT_VERSION,
  MAGIC,
  deserializeEmbeddings,
  fileByteLength,
  recordByteLength,
  serializeEmbeddings,
} from "./format.js";
export {
  ExportJob,
  ExportSummary,
  SegmentedDocumentJson,
  exportEmbeddings,
  readSegmentedDocument,
} from "./exporter.js";
