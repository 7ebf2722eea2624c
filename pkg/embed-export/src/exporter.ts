/**
 * Batch export: segmented-document JSON in, binary embedding file out.
 * Writing is atomic: the file is assembled under a .tmp name and renamed
 * into place, so a failed run never leaves a truncated final file.
 */

import * as fs from "node:fs";
import * as path from "node:path";

import { Encoder, resolveEncoder } from "./encoder.js";
import { EmbeddingRecord, serializeEmbeddings } from "./format.js";
import { encodeSegment, encodeSegments } from "./pooling.js";

export interface SegmentedDocumentJson {
  doc_id: string;
  policy: unknown;
  segments: { index: number; text: string; char_span: [number, number] }[];
}

export interface ExportJob {
  /** one or more SegmentedDocument JSON files */
  segmentsInputs: string[];
  modelId: string;
  outPath: string;
  chunkWords?: number;
  batchSize?: number;
  /** overrides modelId resolution; lets callers supply a real model */
  encoder?: Encoder;
}

export interface ExportSummary {
  segmentsWritten: number;
  dim: number;
  model: string;
  outPath: string;
}

export function readSegmentedDocument(filePath: string): SegmentedDocumentJson {
  const parsed = JSON.parse(fs.readFileSync(filePath, "utf-8")) as SegmentedDocumentJson;
  if (typeof parsed.doc_id !== "string" || !Array.isArray(parsed.segments)) {
    throw new Error(`${filePath}: not a segmented-document JSON file`);
  }
  return parsed;
}

export function exportEmbeddings(job: ExportJob): ExportSummary {
  const encoder = job.encoder ?? resolveEncoder(job.modelId);
  const chunkWords = job.chunkWords ?? 400;
  const batchSize = Math.max(1, job.batchSize ?? 32);
  const records: EmbeddingRecord[] = [];
  for (const input of job.segmentsInputs) {
    const doc = readSegmentedDocument(input);
    for (let start = 0; start < doc.segments.length; start += batchSize) {
      const batch = doc.segments.slice(start, start + batchSize);
      let vectors: Float64Array[];
      try {
        vectors = encodeSegments(batch.map((s) => s.text), encoder, chunkWords);
      } catch {
        // batch failed: redo one by one so the error names the segment
        vectors = batch.map((segment) => {
          try {
            return encodeSegment(segment.text, encoder, chunkWords);
          } catch (err) {
            const reason = err instanceof Error ? err.message : String(err);
            throw new Error(`encoding segment ${segment.index} of ${doc.doc_id}: ${reason}`);
          }
        });
      }
      batch.forEach((segment, k) => {
        records.push({ docId: doc.doc_id, index: segment.index, vector: Float32Array.from(vectors[k]) });
      });
    }
  }
  const buffer = serializeEmbeddings(encoder.dim, records);
  const tmpPath = job.outPath + ".tmp";
  fs.mkdirSync(path.dirname(path.resolve(job.outPath)), { recursive: true });
  fs.writeFileSync(tmpPath, buffer);
  fs.renameSync(tmpPath, job.outPath);
  return {
    segmentsWritten: records.length,
    dim: encoder.dim,
    model: encoder.id === job.modelId ? job.modelId : `${job.modelId} (${encoder.id})`,
    outPath: job.outPath,
  };
}
