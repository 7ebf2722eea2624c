#!/usr/bin/env node
/**
 * embed-export --segments seg.json [--segments more.json] --model stub-384
 *              --out emb.bin [--chunk-words 400] [--batch-size 32]
 *
 * Prints a one-line JSON export log (model id, dimension, segment count)
 * on success. Exit codes: 0 success, 1 runtime error, 2 usage error.
 */

import { exportEmbeddings } from "./exporter.js";

interface CliArgs {
  segments: string[];
  model?: string;
  out?: string;
  chunkWords: number;
  batchSize: number;
}

const USAGE =
  "usage: embed-export --segments <seg.json> [--segments ...] --model <id> --out <emb.bin> " +
  "[--chunk-words N] [--batch-size N]";

export function parseArgs(argv: string[]): CliArgs {
  const args: CliArgs = { segments: [], chunkWords: 400, batchSize: 32 };
  for (let i = 0; i < argv.length; i++) {
    const flag = argv[i];
    const need = (): string => {
      const value = argv[++i];
      if (value === undefined) {
        throw new UsageError(`missing value for ${flag}`);
      }
      return value;
    };
    switch (flag) {
      case "--segments":
        args.segments.push(need());
        break;
      case "--model":
        args.model = need();
        break;
      case "--out":
        args.out = need();
        break;
      case "--chunk-words":
        args.chunkWords = parsePositiveInt(flag, need());
        break;
      case "--batch-size":
        args.batchSize = parsePositiveInt(flag, need());
        break;
      case "--help":
      case "-h":
        throw new HelpRequested();
      default:
        throw new UsageError(`unknown argument ${flag}`);
    }
  }
  if (args.segments.length === 0 || !args.model || !args.out) {
    throw new UsageError("--segments, --model and --out are required");
  }
  return args;
}

function parsePositiveInt(flag: string, value: string): number {
  const parsed = Number(value);
  if (!Number.isInteger(parsed) || parsed < 1) {
    throw new UsageError(`${flag} needs a positive integer, got ${value}`);
  }
  return parsed;
}

export class UsageError extends Error {}
class HelpRequested extends Error {}

export function main(argv: string[]): number {
  let args: CliArgs;
  try {
    args = parseArgs(argv);
  } catch (err) {
    if (err instanceof HelpRequested) {
      console.log(USAGE);
      return 0;
    }
    console.error(`error: ${(err as Error).message}`);
    console.error(USAGE);
    return 2;
  }
  try {
    const summary = exportEmbeddings({
      segmentsInputs: args.segments,
      modelId: args.model!,
      outPath: args.out!,
      chunkWords: args.chunkWords,
      batchSize: args.batchSize,
    });
    console.log(
      JSON.stringify({
        model: summary.model,
        dim: summary.dim,
        segments_written: summary.segmentsWritten,
        out: summary.outPath,
      }),
    );
    return 0;
  } catch (err) {
    console.error(`error: ${(err as Error).message}`);
    return 1;
  }
}

import { pathToFileURL } from "node:url";

if (process.argv[1] !== undefined && import.meta.url === pathToFileURL(process.argv[1]).href) {
  process.exit(main(process.argv.slice(2)));
}
