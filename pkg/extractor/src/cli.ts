#!/usr/bin/env node
/**
 * gaffect-extract --images DIR --out DIR
 *                 [--split train|validation|test] [--labels PATH]
 *                 [--embed projection|tfjs] [--embed-model PATH]
 *                 [--fullimage-model PATH] [--no-fullimage]
 *
 * Exit codes: 0 success, 1 usage, 2 data/configuration error.
 */

import { makeEmbeddingBackend } from "./embed";
import { extractDataset, parseLabelsFile } from "./extract";
import { modelScorer, stubScorer, Scorer } from "./score";

interface CliArgs {
  images?: string;
  out?: string;
  split: "train" | "validation" | "test";
  labels?: string;
  embed: string;
  embedModel?: string;
  fullimageModel?: string;
  noFullimage: boolean;
}

const USAGE =
  "usage: gaffect-extract --images DIR --out DIR [--split SPLIT] [--labels PATH] " +
  "[--embed projection|tfjs] [--embed-model PATH] [--fullimage-model PATH] [--no-fullimage]";

function parseArgs(argv: string[]): CliArgs {
  const args: CliArgs = { split: "test", embed: "projection", noFullimage: false };
  for (let i = 0; i < argv.length; i++) {
    const flag = argv[i];
    const needsValue = () => {
      const value = argv[++i];
      if (value === undefined) throw new Error(`${flag} needs a value`);
      return value;
    };
    switch (flag) {
      case "--images": args.images = needsValue(); break;
      case "--out": args.out = needsValue(); break;
      case "--split": {
        const value = needsValue();
        if (!["train", "validation", "test"].includes(value)) {
          throw new Error(`--split must be train|validation|test, got ${value}`);
        }
        args.split = value as CliArgs["split"];
        break;
      }
      case "--labels": args.labels = needsValue(); break;
      case "--embed": args.embed = needsValue(); break;
      case "--embed-model": args.embedModel = needsValue(); break;
      case "--fullimage-model": args.fullimageModel = needsValue(); break;
      case "--no-fullimage": args.noFullimage = true; break;
      case "-h":
      case "--help":
        console.log(USAGE);
        process.exit(0);
      default:
        throw new Error(`unknown flag ${flag}`);
    }
  }
  if (!args.images || !args.out) throw new Error("--images and --out are required");
  return args;
}

export function main(argv: string[]): number {
  let args: CliArgs;
  try {
    args = parseArgs(argv);
  } catch (err) {
    console.error(`gaffect-extract: ${(err as Error).message}`);
    console.error(USAGE);
    return 1;
  }
  try {
    let scorer: Scorer | null = stubScorer();
    if (args.noFullimage) scorer = null;
    else if (args.fullimageModel) scorer = modelScorer(args.fullimageModel);
    const summary = extractDataset({
      imagesDir: args.images!,
      outDir: args.out!,
      split: args.split,
      labels: args.labels ? parseLabelsFile(args.labels) : undefined,
      embedBackend: makeEmbeddingBackend(args.embed, args.embedModel),
      scorer,
      log: (message) => console.error(message),
    });
    const faces = summary.images.reduce((acc, r) => acc + r.facesEmitted, 0);
    const noface = summary.images.filter((r) => r.facesEmitted === 0).length;
    console.error(
      `extracted ${summary.images.length} images (${faces} faces, ` +
        `${noface} with none, ${summary.undecodable.length} undecodable)`
    );
    console.log(summary.manifestPath);
    return 0;
  } catch (err) {
    console.error(`gaffect-extract: ${(err as Error).message}`);
    return 2;
  }
}

if (require.main === module) {
  process.exit(main(process.argv.slice(2)));
}
