import * as fs from "fs";

import yargs from "yargs";
import { hideBin } from "yargs/helpers";

import { exportTokenLogps } from "./export";
import {
  convertCaptionAnnotations,
  convertInstanceAnnotations,
  extractSceneGraphs,
} from "./convert";
import { writeCaptions, writeObjectLists } from "./formats";

export async function main(argv: string[]): Promise<void> {
  await yargs(argv)
    .command(
      "export",
      "train a recurrent language model and write per-token log-probs",
      (y) =>
        y
          .option("corpus", { type: "string", demandOption: true })
          .option("candidates", { type: "string", demandOption: true })
          .option("output", { type: "string", demandOption: true })
          .option("oov-log", { type: "string" })
          .option("hidden", { type: "number" })
          .option("embedding", { type: "number" })
          .option("epochs", { type: "number" })
          .option("uniform", { type: "boolean", default: false }),
      async (args) => {
        const summary = await exportTokenLogps({
          corpusPath: args.corpus,
          candidatesPath: args.candidates,
          outputPath: args.output,
          oovLogPath: args["oov-log"],
          hiddenSize: args.hidden,
          embeddingSize: args.embedding,
          epochs: args.epochs,
          uniform: args.uniform,
        });
        process.stdout.write(
          `exported ${summary.records} records ` +
            `(${summary.vocabWords} vocabulary words, ${summary.oovSightings} oov sightings)\n`,
        );
      },
    )
    .command(
      "convert",
      "turn dataset annotation archives into caption, scene-graph and object files",
      (y) =>
        y
          .option("captions-json", { type: "string", demandOption: true })
          .option("instances-json", { type: "string" })
          .option("captions-out", { type: "string", demandOption: true })
          .option("graphs-out", { type: "string" })
          .option("objects-out", { type: "string" })
          .option("scorer-bin", { type: "string", default: "capuniq" }),
      (args) => {
        const doc = JSON.parse(fs.readFileSync(args["captions-json"], "utf-8"));
        const captions = convertCaptionAnnotations(doc);
        fs.writeFileSync(args["captions-out"], writeCaptions(captions));
        process.stdout.write(`wrote ${captions.length} captions\n`);
        if (args["objects-out"]) {
          if (!args["instances-json"]) {
            throw new Error("--objects-out needs --instances-json");
          }
          const instances = JSON.parse(fs.readFileSync(args["instances-json"], "utf-8"));
          const objects = convertInstanceAnnotations(instances);
          fs.writeFileSync(args["objects-out"], writeObjectLists(objects));
          process.stdout.write(`wrote objects for ${objects.size} images\n`);
        }
        if (args["graphs-out"]) {
          extractSceneGraphs(args["captions-out"], args["graphs-out"], args["scorer-bin"]);
          process.stdout.write(`wrote scene graphs -> ${args["graphs-out"]}\n`);
        }
      },
    )
    .demandCommand(1)
    .strict()
    .fail((msg, err) => {
      process.stderr.write(`error: ${err ? err.message : msg}\n`);
      process.exit(1);
    })
    .parseAsync();
}

if (require.main === module) {
  main(hideBin(process.argv)).catch((err) => {
    process.stderr.write(`error: ${err instanceof Error ? err.message : err}\n`);
    process.exit(1);
  });
}
