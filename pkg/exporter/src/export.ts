/**
 * Export job: train (or force uniform) the recurrent model on a caption
 * corpus, then score every candidate in a candidate file and write the
 * per-token log-probabilities in the toolkit's wire format.
 */

import * as fs from "fs";

import {
  CandidateSet,
  TokenLogProbEntry,
  readCandidateSets,
  readCaptions,
  writeTokenLogps,
} from "./formats";
import { ModelConfig, DEFAULT_CONFIG, buildModel, forceUniform, tokenLogProbs, trainModel } from "./model";
import { isCanonical, tokenize } from "./tokenize";
import { Vocab, buildVocab, oovTokens } from "./vocab";

export interface ExportJob {
  /** captions JSONL used to build the vocabulary and train */
  corpusPath: string;
  /** candidate JSONL whose entries get scored */
  candidatesPath: string;
  /** token log-prob JSONL to write */
  outputPath: string;
  /** unknown-word sightings, one tab-separated line each */
  oovLogPath?: string;
  hiddenSize?: number;
  embeddingSize?: number;
  epochs?: number;
  /** skip training and zero the output layer: uniform 1/(vocab+1) */
  uniform?: boolean;
}

export interface ExportSummary {
  records: number;
  oovSightings: number;
  vocabWords: number;
}

export async function exportTokenLogps(job: ExportJob): Promise<ExportSummary> {
  const corpus = readCaptions(fs.readFileSync(job.corpusPath, "utf-8")).map((c) =>
    tokenize(c.caption),
  );
  const sets = readCandidateSets(fs.readFileSync(job.candidatesPath, "utf-8"));

  const vocab = buildVocab(corpus);
  const config: ModelConfig = {
    hiddenSize: job.hiddenSize ?? DEFAULT_CONFIG.hiddenSize,
    embeddingSize: job.embeddingSize ?? DEFAULT_CONFIG.embeddingSize,
  };
  const model = buildModel(vocab, config);
  if (job.uniform) {
    forceUniform(model);
  } else {
    await trainModel(model, vocab, corpus, job.epochs ?? 3);
  }

  const { entries, oovLines } = scoreCandidates(model, vocab, sets);
  fs.writeFileSync(job.outputPath, writeTokenLogps(entries));
  if (job.oovLogPath !== undefined) {
    fs.writeFileSync(job.oovLogPath, oovLines.join(""));
  }
  return {
    records: entries.length,
    oovSightings: oovLines.length,
    vocabWords: vocab.words.length,
  };
}

function scoreCandidates(
  model: ReturnType<typeof buildModel>,
  vocab: Vocab,
  sets: CandidateSet[],
): { entries: TokenLogProbEntry[]; oovLines: string[] } {
  const entries: TokenLogProbEntry[] = [];
  const oovLines: string[] = [];
  for (const set of sets) {
    set.candidates.forEach((candidate, index) => {
      if (!isCanonical(candidate.tokens)) {
        throw new Error(
          `tokenization mismatch for image '${set.imageId}' candidate ${index}`,
        );
      }
      for (const token of oovTokens(vocab, candidate.tokens)) {
        oovLines.push(`${set.imageId}\t${index}\t${token}\n`);
      }
      entries.push({
        imageId: set.imageId,
        candidateIndex: index,
        tokens: candidate.tokens,
        tokenLogps: tokenLogProbs(model, vocab, candidate.tokens),
      });
    });
  }
  return { entries, oovLines };
}
