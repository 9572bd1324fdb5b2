export { tokenize, isCanonical, EOS } from "./tokenize";
export { buildVocab, wordId, inputIds, targetIds, oovTokens, Vocab } from "./vocab";
export {
  buildModel,
  forceUniform,
  trainModel,
  tokenLogProbs,
  ModelConfig,
  DEFAULT_CONFIG,
  MIN_PROB,
} from "./model";
export {
  readCandidateSets,
  readCaptions,
  writeCaptions,
  writeTokenLogps,
  writeObjectLists,
  CandidateRecord,
  CandidateSet,
  CaptionRecord,
  TokenLogProbEntry,
} from "./formats";
export { exportTokenLogps, ExportJob, ExportSummary } from "./export";
export {
  convertCaptionAnnotations,
  convertInstanceAnnotations,
  extractSceneGraphs,
} from "./convert";
