/**
 * Word-level vocabulary over a tokenized corpus.
 *
 * Output classes are the corpus words plus the end-of-sentence token plus
 * one unknown-word slot, so a uniform output distribution puts
 * 1/(vocab+1) on every class, counting EOS inside "vocab". The
 * beginning-of-sentence id exists on the input side only; the model never
 * predicts it.
 */

export interface Vocab {
  words: string[];
  eosId: number;
  unkId: number;
  bosId: number;
  /** words + EOS + UNK: the softmax width */
  outputSize: number;
  /** outputSize + BOS: the embedding table height */
  inputSize: number;
}

export function buildVocab(corpus: string[][]): Vocab {
  const words = [...new Set(corpus.flat())].sort();
  return {
    words,
    eosId: words.length,
    unkId: words.length + 1,
    bosId: words.length + 2,
    outputSize: words.length + 2,
    inputSize: words.length + 3,
  };
}

export function wordId(vocab: Vocab, word: string): number {
  const id = vocab.words.indexOf(word);
  return id === -1 ? vocab.unkId : id;
}

/** Model input: BOS then the words, unknowns mapped to the UNK slot. */
export function inputIds(vocab: Vocab, tokens: string[]): number[] {
  return [vocab.bosId, ...tokens.map((t) => wordId(vocab, t))];
}

/** Prediction targets: the words then EOS. Same length as inputIds. */
export function targetIds(vocab: Vocab, tokens: string[]): number[] {
  return [...tokens.map((t) => wordId(vocab, t)), vocab.eosId];
}

export function oovTokens(vocab: Vocab, tokens: string[]): string[] {
  return tokens.filter((t) => vocab.words.indexOf(t) === -1);
}
