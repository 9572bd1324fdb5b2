/**
 * Recurrent sentence model: embedding, one LSTM layer, softmax over the
 * word vocabulary plus EOS plus UNK. Scores a caption as the product of
 * per-step target probabilities, one step per word plus the final EOS.
 *
 * Training quality is not a goal here; the exported files only have to
 * be schema-correct and tokenization-aligned.
 */

import * as tf from "@tensorflow/tfjs";

import { Vocab, inputIds, targetIds } from "./vocab";

export interface ModelConfig {
  hiddenSize: number;
  embeddingSize: number;
}

export const DEFAULT_CONFIG: ModelConfig = { hiddenSize: 512, embeddingSize: 300 };

// floor for float32 softmax underflow; keeps exported values finite
export const MIN_PROB = 1e-12;

export function buildModel(vocab: Vocab, config: ModelConfig): tf.LayersModel {
  const model = tf.sequential({
    layers: [
      tf.layers.embedding({
        inputDim: vocab.inputSize,
        outputDim: config.embeddingSize,
      }),
      tf.layers.lstm({ units: config.hiddenSize, returnSequences: true }),
      tf.layers.dense({ units: vocab.outputSize, activation: "softmax" }),
    ],
  });
  model.compile({ optimizer: tf.train.adam(0.01), loss: "categoricalCrossentropy" });
  return model;
}

/**
 * Zero the output layer so every step emits the uniform distribution:
 * each class gets 1/(vocab+1), counting EOS inside the vocabulary.
 */
export function forceUniform(model: tf.LayersModel): void {
  const dense = model.layers[model.layers.length - 1];
  const [kernel, bias] = dense.getWeights();
  dense.setWeights([tf.zerosLike(kernel), tf.zerosLike(bias)]);
}

/**
 * A few epochs of teacher forcing. Sequences are bucketed by length so
 * no padding or masking is needed.
 */
export async function trainModel(
  model: tf.LayersModel,
  vocab: Vocab,
  corpus: string[][],
  epochs = 3,
): Promise<void> {
  const buckets = new Map<number, string[][]>();
  for (const tokens of corpus) {
    const bucket = buckets.get(tokens.length) ?? [];
    bucket.push(tokens);
    buckets.set(tokens.length, bucket);
  }
  for (let epoch = 0; epoch < epochs; epoch++) {
    for (const sentences of buckets.values()) {
      const xs = tf.tensor2d(
        sentences.map((s) => inputIds(vocab, s)),
        [sentences.length, sentences[0].length + 1],
        "int32",
      );
      const targets = sentences.map((s) => targetIds(vocab, s));
      const ys = tf.oneHot(tf.tensor2d(targets, undefined, "int32"), vocab.outputSize);
      await model.fit(xs, ys, { epochs: 1, verbose: 0 });
      xs.dispose();
      ys.dispose();
    }
  }
}

/**
 * Per-step log-probabilities of a caption: one entry per word, then one
 * for EOS. Every entry is finite and at most zero.
 */
export function tokenLogProbs(
  model: tf.LayersModel,
  vocab: Vocab,
  tokens: string[],
): number[] {
  return tf.tidy(() => {
    const ids = inputIds(vocab, tokens);
    const targets = targetIds(vocab, tokens);
    const input = tf.tensor2d([ids], [1, ids.length], "int32");
    const probs = model.predict(input) as tf.Tensor3D;
    const flat = probs.dataSync();
    return targets.map((target, step) => {
      const p = flat[step * vocab.outputSize + target];
      return Math.min(0, Math.log(Math.max(p, MIN_PROB)));
    });
  });
}
