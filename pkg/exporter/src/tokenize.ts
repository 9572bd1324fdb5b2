/**
 * Tokenization matching the scoring toolkit's contract exactly:
 * lowercase, every run of non-alphanumerics becomes a separator,
 * whitespace split. Sentence probability models add one end-of-sentence
 * event after the last word.
 */

export const EOS = "</s>";

export function tokenize(text: string): string[] {
  const cleaned = text.toLowerCase().replace(/[^a-z0-9]+/g, " ").trim();
  return cleaned === "" ? [] : cleaned.split(" ");
}

/** True when the tokens are already in canonical form. */
export function isCanonical(tokens: string[]): boolean {
  const again = tokenize(tokens.join(" "));
  return again.length === tokens.length && again.every((t, i) => t === tokens[i]);
}
