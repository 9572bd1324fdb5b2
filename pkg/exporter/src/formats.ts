/**
 * Line-oriented wire formats shared with the scoring toolkit. One JSON
 * record per line throughout; blank lines are skipped.
 */

export interface CandidateRecord {
  tokens: string[];
  logpCond: number;
}

export interface CandidateSet {
  imageId: string;
  candidates: CandidateRecord[];
}

export interface CaptionRecord {
  imageId: string;
  caption: string;
}

export interface TokenLogProbEntry {
  imageId: string;
  candidateIndex: number;
  tokens: string[];
  tokenLogps: number[];
}

function splitLines(text: string): { line: string; lineno: number }[] {
  return text
    .split("\n")
    .map((line, i) => ({ line, lineno: i + 1 }))
    .filter(({ line }) => line.trim() !== "");
}

export function readCandidateSets(text: string): CandidateSet[] {
  const sets: CandidateSet[] = [];
  const seen = new Set<string>();
  for (const { line, lineno } of splitLines(text)) {
    let record: any;
    try {
      record = JSON.parse(line);
    } catch {
      throw new Error(`malformed candidate line ${lineno}`);
    }
    if (
      typeof record?.image_id !== "string" ||
      !Array.isArray(record?.candidates)
    ) {
      throw new Error(`malformed candidate line ${lineno}`);
    }
    if (seen.has(record.image_id)) {
      throw new Error(`duplicate image_id '${record.image_id}' at line ${lineno}`);
    }
    seen.add(record.image_id);
    const candidates = record.candidates.map((c: any) => {
      if (!Array.isArray(c?.tokens) || typeof c?.logp_cond !== "number") {
        throw new Error(`bad candidate at line ${lineno}`);
      }
      return { tokens: c.tokens.map(String), logpCond: c.logp_cond };
    });
    if (candidates.length === 0) {
      throw new Error(`no candidates for image '${record.image_id}' at line ${lineno}`);
    }
    sets.push({ imageId: record.image_id, candidates });
  }
  return sets;
}

export function readCaptions(text: string): CaptionRecord[] {
  const captions: CaptionRecord[] = [];
  for (const { line, lineno } of splitLines(text)) {
    let record: any;
    try {
      record = JSON.parse(line);
    } catch {
      throw new Error(`malformed caption line ${lineno}`);
    }
    if (typeof record?.image_id !== "string" || typeof record?.caption !== "string") {
      throw new Error(`malformed caption line ${lineno}`);
    }
    captions.push({ imageId: record.image_id, caption: record.caption });
  }
  return captions;
}

export function writeCaptions(captions: CaptionRecord[]): string {
  return captions
    .map((c) => JSON.stringify({ image_id: c.imageId, caption: c.caption }) + "\n")
    .join("");
}

export function writeTokenLogps(entries: TokenLogProbEntry[]): string {
  return entries
    .map(
      (e) =>
        JSON.stringify({
          image_id: e.imageId,
          candidate_index: e.candidateIndex,
          tokens: e.tokens,
          token_logps: e.tokenLogps,
        }) + "\n",
    )
    .join("");
}

export function writeObjectLists(objects: Map<string, string[]>): string {
  let out = "";
  for (const [imageId, objs] of objects) {
    out +=
      JSON.stringify({ image_id: imageId, objects: [...new Set(objs)].sort() }) + "\n";
  }
  return out;
}
