/**
 * Converters from the public caption datasets' annotation JSON into the
 * toolkit's line formats. Caption archives carry
 * {images, annotations: [{id, image_id, caption}]}; object archives carry
 * {annotations: [{id, image_id, category_id}], categories: [{id, name}]}.
 * Image ids are stringified; output order follows ascending annotation id
 * so conversion is deterministic regardless of input order.
 */

import { spawnSync } from "child_process";

import { CaptionRecord } from "./formats";

interface CaptionAnnotation {
  id: number;
  imageId: string;
  caption: string;
}

function checkDuplicateIds(ids: number[]): void {
  const seen = new Set<number>();
  for (const id of ids) {
    if (seen.has(id)) {
      throw new Error(`duplicate annotation id ${id}`);
    }
    seen.add(id);
  }
}

export function convertCaptionAnnotations(doc: unknown): CaptionRecord[] {
  const annotations = (doc as any)?.annotations;
  if (!Array.isArray(annotations)) {
    throw new Error("unknown annotation schema");
  }
  const parsed: CaptionAnnotation[] = annotations.map((a: any) => {
    if (typeof a?.caption !== "string" || a?.id === undefined || a?.image_id === undefined) {
      throw new Error("unknown annotation schema");
    }
    return { id: Number(a.id), imageId: String(a.image_id), caption: a.caption };
  });
  checkDuplicateIds(parsed.map((a) => a.id));
  parsed.sort((a, b) => a.id - b.id);
  return parsed.map(({ imageId, caption }) => ({ imageId, caption }));
}

export function convertInstanceAnnotations(doc: unknown): Map<string, string[]> {
  const annotations = (doc as any)?.annotations;
  const categories = (doc as any)?.categories;
  if (!Array.isArray(annotations) || !Array.isArray(categories)) {
    throw new Error("unknown annotation schema");
  }
  const names = new Map<number, string>();
  for (const c of categories) {
    if (c?.id === undefined || typeof c?.name !== "string") {
      throw new Error("unknown annotation schema");
    }
    names.set(Number(c.id), c.name);
  }
  const ids: number[] = [];
  const objects = new Map<string, string[]>();
  for (const a of annotations) {
    if (a?.id === undefined || a?.image_id === undefined || a?.category_id === undefined) {
      throw new Error("unknown annotation schema");
    }
    ids.push(Number(a.id));
    const name = names.get(Number(a.category_id));
    if (name === undefined) {
      throw new Error(`unknown category id ${a.category_id}`);
    }
    const imageId = String(a.image_id);
    const list = objects.get(imageId) ?? [];
    list.push(name);
    objects.set(imageId, list);
  }
  checkDuplicateIds(ids);
  return objects;
}

/**
 * Merged per-image reference tuples come from the scoring toolkit's own
 * extractor, driven through its command line.
 */
export function extractSceneGraphs(
  captionsPath: string,
  outputPath: string,
  bin = "capuniq",
): void {
  const result = spawnSync(
    bin,
    ["extract", "--captions", captionsPath, "--output", outputPath],
    { encoding: "utf-8" },
  );
  if (result.error) {
    throw result.error;
  }
  if (result.status !== 0) {
    throw new Error(`scene-graph extraction failed: ${(result.stderr ?? "").trim()}`);
  }
}
