"""Tuple matching, precision/recall with the harmonic-mean score, and the
hallucination rate over object mentions.

Matching treats synonymy as a relation, not an equivalence, so a greedy
pairing can be suboptimal; an exact maximum bipartite matching is used
instead (graphs here are caption-sized, so augmenting paths are cheap).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import IO, Iterable, Mapping, Sequence

from .concepts import ConceptTuple, SceneGraph, SynonymLexicon, canonical_key
from .extraction import ExtractorConfig, extract_tuples


def tuples_match(a: ConceptTuple, b: ConceptTuple, lex: SynonymLexicon) -> bool:
    """Same arity and every aligned slot pair equal or sharing a synset."""
    return a.arity == b.arity and all(
        lex.match(x, y) for x, y in zip(a.slots, b.slots)
    )


@dataclass(frozen=True)
class MatchResult:
    matched_pairs: tuple[tuple[ConceptTuple, ConceptTuple], ...]
    num_predicted: int
    num_reference: int

    @property
    def matched(self) -> int:
        return len(self.matched_pairs)


def match_tuples(P: SceneGraph, G: SceneGraph, lex: SynonymLexicon) -> MatchResult:
    """Maximum bipartite matching between prediction and reference tuples.

    Kuhn's augmenting-path algorithm; each side's tuple is used at most
    once, and the matched count is the true maximum, independent of input
    order.
    """
    preds = sorted(P.tuples, key=canonical_key)
    refs = sorted(G.tuples, key=canonical_key)
    adjacency = [
        [j for j, g in enumerate(refs) if tuples_match(p, g, lex)] for p in preds
    ]
    owner = [-1] * len(refs)  # reference index -> matched prediction index

    def augment(i: int, visited: list[bool]) -> bool:
        for j in adjacency[i]:
            if visited[j]:
                continue
            visited[j] = True
            if owner[j] < 0 or augment(owner[j], visited):
                owner[j] = i
                return True
        return False

    for i in range(len(preds)):
        augment(i, [False] * len(refs))

    pairs = tuple(
        (preds[owner[j]], refs[j]) for j in range(len(refs)) if owner[j] >= 0
    )
    return MatchResult(pairs, num_predicted=len(preds), num_reference=len(refs))


@dataclass(frozen=True)
class SpiceScore:
    precision: float
    recall: float
    spice: float


def spice(P: SceneGraph, G: SceneGraph, lex: SynonymLexicon) -> SpiceScore:
    """Precision, recall and their harmonic mean over matched tuples.

    Empty prediction or reference sides, or zero matches, give 0.
    """
    result = match_tuples(P, G, lex)
    precision = result.matched / result.num_predicted if result.num_predicted else 0.0
    recall = result.matched / result.num_reference if result.num_reference else 0.0
    f = harmonic_mean(precision, recall)
    return SpiceScore(precision, recall, f)


def harmonic_mean(a: float, b: float) -> float:
    if a <= 0.0 or b <= 0.0:
        return 0.0
    return 2.0 * a * b / (a + b)


def mention_objects(
    caption: str, cfg: ExtractorConfig, vocab: set[str] | None = None
) -> list[str]:
    """Objects a caption mentions: extracted arity-1 tuples, restricted to
    the detection vocabulary when one is supplied."""
    graph = extract_tuples(caption, cfg)
    objects = sorted(t.slots[0] for t in graph.tuples if t.arity == 1)
    if vocab is not None:
        objects = [o for o in objects if o in vocab]
    return objects


def chairs(
    mentions: Mapping[str, Sequence[str]] | Iterable[tuple[str, Sequence[str]]],
    gt_objects: Mapping[str, Sequence[str]],
    lex: SynonymLexicon,
) -> float:
    """Fraction of captions mentioning at least one object that
    synonym-matches none of its image's ground-truth objects.

    ``mentions`` maps image_id to one caption's mentioned-object list; an
    iterable of (image_id, mentions) pairs is accepted for scoring several
    captions of the same image.  Captions mentioning nothing contribute 0.
    """
    if isinstance(mentions, Mapping):
        entries: Iterable[tuple[str, Sequence[str]]] = mentions.items()
    else:
        entries = mentions
    total = 0
    hallucinated = 0
    for image_id, mentioned in entries:
        if image_id not in gt_objects:
            raise ValueError(f"no ground-truth objects for image {image_id!r}")
        truth = gt_objects[image_id]
        total += 1
        if any(not any(lex.match(m, g) for g in truth) for m in mentioned):
            hallucinated += 1
    return hallucinated / total if total else 0.0


def write_object_lists(objects: Mapping[str, Sequence[str]], fp: IO[str]) -> None:
    """One JSON record per line: {image_id, objects: [...]}."""
    for image_id, objs in objects.items():
        record = {"image_id": image_id, "objects": sorted(set(objs))}
        fp.write(json.dumps(record, ensure_ascii=False) + "\n")


def read_object_lists(fp: IO[str]) -> dict[str, list[str]]:
    objects: dict[str, list[str]] = {}
    for lineno, line in enumerate(fp, start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
            image_id = record["image_id"]
            objs = [str(o) for o in record["objects"]]
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise ValueError(f"malformed object line {lineno}") from exc
        if image_id in objects:
            raise ValueError(f"duplicate image_id {image_id!r} at line {lineno}")
        objects[image_id] = objs
    return objects
