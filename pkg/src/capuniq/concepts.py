"""Visual-concept data model and corpus document-frequency index.

A concept tuple is an object ``(dog)``, an object-attribute pair
``(dog, black)`` or a subject-relation-object triple ``(man, riding, horse)``.
A scene graph is the deduplicated set of tuples for one image.  The corpus
index records, for each concept, in how many distinct images it appears;
that count is the basis of the uniqueness weighting.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import IO, Iterable, Iterator

KEY_SEPARATOR = "|"


def normalize_slot(text: str) -> str:
    """Lowercase, trim, collapse inner whitespace and strip the key separator."""
    cleaned = " ".join(text.replace(KEY_SEPARATOR, " ").lower().split())
    return cleaned


@dataclass(frozen=True)
class ConceptTuple:
    """One visual concept: 1 slot (object), 2 (object, attribute) or 3
    (subject, relation, object).  Slots are stored normalized."""

    slots: tuple[str, ...]

    def __post_init__(self):
        if not 1 <= len(self.slots) <= 3:
            raise ValueError(f"tuple arity must be 1-3, got {len(self.slots)}")
        normalized = tuple(normalize_slot(s) for s in self.slots)
        if any(not s for s in normalized):
            raise ValueError(f"empty slot in tuple {self.slots!r}")
        object.__setattr__(self, "slots", normalized)

    @property
    def arity(self) -> int:
        return len(self.slots)

    def objects(self) -> tuple[str, ...]:
        """The object slots implied by this tuple: slot 0 always, and the
        object of a relation triple."""
        if self.arity == 3:
            return (self.slots[0], self.slots[2])
        return (self.slots[0],)

    def __iter__(self) -> Iterator[str]:
        return iter(self.slots)


def concept(*slots: str) -> ConceptTuple:
    """Shorthand constructor: ``concept("man", "riding", "horse")``."""
    return ConceptTuple(tuple(slots))


def canonical_key(t: ConceptTuple) -> str:
    """Deterministic string key, injective over normalized tuples."""
    return KEY_SEPARATOR.join(t.slots)


@dataclass(frozen=True)
class SceneGraph:
    """An image's set of concept tuples (set semantics: duplicates collapse)."""

    image_id: str
    tuples: frozenset[ConceptTuple]

    def __init__(self, image_id: str, tuples: Iterable[ConceptTuple]):
        object.__setattr__(self, "image_id", image_id)
        object.__setattr__(self, "tuples", frozenset(tuples))

    def __len__(self) -> int:
        return len(self.tuples)

    def keys(self) -> set[str]:
        return {canonical_key(t) for t in self.tuples}

    def union(self, other: "SceneGraph") -> "SceneGraph":
        return SceneGraph(self.image_id, self.tuples | other.tuples)


@dataclass(frozen=True)
class CorpusIndex:
    """Concept -> number of corpus images containing it.

    An image "contains" a concept when the union of tuples from all its
    reference annotations holds a key-equal tuple.  Keys with zero count are
    absent from ``df``.
    """

    num_images: int
    df: dict[str, int]

    def count(self, t: ConceptTuple) -> int:
        return self.df.get(canonical_key(t), 0)


def build_index(graphs: Iterable[SceneGraph]) -> CorpusIndex:
    """Count, per concept key, the distinct images whose graph contains it.

    Raises ValueError on an empty collection or a repeated image_id.
    """
    df: dict[str, int] = {}
    seen_images: set[str] = set()
    for graph in graphs:
        if graph.image_id in seen_images:
            raise ValueError(f"duplicate image_id in corpus: {graph.image_id!r}")
        seen_images.add(graph.image_id)
        for key in graph.keys():
            df[key] = df.get(key, 0) + 1
    if not seen_images:
        raise ValueError("empty corpus")
    return CorpusIndex(num_images=len(seen_images), df=df)


def save_index(index: CorpusIndex, fp: IO[str]) -> None:
    """Header line with the image count, then sorted ``key<TAB>df`` lines."""
    fp.write(json.dumps({"num_images": index.num_images}) + "\n")
    for key in sorted(index.df):
        fp.write(f"{key}\t{index.df[key]}\n")


def load_index(fp: IO[str]) -> CorpusIndex:
    header = fp.readline()
    if not header.strip():
        raise ValueError("index file is empty")
    try:
        num_images = int(json.loads(header)["num_images"])
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise ValueError(f"bad index header: {header.strip()!r}") from exc
    df: dict[str, int] = {}
    for lineno, line in enumerate(fp, start=2):
        if not line.strip():
            continue
        try:
            key, count = line.rstrip("\n").split("\t")
            df[key] = int(count)
        except ValueError as exc:
            raise ValueError(f"bad index line {lineno}: {line.strip()!r}") from exc
    index = CorpusIndex(num_images=num_images, df=df)
    if num_images < 1:
        raise ValueError("index must cover at least one image")
    for key, count in df.items():
        if not 0 < count <= num_images:
            raise ValueError(f"df out of range for {key!r}: {count}")
    return index


@dataclass(frozen=True)
class SynonymLexicon:
    """Lemma -> synset ids.  Two lemmas synonym-match when equal or when
    their synset sets intersect; the relation is symmetric but not
    transitive across synsets."""

    synsets: dict[str, frozenset[str]] = field(default_factory=dict)

    def match(self, a: str, b: str) -> bool:
        if a == b:
            return True
        sa = self.synsets.get(a)
        if not sa:
            return False
        sb = self.synsets.get(b)
        return bool(sb) and not sa.isdisjoint(sb)


def load_lexicon(fp: IO[str]) -> SynonymLexicon:
    """Parse ``lemma<TAB>synset_id[,synset_id...]`` lines."""
    synsets: dict[str, frozenset[str]] = {}
    for lineno, line in enumerate(fp, start=1):
        line = line.rstrip("\n")
        if not line.strip() or line.startswith("#"):
            continue
        try:
            lemma, ids = line.split("\t")
        except ValueError as exc:
            raise ValueError(f"bad lexicon line {lineno}: {line!r}") from exc
        lemma = normalize_slot(lemma)
        parsed = frozenset(i.strip() for i in ids.split(",") if i.strip())
        if not lemma or not parsed:
            raise ValueError(f"bad lexicon line {lineno}: {line!r}")
        synsets[lemma] = synsets.get(lemma, frozenset()) | parsed
    return SynonymLexicon(synsets)


def save_lexicon(lexicon: SynonymLexicon, fp: IO[str]) -> None:
    for lemma in sorted(lexicon.synsets):
        fp.write(f"{lemma}\t{','.join(sorted(lexicon.synsets[lemma]))}\n")


def write_scene_graphs(graphs: Iterable[SceneGraph], fp: IO[str]) -> None:
    """One JSON record per line: {image_id, tuples: [[slot, ...], ...]}."""
    for graph in graphs:
        record = {
            "image_id": graph.image_id,
            "tuples": sorted(list(t.slots) for t in graph.tuples),
        }
        fp.write(json.dumps(record, ensure_ascii=False) + "\n")


def read_scene_graphs(fp: IO[str]) -> list[SceneGraph]:
    """Parse the scene-graph line format; image_ids must be unique."""
    graphs: list[SceneGraph] = []
    seen: set[str] = set()
    for lineno, line in enumerate(fp, start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
            image_id = record["image_id"]
            raw_tuples = record["tuples"]
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise ValueError(f"malformed scene-graph line {lineno}") from exc
        if image_id in seen:
            raise ValueError(f"duplicate image_id {image_id!r} at line {lineno}")
        seen.add(image_id)
        tuples = []
        for slots in raw_tuples:
            if not isinstance(slots, list) or not 1 <= len(slots) <= 3:
                raise ValueError(
                    f"tuple arity outside 1-3 at line {lineno}: {slots!r}"
                )
            tuples.append(ConceptTuple(tuple(slots)))
        graphs.append(SceneGraph(image_id, tuples))
    return graphs
