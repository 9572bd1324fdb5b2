"""Rule-based tuple extraction from caption text.

The extractor is deliberately simple and fully deterministic: a concept
dictionary decides what counts as an object (multiword entries matched
longest-first), a small suffix lemmatizer collapses plurals before lookup,
and a pattern rule list decides which tokens act as attributes or
relations.  Externally parsed scene graphs can be ingested instead via
``ingest_scene_graphs`` when higher-quality parses are available.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import IO, Iterable

from .concepts import ConceptTuple, SceneGraph, read_scene_graphs
from .tokenization import tokenize

# Suffix rules only strip; the exception table handles irregular forms and
# nouns that happen to end in a verb-like suffix ("building").
_SIBILANT_ES = ("sses", "shes", "ches", "xes", "oes")


def lemmatize(word: str, exceptions: dict[str, str]) -> str:
    if word in exceptions:
        return exceptions[word]
    n = len(word)
    if word.endswith("ies") and n > 4:
        return word[:-3] + "y"
    if word.endswith(_SIBILANT_ES) and n > 4:
        return word[:-2]
    if (
        word.endswith("s")
        and n > 3
        and not word.endswith(("ss", "us", "is"))
    ):
        return word[:-1]
    if word.endswith("ing") and n > 5:
        return _undouble(word[:-3])
    if word.endswith("ied") and n > 4:
        return word[:-3] + "y"
    if word.endswith("ed") and n > 4:
        return _undouble(word[:-2])
    return word


def _undouble(stem: str) -> str:
    # sitt -> sit, runn -> run; keep legitimate doubles (fall, miss)
    if (
        len(stem) > 2
        and stem[-1] == stem[-2]
        and stem[-1] not in "aeiou"
        and not stem.endswith(("ll", "ss"))
    ):
        return stem[:-1]
    return stem


@dataclass(frozen=True)
class PatternRule:
    """One line of the pattern mini-grammar: ``<kind> <matcher> <value>``.

    kind is ``attr`` or ``rel``; matcher is ``word`` (exact token, fires
    even on stopwords) or ``suffix`` (token ends with value, skipped for
    dictionary concepts, stopwords and tokens shorter than len(value)+3).
    """

    kind: str
    matcher: str
    value: str

    def matches(self, token: str, is_stopword: bool) -> bool:
        if self.matcher == "word":
            return token == self.value
        if is_stopword or len(token) < len(self.value) + 3:
            return False
        return token.endswith(self.value)


@dataclass(frozen=True)
class ExtractorConfig:
    stopwords: frozenset[str]
    lemma_exceptions: dict[str, str]
    concepts: frozenset[str]
    rules: tuple[PatternRule, ...]

    @property
    def max_phrase_len(self) -> int:
        return max((entry.count(" ") + 1 for entry in self.concepts), default=1)


def _parse_rules(lines: Iterable[str]) -> tuple[PatternRule, ...]:
    rules = []
    for lineno, line in enumerate(lines, start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 3 or parts[0] not in ("attr", "rel") or parts[1] not in ("word", "suffix"):
            raise ValueError(f"bad pattern rule at line {lineno}: {line!r}")
        rules.append(PatternRule(parts[0], parts[1], parts[2].lower()))
    return tuple(rules)


def _read_lines(fp: IO[str]) -> list[str]:
    return [line.rstrip("\n") for line in fp]


def load_config(config_dir: str | Path) -> ExtractorConfig:
    """Read stopwords.txt, lemma_exceptions.tsv, concepts.txt, patterns.txt."""
    config_dir = Path(config_dir)
    stopwords = frozenset(
        w.strip().lower()
        for w in (config_dir / "stopwords.txt").read_text("utf-8").splitlines()
        if w.strip() and not w.startswith("#")
    )
    exceptions: dict[str, str] = {}
    for lineno, line in enumerate(
        (config_dir / "lemma_exceptions.tsv").read_text("utf-8").splitlines(), start=1
    ):
        if not line.strip() or line.startswith("#"):
            continue
        try:
            word, lemma = line.split("\t")
        except ValueError as exc:
            raise ValueError(f"bad lemma exception at line {lineno}: {line!r}") from exc
        exceptions[word.strip().lower()] = lemma.strip().lower()
    concepts = frozenset(
        " ".join(entry.lower().split())
        for entry in (config_dir / "concepts.txt").read_text("utf-8").splitlines()
        if entry.strip() and not entry.startswith("#")
    )
    with open(config_dir / "patterns.txt", encoding="utf-8") as fp:
        rules = _parse_rules(_read_lines(fp))
    return ExtractorConfig(stopwords, exceptions, concepts, rules)


def default_config() -> ExtractorConfig:
    """The configuration shipped with the package."""
    data_dir = resources.files("capuniq").joinpath("data")
    with resources.as_file(data_dir) as path:
        return load_config(path)


@dataclass(frozen=True)
class _Item:
    """One unit of the classified token stream: a dictionary noun phrase
    (possibly multiword) or a single non-noun token."""

    is_noun: bool
    text: str  # noun phrase lemma, or the surface token


def _classify(tokens: list[str], cfg: ExtractorConfig) -> list[_Item]:
    lemmas = [lemmatize(tok, cfg.lemma_exceptions) for tok in tokens]
    items: list[_Item] = []
    i = 0
    while i < len(tokens):
        matched = None
        for length in range(min(cfg.max_phrase_len, len(tokens) - i), 0, -1):
            phrase = " ".join(lemmas[i : i + length])
            if phrase in cfg.concepts:
                matched = (phrase, length)
                break
        if matched:
            items.append(_Item(True, matched[0]))
            i += matched[1]
        else:
            items.append(_Item(False, tokens[i]))
            i += 1
    return items


def extract_tuples(caption: str, cfg: ExtractorConfig) -> SceneGraph:
    """Convert caption text into a scene graph under the configured rules.

    Every dictionary noun phrase yields an object tuple.  An ``attr``
    trigger pairs with the noun phrase that follows it (other attribute
    triggers may intervene); a ``rel`` trigger links the nearest noun
    phrase on each side.  Unknown words are skipped.
    """
    items = _classify(tokenize(caption), cfg)
    tuples: set[ConceptTuple] = set()

    noun_positions = [j for j, item in enumerate(items) if item.is_noun]
    for j in noun_positions:
        tuples.add(ConceptTuple((items[j].text,)))

    def trigger_kinds(index: int) -> set[str]:
        item = items[index]
        if item.is_noun:
            return set()
        is_stop = item.text in cfg.stopwords
        return {r.kind for r in cfg.rules if r.matches(item.text, is_stop)}

    kinds = [trigger_kinds(j) for j in range(len(items))]

    for j, item in enumerate(items):
        if "attr" in kinds[j]:
            k = j + 1
            while k < len(items) and "attr" in kinds[k]:
                k += 1
            if k < len(items) and items[k].is_noun:
                tuples.add(ConceptTuple((items[k].text, item.text)))
        if "rel" in kinds[j]:
            left = next((p for p in reversed(noun_positions) if p < j), None)
            right = next((p for p in noun_positions if p > j), None)
            if left is not None and right is not None:
                tuples.add(
                    ConceptTuple((items[left].text, item.text, items[right].text))
                )

    for t in list(tuples):
        for obj in t.objects():
            tuples.add(ConceptTuple((obj,)))
    return SceneGraph("", tuples)


def extract_for_image(image_id: str, captions: Iterable[str], cfg: ExtractorConfig) -> SceneGraph:
    """Union of tuples over several captions of one image (merged references)."""
    tuples: set[ConceptTuple] = set()
    for caption in captions:
        tuples |= extract_tuples(caption, cfg).tuples
    return SceneGraph(image_id, tuples)


def ingest_scene_graphs(path: str | Path) -> dict[str, SceneGraph]:
    """Load externally parsed scene graphs keyed by image_id."""
    with open(path, encoding="utf-8") as fp:
        graphs = read_scene_graphs(fp)
    return {g.image_id: g for g in graphs}


def read_captions(fp: IO[str]) -> list[tuple[str, str]]:
    """Parse {image_id, caption} lines; repeated image_ids are allowed
    (several captions of one image)."""
    captions: list[tuple[str, str]] = []
    for lineno, line in enumerate(fp, start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
            captions.append((record["image_id"], str(record["caption"])))
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise ValueError(f"malformed caption line {lineno}") from exc
    return captions


def write_captions(captions: Iterable[tuple[str, str]], fp: IO[str]) -> None:
    for image_id, caption in captions:
        fp.write(
            json.dumps({"image_id": image_id, "caption": caption}, ensure_ascii=False)
            + "\n"
        )
