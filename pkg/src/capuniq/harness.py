"""Evaluation protocols: a template baseline captioner, pairwise
human-judgement accuracy, Pearson correlation against vote margins, and
geometric-mean aggregation across metrics."""

from __future__ import annotations

import json
import math
import statistics
from dataclasses import dataclass
from typing import IO, Callable, Iterable, Mapping, Sequence

CATEGORIES = ("HC", "HI", "HM", "MM")

# metric(caption, references) -> score
CaptionMetric = Callable[[str, Sequence[str]], float]


@dataclass(frozen=True)
class JudgementRecord:
    """One human pairwise judgement: which of two captions better matches
    the reference captions of an image."""

    image_id: str
    caption_b: str
    caption_c: str
    votes_b: int
    votes_c: int
    category: str
    references: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "references", tuple(self.references))
        if self.category not in CATEGORIES:
            raise ValueError(f"unknown judgement category: {self.category!r}")
        if self.votes_b < 0 or self.votes_c < 0 or self.votes_b + self.votes_c < 1:
            raise ValueError(
                f"votes must be nonnegative with at least one cast, "
                f"got {self.votes_b} and {self.votes_c}"
            )
        if not self.references:
            raise ValueError(f"record with empty references: {self.image_id!r}")

    @property
    def mean_vote(self) -> float:
        """+1 per vote for caption b, -1 per vote for caption c, averaged."""
        return (self.votes_b - self.votes_c) / (self.votes_b + self.votes_c)

    def favored_first(self) -> "JudgementRecord":
        """Swap captions so caption_b is the human-favored one."""
        if self.votes_c <= self.votes_b:
            return self
        return JudgementRecord(
            image_id=self.image_id,
            caption_b=self.caption_c,
            caption_c=self.caption_b,
            votes_b=self.votes_c,
            votes_c=self.votes_b,
            category=self.category,
            references=self.references,
        )


@dataclass(frozen=True)
class PairwiseAccuracy:
    by_category: dict[str, float]  # percent, only categories with scored records
    overall: float  # unweighted mean over the category values
    scored: int
    skipped_ties: int


def pairwise_accuracy(
    records: Iterable[JudgementRecord], metric: CaptionMetric
) -> PairwiseAccuracy:
    """Percent of records where the metric agrees with the human majority.

    Agreement means metric(favored, refs) >= metric(other, refs).  Vote-tied
    records cannot define a majority; they are skipped and counted.  The
    overall value is the unweighted mean of the per-category accuracies.
    """
    agreements: dict[str, int] = {c: 0 for c in CATEGORIES}
    totals: dict[str, int] = {c: 0 for c in CATEGORIES}
    skipped = 0
    for record in records:
        if record.votes_b == record.votes_c:
            skipped += 1
            continue
        record = record.favored_first()
        totals[record.category] += 1
        favored = metric(record.caption_b, record.references)
        other = metric(record.caption_c, record.references)
        if favored >= other:
            agreements[record.category] += 1
    by_category = {
        c: 100.0 * agreements[c] / totals[c] for c in CATEGORIES if totals[c]
    }
    overall = statistics.fmean(by_category.values()) if by_category else 0.0
    return PairwiseAccuracy(
        by_category=by_category,
        overall=overall,
        scored=sum(totals.values()),
        skipped_ties=skipped,
    )


def pearson(records: Sequence[JudgementRecord], metric: CaptionMetric) -> float:
    """Correlation between per-record mean votes and metric score
    differences.  Vote-tied records stay in (their mean vote is 0)."""
    votes = [r.mean_vote for r in records]
    diffs = [
        metric(r.caption_b, r.references) - metric(r.caption_c, r.references)
        for r in records
    ]
    try:
        return statistics.correlation(votes, diffs)
    except statistics.StatisticsError as exc:
        raise ValueError("degenerate correlation input") from exc


def template_caption(
    detections: Sequence[tuple[str, float]],
    class_freq: Mapping[str, float],
    top_n: int,
    threshold: float,
) -> str:
    """Baseline caption listing detected classes: "There is a X, Y and Z".

    Keeps detections scoring at least the threshold whose class is among
    the top_n most frequent, deduplicated in first-occurrence order.  An
    empty survivor list gives the empty string, which callers exclude from
    scoring.
    """
    for cls, _ in detections:
        if cls not in class_freq:
            raise ValueError(f"no corpus frequency for class {cls!r}")
    ranked = sorted(class_freq, key=lambda c: (-class_freq[c], c))
    allowed = set(ranked[:top_n])
    survivors: list[str] = []
    for cls, score in detections:
        if score >= threshold and cls in allowed and cls not in survivors:
            survivors.append(cls)
    if not survivors:
        return ""
    if len(survivors) == 1:
        return f"There is a {survivors[0]}"
    return "There is a " + ", ".join(survivors[:-1]) + " and " + survivors[-1]


def geo_mean(values: Mapping[str, float], chair_key: str | None = None) -> float:
    """n-th root of the product of the values; the hallucination-rate entry
    named by chair_key is inverted first so lower is better."""
    if chair_key is not None and chair_key not in values:
        raise ValueError(f"missing metric {chair_key!r}")
    logs = []
    for name, value in values.items():
        if value <= 0.0:
            raise ValueError(f"nonpositive metric value: {name}")
        logs.append(-math.log(value) if name == chair_key else math.log(value))
    if not logs:
        raise ValueError("no metric values")
    return math.exp(statistics.fmean(logs))


def read_judgements(fp: IO[str]) -> list[JudgementRecord]:
    """Parse judgement lines: {image_id, caption_b, caption_c, votes_b,
    votes_c, category, references}."""
    records = []
    for lineno, line in enumerate(fp, start=1):
        if not line.strip():
            continue
        try:
            r = json.loads(line)
            record = JudgementRecord(
                image_id=r["image_id"],
                caption_b=str(r["caption_b"]),
                caption_c=str(r["caption_c"]),
                votes_b=int(r["votes_b"]),
                votes_c=int(r["votes_c"]),
                category=str(r["category"]),
                references=tuple(str(x) for x in r["references"]),
            )
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise ValueError(f"malformed judgement line {lineno}") from exc
        except ValueError as exc:
            raise ValueError(f"bad judgement at line {lineno}: {exc}") from exc
        records.append(record)
    return records


def write_judgements(records: Iterable[JudgementRecord], fp: IO[str]) -> None:
    for r in records:
        record = {
            "image_id": r.image_id,
            "caption_b": r.caption_b,
            "caption_c": r.caption_c,
            "votes_b": r.votes_b,
            "votes_c": r.votes_c,
            "category": r.category,
            "references": list(r.references),
        }
        fp.write(json.dumps(record, ensure_ascii=False) + "\n")


def read_detections(fp: IO[str]) -> list[tuple[str, list[tuple[str, float]]]]:
    """Parse detection lines: {image_id, detections: [{class, score}]}."""
    out: list[tuple[str, list[tuple[str, float]]]] = []
    seen: set[str] = set()
    for lineno, line in enumerate(fp, start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
            image_id = record["image_id"]
            detections = [
                (str(d["class"]), float(d["score"])) for d in record["detections"]
            ]
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"malformed detection line {lineno}") from exc
        if image_id in seen:
            raise ValueError(f"duplicate image_id {image_id!r} at line {lineno}")
        seen.add(image_id)
        out.append((image_id, detections))
    return out


def read_class_freq(fp: IO[str]) -> dict[str, float]:
    """Parse ``class<TAB>frequency`` lines."""
    freq: dict[str, float] = {}
    for lineno, line in enumerate(fp, start=1):
        line = line.rstrip("\n")
        if not line.strip() or line.startswith("#"):
            continue
        try:
            cls, value = line.split("\t")
            freq[cls] = float(value)
        except ValueError as exc:
            raise ValueError(f"bad class-frequency line {lineno}: {line!r}") from exc
    return freq


def read_metric_values(fp: IO[str]) -> dict[str, float]:
    """Parse ``metric<TAB>value`` lines for aggregation."""
    values: dict[str, float] = {}
    for lineno, line in enumerate(fp, start=1):
        line = line.rstrip("\n")
        if not line.strip() or line.startswith("#"):
            continue
        try:
            name, value = line.split("\t")
            values[name] = float(value)
        except ValueError as exc:
            raise ValueError(f"bad metric line {lineno}: {line!r}") from exc
    return values
