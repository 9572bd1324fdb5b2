"""Re-ranking of beam candidates by conditional likelihood minus a weighted
language-model likelihood, plus the distractor-preference analysis.

Candidates and their conditional log-likelihoods arrive in files produced
by any captioner; this module never decodes.  Subtracting the unconditional
language-model score rewards captions that are likely given the image but
unlikely a priori.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from importlib import resources
from typing import IO, Callable, Iterable, Mapping, Sequence

from .lm import TokenLogProbTable, UnigramLM, interpolate_logprob

LM_MODES = ("unigram", "external", "interpolated")


@dataclass(frozen=True)
class Candidate:
    tokens: tuple[str, ...]
    logp_cond: float
    token_logps: tuple[float, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        if self.token_logps is not None:
            object.__setattr__(self, "token_logps", tuple(self.token_logps))
        if not math.isfinite(self.logp_cond) or self.logp_cond > 0.0:
            raise ValueError(
                f"conditional log-probability must be finite and <= 0, "
                f"got {self.logp_cond}"
            )
        if (
            self.token_logps is not None
            and len(self.token_logps) != len(self.tokens) + 1
        ):
            raise ValueError(
                f"token log-prob length mismatch: expected "
                f"{len(self.tokens) + 1}, got {len(self.token_logps)}"
            )


@dataclass(frozen=True)
class CandidateSet:
    """One image's beam candidates, in beam rank order."""

    image_id: str
    candidates: tuple[Candidate, ...]

    def __post_init__(self):
        object.__setattr__(self, "candidates", tuple(self.candidates))
        if not self.candidates:
            raise ValueError(f"no candidates for image {self.image_id!r}")


@dataclass(frozen=True)
class RerankConfig:
    """Weight and language-model selection for re-ranking.

    ``length_normalize`` divides the LM term by token count + 1 before
    weighting; conditional log-likelihoods are used as given.
    """

    lam: float = 0.4
    lm: str = "unigram"
    alpha: float = 0.8
    length_normalize: bool = False

    def __post_init__(self):
        if not math.isfinite(self.lam) or self.lam < 0.0:
            raise ValueError(f"lambda must be finite and >= 0, got {self.lam}")
        if self.lm not in LM_MODES:
            raise ValueError(f"unknown language-model mode: {self.lm!r}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must be in [0, 1], got {self.alpha}")


class LMScorer:
    """Resolves each candidate's language-model log-probability."""

    def candidate_logprob(
        self, image_id: str, candidate_index: int, candidate: Candidate
    ) -> float:
        raise NotImplementedError


class UnigramScorer(LMScorer):
    def __init__(self, lm: UnigramLM):
        self.lm = lm

    def candidate_logprob(self, image_id, candidate_index, candidate):
        return self.lm.sentence_logprob(candidate.tokens)


class ExternalScorer(LMScorer):
    """Inline token log-probs when the candidate carries them, otherwise a
    lookup in a token log-prob table."""

    def __init__(self, table: TokenLogProbTable | None = None):
        self.table = table

    def token_logps(self, image_id, candidate_index, candidate) -> Sequence[float]:
        if candidate.token_logps is not None:
            return candidate.token_logps
        if self.table is not None:
            entry = self.table.lookup(image_id, candidate_index, candidate.tokens)
            return entry.token_logps
        raise ValueError(
            f"missing external token log-probs for image {image_id!r} "
            f"candidate {candidate_index}"
        )

    def candidate_logprob(self, image_id, candidate_index, candidate):
        return sum(self.token_logps(image_id, candidate_index, candidate))


class InterpolatedScorer(LMScorer):
    def __init__(
        self, lm: UnigramLM, alpha: float, table: TokenLogProbTable | None = None
    ):
        self.lm = lm
        self.alpha = alpha
        self.external = ExternalScorer(table)

    def candidate_logprob(self, image_id, candidate_index, candidate):
        uni = self.lm.token_logprobs(candidate.tokens)
        ext = self.external.token_logps(image_id, candidate_index, candidate)
        _, total = interpolate_logprob(uni, ext, self.alpha)
        return total


def make_scorer(
    cfg: RerankConfig,
    unigram: UnigramLM | None = None,
    table: TokenLogProbTable | None = None,
) -> LMScorer:
    if cfg.lm == "unigram":
        if unigram is None:
            raise ValueError("unigram mode requires a trained unigram model")
        return UnigramScorer(unigram)
    if cfg.lm == "external":
        return ExternalScorer(table)
    if unigram is None:
        raise ValueError("interpolated mode requires a trained unigram model")
    return InterpolatedScorer(unigram, cfg.alpha, table)


@dataclass(frozen=True)
class RerankResult:
    image_id: str
    selected_index: int
    selected: Candidate
    scores: tuple[float, ...]


def rerank(cs: CandidateSet, scorer: LMScorer, cfg: RerankConfig) -> RerankResult:
    """score_i = logp_cond_i - lambda * lm_logp_i; argmax wins, ties go to
    the lowest beam rank."""
    scores = []
    for i, candidate in enumerate(cs.candidates):
        lm_logp = scorer.candidate_logprob(cs.image_id, i, candidate)
        if cfg.length_normalize:
            lm_logp /= len(candidate.tokens) + 1
        scores.append(candidate.logp_cond - cfg.lam * lm_logp)
    best = 0
    for i in range(1, len(scores)):
        if scores[i] > scores[best]:
            best = i
    return RerankResult(
        image_id=cs.image_id,
        selected_index=best,
        selected=cs.candidates[best],
        scores=tuple(scores),
    )


def distractor_analysis(
    gt_logps: Mapping[str, Sequence[float]],
    distractor_logps: Mapping[str, Sequence[tuple[object, float]]],
    flags: Mapping[str, set],
) -> float:
    """Fraction of images where some flagged distractor out-scores some
    ground-truth caption.

    Images without flagged distractors stay in the denominator and cannot
    satisfy the condition.
    """
    if not gt_logps:
        return 0.0
    satisfied = 0
    for image_id, gt in gt_logps.items():
        if not gt:
            raise ValueError(f"no ground-truth likelihoods for image {image_id!r}")
        weakest_gt = min(gt)
        flagged = flags.get(image_id, set())
        for distractor_id, logp in distractor_logps.get(image_id, ()):
            if distractor_id in flagged and logp > weakest_gt:
                satisfied += 1
                break
    return satisfied / len(gt_logps)


@dataclass(frozen=True)
class GridSearchResult:
    lam: float
    alpha: float
    value: float
    table: tuple[tuple[float, float, float], ...]


def grid_search(
    dev_data,
    lambdas: Sequence[float],
    alphas: Sequence[float],
    aggregator: Callable[[object, float, float], float],
) -> GridSearchResult:
    """Exhaustive search; ties broken by smaller lambda, then smaller alpha."""
    if not lambdas or not alphas:
        raise ValueError("empty grid")
    rows = []
    best = None
    for lam in sorted(set(lambdas)):
        for alpha in sorted(set(alphas)):
            value = aggregator(dev_data, lam, alpha)
            rows.append((lam, alpha, value))
            if best is None or value > best[2]:
                best = (lam, alpha, value)
    return GridSearchResult(
        lam=best[0], alpha=best[1], value=best[2], table=tuple(rows)
    )


def read_candidate_sets(fp: IO[str]) -> list[CandidateSet]:
    """Parse {image_id, candidates: [{tokens, logp_cond, token_logps?}]}
    lines, preserving beam order."""
    sets: list[CandidateSet] = []
    seen: set[str] = set()
    for lineno, line in enumerate(fp, start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
            image_id = record["image_id"]
            raw = record["candidates"]
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise ValueError(f"malformed candidate line {lineno}") from exc
        if image_id in seen:
            raise ValueError(f"duplicate image_id {image_id!r} at line {lineno}")
        seen.add(image_id)
        candidates = []
        for item in raw:
            try:
                tokens = tuple(str(t) for t in item["tokens"])
                logp_cond = float(item["logp_cond"])
                logps = item.get("token_logps")
                token_logps = (
                    tuple(float(x) for x in logps) if logps is not None else None
                )
                candidates.append(Candidate(tokens, logp_cond, token_logps))
            except (KeyError, TypeError) as exc:
                raise ValueError(f"malformed candidate line {lineno}") from exc
            except ValueError as exc:
                raise ValueError(f"bad candidate at line {lineno}: {exc}") from exc
        if not candidates:
            raise ValueError(f"no candidates for image {image_id!r} at line {lineno}")
        sets.append(CandidateSet(image_id, tuple(candidates)))
    return sets


def write_candidate_sets(sets: Iterable[CandidateSet], fp: IO[str]) -> None:
    for cs in sets:
        record = {
            "image_id": cs.image_id,
            "candidates": [
                {
                    "tokens": list(c.tokens),
                    "logp_cond": c.logp_cond,
                    **(
                        {"token_logps": list(c.token_logps)}
                        if c.token_logps is not None
                        else {}
                    ),
                }
                for c in cs.candidates
            ],
        }
        fp.write(json.dumps(record, ensure_ascii=False) + "\n")


def load_distractors(fp: IO[str]) -> list[str]:
    """One distractor sentence per line; blank lines and comments skipped."""
    return [
        line.strip()
        for line in fp
        if line.strip() and not line.lstrip().startswith("#")
    ]


def default_distractors() -> list[str]:
    """The generic high-frequency sentences shipped with the package."""
    text = resources.files("capuniq").joinpath("data/distractors.txt").read_text("utf-8")
    return load_distractors(iter(text.splitlines(keepends=True)))


def likelihoods_by_image(
    sets: Iterable[CandidateSet], mean: bool = False
) -> dict[str, list[float]]:
    """Collapse candidate records to per-image likelihood lists; ``mean``
    divides each total by token count + 1."""
    out: dict[str, list[float]] = {}
    for cs in sets:
        out[cs.image_id] = [
            c.logp_cond / (len(c.tokens) + 1) if mean else c.logp_cond
            for c in cs.candidates
        ]
    return out


def distractor_likelihoods_by_image(
    sets: Iterable[CandidateSet], mean: bool = False
) -> dict[str, list[tuple[int, float]]]:
    """Candidate index doubles as the distractor id."""
    out: dict[str, list[tuple[int, float]]] = {}
    for cs in sets:
        out[cs.image_id] = [
            (i, c.logp_cond / (len(c.tokens) + 1) if mean else c.logp_cond)
            for i, c in enumerate(cs.candidates)
        ]
    return out
