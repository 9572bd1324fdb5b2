"""Sentence log-probability models used by the re-ranker.

Three sources are supported: a smoothed unigram model trained from caption
text, per-token log-probabilities supplied by an external model through a
wire file, and a log-linear interpolation of the two.  Every sentence ends
with one end-of-sentence event, so the terminator's probability always
participates in the score.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import IO, Iterable, Sequence

from .tokenization import EOS


@dataclass(frozen=True)
class UnigramLM:
    """Token-frequency model with additive smoothing.

    ``probs`` covers every training token plus the end-of-sentence token;
    anything else gets ``unknown_prob``.  Probabilities sum to 1 over the
    vocabulary plus the single unknown slot.
    """

    probs: dict[str, float]
    k: float
    unknown_prob: float

    def token_prob(self, token: str) -> float:
        return self.probs.get(token, self.unknown_prob)

    def token_logprob(self, token: str) -> float:
        p = self.token_prob(token)
        if p <= 0.0:
            raise ValueError(f"zero-probability token: {token!r}")
        return math.log(p)

    def token_logprobs(self, tokens: Sequence[str]) -> list[float]:
        """Per-token log-probabilities including the terminator."""
        return [self.token_logprob(t) for t in (*tokens, EOS)]

    def sentence_logprob(self, tokens: Sequence[str]) -> float:
        return sum(self.token_logprobs(tokens))


def train_unigram(captions: Iterable[Sequence[str]], k: float = 1.0) -> UnigramLM:
    """Estimate token probabilities from tokenized captions.

    Each caption contributes its tokens plus one end-of-sentence token.
    P(w) = (count(w) + k) / (total + k * (|vocab| + 1)); the extra slot in
    the denominator reserves mass for unknown tokens.
    """
    if k < 0:
        raise ValueError(f"smoothing constant must be >= 0, got {k}")
    counts: dict[str, int] = {}
    total = 0
    for tokens in captions:
        for token in (*tokens, EOS):
            counts[token] = counts.get(token, 0) + 1
            total += 1
    if total == 0:
        raise ValueError("empty corpus")
    denom = total + k * (len(counts) + 1)
    probs = {token: (count + k) / denom for token, count in counts.items()}
    return UnigramLM(probs=probs, k=k, unknown_prob=k / denom)


@dataclass(frozen=True)
class TokenLogProbEntry:
    """One candidate's externally computed per-token log-probabilities,
    aligned to its token list plus the terminator."""

    image_id: str
    candidate_index: int
    tokens: tuple[str, ...]
    token_logps: tuple[float, ...]

    def __post_init__(self):
        if len(self.token_logps) != len(self.tokens) + 1:
            raise ValueError(
                f"token log-prob length mismatch for image {self.image_id!r} "
                f"candidate {self.candidate_index}: expected "
                f"{len(self.tokens) + 1}, got {len(self.token_logps)}"
            )

    @property
    def total(self) -> float:
        return sum(self.token_logps)


class TokenLogProbTable:
    """Lookup of external log-probabilities keyed by image and beam index."""

    def __init__(self, entries: Iterable[TokenLogProbEntry] = ()):
        self._entries: dict[tuple[str, int], TokenLogProbEntry] = {}
        for entry in entries:
            key = (entry.image_id, entry.candidate_index)
            if key in self._entries:
                raise ValueError(
                    f"duplicate entry for image {entry.image_id!r} "
                    f"candidate {entry.candidate_index}"
                )
            self._entries[key] = entry

    def __len__(self) -> int:
        return len(self._entries)

    def entries(self) -> list[TokenLogProbEntry]:
        return list(self._entries.values())

    def lookup(
        self, image_id: str, candidate_index: int, tokens: Sequence[str]
    ) -> TokenLogProbEntry:
        entry = self._entries.get((image_id, candidate_index))
        if entry is None:
            raise ValueError(
                f"no external log-probs for image {image_id!r} "
                f"candidate {candidate_index}"
            )
        if entry.tokens != tuple(tokens):
            raise ValueError(
                f"token alignment mismatch for image {image_id!r} "
                f"candidate {candidate_index}"
            )
        return entry


def load_token_logps(fp: IO[str]) -> TokenLogProbTable:
    """Parse {image_id, candidate_index, tokens, token_logps} lines."""
    entries = []
    seen: set[tuple[str, int]] = set()
    for lineno, line in enumerate(fp, start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
            image_id = record["image_id"]
            candidate_index = int(record["candidate_index"])
            tokens = tuple(str(t) for t in record["tokens"])
            logps = tuple(float(x) for x in record["token_logps"])
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"malformed token log-prob line {lineno}") from exc
        if len(logps) != len(tokens) + 1:
            raise ValueError(
                f"token log-prob length mismatch at line {lineno}: "
                f"expected {len(tokens) + 1}, got {len(logps)}"
            )
        if any(not math.isfinite(x) for x in logps):
            raise ValueError(f"non-finite token log-prob at line {lineno}")
        if any(x > 0.0 for x in logps):
            raise ValueError(f"positive token log-prob at line {lineno}")
        if (image_id, candidate_index) in seen:
            raise ValueError(
                f"duplicate candidate at line {lineno}: "
                f"image {image_id!r} index {candidate_index}"
            )
        seen.add((image_id, candidate_index))
        entries.append(TokenLogProbEntry(image_id, candidate_index, tokens, logps))
    return TokenLogProbTable(entries)


def save_token_logps(table: TokenLogProbTable, fp: IO[str]) -> None:
    for entry in table.entries():
        record = {
            "image_id": entry.image_id,
            "candidate_index": entry.candidate_index,
            "tokens": list(entry.tokens),
            "token_logps": list(entry.token_logps),
        }
        fp.write(json.dumps(record, ensure_ascii=False) + "\n")


def interpolate_logprob(
    uni_logps: Sequence[float], ext_logps: Sequence[float], alpha: float
) -> tuple[list[float], float]:
    """Log-linear mix of two aligned per-token sequences.

    Per token: alpha * uni + (1 - alpha) * ext, with no renormalization;
    only relative sentence scores matter downstream.  Returns the per-token
    sequence and its sum.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"interpolation weight must be in [0, 1], got {alpha}")
    if len(uni_logps) != len(ext_logps):
        raise ValueError(
            f"misaligned token log-prob sequences: "
            f"{len(uni_logps)} vs {len(ext_logps)}"
        )
    per_token = [
        alpha * u + (1.0 - alpha) * e for u, e in zip(uni_logps, ext_logps)
    ]
    return per_token, sum(per_token)


def sentence_logprob(lm: UnigramLM | TokenLogProbEntry, tokens: Sequence[str]) -> float:
    """Total sentence log-probability including the end-of-sentence event."""
    if isinstance(lm, UnigramLM):
        return lm.sentence_logprob(tokens)
    if isinstance(lm, TokenLogProbEntry):
        if lm.tokens != tuple(tokens):
            raise ValueError(
                f"token alignment mismatch for image {lm.image_id!r} "
                f"candidate {lm.candidate_index}"
            )
        return lm.total
    raise TypeError(f"unsupported language model type: {type(lm).__name__}")
