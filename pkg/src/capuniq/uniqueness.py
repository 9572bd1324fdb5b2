"""Uniqueness weighting of concepts and the combined correctness+uniqueness
caption score.

A concept's uniqueness is the fraction of corpus images NOT containing it.
A prediction's uniqueness is min-max normalized against every same-size
alternative drawn from the pool of predicted plus ground-truth concepts;
because alternatives range over all size-n subsets, the extremal sums are
exactly the n smallest and n largest per-concept values.
"""

from __future__ import annotations

from dataclasses import dataclass

from .concepts import ConceptTuple, CorpusIndex, SceneGraph, SynonymLexicon, canonical_key
from .spice import SpiceScore, harmonic_mean, spice


def un(index: CorpusIndex, t: ConceptTuple) -> float:
    """Fraction of corpus images not containing the concept; absent -> 1."""
    return (index.num_images - index.count(t)) / index.num_images


def un_total(index: CorpusIndex, graph: SceneGraph) -> float:
    return sum(un(index, t) for t in graph.tuples)


def alt_extremes(
    P: SceneGraph, G: SceneGraph, index: CorpusIndex
) -> tuple[float, float]:
    """Smallest and largest uniqueness sums over all |P|-sized concept sets
    drawn from the key-union pool of P and G."""
    n = len(P)
    if n == 0:
        return 0.0, 0.0
    pool: dict[str, float] = {}
    for t in list(P.tuples) + list(G.tuples):
        pool.setdefault(canonical_key(t), un(index, t))
    values = sorted(pool.values())
    return sum(values[:n]), sum(values[-n:])


def uniq(P: SceneGraph, G: SceneGraph, index: CorpusIndex) -> float:
    """Min-max normalized uniqueness of P against same-size alternatives.

    When no alternative can do better or worse (single possible set, or all
    pool concepts equally unique) the prediction is not penalized: 1.0.
    The result is clamped to [0, 1]; subtracting independently rounded sums
    can stray an ulp outside when P nearly ties an extremal set.
    """
    min_alt, max_alt = alt_extremes(P, G, index)
    if max_alt == min_alt:
        return 1.0
    value = (un_total(index, P) - min_alt) / (max_alt - min_alt)
    return min(1.0, max(0.0, value))


@dataclass(frozen=True)
class UniquenessReport:
    un_p: float
    min_alt: float
    max_alt: float
    uniq: float
    spice_u: float


@dataclass(frozen=True)
class CaptionScore:
    """One caption's full score line."""

    image_id: str
    precision: float
    recall: float
    spice: float
    uniq: float
    spice_u: float


def spice_u(
    P: SceneGraph, G: SceneGraph, index: CorpusIndex, lex: SynonymLexicon
) -> CaptionScore:
    """Harmonic mean of the correctness score and the uniqueness score.

    Zero whenever either component is zero, in particular for empty
    predictions.
    """
    s: SpiceScore = spice(P, G, lex)
    u = uniq(P, G, index)
    combined = 0.0 if len(P) == 0 else harmonic_mean(s.spice, u)
    return CaptionScore(
        image_id=P.image_id or G.image_id,
        precision=s.precision,
        recall=s.recall,
        spice=s.spice,
        uniq=u,
        spice_u=combined,
    )


def uniqueness_report(
    P: SceneGraph, G: SceneGraph, index: CorpusIndex, lex: SynonymLexicon
) -> UniquenessReport:
    min_alt, max_alt = alt_extremes(P, G, index)
    score = spice_u(P, G, index, lex)
    return UniquenessReport(
        un_p=un_total(index, P),
        min_alt=min_alt,
        max_alt=max_alt,
        uniq=score.uniq,
        spice_u=score.spice_u,
    )
