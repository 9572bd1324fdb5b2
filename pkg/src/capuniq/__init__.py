"""Caption scoring for semantic correctness and uniqueness, plus
mutual-information re-ranking of captioner beam candidates."""

from .concepts import (
    ConceptTuple,
    CorpusIndex,
    SceneGraph,
    SynonymLexicon,
    build_index,
    canonical_key,
    concept,
    load_index,
    load_lexicon,
    read_scene_graphs,
    save_index,
    save_lexicon,
    write_scene_graphs,
)
from .extraction import (
    ExtractorConfig,
    default_config,
    extract_for_image,
    extract_tuples,
    ingest_scene_graphs,
    lemmatize,
    load_config,
    read_captions,
    write_captions,
)
from .harness import (
    JudgementRecord,
    PairwiseAccuracy,
    geo_mean,
    pairwise_accuracy,
    pearson,
    read_judgements,
    template_caption,
    write_judgements,
)
from .lm import (
    TokenLogProbEntry,
    TokenLogProbTable,
    UnigramLM,
    interpolate_logprob,
    load_token_logps,
    save_token_logps,
    sentence_logprob,
    train_unigram,
)
from .rerank import (
    Candidate,
    CandidateSet,
    GridSearchResult,
    RerankConfig,
    RerankResult,
    default_distractors,
    distractor_analysis,
    grid_search,
    make_scorer,
    read_candidate_sets,
    rerank,
    write_candidate_sets,
)
from .spice import (
    MatchResult,
    SpiceScore,
    chairs,
    match_tuples,
    mention_objects,
    read_object_lists,
    spice,
    tuples_match,
    write_object_lists,
)
from .tokenization import EOS, tokenize
from .uniqueness import (
    CaptionScore,
    UniquenessReport,
    alt_extremes,
    spice_u,
    un,
    uniq,
    uniqueness_report,
)

__version__ = "0.1.0"

__all__ = [
    "EOS",
    "Candidate",
    "CandidateSet",
    "CaptionScore",
    "ConceptTuple",
    "CorpusIndex",
    "ExtractorConfig",
    "GridSearchResult",
    "JudgementRecord",
    "MatchResult",
    "PairwiseAccuracy",
    "RerankConfig",
    "RerankResult",
    "SceneGraph",
    "SpiceScore",
    "SynonymLexicon",
    "TokenLogProbEntry",
    "TokenLogProbTable",
    "UnigramLM",
    "UniquenessReport",
    "alt_extremes",
    "build_index",
    "canonical_key",
    "chairs",
    "concept",
    "default_config",
    "default_distractors",
    "distractor_analysis",
    "extract_for_image",
    "extract_tuples",
    "geo_mean",
    "grid_search",
    "ingest_scene_graphs",
    "interpolate_logprob",
    "lemmatize",
    "load_config",
    "load_index",
    "load_lexicon",
    "load_token_logps",
    "make_scorer",
    "match_tuples",
    "mention_objects",
    "pairwise_accuracy",
    "pearson",
    "read_captions",
    "read_candidate_sets",
    "read_judgements",
    "read_object_lists",
    "read_scene_graphs",
    "rerank",
    "save_index",
    "save_lexicon",
    "save_token_logps",
    "sentence_logprob",
    "spice",
    "spice_u",
    "template_caption",
    "tokenize",
    "train_unigram",
    "tuples_match",
    "un",
    "uniq",
    "uniqueness_report",
    "write_captions",
    "write_candidate_sets",
    "write_judgements",
    "write_object_lists",
    "write_scene_graphs",
]
