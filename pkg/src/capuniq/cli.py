"""Command-line entry point.

Every subcommand streams line-oriented input files, writes line-oriented
outputs and prints a one-line summary.  Scoring is deterministic; the
--seed flag is reserved for fixture generation and is ignored by the
scoring paths.
"""

from __future__ import annotations

import argparse
import json
import statistics
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .concepts import (
    SceneGraph,
    SynonymLexicon,
    build_index,
    load_index,
    load_lexicon,
    read_scene_graphs,
    save_index,
    write_scene_graphs,
)
from .extraction import (
    default_config,
    extract_for_image,
    extract_tuples,
    ingest_scene_graphs,
    load_config,
    read_captions,
)
from .harness import (
    geo_mean,
    pairwise_accuracy,
    pearson,
    read_class_freq,
    read_detections,
    read_judgements,
    read_metric_values,
    template_caption,
)
from .lm import load_token_logps, train_unigram
from .rerank import (
    RerankConfig,
    default_distractors,
    distractor_analysis,
    distractor_likelihoods_by_image,
    grid_search,
    likelihoods_by_image,
    load_distractors,
    make_scorer,
    read_candidate_sets,
    rerank,
)
from .spice import chairs, mention_objects, read_object_lists
from .tokenization import tokenize
from .uniqueness import spice_u

DEFAULT_LAMBDA = 0.4
DEFAULT_ALPHA = 0.8
DEFAULT_K = 1.0


def _warn(message: str) -> None:
    print(f"warning: {message}", file=sys.stderr)


def _load_extractor(config_dir: str | None):
    return load_config(config_dir) if config_dir else default_config()


def _load_lexicon_arg(path: str | None) -> SynonymLexicon:
    if path is None:
        from importlib import resources

        text = resources.files("capuniq").joinpath("data/synonyms.tsv").read_text("utf-8")
        return load_lexicon(iter(text.splitlines(keepends=True)))
    with open(path, encoding="utf-8") as fp:
        return load_lexicon(fp)


def _load_index_file(path: str):
    with open(path, encoding="utf-8") as fp:
        return load_index(fp)


# --- build-index -----------------------------------------------------------


def cmd_build_index(args) -> int:
    with open(args.graphs, encoding="utf-8") as fp:
        graphs = read_scene_graphs(fp)
    index = build_index(graphs)
    with open(args.output, "w", encoding="utf-8") as fp:
        save_index(index, fp)
    print(
        f"indexed {index.num_images} images, {len(index.df)} concepts "
        f"-> {args.output}"
    )
    return 0


# --- extract ---------------------------------------------------------------


def cmd_extract(args) -> int:
    cfg = _load_extractor(args.config)
    with open(args.captions, encoding="utf-8") as fp:
        captions = read_captions(fp)
    by_image: dict[str, list[str]] = {}
    for image_id, caption in captions:
        by_image.setdefault(image_id, []).append(caption)
    graphs = [
        extract_for_image(image_id, texts, cfg)
        for image_id, texts in by_image.items()
    ]
    with open(args.output, "w", encoding="utf-8") as fp:
        write_scene_graphs(graphs, fp)
    if not captions:
        _warn(f"empty input: {args.captions}")
    print(f"extracted scene graphs for {len(graphs)} images -> {args.output}")
    return 0


# --- score -----------------------------------------------------------------

_SCORE_CTX: dict = {}


def _init_score_worker(cfg, graphs, index, lex) -> None:
    _SCORE_CTX["state"] = (cfg, graphs, index, lex)


def _score_one(item: tuple[str, str]):
    cfg, graphs, index, lex = _SCORE_CTX["state"]
    image_id, caption = item
    if image_id not in graphs:
        raise ValueError(f"no reference graph for image {image_id!r}")
    predicted = SceneGraph(image_id, extract_tuples(caption, cfg).tuples)
    return spice_u(predicted, graphs[image_id], index, lex)


def cmd_score(args) -> int:
    cfg = _load_extractor(args.config)
    graphs = ingest_scene_graphs(args.graphs)
    index = _load_index_file(args.index)
    lex = _load_lexicon_arg(args.lexicon)
    with open(args.captions, encoding="utf-8") as fp:
        captions = read_captions(fp)

    if args.jobs > 1 and captions:
        with ProcessPoolExecutor(
            max_workers=args.jobs,
            initializer=_init_score_worker,
            initargs=(cfg, graphs, index, lex),
        ) as pool:
            scores = list(pool.map(_score_one, captions))
    else:
        _init_score_worker(cfg, graphs, index, lex)
        scores = [_score_one(item) for item in captions]

    with open(args.output, "w", encoding="utf-8") as fp:
        for score in scores:
            record = {
                "image_id": score.image_id,
                "precision": round(score.precision, 2),
                "recall": round(score.recall, 2),
                "spice": round(score.spice, 2),
                "uniq": round(score.uniq, 2),
                "spice_u": round(score.spice_u, 2),
            }
            fp.write(json.dumps(record, ensure_ascii=False) + "\n")
    if not captions:
        _warn(f"empty input: {args.captions}")
    print(f"scored {len(scores)} captions -> {args.output}")
    return 0


# --- rerank ----------------------------------------------------------------

_RERANK_CTX: dict = {}


def _init_rerank_worker(scorer, cfg) -> None:
    _RERANK_CTX["state"] = (scorer, cfg)


def _rerank_one(cs):
    scorer, cfg = _RERANK_CTX["state"]
    return rerank(cs, scorer, cfg)


def _build_rerank_parts(args):
    cfg = RerankConfig(
        lam=args.lam,
        lm=args.lm,
        alpha=args.alpha,
        length_normalize=args.length_normalize,
    )
    unigram = None
    if args.lm in ("unigram", "interpolated"):
        if not args.train:
            raise ValueError(f"--train is required for --lm {args.lm}")
        with open(args.train, encoding="utf-8") as fp:
            corpus = [tokenize(caption) for _, caption in read_captions(fp)]
        unigram = train_unigram(corpus, k=args.k)
    table = None
    if args.ext:
        with open(args.ext, encoding="utf-8") as fp:
            table = load_token_logps(fp)
    return cfg, make_scorer(cfg, unigram=unigram, table=table)


def cmd_rerank(args) -> int:
    with open(args.candidates, encoding="utf-8") as fp:
        sets = read_candidate_sets(fp)
    cfg, scorer = _build_rerank_parts(args)

    if args.jobs > 1 and sets:
        with ProcessPoolExecutor(
            max_workers=args.jobs,
            initializer=_init_rerank_worker,
            initargs=(scorer, cfg),
        ) as pool:
            results = list(pool.map(_rerank_one, sets))
    else:
        _init_rerank_worker(scorer, cfg)
        results = [_rerank_one(cs) for cs in sets]

    with open(args.output, "w", encoding="utf-8") as fp:
        for result in results:
            record = {
                "image_id": result.image_id,
                "selected_index": result.selected_index,
                "caption": " ".join(result.selected.tokens),
                "score": result.scores[result.selected_index],
                "scores": list(result.scores),
            }
            fp.write(json.dumps(record, ensure_ascii=False) + "\n")
    if not sets:
        _warn(f"empty input: {args.candidates}")
    print(f"re-ranked {len(results)} images -> {args.output}")
    return 0


# --- distractor ------------------------------------------------------------


def _read_flags(path: str) -> dict[str, set]:
    flags: dict[str, set] = {}
    with open(path, encoding="utf-8") as fp:
        for lineno, line in enumerate(fp, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                flags[record["image_id"]] = set(record["flagged"])
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise ValueError(f"malformed flag line {lineno}") from exc
    return flags


def _compute_flags(sentences, gt_objects, cfg, lex) -> dict[str, set]:
    """A distractor is flagged for an image when it mentions at least one
    object matching none of the image's ground-truth objects."""
    mentions = [mention_objects(s, cfg) for s in sentences]
    flags: dict[str, set] = {}
    for image_id, objects in gt_objects.items():
        flagged = {
            i
            for i, mentioned in enumerate(mentions)
            if any(not any(lex.match(m, g) for g in objects) for m in mentioned)
        }
        flags[image_id] = flagged
    return flags


def cmd_distractor(args) -> int:
    with open(args.gt, encoding="utf-8") as fp:
        gt_sets = read_candidate_sets(fp)
    with open(args.distractor_likelihoods, encoding="utf-8") as fp:
        distractor_sets = read_candidate_sets(fp)
    mean = args.comparator == "mean"
    gt_logps = likelihoods_by_image(gt_sets, mean=mean)
    distractor_logps = distractor_likelihoods_by_image(distractor_sets, mean=mean)

    if args.flags:
        flags = _read_flags(args.flags)
    elif args.objects:
        if args.distractor_file:
            with open(args.distractor_file, encoding="utf-8") as fp:
                sentences = load_distractors(fp)
        else:
            sentences = default_distractors()
        cfg = _load_extractor(args.config)
        lex = _load_lexicon_arg(args.lexicon)
        with open(args.objects, encoding="utf-8") as fp:
            gt_objects = read_object_lists(fp)
        flags = _compute_flags(sentences, gt_objects, cfg, lex)
    else:
        raise ValueError("distractor analysis needs --flags or --objects")

    fraction = distractor_analysis(gt_logps, distractor_logps, flags)
    total = len(gt_logps)
    satisfied = round(fraction * total)
    if not gt_logps:
        _warn(f"empty input: {args.gt}")
    print(f"distractor preference: {fraction:.4f} ({satisfied}/{total} images)")
    return 0


# --- chair -----------------------------------------------------------------


def cmd_chair(args) -> int:
    cfg = _load_extractor(args.config)
    lex = _load_lexicon_arg(args.lexicon)
    with open(args.captions, encoding="utf-8") as fp:
        captions = read_captions(fp)
    with open(args.objects, encoding="utf-8") as fp:
        gt_objects = read_object_lists(fp)
    if args.vocab:
        vocab = {
            line.strip()
            for line in Path(args.vocab).read_text("utf-8").splitlines()
            if line.strip() and not line.startswith("#")
        }
    else:
        vocab = {obj for objects in gt_objects.values() for obj in objects}

    entries = [
        (image_id, mention_objects(caption, cfg, vocab=vocab))
        for image_id, caption in captions
    ]
    rate = chairs(entries, gt_objects, lex)
    flagged = round(rate * len(entries))

    if args.output:
        with open(args.output, "w", encoding="utf-8") as fp:
            for (image_id, caption), (_, mentioned) in zip(captions, entries):
                truth = gt_objects[image_id]
                hallucinated = [
                    m for m in mentioned if not any(lex.match(m, g) for g in truth)
                ]
                record = {
                    "image_id": image_id,
                    "caption": caption,
                    "mentions": mentioned,
                    "hallucinated": hallucinated,
                }
                fp.write(json.dumps(record, ensure_ascii=False) + "\n")
    if not captions:
        _warn(f"empty input: {args.captions}")
    print(f"CHAIRs: {rate:.4f} ({flagged}/{len(entries)} captions)")
    return 0


# --- template-caption ------------------------------------------------------


def cmd_template_caption(args) -> int:
    with open(args.detections, encoding="utf-8") as fp:
        detections = read_detections(fp)
    with open(args.freq, encoding="utf-8") as fp:
        class_freq = read_class_freq(fp)
    thresholds = args.threshold or [0.5]
    multi = len(thresholds) > 1
    written = 0
    empty = 0
    with open(args.output, "w", encoding="utf-8") as fp:
        for threshold in thresholds:
            for image_id, dets in detections:
                caption = template_caption(dets, class_freq, args.top_n, threshold)
                if not caption:
                    empty += 1
                    continue
                record = {"image_id": image_id, "caption": caption}
                if multi:
                    record["threshold"] = threshold
                fp.write(json.dumps(record, ensure_ascii=False) + "\n")
                written += 1
    if not detections:
        _warn(f"empty input: {args.detections}")
    print(f"wrote {written} template captions ({empty} empty, excluded) -> {args.output}")
    return 0


# --- human-corr ------------------------------------------------------------


def _make_caption_metric(name: str, cfg, index, lex):
    def metric(caption: str, references) -> float:
        predicted = extract_tuples(caption, cfg)
        tuples = set()
        for reference in references:
            tuples |= extract_tuples(reference, cfg).tuples
        truth = SceneGraph("", tuples)
        score = spice_u(predicted, truth, index, lex)
        return {
            "spice": score.spice,
            "uniq": score.uniq,
            "spice-u": score.spice_u,
        }[name]

    return metric


def cmd_human_corr(args) -> int:
    with open(args.judgements, encoding="utf-8") as fp:
        records = read_judgements(fp)
    if not records:
        _warn(f"empty input: {args.judgements}")
        return 0
    cfg = _load_extractor(args.config)
    index = _load_index_file(args.index)
    lex = _load_lexicon_arg(args.lexicon)
    metric = _make_caption_metric(args.metric, cfg, index, lex)

    accuracy = pairwise_accuracy(records, metric)
    for category in sorted(accuracy.by_category):
        print(f"{category}\t{accuracy.by_category[category]:.2f}")
    print(f"ALL\t{accuracy.overall:.2f}")
    if not args.skip_pearson:
        print(f"Pearson\t{pearson(records, metric):.4f}")
    print(
        f"judged {accuracy.scored} records with {args.metric} "
        f"({accuracy.skipped_ties} vote ties skipped)"
    )
    return 0


# --- aggregate -------------------------------------------------------------


def cmd_aggregate(args) -> int:
    values: dict[str, float] = {}
    if args.values:
        with open(args.values, encoding="utf-8") as fp:
            values.update(read_metric_values(fp))
    for setting in args.set or []:
        name, _, raw = setting.partition("=")
        if not name or not raw:
            raise ValueError(f"bad --set value: {setting!r} (want NAME=VALUE)")
        values[name] = float(raw)
    if not values:
        _warn("empty input: no metric values")
        return 0
    aggregate = geo_mean(values, chair_key=args.invert)
    lines = [f"{name}\t{value}" for name, value in values.items()]
    lines.append(f"GeoMean\t{aggregate:.2f}")
    report = "\n".join(lines)
    if args.output:
        Path(args.output).write_text(report + "\n", encoding="utf-8")
    print(report)
    return 0


# --- grid-search -----------------------------------------------------------


def _parse_grid(spec: str) -> list[float]:
    """Either comma-separated values or an inclusive start:stop:step range."""
    if ":" in spec:
        try:
            start, stop, step = (float(x) for x in spec.split(":"))
        except ValueError as exc:
            raise ValueError(f"bad grid spec: {spec!r}") from exc
        if step <= 0 or stop < start:
            raise ValueError(f"bad grid spec: {spec!r}")
        count = int(round((stop - start) / step))
        return [round(start + i * step, 10) for i in range(count + 1)]
    try:
        return [float(x) for x in spec.split(",") if x.strip()]
    except ValueError as exc:
        raise ValueError(f"bad grid spec: {spec!r}") from exc


def cmd_grid_search(args) -> int:
    with open(args.candidates, encoding="utf-8") as fp:
        sets = read_candidate_sets(fp)
    if not sets:
        _warn(f"empty input: {args.candidates}")
        return 0
    graphs = ingest_scene_graphs(args.graphs)
    index = _load_index_file(args.index)
    lex = _load_lexicon_arg(args.lexicon)
    ext_cfg = _load_extractor(args.config)

    unigram = None
    if args.lm in ("unigram", "interpolated"):
        if not args.train:
            raise ValueError(f"--train is required for --lm {args.lm}")
        with open(args.train, encoding="utf-8") as fp:
            corpus = [tokenize(caption) for _, caption in read_captions(fp)]
        unigram = train_unigram(corpus, k=args.k)
    table = None
    if args.ext:
        with open(args.ext, encoding="utf-8") as fp:
            table = load_token_logps(fp)

    dev_data = []
    for cs in sets:
        if cs.image_id not in graphs:
            raise ValueError(f"no reference graph for image {cs.image_id!r}")
        dev_data.append((cs, graphs[cs.image_id]))

    def aggregate(data, lam: float, alpha: float) -> float:
        cfg = RerankConfig(
            lam=lam, lm=args.lm, alpha=alpha, length_normalize=args.length_normalize
        )
        scorer = make_scorer(cfg, unigram=unigram, table=table)
        scores = []
        for cs, truth in data:
            selected = rerank(cs, scorer, cfg).selected
            predicted = extract_tuples(" ".join(selected.tokens), ext_cfg)
            scores.append(spice_u(predicted, truth, index, lex).spice_u)
        return statistics.fmean(scores)

    result = grid_search(
        dev_data, _parse_grid(args.lambdas), _parse_grid(args.alphas), aggregate
    )
    rows = "\n".join(
        f"{lam:g}\t{alpha:g}\t{value:.4f}" for lam, alpha, value in result.table
    )
    if args.output:
        Path(args.output).write_text(rows + "\n", encoding="utf-8")
    print(rows)
    print(
        f"best: lambda={result.lam:g} alpha={result.alpha:g} "
        f"mean-spice-u={result.value:.4f}"
    )
    return 0


# --- parser ----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="capuniq",
        description=(
            "Score image captions for correctness and uniqueness, and "
            "re-rank captioner beam candidates against a language model."
        ),
    )
    parser.add_argument(
        "--seed",
        type=int,
        default=None,
        help="reserved for fixture generation; scoring ignores it",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-index", help="build a concept frequency index")
    p.add_argument("--graphs", required=True, help="scene-graph JSONL input")
    p.add_argument("--output", "-o", required=True, help="index file to write")
    p.set_defaults(func=cmd_build_index)

    p = sub.add_parser("extract", help="captions to scene graphs (merged per image)")
    p.add_argument("--captions", required=True, help="captions JSONL input")
    p.add_argument("--output", "-o", required=True, help="scene-graph JSONL output")
    p.add_argument("--config", help="extractor config directory (default: shipped)")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("score", help="score captions against reference graphs")
    p.add_argument("--captions", required=True, help="captions JSONL input")
    p.add_argument("--graphs", required=True, help="reference scene-graph JSONL")
    p.add_argument("--index", required=True, help="concept frequency index file")
    p.add_argument("--lexicon", help="synonym lexicon file (default: shipped)")
    p.add_argument("--config", help="extractor config directory (default: shipped)")
    p.add_argument("--output", "-o", required=True, help="score JSONL output")
    p.add_argument("--jobs", type=int, default=1, help="parallel workers")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("rerank", help="select beam candidates by the weighted objective")
    p.add_argument("--candidates", required=True, help="candidate JSONL input")
    p.add_argument("--output", "-o", required=True, help="selection JSONL output")
    p.add_argument("--lm", choices=("unigram", "external", "interpolated"),
                   default="unigram", help="language model used for the penalty")
    p.add_argument("--lambda", dest="lam", type=float, default=DEFAULT_LAMBDA,
                   help="language-model weight")
    p.add_argument("--alpha", type=float, default=DEFAULT_ALPHA,
                   help="interpolation weight toward the unigram model")
    p.add_argument("--k", type=float, default=DEFAULT_K,
                   help="unigram smoothing constant")
    p.add_argument("--train", help="captions JSONL for unigram training")
    p.add_argument("--ext", help="external token log-prob file")
    p.add_argument("--length-normalize", action="store_true",
                   help="divide the LM term by token count + 1")
    p.add_argument("--jobs", type=int, default=1, help="parallel workers")
    p.set_defaults(func=cmd_rerank)

    p = sub.add_parser("distractor", help="fraction of images preferring a distractor")
    p.add_argument("--gt", required=True,
                   help="ground-truth caption likelihoods (candidate format)")
    p.add_argument("--distractor-likelihoods", required=True,
                   help="distractor likelihoods (candidate format, index-aligned)")
    p.add_argument("--flags", help="precomputed flag JSONL {image_id, flagged}")
    p.add_argument("--objects", help="ground-truth objects JSONL for flag computation")
    p.add_argument("--distractor-file", help="distractor sentences (default: shipped)")
    p.add_argument("--comparator", choices=("total", "mean"), default="total",
                   help="compare total or per-token mean log-likelihoods")
    p.add_argument("--config", help="extractor config directory (default: shipped)")
    p.add_argument("--lexicon", help="synonym lexicon file (default: shipped)")
    p.set_defaults(func=cmd_distractor)

    p = sub.add_parser("chair", help="hallucinated-object rate over captions")
    p.add_argument("--captions", required=True, help="captions JSONL input")
    p.add_argument("--objects", required=True, help="ground-truth objects JSONL")
    p.add_argument("--vocab", help="object vocabulary file (default: union of ground truth)")
    p.add_argument("--config", help="extractor config directory (default: shipped)")
    p.add_argument("--lexicon", help="synonym lexicon file (default: shipped)")
    p.add_argument("--output", "-o", help="per-caption mention JSONL output")
    p.set_defaults(func=cmd_chair)

    p = sub.add_parser("template-caption", help="baseline captions from detections")
    p.add_argument("--detections", required=True, help="detection JSONL input")
    p.add_argument("--freq", required=True, help="class<TAB>frequency file")
    p.add_argument("--top-n", type=int, default=1000,
                   help="keep only this many most frequent classes")
    p.add_argument("--threshold", type=float, action="append",
                   help="detection score cutoff; repeat for a sweep (default 0.5)")
    p.add_argument("--output", "-o", required=True, help="captions JSONL output")
    p.set_defaults(func=cmd_template_caption)

    p = sub.add_parser("human-corr", help="agreement with pairwise human judgements")
    p.add_argument("--judgements", required=True, help="judgement JSONL input")
    p.add_argument("--index", required=True, help="concept frequency index file")
    p.add_argument("--metric", choices=("spice", "uniq", "spice-u"),
                   default="spice-u", help="metric under test")
    p.add_argument("--config", help="extractor config directory (default: shipped)")
    p.add_argument("--lexicon", help="synonym lexicon file (default: shipped)")
    p.add_argument("--skip-pearson", action="store_true",
                   help="report accuracies only")
    p.set_defaults(func=cmd_human_corr)

    p = sub.add_parser("aggregate", help="geometric mean across metric values")
    p.add_argument("--values", help="metric<TAB>value input file")
    p.add_argument("--set", action="append", metavar="NAME=VALUE",
                   help="add or override a metric value")
    p.add_argument("--invert", metavar="NAME",
                   help="invert this lower-is-better metric (the hallucination rate)")
    p.add_argument("--output", "-o", help="report file to write")
    p.set_defaults(func=cmd_aggregate)

    p = sub.add_parser("grid-search", help="exhaustive lambda/alpha search")
    p.add_argument("--candidates", required=True, help="dev candidate JSONL")
    p.add_argument("--graphs", required=True, help="dev reference scene-graph JSONL")
    p.add_argument("--index", required=True, help="concept frequency index file")
    p.add_argument("--lm", choices=("unigram", "external", "interpolated"),
                   default="unigram")
    p.add_argument("--train", help="captions JSONL for unigram training")
    p.add_argument("--ext", help="external token log-prob file")
    p.add_argument("--k", type=float, default=DEFAULT_K)
    p.add_argument("--lambdas", default="0:1:0.1",
                   help="comma list or start:stop:step range")
    p.add_argument("--alphas", default="0:1:0.1",
                   help="comma list or start:stop:step range")
    p.add_argument("--length-normalize", action="store_true")
    p.add_argument("--config", help="extractor config directory (default: shipped)")
    p.add_argument("--lexicon", help="synonym lexicon file (default: shipped)")
    p.add_argument("--output", "-o", help="grid table file to write")
    p.set_defaults(func=cmd_grid_search)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
