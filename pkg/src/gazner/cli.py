"""Command line interface.

Subcommands cover the full pipeline: build a gazetteer, cluster
embeddings, featurize a corpus under a preset, train, tag, and score.
Fatal problems print one line to stderr and map to stable exit codes:
2 for usage errors, 3 for configuration problems, 4 for I/O failures,
1 for any other toolkit error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import corpus as corpus_mod
from .corpus import LabelScheme, class_weights, corpus_stats, read_conll, write_conll
from .crf import CrfModel, decode, train
from .errors import ConfigError, FormatError, GaznerError
from .features import (
    FeatureResources,
    ModelPreset,
    PRESETS,
    default_stopwords,
    featurize,
    load_stopwords,
    read_features,
    write_features,
)
from .gazetteer import GazetteerTrie, build_gazetteer
from .kmeans import ClusterModel, kmeans_fit
from .sidecar import read_sidecar
from .evaluation import evaluate, format_report
from .ioutil import atomic_write

GAZ_TYPE_FLAGS = ("per", "loc", "grp", "corp", "cw", "prod")


def _add_corpus_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--in", dest="inp", required=True, help="corpus file")
    p.add_argument("--format", choices=corpus_mod.FORMATS, default="two_col", help="corpus file format")


def _add_resource_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--gazetteer", help="binary gazetteer file")
    p.add_argument("--gaz-mode", choices=("per_token", "longest_span"), default="per_token")
    p.add_argument("--max-span", type=int, default=5, help="longest gazetteer span in tokens")
    p.add_argument("--sidecar", action="append", default=[], help="embedding or tag sidecar (repeatable)")
    p.add_argument("--kmeans", action="append", default=[], help="cluster model file (repeatable)")
    p.add_argument("--stopwords", help="stopword list; bundled Bangla list when omitted")


def _load_resources(args, preset: ModelPreset) -> FeatureResources:
    res = FeatureResources(gaz_mode=args.gaz_mode, max_span=args.max_span)
    if args.gazetteer:
        res.gazetteer = GazetteerTrie.load(args.gazetteer)
    for path in args.sidecar:
        sc = read_sidecar(path)
        if sc.kind == "tag":
            res.tags = sc
        elif sc.layer == 24:
            res.emb24 = sc
        elif sc.layer == 23:
            res.emb23 = sc
        else:
            raise ConfigError(f"{path}: no feature group consumes embedding layer {sc.layer}")
    for path in args.kmeans:
        model = ClusterModel.load(path)
        if model.layer == 24:
            res.kmeans24 = model
        elif model.layer == 23:
            res.kmeans23 = model
        else:
            raise ConfigError(f"{path}: no feature group consumes cluster layer {model.layer}")
    if preset.needs("isstopword"):
        res.stopwords = load_stopwords(args.stopwords) if args.stopwords else default_stopwords()
    return res


def cmd_gazetteer_build(args) -> int:
    lists = {}
    for flag in GAZ_TYPE_FLAGS:
        path = getattr(args, flag)
        if path:
            lists[flag.upper()] = path
    if not lists and not args.tsv:
        raise ConfigError("no entity lists given; pass --per/--loc/... or --tsv")
    trie = build_gazetteer(lists=lists, tsv_paths=args.tsv)
    trie.save(args.out)
    total = len(trie)
    print(f"gazetteer: {total} entries -> {args.out}")
    for tag in trie.tag_order:
        print(f"  {tag}: {trie.entry_count[tag]}")
    return 0


def cmd_featurize(args) -> int:
    preset = ModelPreset.named(args.preset)
    sentences = read_conll(args.inp, fmt=args.format)
    res = _load_resources(args, preset)
    feats = featurize(sentences, preset, res, threads=args.threads)
    write_features(feats, args.out)
    print(f"featurized {len(feats)} sentences under preset {preset.name} -> {args.out}")
    return 0


def cmd_kmeans(args) -> int:
    sc = read_sidecar(args.inp)
    if sc.kind != "emb":
        raise ConfigError(f"{args.inp}: clustering needs an embedding sidecar, got kind={sc.kind}")
    model = kmeans_fit(sc.vectors(), k=args.k, seed=args.seed, max_iters=args.max_iters, tol=args.tol, layer=sc.layer)
    model.save(args.out)
    print(f"kmeans: k={model.k} layer={model.layer} inertia={model.inertia:.6g} -> {args.out}")
    return 0


def cmd_train(args) -> int:
    feats = read_features(args.inp)
    scheme = LabelScheme()
    meta = {}
    if args.preset:
        meta["preset"] = ModelPreset.named(args.preset).name
    model = train(
        feats,
        labels=scheme.labels,
        l2=args.l2,
        optimizer=args.optimizer,
        max_iters=args.max_iters,
        tol=args.tol,
        seed=args.seed,
        threads=args.threads,
        meta=meta,
    )
    model.save(args.out)
    print(
        f"trained on {len(feats)} sentences: {model.meta['iterations']} iterations, "
        f"final nll {float(model.meta['final_nll']):.4f} -> {args.out}"
    )
    return 0


def cmd_tag(args) -> int:
    model = CrfModel.load(args.model)
    preset_name = args.preset or model.meta.get("preset")
    if not preset_name:
        raise ConfigError("model records no preset; pass --preset")
    preset = ModelPreset.named(preset_name)
    sentences = read_conll(args.inp, fmt=args.format)
    res = _load_resources(args, preset)
    feats = featurize(sentences, preset, res, threads=args.threads)
    predictions = decode(model, feats, threads=args.threads)
    for sent, pred in zip(sentences, predictions):
        sent.labels = pred
    write_conll(sentences, args.out, fmt=args.format)
    print(f"tagged {len(sentences)} sentences -> {args.out}")
    return 0


def cmd_eval(args) -> int:
    gold = read_conll(args.gold, fmt=args.format)
    pred = read_conll(args.pred, fmt=args.format)
    report = evaluate([s.labels for s in gold], [s.labels for s in pred], mode=args.mode)
    print(format_report(report))
    if args.report_dir:
        from .report import render_eval_report

        paths = render_eval_report(report, args.report_dir)
        for p in paths:
            print(f"wrote {p}")
    return 0


def cmd_weights(args) -> int:
    counts: dict[str, int] = {}
    with open(args.counts, encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n").rstrip("\r")
            if not line.strip() or line.startswith("#"):
                continue
            fields = line.split("\t")
            if len(fields) != 2:
                raise FormatError(f"{args.counts}:{line_no}: expected label<TAB>count")
            try:
                counts[fields[0]] = int(fields[1])
            except ValueError as exc:
                raise FormatError(f"{args.counts}:{line_no}: bad count {fields[1]!r}") from exc
    cw = class_weights(counts, floor=args.floor, n=args.n)
    print("label\tweight\traw")
    for label in counts:
        print(f"{label}\t{cw.weights[label]:.6g}\t{cw.raw[label]:.6g}")
    return 0


def cmd_stats(args) -> int:
    sentences = read_conll(args.inp, fmt=args.format)
    stats = corpus_stats(sentences)
    print(f"sentences: {len(sentences)}")
    print(f"tokens: {stats.total_tokens}")
    print(f"o_fraction: {stats.o_fraction:.4f}")
    for etype in sorted(stats.entity_counts):
        print(f"entities.{etype}: {stats.entity_counts[etype]}")
    if args.counts_out:
        with atomic_write(args.counts_out) as fh:
            for label, count in stats.token_label_counts.items():
                fh.write(f"{label}\t{count}\n")
        print(f"wrote {args.counts_out}")
    if args.report_dir:
        from .report import render_stats_report

        paths = render_stats_report(stats, args.report_dir)
        for p in paths:
            print(f"wrote {p}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gazner", description="Gazetteer-augmented CRF tagger for Bangla NER")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gazetteer-build", help="compile entity lists into a binary gazetteer")
    for flag in GAZ_TYPE_FLAGS:
        p.add_argument(f"--{flag}", help=f"{flag.upper()} phrase list, one per line")
    p.add_argument("--tsv", action="append", default=[], help="phrase<TAB>type file (repeatable)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gazetteer_build)

    p = sub.add_parser("featurize", help="extract features for a corpus under a preset")
    _add_corpus_args(p)
    p.add_argument("--preset", required=True, help=f"one of {', '.join(sorted(PRESETS))}")
    _add_resource_args(p)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_featurize)

    p = sub.add_parser("kmeans", help="cluster an embedding sidecar")
    p.add_argument("--in", dest="inp", required=True, help="embedding sidecar")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-iters", type=int, default=100)
    p.add_argument("--tol", type=float, default=1e-4)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_kmeans)

    p = sub.add_parser("train", help="fit a CRF on a feature file")
    p.add_argument("--in", dest="inp", required=True, help="feature file from featurize")
    p.add_argument("--preset", help="preset name recorded in the model")
    p.add_argument("--l2", type=float, default=0.1)
    p.add_argument("--optimizer", choices=("lbfgs", "gd"), default="lbfgs")
    p.add_argument("--max-iters", type=int, default=200)
    p.add_argument("--tol", type=float, default=1e-5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("tag", help="label a corpus with a trained model")
    p.add_argument("--model", required=True)
    _add_corpus_args(p)
    p.add_argument("--preset", help="override the preset recorded in the model")
    _add_resource_args(p)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_tag)

    p = sub.add_parser("eval", help="score predictions against gold labels")
    p.add_argument("--gold", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--format", choices=corpus_mod.FORMATS, default="two_col")
    p.add_argument("--mode", choices=("entity", "token"), default="entity")
    p.add_argument("--report-dir", help="directory for eval_report.tsv and figures")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("weights", help="class weights from label counts")
    p.add_argument("--counts", required=True, help="label<TAB>count file")
    p.add_argument("--n", type=int, help="override the class count in the formula")
    p.add_argument("--floor", type=float, default=0.01)
    p.set_defaults(func=cmd_weights)

    p = sub.add_parser("stats", help="corpus statistics")
    _add_corpus_args(p)
    p.add_argument("--counts-out", help="write label<TAB>count file for the weights command")
    p.add_argument("--report-dir", help="directory for stats.tsv and figures")
    p.set_defaults(func=cmd_stats)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        return _fail(exc, 3)
    except OSError as exc:
        return _fail(exc, 4)
    except GaznerError as exc:
        return _fail(exc, 1)


def _fail(exc: BaseException, code: int) -> int:
    print(f"gazner: error: {type(exc).__name__}: {exc}", file=sys.stderr)
    return code


def entrypoint() -> None:
    sys.exit(main())
