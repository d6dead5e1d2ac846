"""Command-line interface.

Subcommands cover the whole workflow: ``parse`` a profiler log to JSON,
``synth`` a labeled corpus, ``train`` an attack model from a manifest,
``predict`` a victim log, ``eval`` a model on a manifest, ``rfe`` export a
feature ranking, and ``trace`` decompile a framework trace.

Exit codes: 0 success, 1 invalid input or configuration, 2 internal error.
Set ARCHPROBE_LOG to control verbosity. Output files are written
atomically; failures leave no partial artifacts.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import tempfile
from pathlib import Path

from . import pipeline, synth
from .classifiers import KINDS, HyperParams
from .errors import ArchprobeError
from .features import GROUPS
from .nvprof import parse_log_file
from .profile import profile_to_json
from .selection import RFE_ESTIMATORS, ranking_to_dict
from .traceparse import emit_code, graph_to_dict, reconstruct_from_text

log = logging.getLogger(__name__)


def _atomic_write(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit(text: str, out: str | None) -> None:
    if out:
        _atomic_write(out, text)
    else:
        sys.stdout.write(text)


def _require_file(path) -> Path:
    p = Path(path)
    if not p.is_file():
        raise ArchprobeError(f"no such file: {p}")
    return p


def _groups_arg(value: str):
    groups = tuple(g.strip() for g in value.split(",") if g.strip())
    unknown = set(groups) - set(GROUPS)
    if unknown:
        raise argparse.ArgumentTypeError(
            f"unknown groups {sorted(unknown)}; valid: {', '.join(GROUPS)}"
        )
    return groups


def _step_arg(value: str):
    num = float(value)
    return num if 0 < num < 1 else int(num)


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--groups", type=_groups_arg, default=GROUPS,
                   help="comma-separated feature groups (default: all)")
    p.add_argument("--exclude-memory", action="store_true",
                   help="drop memory-management GPU-kernel features")
    p.add_argument("--top-m", type=int, default=None,
                   help="train on the top-m RFE-ranked features")
    p.add_argument("--predictor", choices=KINDS, default="random_forest")
    p.add_argument("--rfe-estimator", choices=RFE_ESTIMATORS, default="random_forest")
    p.add_argument("--rfe-step", type=_step_arg, default=1,
                   help="features dropped per RFE round (int) or fraction of the rest")
    p.add_argument("--trees", type=int, default=None, help="forest size override")
    p.add_argument("--knn-k", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--top-k", type=int, default=5)
    p.add_argument("--workers", type=int, default=1)


def _config_from_args(args) -> pipeline.PipelineConfig:
    hyper = HyperParams()
    overrides = {}
    if args.trees is not None:
        overrides["forest_trees"] = args.trees
    if args.knn_k is not None:
        overrides["knn_k"] = args.knn_k
    if overrides:
        hyper = HyperParams(**{**hyper.to_dict(), **overrides})
    return pipeline.PipelineConfig(
        groups=tuple(args.groups),
        exclude_memory=args.exclude_memory,
        top_m=args.top_m,
        predictor=args.predictor,
        rfe_estimator=args.rfe_estimator,
        rfe_step=args.rfe_step,
        hyper=hyper,
        seed=args.seed,
        top_k=args.top_k,
        workers=args.workers,
    )


def cmd_parse(args) -> int:
    profile = parse_log_file(_require_file(args.log))
    doc = json.loads(profile_to_json(profile))
    doc["config_digest"] = pipeline.digest_of({"log": str(args.log)})
    _emit(json.dumps(doc, sort_keys=True, indent=2) + "\n", args.out)
    return 0


def cmd_synth(args) -> int:
    spec = synth.PerturbationSpec(
        noise_rel=args.noise,
        prune_shift=args.prune_shift,
        gpu_shift=args.gpu_shift,
        spurious_corr=args.spurious,
    )
    corpus = synth.generate_corpus(
        args.classes,
        args.per_class,
        spec,
        seed=args.seed,
        role=args.role,
        rep_offset=args.rep_offset,
    )
    if args.variant:
        corpus = synth.apply_variant(corpus, args.variant, spec, seed=args.seed)
    manifest = synth.write_corpus(corpus, args.out)
    config_doc = {
        "classes": args.classes,
        "per_class": args.per_class,
        "noise": args.noise,
        "spurious": args.spurious,
        "variant": args.variant,
        "role": args.role,
        "rep_offset": args.rep_offset,
        "seed": args.seed,
    }
    doc = json.loads(manifest.read_text())
    doc["config_digest"] = pipeline.digest_of(config_doc)
    _atomic_write(manifest, pipeline.canonical_json(doc))
    print(manifest)
    return 0


def cmd_train(args) -> int:
    config = _config_from_args(args)
    corpus = pipeline.load_manifest(_require_file(args.manifest))
    model = pipeline.offline_preprocess(corpus, config, created=args.stamp)
    _atomic_write(args.out, pipeline.canonical_json(pipeline.model_to_dict(model)))
    log.info("model written to %s", args.out)
    return 0


def cmd_predict(args) -> int:
    model = pipeline.load_model(_require_file(args.model))
    victim = parse_log_file(_require_file(args.log))
    ranking = pipeline.predict_architecture(model, victim)
    k = min(args.top_k, len(ranking))
    lines = [f"{label}\t{score!r}" for label, score in list(ranking)[:k]]
    _emit("\n".join(lines) + "\n", args.out)
    return 0


def cmd_eval(args) -> int:
    model = pipeline.load_model(_require_file(args.model))
    corpus = pipeline.load_manifest(_require_file(args.manifest))
    report = pipeline.evaluate(model, corpus, k=args.top_k)
    doc = report.to_dict()
    doc["config_digest"] = model.provenance.get("config_digest")
    _emit(pipeline.canonical_json(doc), args.out)
    if args.csv:
        _atomic_write(args.csv, report.to_csv())
    return 0


def cmd_rfe(args) -> int:
    config = _config_from_args(args)
    corpus = pipeline.load_manifest(_require_file(args.manifest))
    frontend = pipeline.fit_frontend(corpus, config)
    ranking = pipeline.fit_ranking(frontend, config)
    doc = ranking_to_dict(ranking)
    doc["estimator"] = config.rfe_estimator
    doc["config_digest"] = config.digest()
    _emit(pipeline.canonical_json(doc), args.out)
    if args.text:
        _atomic_write(args.text, "\n".join(f.key for f in ranking.features) + "\n")
    return 0


def cmd_trace(args) -> int:
    text = _require_file(args.trace).read_text(encoding="utf-8")
    graph = reconstruct_from_text(text)
    doc = graph_to_dict(graph)
    doc["config_digest"] = pipeline.digest_of({"trace": str(args.trace)})
    _emit(pipeline.canonical_json(doc), args.out)
    if args.code:
        _atomic_write(args.code, emit_code(graph))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="archprobe",
        description="GPU-profile architecture identification and trace decompilation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("parse", help="profiler CSV log -> canonical profile JSON")
    p.add_argument("log")
    p.add_argument("--out")
    p.set_defaults(func=cmd_parse)

    p = sub.add_parser("synth", help="generate a synthetic labeled corpus")
    p.add_argument("--classes", type=int, default=36)
    p.add_argument("--per-class", type=int, default=1)
    p.add_argument("--noise", type=float, default=0.02)
    p.add_argument("--spurious", type=float, default=0.0)
    p.add_argument("--prune-shift", type=float, default=0.25)
    p.add_argument("--gpu-shift", type=float, default=0.0)
    p.add_argument("--variant", choices=("pruned", "cross_gpu"), default=None)
    p.add_argument("--role", choices=("train", "test"), default="train")
    p.add_argument("--rep-offset", type=int, default=0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="fit an attack model from a corpus manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--stamp", default=None,
                   help="provenance timestamp (omitted by default for reproducible output)")
    _add_config_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="rank architectures for a victim log")
    p.add_argument("--model", required=True)
    p.add_argument("--log", required=True)
    p.add_argument("--top-k", type=int, default=5)
    p.add_argument("--out")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("eval", help="evaluate a model against a labeled manifest")
    p.add_argument("--model", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--top-k", type=int, default=5)
    p.add_argument("--out")
    p.add_argument("--csv", help="also write the per-class CSV table")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("rfe", help="export a recursive-elimination feature ranking")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out")
    p.add_argument("--text", help="also write the plain ordered feature list here")
    _add_config_flags(p)
    p.set_defaults(func=cmd_rfe)

    p = sub.add_parser("trace", help="decompile a framework profiler trace")
    p.add_argument("trace")
    p.add_argument("--out", help="layer-graph JSON destination (default stdout)")
    p.add_argument("--code", help="also emit source text here")
    p.set_defaults(func=cmd_trace)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(
        level=os.environ.get("ARCHPROBE_LOG", "WARNING").upper(),
        format="%(levelname)s %(name)s: %(message)s",
    )
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ArchprobeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception:  # internal failure: keep the traceback for debugging
        import traceback

        traceback.print_exc()
        return 2


if __name__ == "__main__":
    sys.exit(main())
