"""Command-line driver.

Verbs: index, search, fuse, train-vocab, eval, serve.  Results go to
stdout as JSON lines; all human-facing diagnostics go to stderr.  Exit
codes: 0 success, 1 usage error, 2 runtime failure.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .core import ImageRecord, load_config, resolve_vocab_path
from .errors import ImageSearchError
from .evaluation import evaluate_run, read_qrels
from .extract import extract_features
from .fusion import FusionRule, fuse, read_run_file, write_run_file
from .indexing import IndexJob, load_image, run_index
from .seek import IndexHandle, QuerySpec, search_modality_filtered
from .text import fuse_multimodal, index_captions, search_text
from .vocab import save_codebook, train_kmeans


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # exit 1 instead of argparse's 2
        raise _UsageError(message)


def _emit(obj: dict) -> None:
    sys.stdout.write(json.dumps(obj) + "\n")


def _note(message: str) -> None:
    sys.stderr.write(message + "\n")


def _read_image_list(path: Path) -> tuple[ImageRecord, ...]:
    records = []
    for line in path.read_text(encoding="utf-8").splitlines():
        if line.strip():
            records.append(ImageRecord.from_json_dict(json.loads(line)))
    return tuple(records)


def cmd_index(args) -> int:
    config_path = Path(args.config)
    config = load_config(config_path)
    vocab_path = resolve_vocab_path(config, config_path)
    if vocab_path is not None:
        config = replace(
            config, descriptor=replace(config.descriptor, vocab_ref=str(vocab_path))
        )
    job = IndexJob(
        images=_read_image_list(Path(args.images)),
        config=config,
        output_dir=Path(args.out),
        workers=args.workers,
        shard_size=args.shard_size,
    )
    report = run_index(job)
    _note(f"indexed {report.indexed} images, {report.failed} failures")
    _emit(report.to_json_dict())
    return 0


def _resolve_example(value: str):
    path = Path(value)
    if path.is_file():
        return load_image(path)
    return value


def cmd_search(args) -> int:
    handle = IndexHandle(Path(args.index))
    positives = tuple(_resolve_example(v) for v in args.positive or ())
    negatives = tuple(_resolve_example(v) for v in args.negative or ())
    spec = QuerySpec(
        positives=positives,
        negatives=negatives,
        text=args.text,
        modalities=frozenset(args.modality) if args.modality else None,
        top_n=args.top,
    )
    text_list = None
    shortlist = None
    if args.text:
        tindex = index_captions(handle.records.values())
        text_list = search_text(args.text, tindex, top_n=1000)
        shortlist = set(text_list.ids())
    visual = []
    if positives:
        visual = [search_modality_filtered(handle, spec, shortlist=shortlist)]
    fused = fuse_multimodal(text_list, visual, top_n=args.top)
    for rank, (image_id, score) in enumerate(fused.entries, start=1):
        record = handle.records.get(image_id)
        _emit(
            {
                "imageId": image_id,
                "score": score,
                "rank": rank,
                "uri": record.uri if record else None,
                "caption": record.caption if record else None,
                "modality": record.modality if record else None,
                "articleUri": record.article_uri if record else None,
            }
        )
    return 0


def cmd_fuse(args) -> int:
    runs = [read_run_file(Path(p)) for p in args.runs]
    rule = FusionRule(
        args.rule,
        weights=tuple(args.weights) if args.weights else None,
        c=args.c,
    )
    query_ids = sorted({q for run in runs for q in run})
    fused_runs = {}
    for query_id in query_ids:
        lists = [run[query_id] for run in runs if query_id in run]
        fused_runs[query_id] = fuse(lists, rule, top_n=args.top, normalize=not args.no_normalize)
    if args.out:
        write_run_file(Path(args.out), fused_runs, tag=args.rule)
    for query_id in query_ids:
        for rank, (image_id, score) in enumerate(fused_runs[query_id].entries, start=1):
            _emit({"queryId": query_id, "imageId": image_id, "rank": rank, "score": score})
    return 0


def cmd_train_vocab(args) -> int:
    root = Path(args.features)
    paths = sorted(
        p for p in root.rglob("*") if p.suffix.lower() in (".png", ".jpg", ".jpeg")
    )
    if not paths:
        _note(f"no images under {root}")
        return 2
    blocks = []
    for path in paths:
        feats = extract_features(
            args.feature, load_image(path), args.grid_step, args.patch_size
        )
        if len(feats):
            blocks.append(feats.descriptors)
    samples = np.vstack(blocks)
    if samples.shape[0] > args.sample_cap:
        rng = np.random.default_rng(args.seed)
        pick = np.sort(rng.choice(samples.shape[0], size=args.sample_cap, replace=False))
        samples = samples[pick]
    codebook = train_kmeans(
        samples, args.k, max_iters=args.max_iters, seed=args.seed, feature_id=args.feature
    )
    save_codebook(codebook, Path(args.out))
    _emit({"k": codebook.k, "dim": codebook.dim, "samples": int(samples.shape[0]),
           "out": str(args.out)})
    return 0


def cmd_eval(args) -> int:
    runs = read_run_file(Path(args.run))
    qrels = read_qrels(Path(args.qrels))
    report = evaluate_run(runs, qrels)
    _emit(
        {
            "map": report.mean,
            "topics": len(report.per_topic),
            "unjudged": list(report.unjudged),
            "perTopic": report.per_topic,
        }
    )
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(Path(args.indexRoot))
    _note(f"serving index root {args.indexRoot} on port {args.port}")
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="imsearch", description=__doc__)
    sub = parser.add_subparsers(dest="verb", required=True, parser_class=_Parser)

    p = sub.add_parser("index", help="build an index from an image list")
    p.add_argument("--config", required=True)
    p.add_argument("--images", required=True, help="JSON lines of image records")
    p.add_argument("--out", required=True)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--shard-size", type=int, default=50)
    p.set_defaults(func=cmd_index)

    p = sub.add_parser("search", help="query an index by example and/or text")
    p.add_argument("--index", required=True)
    p.add_argument("--positive", action="append", default=[])
    p.add_argument("--negative", action="append", default=[])
    p.add_argument("--text")
    p.add_argument("--modality", action="append", default=[])
    p.add_argument("--top", type=int, default=30)
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("fuse", help="fuse TREC-style run files")
    p.add_argument("runs", nargs="+")
    p.add_argument("--rule", required=True)
    p.add_argument("--weights", type=float, nargs="+")
    p.add_argument("--c", type=float, default=60.0)
    p.add_argument("--top", type=int)
    p.add_argument("--out")
    p.add_argument("--no-normalize", action="store_true")
    p.set_defaults(func=cmd_fuse)

    p = sub.add_parser("train-vocab", help="train a visual vocabulary")
    p.add_argument("--features", required=True, help="directory of images")
    p.add_argument("--feature", default="dense-gradient")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--grid-step", type=int, default=8)
    p.add_argument("--patch-size", type=int, default=16)
    p.add_argument("--sample-cap", type=int, default=20000)
    p.add_argument("--max-iters", type=int, default=100)
    p.set_defaults(func=cmd_train_vocab)

    p = sub.add_parser("eval", help="score a run file against qrels")
    p.add_argument("--run", required=True)
    p.add_argument("--qrels", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("serve", help="run the REST service")
    p.add_argument("--port", type=int, default=int(os.environ.get("IMSEARCH_PORT", "8321")))
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument(
        "--indexRoot", default=os.environ.get("IMSEARCH_INDEX_ROOT", "indices")
    )
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        _note(f"usage error: {exc}")
        return 1
    try:
        return args.func(args)
    except ImageSearchError as exc:
        _note(f"error: {exc}")
        return 2
    except OSError as exc:
        _note(f"i/o error: {exc}")
        return 2


if __name__ == "__main__":
    sys.exit(main())
