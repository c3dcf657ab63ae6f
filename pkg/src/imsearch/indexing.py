"""Offline indexing: extract, describe, store, weight, hash.

The collection is split into fixed-size shards; a worker pool runs the
map phase (load + extract + describe) per shard and a single reduce
phase stores descriptors in imageId-sorted order.  Output artifacts are
byte-identical regardless of worker count or shard size; a failed shard
is retried once and then reported, never aborting the job.  Weighting
(when configured) runs as a pass over the stored raw index, producing a
sibling weighted index, and the ANN structure is built last.
"""
from __future__ import annotations

import hashlib
import json
import shutil
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from PIL import Image as PILImage
from PIL import UnidentifiedImageError

from .core import ImageRecord, IndexConfig, load_config, resolve_vocab_path, save_config
from .describe import DescriptorModel
from .errors import ConfigInvalid, DuplicateId, ImageSearchError, OutputNotWritable
from .lsh import LshIndex, LshParams, estimate_bucket_width
from .store import create_store, open_store
from .vocab import load_codebook, save_codebook
from .weighting import (
    FrequentItemSet,
    collect_stats,
    select_frequent_items,
    stats_to_dict,
    tfidf_weight,
)

CONFIG_FILE = "config.json"
CODEBOOK_FILE = "codebook.bin"
RECORDS_FILE = "records.jsonl"
MANIFEST_FILE = "manifest.jsonl"
REPORT_FILE = "report.json"
STATS_FILE = "stats.json"
FREQUENT_ITEMS_FILE = "frequent_items.jsonl"
WEIGHTED_DIR = "weighted"
LSH_DIR = "lsh"

# execution metadata, not part of the index artifact
_DIGEST_EXCLUDE = {REPORT_FILE, MANIFEST_FILE}


@dataclass(frozen=True)
class IndexJob:
    """One indexing run over an image list."""

    images: tuple[ImageRecord, ...]
    config: IndexConfig
    output_dir: Path
    workers: int = 1
    shard_size: int = 50

    def __post_init__(self) -> None:
        object.__setattr__(self, "images", tuple(self.images))
        object.__setattr__(self, "output_dir", Path(self.output_dir))
        if self.workers < 1:
            raise ConfigInvalid("workers must be >= 1")
        if self.shard_size < 1:
            raise ConfigInvalid("shard size must be >= 1")


@dataclass(frozen=True)
class IndexReport:
    indexed: int
    failed: int
    failures: tuple[tuple[str, str], ...]
    wall_time: float

    def to_json_dict(self) -> dict:
        return {
            "indexed": self.indexed,
            "failed": self.failed,
            "failures": [{"imageId": i, "reason": r} for i, r in self.failures],
            "wallTime": self.wall_time,
        }


def load_image(uri: str | Path) -> np.ndarray:
    """Decode a PNG/JPEG file into the engine's RGB uint8 image type."""
    with PILImage.open(uri) as img:
        return np.asarray(img.convert("RGB"), dtype=np.uint8)


def build_descriptor_model(config: IndexConfig, base: Path | None = None) -> DescriptorModel:
    """Instantiate the image -> vector pipeline an index was built with."""
    codebook = None
    if config.descriptor.vocab_ref is not None:
        ref = Path(config.descriptor.vocab_ref)
        if not ref.is_absolute() and base is not None:
            ref = base / ref
        codebook = load_codebook(ref)
    return DescriptorModel(config.descriptor, config.extractor, codebook)


def write_records(path: Path, records: Sequence[ImageRecord]) -> None:
    lines = [
        json.dumps(rec.to_json_dict(), sort_keys=True)
        for rec in sorted(records, key=lambda r: r.image_id)
    ]
    path.write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")


def read_records(path: Path) -> dict[str, ImageRecord]:
    records: dict[str, ImageRecord] = {}
    if not path.is_file():
        return records
    for line in path.read_text(encoding="utf-8").splitlines():
        if line.strip():
            rec = ImageRecord.from_json_dict(json.loads(line))
            records[rec.image_id] = rec
    return records


def _shards(images: Sequence[ImageRecord], shard_size: int) -> list[list[ImageRecord]]:
    return [list(images[i : i + shard_size]) for i in range(0, len(images), shard_size)]


def write_manifest(path: Path, shards: Sequence[Sequence[ImageRecord]]) -> None:
    lines = [
        json.dumps({"shardId": i, "imageIds": [r.image_id for r in shard]}, sort_keys=True)
        for i, shard in enumerate(shards)
    ]
    path.write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")


def _process_shard(
    model: DescriptorModel,
    shard: Sequence[ImageRecord],
) -> tuple[list[tuple[str, np.ndarray]], list[tuple[str, str]]]:
    described: list[tuple[str, np.ndarray]] = []
    failures: list[tuple[str, str]] = []
    for record in shard:
        try:
            image = load_image(record.uri)
            described.append((record.image_id, model.describe_image(image)))
        except (ImageSearchError, OSError, UnidentifiedImageError, ValueError) as exc:
            failures.append((record.image_id, f"{type(exc).__name__}: {exc}"))
    return described, failures


def run_index(
    job: IndexJob,
    _shard_fault: Callable[[int], None] | None = None,
) -> IndexReport:
    """Execute an indexing job; see the module docstring for the pipeline.

    ``_shard_fault`` is a test hook invoked with each shard id before the
    shard is processed; an exception it raises simulates a worker crash.
    """
    start = time.perf_counter()
    config = job.config
    config.validate()

    ids = [r.image_id for r in job.images]
    if len(set(ids)) != len(ids):
        raise ConfigInvalid("job image ids must be unique")

    out = job.output_dir
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write-probe"
        probe.write_bytes(b"")
        probe.unlink()
    except OSError as exc:
        raise OutputNotWritable(f"cannot write to {out}: {exc}") from exc

    # Copy the codebook into the index so the directory is self-contained
    # and the stored config only carries relative references.
    stored_config = config
    if config.descriptor.vocab_ref is not None:
        source = Path(config.descriptor.vocab_ref)
        if not source.is_file():
            raise ConfigInvalid(f"vocabulary reference does not resolve: {source}")
        codebook = load_codebook(source)
        save_codebook(codebook, out / CODEBOOK_FILE)
        stored_config = replace(
            config, descriptor=replace(config.descriptor, vocab_ref=CODEBOOK_FILE)
        )
    location = Path(config.storer.location).name
    stored_config = replace(stored_config, storer=replace(config.storer, location=location))
    model = build_descriptor_model(stored_config, base=out)

    shards = _shards(job.images, job.shard_size)
    write_manifest(out / MANIFEST_FILE, shards)

    def run_shard(item: tuple[int, list[ImageRecord]]):
        shard_id, shard = item
        attempts = 0
        while True:
            try:
                if _shard_fault is not None:
                    _shard_fault(shard_id)
                return _process_shard(model, shard)
            except Exception as exc:  # worker crash path, distinct from per-image failures
                attempts += 1
                if attempts > 1:
                    reason = f"WorkerPanic: shard {shard_id}: {exc}"
                    return [], [(r.image_id, reason) for r in shard]

    if job.workers > 1:
        with ThreadPoolExecutor(max_workers=job.workers) as pool:
            results = list(pool.map(run_shard, enumerate(shards)))
    else:
        results = [run_shard(item) for item in enumerate(shards)]

    described: list[tuple[str, np.ndarray]] = []
    failures: list[tuple[str, str]] = []
    for oks, fails in results:
        described.extend(oks)
        failures.extend(fails)
    described.sort(key=lambda pair: pair[0])
    failures.sort(key=lambda pair: pair[0])

    raw = create_store(config.storer.backend, out / location, model.feature_id, model.length)
    with raw:
        for image_id, vector in described:
            raw.insert(image_id, vector)

    indexed_ids = {image_id for image_id, _ in described}
    write_records(out / RECORDS_FILE, [r for r in job.images if r.image_id in indexed_ids])

    _apply_collection_passes(out, stored_config, raw, workers=job.workers)
    save_config(stored_config, out / CONFIG_FILE)

    report = IndexReport(
        indexed=len(described),
        failed=len(failures),
        failures=tuple(failures),
        wall_time=time.perf_counter() - start,
    )
    (out / REPORT_FILE).write_text(
        json.dumps(report.to_json_dict(), sort_keys=True, indent=2) + "\n",
        encoding="utf-8",
    )
    return report


def index_digest(directory: str | Path) -> str:
    """SHA-256 over the index artifacts (excluding execution metadata)."""
    directory = Path(directory)
    digest = hashlib.sha256()
    for path in sorted(p for p in directory.rglob("*") if p.is_file()):
        if path.name in _DIGEST_EXCLUDE:
            continue
        digest.update(str(path.relative_to(directory)).encode("utf-8"))
        digest.update(b"\0")
        digest.update(path.read_bytes())
        digest.update(b"\0")
    return digest.hexdigest()


def merge_segments(segments: Sequence[Path | str], output_dir: Path | str) -> IndexReport:
    """Concatenate delta segments into a fresh index directory.

    All segments must share one configuration.  Collection-global
    passes (weighting statistics, the ANN structure) are recomputed over
    the merged set.
    """
    start = time.perf_counter()
    segments = [Path(s) for s in segments]
    if not segments:
        raise ConfigInvalid("merge requires at least one segment")
    configs = [load_config(seg / CONFIG_FILE, resolve=False) for seg in segments]
    reference = configs[0].to_dict()
    for seg, cfg in zip(segments[1:], configs[1:]):
        if cfg.to_dict() != reference:
            raise ConfigInvalid(f"segment {seg} was built with a different configuration")

    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    config = configs[0]
    if config.descriptor.vocab_ref is not None:
        shutil.copyfile(
            resolve_vocab_path(config, segments[0] / CONFIG_FILE), out / CODEBOOK_FILE
        )

    location = config.storer.location
    merged: dict[str, np.ndarray] = {}
    records: list[ImageRecord] = []
    feature_id = ""
    dim = 1
    for seg in segments:
        store = open_store(config.storer.backend, seg / location)
        feature_id, dim = store.feature_id, store.dim
        for image_id, vector in store.items():
            if image_id in merged:
                raise DuplicateId(f"imageId {image_id} appears in multiple segments")
            merged[image_id] = vector
        records.extend(read_records(seg / RECORDS_FILE).values())

    raw = create_store(config.storer.backend, out / location, feature_id, dim)
    with raw:
        for image_id in sorted(merged):
            raw.insert(image_id, merged[image_id].astype(np.float64))
    write_records(out / RECORDS_FILE, records)

    _apply_collection_passes(out, config, raw, workers=1)
    save_config(config, out / CONFIG_FILE)
    report = IndexReport(indexed=len(merged), failed=0, failures=(), wall_time=time.perf_counter() - start)
    (out / REPORT_FILE).write_text(
        json.dumps(report.to_json_dict(), sort_keys=True, indent=2) + "\n",
        encoding="utf-8",
    )
    return report


def _apply_collection_passes(out: Path, config: IndexConfig, raw, workers: int) -> None:
    scan_store = raw
    location = config.storer.location
    if config.weighting.scheme != "none" and len(raw):
        stats = collect_stats(vec for _, vec in raw.items())
        (out / STATS_FILE).write_text(
            json.dumps(stats_to_dict(stats), sort_keys=True) + "\n", encoding="utf-8"
        )
        if config.weighting.scheme == "tfidf":
            weighted_dir = out / WEIGHTED_DIR
            weighted_dir.mkdir(exist_ok=True)
            weighted = create_store(
                config.storer.backend, weighted_dir / location,
                f"tfidf:{raw.feature_id}", raw.dim,
            )
            with weighted:
                for image_id, vector in raw.items():
                    weighted.insert(image_id, tfidf_weight(vector, stats))
            scan_store = weighted
        else:
            k = config.weighting.k
            lines = [
                json.dumps(
                    FrequentItemSet(
                        image_id, select_frequent_items(tfidf_weight(vec, stats), k)
                    ).to_json_dict(),
                    sort_keys=True,
                )
                for image_id, vec in raw.items()
            ]
            (out / FREQUENT_ITEMS_FILE).write_text(
                "\n".join(lines) + ("\n" if lines else ""), encoding="utf-8"
            )
            scan_store = None
    if config.ann is not None and scan_store is not None and len(scan_store):
        width = config.ann.bucket_width
        if width is None:
            width = estimate_bucket_width(
                scan_store.matrix().astype(np.float64), seed=config.ann.seed
            )
        params = LshParams(
            tables=config.ann.tables, hashes=config.ann.hashes,
            bucket_width=width, seed=config.ann.seed, dim=scan_store.dim,
        )
        LshIndex.build(dict(scan_store.items()), params, workers=workers).save(out / LSH_DIR)
