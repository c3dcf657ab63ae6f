"""Desk-scale labeled image corpora.

Generates small synthetic collections of colored/textured classes with
captions and modality tags, and loads any local folder organized as one
subdirectory per class.  Everything is seeded, so corpora regenerate bit
identically.
"""
from __future__ import annotations

import colorsys
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image as PILImage

from .core import ImageRecord

_MODALITY_POOL = ("xray", "ct", "mri", "ultrasound", "photo", "microscopy")
_CLASS_NOUNS = (
    "femur", "cranium", "thorax", "vertebra", "retina", "cortex",
    "ventricle", "aorta", "tibia", "liver", "kidney", "lung",
)
_FILLER = ("image", "of", "a", "stained", "sample", "showing", "typical", "structure")


@dataclass(frozen=True)
class LabeledCorpus:
    """Image records plus their class labels, keyed by imageId."""

    records: tuple[ImageRecord, ...]
    labels: dict[str, str]

    def ids_of_class(self, label: str) -> list[str]:
        return [i for i, c in sorted(self.labels.items()) if c == label]

    @property
    def classes(self) -> list[str]:
        return sorted(set(self.labels.values()))


def class_image(class_idx: int, n_classes: int, rng: np.random.Generator, size: int = 32) -> np.ndarray:
    """One synthetic image: class hue and texture plus per-image content.

    Two small random-colored rectangles and pixel noise make every image
    of a class distinct (distinct histograms, not just distinct pixels)
    while the class hue and texture stay dominant.
    """
    hue = class_idx / max(1, n_classes)
    base = np.array(colorsys.hsv_to_rgb(hue, 0.85, 0.9)) * 255.0
    image = np.tile(base, (size, size, 1))

    pattern = class_idx % 3
    xs = np.arange(size)
    if pattern == 1:  # vertical stripes
        period = 4 + class_idx % 4
        stripe = ((xs // period) % 2).astype(np.float64) * 70.0
        image += stripe[None, :, None]
    elif pattern == 2:  # checkerboard
        period = 3 + class_idx % 3
        mask = (((xs[:, None] // period) + (xs[None, :] // period)) % 2).astype(np.float64)
        image += (mask * 60.0)[:, :, None]

    for _ in range(2):
        w = int(rng.integers(size // 8, size // 4 + 1))
        h = int(rng.integers(size // 8, size // 4 + 1))
        x0 = int(rng.integers(0, size - w))
        y0 = int(rng.integers(0, size - h))
        color = np.array(colorsys.hsv_to_rgb(float(rng.uniform()), 0.9, 0.95)) * 255.0
        image[y0 : y0 + h, x0 : x0 + w] = color

    # signature row: independent random hues per pixel carry enough count
    # entropy that two images virtually never share a color histogram
    for x in range(size):
        image[0, x] = np.array(colorsys.hsv_to_rgb(float(rng.uniform()), 1.0, 1.0)) * 255.0

    image += rng.integers(-16, 17, size=image.shape)
    return np.clip(image, 0, 255).astype(np.uint8)


def _caption_for(class_idx: int, image_idx: int, rng: np.random.Generator) -> str:
    noun = _CLASS_NOUNS[class_idx % len(_CLASS_NOUNS)]
    extras = rng.choice(len(_FILLER), size=3, replace=False)
    words = [_FILLER[i] for i in extras]
    return f"{words[0]} {noun} {words[1]} {noun} section {words[2]} {image_idx}"


def generate_corpus(
    out_dir: str | Path,
    classes: int = 4,
    per_class: int = 12,
    size: int = 32,
    seed: int = 0,
    with_captions: bool = True,
) -> LabeledCorpus:
    """Write one PNG per image and return records with labels."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    records = []
    labels: dict[str, str] = {}
    for c in range(classes):
        label = f"class{c:02d}"
        modality = _MODALITY_POOL[c % len(_MODALITY_POOL)]
        for i in range(per_class):
            rng = np.random.default_rng(np.random.SeedSequence([seed, c, i]))
            image = class_image(c, classes, rng, size)
            image_id = f"{label}-{i:03d}"
            path = out_dir / f"{image_id}.png"
            PILImage.fromarray(image).save(path)
            records.append(
                ImageRecord(
                    image_id=image_id,
                    uri=str(path),
                    caption=_caption_for(c, i, rng) if with_captions else None,
                    modality=modality,
                    article_uri=f"https://example.org/articles/{label}/{i}",
                )
            )
            labels[image_id] = label
    return LabeledCorpus(tuple(records), labels)


def generate_duplicate_corpus(
    out_dir: str | Path, pairs: int = 20, size: int = 32, seed: int = 0
) -> tuple[LabeledCorpus, dict[str, set[str]], dict[str, list[str]]]:
    """Corpus of exact-duplicate pairs plus qrels mapping each query to
    its duplicate; used for harness self-checks.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    records = []
    labels: dict[str, str] = {}
    qrels: dict[str, set[str]] = {}
    topics: dict[str, list[str]] = {}
    for p in range(pairs):
        rng = np.random.default_rng(np.random.SeedSequence([seed, p]))
        image = class_image(p % 6, 6, rng, size)
        for suffix in ("a", "b"):
            image_id = f"pair{p:03d}-{suffix}"
            path = out_dir / f"{image_id}.png"
            PILImage.fromarray(image).save(path)
            records.append(ImageRecord(image_id=image_id, uri=str(path)))
            labels[image_id] = f"pair{p:03d}"
        topic = f"t{p:03d}"
        topics[topic] = [f"pair{p:03d}-a"]
        qrels[topic] = {f"pair{p:03d}-b"}
    return LabeledCorpus(tuple(records), labels), qrels, topics


def load_labeled_folder(root: str | Path) -> LabeledCorpus:
    """Load a folder laid out as one subdirectory per class."""
    root = Path(root)
    records = []
    labels: dict[str, str] = {}
    for class_dir in sorted(p for p in root.iterdir() if p.is_dir()):
        for path in sorted(class_dir.iterdir()):
            if path.suffix.lower() not in (".png", ".jpg", ".jpeg"):
                continue
            image_id = f"{class_dir.name}-{path.stem}"
            records.append(ImageRecord(image_id=image_id, uri=str(path)))
            labels[image_id] = class_dir.name
    return LabeledCorpus(tuple(records), labels)


def make_topics(
    corpus: LabeledCorpus, queries_per_class: int = 2, seed: int = 0
) -> tuple[dict[str, list[str]], dict[str, set[str]]]:
    """Leave-query-out topics: each topic queries with one class member
    and judges the remaining members of that class relevant.
    """
    rng = np.random.default_rng(seed)
    topics: dict[str, list[str]] = {}
    qrels: dict[str, set[str]] = {}
    counter = 0
    for label in corpus.classes:
        members = corpus.ids_of_class(label)
        n_queries = min(queries_per_class, len(members))
        picks = rng.choice(len(members), size=n_queries, replace=False)
        for pick in sorted(int(p) for p in picks):
            topic_id = f"t{counter:03d}"
            query_id = members[pick]
            topics[topic_id] = [query_id]
            qrels[topic_id] = set(members) - {query_id}
            counter += 1
    return topics, qrels
