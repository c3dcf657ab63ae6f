"""Shared data model, component registry and index configuration.

Every pluggable piece of the engine (extractors, descriptors, metrics,
fusion rules, storers, seekers) registers itself here under a component
kind and a name, and is instantiated through :func:`select_component`.
Instances are read-only after construction; all value types in this
module are immutable and safe to share across threads.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Iterable, Mapping

import numpy as np

from .errors import (
    ConfigInvalid,
    InvalidParameter,
    MalformedConfig,
    UnknownComponent,
)

CONFIG_VERSION = "1.0"

SIMILARITY = "similarity"
DISTANCE = "distance"

VOCAB_REPRESENTATIONS = frozenset({"bovw", "binary-bovw", "grid-bovw", "spm-bovw", "vlad"})
GLOBAL_REPRESENTATIONS = frozenset({"hsv-hist", "hog-mini", "gabor", "color-layout"})
REPRESENTATIONS = VOCAB_REPRESENTATIONS | GLOBAL_REPRESENTATIONS

NORMALIZATIONS = frozenset({"none", "l1", "l2"})
WEIGHTING_SCHEMES = frozenset({"none", "tfidf", "frequent-items"})
STORER_BACKENDS = frozenset({"csv", "binary"})


# ---------------------------------------------------------------------------
# Value types
# ---------------------------------------------------------------------------

def _freeze(arr: np.ndarray) -> np.ndarray:
    out = np.asarray(arr)
    out.flags.writeable = False
    return out


@dataclass(frozen=True, eq=False)
class DescriptorVector:
    """Fixed-length numeric image representation.

    ``feature_id`` identifies the descriptor configuration that produced
    the vector; storers reject inserts whose feature_id or length do not
    match the index header.
    """

    feature_id: str
    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 1:
            raise InvalidParameter("descriptor values must be one-dimensional")
        if not np.all(np.isfinite(values)):
            raise InvalidParameter("descriptor values must be finite")
        object.__setattr__(self, "values", _freeze(values))

    @property
    def length(self) -> int:
        return int(self.values.shape[0])


@dataclass(frozen=True, eq=False)
class BinaryDescriptorVector:
    """Bit-vector representation; bit length equals the vocabulary size."""

    feature_id: str
    bits: np.ndarray

    def __post_init__(self) -> None:
        bits = np.asarray(self.bits, dtype=np.uint8)
        if bits.ndim != 1:
            raise InvalidParameter("bits must be one-dimensional")
        if not np.all((bits == 0) | (bits == 1)):
            raise InvalidParameter("bits must contain only 0 and 1")
        object.__setattr__(self, "bits", _freeze(bits))

    @property
    def length(self) -> int:
        return int(self.bits.shape[0])

    def popcount(self) -> int:
        return int(self.bits.sum())

    def as_float(self) -> np.ndarray:
        """0/1 float view used when a bit vector is stored like a vector."""
        return self.bits.astype(np.float64)


@dataclass(frozen=True)
class ImageRecord:
    """One row of the image info table."""

    image_id: str
    uri: str
    caption: str | None = None
    modality: str | None = None
    article_uri: str | None = None

    def to_json_dict(self) -> dict[str, Any]:
        return {
            "imageId": self.image_id,
            "uri": self.uri,
            "caption": self.caption,
            "modality": self.modality,
            "articleUri": self.article_uri,
        }

    @classmethod
    def from_json_dict(cls, raw: Mapping[str, Any]) -> "ImageRecord":
        try:
            return cls(
                image_id=str(raw["imageId"]),
                uri=str(raw.get("uri", "")),
                caption=raw.get("caption"),
                modality=raw.get("modality"),
                article_uri=raw.get("articleUri"),
            )
        except KeyError as exc:
            raise MalformedConfig(f"image record missing field: {exc}") from exc


@dataclass(frozen=True)
class ScoredList:
    """Ordered (imageId, score) pairs, the unit of ranking and fusion.

    Entries are sorted best-first: descending score for similarity
    polarity, ascending for distance polarity, ties broken by imageId.
    """

    entries: tuple[tuple[str, float], ...]
    polarity: str
    source: str = ""

    def __post_init__(self) -> None:
        if self.polarity not in (SIMILARITY, DISTANCE):
            raise InvalidParameter(f"unknown polarity: {self.polarity!r}")
        seen = set()
        for image_id, _ in self.entries:
            if image_id in seen:
                raise InvalidParameter(f"duplicate imageId in scored list: {image_id}")
            seen.add(image_id)
        keys = [self._sort_key(e) for e in self.entries]
        if any(b < a for a, b in zip(keys, keys[1:])):
            raise InvalidParameter("scored list entries are not sorted best-first")

    def _sort_key(self, entry: tuple[str, float]):
        image_id, score = entry
        return (score, image_id) if self.polarity == DISTANCE else (-score, image_id)

    @classmethod
    def from_pairs(
        cls,
        pairs: Iterable[tuple[str, float]],
        polarity: str = SIMILARITY,
        source: str = "",
    ) -> "ScoredList":
        """Build a list from unordered pairs, sorting best-first."""
        items = [(str(i), float(s)) for i, s in pairs]
        if polarity == DISTANCE:
            items.sort(key=lambda e: (e[1], e[0]))
        else:
            items.sort(key=lambda e: (-e[1], e[0]))
        return cls(tuple(items), polarity, source)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def ids(self) -> tuple[str, ...]:
        return tuple(i for i, _ in self.entries)

    def as_dict(self) -> dict[str, float]:
        return {i: s for i, s in self.entries}

    def rank_of(self, image_id: str) -> int | None:
        """1-based rank of an image, or None if absent."""
        for rank, (entry_id, _) in enumerate(self.entries, start=1):
            if entry_id == image_id:
                return rank
        return None

    def truncated(self, top_n: int | None) -> "ScoredList":
        if top_n is None or top_n >= len(self.entries):
            return self
        return ScoredList(self.entries[:top_n], self.polarity, self.source)

    def to_similarity(self) -> "ScoredList":
        """Convert distance scores to similarities via s = 1 / (1 + d).

        Similarity lists are returned unchanged.  The mapping is order
        preserving for non-negative distances, so the entry order is kept.
        """
        if self.polarity == SIMILARITY:
            return self
        entries = tuple((i, 1.0 / (1.0 + d)) for i, d in self.entries)
        return ScoredList(entries, SIMILARITY, self.source)

    def filtered(self, keep: Callable[[str], bool]) -> "ScoredList":
        entries = tuple(e for e in self.entries if keep(e[0]))
        return ScoredList(entries, self.polarity, self.source)


# ---------------------------------------------------------------------------
# Component registry (Manager / Parameters pattern)
# ---------------------------------------------------------------------------

_REQUIRED = object()


@dataclass(frozen=True)
class ParamSpec:
    """Declared parameter of a registered component."""

    types: tuple[type, ...]
    default: Any = _REQUIRED
    check: Callable[[Any], bool] | None = None

    @property
    def required(self) -> bool:
        return self.default is _REQUIRED


_registry: dict[str, dict[str, tuple[Callable[..., Any], dict[str, ParamSpec]]]] = {}


def register_component(
    kind: str,
    name: str,
    factory: Callable[..., Any],
    params: Mapping[str, ParamSpec] | None = None,
) -> None:
    """Register a component factory at startup time."""
    _registry.setdefault(kind, {})[name] = (factory, dict(params or {}))


def component_names(kind: str) -> tuple[str, ...]:
    return tuple(sorted(_registry.get(kind, {})))


def select_component(kind: str, name: str, params: Mapping[str, Any] | None = None) -> Any:
    """Instantiate a registered component, validating its parameters.

    Unknown parameter names and type or range violations are rejected
    with :class:`InvalidParameter`; unregistered names raise
    :class:`UnknownComponent`.
    """
    kinds = _registry.get(kind)
    if kinds is None:
        raise UnknownComponent(f"unknown component kind: {kind!r}")
    entry = kinds.get(name)
    if entry is None:
        raise UnknownComponent(
            f"no {kind} named {name!r}; available: {', '.join(sorted(kinds))}"
        )
    factory, schema = entry
    params = dict(params or {})
    unknown = set(params) - set(schema)
    if unknown:
        raise InvalidParameter(f"unknown parameter(s) for {kind}/{name}: {sorted(unknown)}")
    resolved: dict[str, Any] = {}
    for key, spec in schema.items():
        if key in params:
            value = params[key]
        elif spec.required:
            raise InvalidParameter(f"missing required parameter {key!r} for {kind}/{name}")
        else:
            value = spec.default
        if value is not None and spec.types and not isinstance(value, spec.types):
            # bool passes isinstance(..., int); reject it for pure-int params
            raise InvalidParameter(
                f"parameter {key!r} for {kind}/{name} has type {type(value).__name__}"
            )
        if isinstance(value, bool) and bool not in spec.types and int in spec.types:
            raise InvalidParameter(f"parameter {key!r} for {kind}/{name} must be an integer")
        if value is not None and spec.check is not None and not spec.check(value):
            raise InvalidParameter(f"parameter {key!r} for {kind}/{name} out of range: {value!r}")
        resolved[key] = value
    return factory(**resolved)


# ---------------------------------------------------------------------------
# Index configuration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExtractorParams:
    feature: str
    grid_step: int = 8
    patch_size: int = 16

    def to_dict(self) -> dict[str, Any]:
        return {"feature": self.feature, "gridStep": self.grid_step, "patchSize": self.patch_size}

    @classmethod
    def from_dict(cls, raw: Mapping[str, Any]) -> "ExtractorParams":
        return cls(
            feature=raw["feature"],
            grid_step=int(raw.get("gridStep", 8)),
            patch_size=int(raw.get("patchSize", 16)),
        )


@dataclass(frozen=True)
class DescriptorParams:
    representation: str
    vocab_ref: str | None = None
    grid_cells: int | None = None
    pyramid_levels: int | None = None
    normalization: str = "l2"
    options: tuple[tuple[str, int], ...] = ()

    def option_dict(self) -> dict[str, int]:
        return dict(self.options)

    def to_dict(self) -> dict[str, Any]:
        return {
            "representation": self.representation,
            "vocabRef": self.vocab_ref,
            "gridCells": self.grid_cells,
            "pyramidLevels": self.pyramid_levels,
            "normalization": self.normalization,
            "options": dict(self.options),
        }

    @classmethod
    def from_dict(cls, raw: Mapping[str, Any]) -> "DescriptorParams":
        options = raw.get("options") or {}
        return cls(
            representation=raw["representation"],
            vocab_ref=raw.get("vocabRef"),
            grid_cells=raw.get("gridCells"),
            pyramid_levels=raw.get("pyramidLevels"),
            normalization=raw.get("normalization", "l2"),
            options=tuple(sorted((str(k), int(v)) for k, v in options.items())),
        )


@dataclass(frozen=True)
class WeightingParams:
    scheme: str = "none"
    k: int | None = None

    def to_dict(self) -> dict[str, Any]:
        return {"scheme": self.scheme, "k": self.k}

    @classmethod
    def from_dict(cls, raw: Mapping[str, Any]) -> "WeightingParams":
        return cls(scheme=raw.get("scheme", "none"), k=raw.get("k"))


@dataclass(frozen=True)
class AnnParams:
    tables: int = 20
    hashes: int = 8
    bucket_width: float | None = None
    seed: int = 0

    def to_dict(self) -> dict[str, Any]:
        return {
            "tables": self.tables,
            "hashes": self.hashes,
            "bucketWidth": self.bucket_width,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, raw: Mapping[str, Any]) -> "AnnParams":
        width = raw.get("bucketWidth")
        return cls(
            tables=int(raw.get("tables", 20)),
            hashes=int(raw.get("hashes", 8)),
            bucket_width=None if width is None else float(width),
            seed=int(raw.get("seed", 0)),
        )


@dataclass(frozen=True)
class StorerParams:
    backend: str = "binary"
    location: str = "vectors.bin"

    def to_dict(self) -> dict[str, Any]:
        return {"backend": self.backend, "location": self.location}

    @classmethod
    def from_dict(cls, raw: Mapping[str, Any]) -> "StorerParams":
        return cls(backend=raw["backend"], location=raw["location"])


@dataclass(frozen=True)
class IndexConfig:
    """Parameter bundle that makes query-time extraction match index time.

    Serialized as UTF-8 JSON with a mandatory ``version`` field; loaders
    reject unknown major versions.
    """

    descriptor: DescriptorParams
    storer: StorerParams = field(default_factory=StorerParams)
    extractor: ExtractorParams | None = None
    weighting: WeightingParams = field(default_factory=WeightingParams)
    ann: AnnParams | None = None
    distance_default: str = "euclidean"

    def validate(self) -> None:
        """Raise :class:`ConfigInvalid` on any semantic violation."""
        from . import extract, measures  # local import to avoid cycles

        d = self.descriptor
        if d.representation not in REPRESENTATIONS:
            raise ConfigInvalid(f"unknown representation: {d.representation!r}")
        vocab_based = d.representation in VOCAB_REPRESENTATIONS
        if vocab_based and not d.vocab_ref:
            raise ConfigInvalid(f"{d.representation} requires a vocabRef")
        if not vocab_based and d.vocab_ref:
            raise ConfigInvalid(f"{d.representation} does not take a vocabRef")
        if d.normalization not in NORMALIZATIONS:
            raise ConfigInvalid(f"unknown normalization: {d.normalization!r}")
        if (d.representation == "grid-bovw") != (d.grid_cells is not None):
            raise ConfigInvalid("gridCells is required exactly for grid-bovw")
        if d.grid_cells is not None and d.grid_cells < 1:
            raise ConfigInvalid("gridCells must be >= 1")
        if (d.representation == "spm-bovw") != (d.pyramid_levels is not None):
            raise ConfigInvalid("pyramidLevels is required exactly for spm-bovw")
        if d.pyramid_levels is not None and d.pyramid_levels < 1:
            raise ConfigInvalid("pyramidLevels must be >= 1")

        if vocab_based:
            if self.extractor is None:
                raise ConfigInvalid("vocabulary-based representations require extractorParams")
            e = self.extractor
            if e.feature not in extract.FEATURE_DIMS:
                raise ConfigInvalid(f"unknown local feature: {e.feature!r}")
            if e.grid_step < 1:
                raise ConfigInvalid("gridStep must be >= 1")
            if e.patch_size < 8 or e.patch_size % 2 != 0:
                raise ConfigInvalid("patchSize must be even and >= 8")
        elif self.extractor is not None:
            raise ConfigInvalid("global descriptors do not take extractorParams")

        w = self.weighting
        if w.scheme not in WEIGHTING_SCHEMES:
            raise ConfigInvalid(f"unknown weighting scheme: {w.scheme!r}")
        if w.scheme != "none" and d.representation != "bovw":
            raise ConfigInvalid("index weighting requires the bovw representation")
        if w.scheme != "none" and d.normalization != "none":
            raise ConfigInvalid("index weighting requires raw counts (normalization 'none')")
        if (w.scheme == "frequent-items") != (w.k is not None):
            raise ConfigInvalid("weighting k is required exactly for frequent-items")
        if w.k is not None and w.k < 1:
            raise ConfigInvalid("weighting k must be >= 1")

        if self.ann is not None:
            a = self.ann
            if a.tables < 1 or a.hashes < 1:
                raise ConfigInvalid("annParams tables and hashes must be >= 1")
            if a.bucket_width is not None and not a.bucket_width > 0:
                raise ConfigInvalid("annParams bucketWidth must be > 0")
            if a.seed < 0:
                raise ConfigInvalid("annParams seed must be >= 0")
            if w.scheme == "frequent-items":
                raise ConfigInvalid("frequent-items weighting does not support an ANN index")

        if self.storer.backend not in STORER_BACKENDS:
            raise ConfigInvalid(f"unknown storer backend: {self.storer.backend!r}")
        if not self.storer.location:
            raise ConfigInvalid("storer location must be non-empty")

        if self.distance_default not in measures.metric_names():
            raise ConfigInvalid(f"unknown distance: {self.distance_default!r}")
        if (self.distance_default == "hamming") != (d.representation == "binary-bovw"):
            raise ConfigInvalid("hamming pairs exactly with binary-bovw")
        if (self.distance_default == "frequent-item") != (w.scheme == "frequent-items"):
            raise ConfigInvalid("frequent-item similarity pairs exactly with frequent-items weighting")

    def to_dict(self) -> dict[str, Any]:
        return {
            "version": CONFIG_VERSION,
            "extractorParams": None if self.extractor is None else self.extractor.to_dict(),
            "descriptorParams": self.descriptor.to_dict(),
            "weighting": self.weighting.to_dict(),
            "annParams": None if self.ann is None else self.ann.to_dict(),
            "storerParams": self.storer.to_dict(),
            "distanceDefault": self.distance_default,
        }

    @classmethod
    def from_dict(cls, raw: Mapping[str, Any]) -> "IndexConfig":
        for key in (
            "version",
            "extractorParams",
            "descriptorParams",
            "weighting",
            "annParams",
            "storerParams",
            "distanceDefault",
        ):
            if key not in raw:
                raise MalformedConfig(f"config missing field {key!r}")
        version = str(raw["version"])
        major = version.split(".", 1)[0]
        if major != CONFIG_VERSION.split(".", 1)[0]:
            raise MalformedConfig(f"unsupported config major version: {version}")
        try:
            config = cls(
                extractor=None
                if raw["extractorParams"] is None
                else ExtractorParams.from_dict(raw["extractorParams"]),
                descriptor=DescriptorParams.from_dict(raw["descriptorParams"]),
                weighting=WeightingParams.from_dict(raw["weighting"]),
                ann=None if raw["annParams"] is None else AnnParams.from_dict(raw["annParams"]),
                storer=StorerParams.from_dict(raw["storerParams"]),
                distance_default=raw["distanceDefault"],
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedConfig(f"invalid config structure: {exc}") from exc
        try:
            config.validate()
        except ConfigInvalid as exc:
            raise MalformedConfig(str(exc)) from exc
        return config


def save_config(config: IndexConfig, path: str | Path) -> None:
    """Write a validated config as deterministic JSON."""
    config.validate()
    text = json.dumps(config.to_dict(), indent=2, sort_keys=True) + "\n"
    Path(path).write_text(text, encoding="utf-8")


def load_config(path: str | Path, resolve: bool = True) -> IndexConfig:
    """Load a config file; with ``resolve`` the vocabulary reference is
    checked to exist and to match the extractor's output dimensionality.
    """
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise MalformedConfig(f"config is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise MalformedConfig("config root must be a JSON object")
    config = IndexConfig.from_dict(raw)
    if resolve and config.descriptor.vocab_ref is not None:
        from . import extract, vocab  # local import to avoid cycles

        ref = Path(config.descriptor.vocab_ref)
        if not ref.is_absolute():
            ref = path.parent / ref
        if not ref.is_file():
            raise MalformedConfig(f"vocabulary reference does not resolve: {ref}")
        header = vocab.read_codebook_header(ref)
        expected = extract.FEATURE_DIMS[config.extractor.feature]
        if header.dim != expected:
            raise MalformedConfig(
                f"codebook dimension {header.dim} does not match "
                f"{config.extractor.feature} output dimension {expected}"
            )
    return config


def resolve_vocab_path(config: IndexConfig, config_path: str | Path) -> Path | None:
    """Absolute path of the config's codebook, relative refs anchored at the config file."""
    if config.descriptor.vocab_ref is None:
        return None
    ref = Path(config.descriptor.vocab_ref)
    return ref if ref.is_absolute() else Path(config_path).parent / ref
