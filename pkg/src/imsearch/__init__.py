"""Component-based content-based image retrieval engine.

Extractors, descriptors, storers and fusors compose into indexing and
seeking pipelines with multimodal (caption text + visual) search,
approximate nearest-neighbor shortlisting and an evaluation harness.
Importing the package registers all built-in components.
"""

from . import (  # noqa: F401  (imports register components)
    describe,
    extract,
    fusion,
    measures,
    store,
)
from .core import (
    AnnParams,
    BinaryDescriptorVector,
    DescriptorParams,
    DescriptorVector,
    ExtractorParams,
    ImageRecord,
    IndexConfig,
    ScoredList,
    StorerParams,
    WeightingParams,
    component_names,
    load_config,
    save_config,
    select_component,
)
from .corpus import LabeledCorpus, generate_corpus, load_labeled_folder, make_topics
from .evaluation import (
    ExperimentGrid,
    FeatureSpec,
    average_precision,
    mean_average_precision,
    run_matrix_experiment,
)
from .fusion import FusionRule, fuse
from .indexing import IndexJob, IndexReport, index_digest, load_image, merge_segments, run_index
from .lsh import LshIndex, LshParams
from .seek import (
    IndexHandle,
    QuerySpec,
    RocchioParams,
    open_index,
    rocchio_merge,
    search_late_fusion,
    search_modality_filtered,
    search_rocchio,
)
from .text import fuse_multimodal, index_captions, search_text
from .vocab import Codebook, assign, load_codebook, save_codebook, train_kmeans
from .weighting import CollectionStats, select_frequent_items, tfidf_weight

__version__ = "0.1.0"

__all__ = [
    "AnnParams",
    "BinaryDescriptorVector",
    "Codebook",
    "CollectionStats",
    "DescriptorParams",
    "DescriptorVector",
    "ExperimentGrid",
    "ExtractorParams",
    "FeatureSpec",
    "FusionRule",
    "ImageRecord",
    "IndexConfig",
    "IndexHandle",
    "IndexJob",
    "IndexReport",
    "LabeledCorpus",
    "LshIndex",
    "LshParams",
    "QuerySpec",
    "RocchioParams",
    "ScoredList",
    "StorerParams",
    "WeightingParams",
    "assign",
    "average_precision",
    "component_names",
    "fuse",
    "fuse_multimodal",
    "generate_corpus",
    "index_captions",
    "index_digest",
    "load_codebook",
    "load_config",
    "load_image",
    "load_labeled_folder",
    "make_topics",
    "mean_average_precision",
    "merge_segments",
    "open_index",
    "rocchio_merge",
    "run_index",
    "run_matrix_experiment",
    "save_codebook",
    "save_config",
    "search_late_fusion",
    "search_modality_filtered",
    "search_rocchio",
    "search_text",
    "select_component",
    "select_frequent_items",
    "tfidf_weight",
    "train_kmeans",
]
