"""Exception hierarchy shared by all engine components."""


class ImageSearchError(Exception):
    """Base class for all engine errors."""


class UnknownComponent(ImageSearchError, LookupError):
    """Requested component name is not registered for its kind."""


class InvalidParameter(ImageSearchError, ValueError):
    """A component parameter has an unknown name or an invalid value."""


class MalformedConfig(ImageSearchError, ValueError):
    """Index configuration file is invalid or references missing artifacts."""


class ConfigInvalid(ImageSearchError, ValueError):
    """An in-memory configuration fails validation for the requested job."""


class DimensionMismatch(ImageSearchError, ValueError):
    """Vector dimensionality does not match its counterpart."""


class ImageTooSmall(ImageSearchError, ValueError):
    """Image is smaller than the requested patch geometry."""


class NegativeComponent(ImageSearchError, ValueError):
    """An operation requiring non-negative input received negative values."""


class TooFewSamples(ImageSearchError, ValueError):
    """Not enough samples to train the requested vocabulary."""


class EmptyInput(ImageSearchError, ValueError):
    """An aggregate operation received no inputs."""


class WeightMismatch(ImageSearchError, ValueError):
    """Linear fusion weight count differs from the list count."""


class WeightsNotNormalized(ImageSearchError, ValueError):
    """Linear fusion weights are outside [0, 1] or do not sum to one."""


class DuplicateId(ImageSearchError, ValueError):
    """An image id was inserted twice into the same index."""


class UnknownMetric(ImageSearchError, LookupError):
    """Requested distance or similarity measure is not registered."""


class InconsistentStats(ImageSearchError, ValueError):
    """Collection statistics violate their invariants (e.g. n_i > N)."""


class OutputNotWritable(ImageSearchError, OSError):
    """Index output directory cannot be created or written."""


class IndexNotFound(ImageSearchError, FileNotFoundError):
    """No index exists at the given location."""


class FeatureExtractionFailed(ImageSearchError, RuntimeError):
    """A query image could not be transformed into a descriptor."""


class MissingVocabulary(ImageSearchError, ValueError):
    """A vocabulary-based run was requested without a usable codebook."""


class CorpusTooSmall(ImageSearchError, ValueError):
    """The evaluation corpus cannot support the requested experiment grid."""


class WorkerPanic(ImageSearchError, RuntimeError):
    """A parallel indexing shard failed after its retry."""
