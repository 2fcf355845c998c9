"""Turbofan fault prognosis toolkit.

Per flight cycle, predicts the current health state, the set of eventually
failing components, and the remaining useful life, via statistical feature
extraction, min-max normalization, PCA orthogonalization, and either a
composite-loss neural network or tree-ensemble baselines.
"""

from .types import (
    CycleRecord,
    FailureFlags,
    LabelVector,
    UnitManifestEntry,
    build_label_vector,
    failure_flags_for_subset,
)

__version__ = "0.1.0"

__all__ = [
    "CycleRecord",
    "FailureFlags",
    "LabelVector",
    "UnitManifestEntry",
    "build_label_vector",
    "failure_flags_for_subset",
    "__version__",
]
