"""Deterministic coresets for streaming vector sums.

A coreset here is a small weighted subset of the input vectors whose
weighted mean stays within a fraction of the data variance of the true
mean. The package builds them offline, over unbounded streams with a
merge-and-reduce tree, across simulated machines, and applies them to
streaming proximity graphs.
"""
from .coreset import (
    Coreset,
    CoresetParams,
    Degenerate,
    Embedding,
    SelectionRule,
    back_transform,
    coreset,
    embed,
    estimate_mean,
    estimate_sparse,
    estimate_sum,
    fw_min_norm,
    min_norm_point,
)
from .distributed import Cluster
from .estimators import MeanCoreset, StreamingMeanCoreset
from .exceptions import (
    EmptyStream,
    InvalidConfig,
    InvalidIndex,
    InvalidInput,
    InvalidScalar,
    NumericalFailure,
    UnknownUser,
    UnsupportedNegative,
    VecsumError,
)
from .proximity import LocationRecord, ProximityBook, prox
from .sketches import CountMin, CountSketch, SignSplitCountMin
from .stream import StreamState, merge, new_stream
from .vector import (
    SparseVector,
    WeightedPointSet,
    axpy,
    sparse_from_pairs,
    weighted_mean,
    weighted_variance,
)

__version__ = "0.1.0"
