"""Supervised composite quantization for semantic similarity search.

The heavy lifting lives in the compiled extension; this package re-exports
its public surface.
"""

from ._core import (
    Model,
    encode,
    mean_average_precision,
    read_fvecs,
    read_labels,
    search,
    train,
    write_fvecs,
)

__all__ = [
    "Model",
    "encode",
    "mean_average_precision",
    "read_fvecs",
    "read_labels",
    "search",
    "train",
    "write_fvecs",
]
