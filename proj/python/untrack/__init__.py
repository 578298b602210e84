"""Python access to the untrack library.

Sequences come back as numpy arrays; `run` executes any command-line
subcommand in-process.
"""

from ._untrack import (
    ConfigError,
    DataError,
    MissingFileError,
    Sequence,
    blend,
    count_flops,
    evaluate,
    keep_count,
    keep_ratio,
    load_sequence,
    run,
    synth,
)

__all__ = [
    "ConfigError",
    "DataError",
    "MissingFileError",
    "Sequence",
    "blend",
    "count_flops",
    "evaluate",
    "keep_count",
    "keep_ratio",
    "load_sequence",
    "run",
    "synth",
]
