"""Convert the PSB2 benchmark dataset into a JSON problem corpus."""

from .core import (
    DEFAULT_CACHE_DIR,
    Fetcher,
    IngestError,
    IngestSpec,
    PartialIngestError,
    RawPair,
    convert_problem,
    ingest,
    make_psb2_fetcher,
)
from .problems import PROBLEM_DESCRIPTIONS, PROBLEM_NAMES

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_CACHE_DIR",
    "Fetcher",
    "IngestError",
    "IngestSpec",
    "PROBLEM_DESCRIPTIONS",
    "PROBLEM_NAMES",
    "PartialIngestError",
    "RawPair",
    "convert_problem",
    "ingest",
    "make_psb2_fetcher",
]
