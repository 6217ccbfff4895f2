"""Las Vegas locality sensitive filters: near-neighbor indexes with no false negatives.

Hamming space goes through a one-sided dimensionality reduction and tensored
covering codes; Braun-Blanquet set similarity goes through Turán systems.
Every index returns a valid answer whenever a near point exists.
"""

from .core import BitVector, Seed, SetPoint, braun_blanquet, hamming_distance
from .errors import (
    ConstructionError,
    CostGuardError,
    DimensionError,
    FormatError,
    LsfError,
    ParameterError,
    UndefinedSimilarityError,
    VerificationError,
)
from .index import (
    HammingIndex,
    HammingParams,
    QueryStats,
    SimilarityIndex,
    SimilarityParams,
    build_hamming_index,
    build_similarity_index,
    group_by_weight,
    plan_hamming_params,
    plan_similarity_params,
    query_hamming,
    query_similarity,
)
from .persist import load_index, save_index

__version__ = "0.1.0"

__all__ = [
    "BitVector",
    "SetPoint",
    "Seed",
    "hamming_distance",
    "braun_blanquet",
    "HammingParams",
    "SimilarityParams",
    "HammingIndex",
    "SimilarityIndex",
    "QueryStats",
    "plan_hamming_params",
    "plan_similarity_params",
    "build_hamming_index",
    "build_similarity_index",
    "query_hamming",
    "query_similarity",
    "group_by_weight",
    "save_index",
    "load_index",
    "LsfError",
    "DimensionError",
    "ParameterError",
    "ConstructionError",
    "CostGuardError",
    "UndefinedSimilarityError",
    "VerificationError",
    "FormatError",
]
