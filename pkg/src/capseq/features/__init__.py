from .tables import (
    ATTRIBUTE_DIM,
    FEATURE_DIM,
    HOURS,
    FeatureTables,
    StayStats,
    compute_stay_stats,
    temporal_popularity,
)

__all__ = [
    "ATTRIBUTE_DIM",
    "FEATURE_DIM",
    "HOURS",
    "FeatureTables",
    "StayStats",
    "compute_stay_stats",
    "temporal_popularity",
]
