"""GPS mobility analytics: stay points, day-type features, user clusters."""

from ._mobiscope import (
    __version__,
    adjusted_rand_index,
    dcd_shares,
    default_config_toml,
    generate_synthetic,
    haversine_km,
    kmeans,
    pearson_r,
    radius_of_gyration,
    run_all,
    sse_curve,
    suggest_k,
)

__all__ = [
    "__version__",
    "adjusted_rand_index",
    "dcd_shares",
    "default_config_toml",
    "generate_synthetic",
    "haversine_km",
    "kmeans",
    "pearson_r",
    "radius_of_gyration",
    "run_all",
    "sse_curve",
    "suggest_k",
]
