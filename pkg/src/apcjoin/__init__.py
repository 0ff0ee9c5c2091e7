"""Bounds-only partition pruning for exact Euclidean all-k-nearest-neighbor joins."""

from .geometry import (
    Aabb,
    DimensionMismatch,
    Interval,
    bmax_dist_sq,
    bmin_dist_sq,
    corners,
    dist_sq,
    farthest_point,
    max_dist_sq,
    min_dist_sq,
    nearest_point,
)
from .join import JoinReport, NeighborList, aknn_join, brute_force_oracle
from .ordering import (
    PartitionMeta,
    PrunePlan,
    ProximityDag,
    build_dag,
    prune_by_baseline,
    prune_by_dag,
    topological_order,
)
from .pruning import (
    PruneDecision,
    Witness,
    all_points_closer_naive,
    all_points_closer_opt,
    explain,
    failing_corner,
    h_dim,
)
from .storage import (
    DatasetManifest,
    GeneratorSpec,
    compute_stats,
    generate_synthetic,
    load_manifest,
    read_partition,
    write_dataset,
)

__version__ = "0.1.0"
