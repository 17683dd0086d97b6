"""Generalized distributed dual coordinate ascent on tree networks (GDCA-Tree)."""
from .dataset import Dataset, Partition, load_dense, load_libsvm, make_synthetic, normalize, partition_by_fractions
from .engine import TraceRecord, TreeSolver, UpdateDelta, dual_value, local_sdca, primal_value, run
from .losses import HINGE, SQUARED, LossFamily, LossSpec, conjugate, coordinate_update, primal_loss
from .timing import TimeModel, simulated_time_per_outer_iteration
from .topology import (
    IterationSchedule,
    Topology,
    WeightSchedule,
    build_tree,
    compute_betas,
    node_index_set,
    schedule_iterations,
)

__version__ = "0.1.0"
