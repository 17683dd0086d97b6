"""Simulated wall-clock model for synchronous rounds on a tree."""
from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

from .errors import ConfigError
from .topology import IterationSchedule, Topology

PerLayer = float | Sequence[float]


def _at(value: PerLayer, layer: int, name: str) -> float:
    if isinstance(value, (int, float)):
        return float(value)
    try:
        return float(value[layer])
    except IndexError:
        raise ConfigError(f"{name} has no entry for layer {layer}") from None


@dataclass(frozen=True)
class TimeModel:
    """Per-layer costs in abstract time units.

    Each field is a scalar or a per-layer list indexed by layer (root = 0):

    * ``t_lp[i]``: one LocalSDCA step on a layer-``i`` leaf
    * ``t_delay[i]``: round trip between a layer-``i`` node and its parent
    * ``t_cp[i]``: aggregation at a layer-``i`` node
    """

    t_lp: PerLayer = 1.0
    t_delay: PerLayer = 0.0
    t_cp: PerLayer = 0.0

    def __post_init__(self):
        for name in ("t_lp", "t_delay", "t_cp"):
            v = getattr(self, name)
            vals = [v] if isinstance(v, (int, float)) else list(v)
            if any(float(x) < 0 for x in vals):
                raise ConfigError(f"{name} must be nonnegative, got {v!r}")
            if not isinstance(v, (int, float)):
                object.__setattr__(self, name, tuple(float(x) for x in v))

    def lp(self, layer: int) -> float:
        return _at(self.t_lp, layer, "t_lp")

    def delay(self, layer: int) -> float:
        return _at(self.t_delay, layer, "t_delay")

    def cp(self, layer: int) -> float:
        return _at(self.t_cp, layer, "t_cp")

    def severity(self, leaf_layer: int) -> float:
        """``r = (t_delay + t_cp) / t_lp`` for a leaf cluster."""
        lp = self.lp(leaf_layer)
        if lp <= 0:
            raise ConfigError("t_lp must be positive to define the delay severity")
        return (self.delay(leaf_layer) + self.cp(leaf_layer - 1)) / lp


def node_time(topology: Topology, iterations: IterationSchedule, time_model: TimeModel, node_id: int) -> float:
    """Time a node needs to finish its whole schedule once.

    A round at an internal node lasts as long as its slowest child plus one
    round trip and one aggregation.
    """
    node = topology.node(node_id)
    if node.is_leaf:
        return time_model.lp(node.layer) * iterations[node_id]
    return iterations[node_id] * _round_time(topology, iterations, time_model, node_id)


def _round_time(topology, iterations, time_model, node_id):
    node = topology.nodes[node_id]
    slowest = max(node_time(topology, iterations, time_model, c) for c in node.children)
    return slowest + time_model.delay(node.layer + 1) + time_model.cp(node.layer)


def simulated_time_per_outer_iteration(topology: Topology, iterations: IterationSchedule, time_model: TimeModel) -> float:
    """Duration of one root round."""
    return _round_time(topology, iterations, time_model, topology.root)
