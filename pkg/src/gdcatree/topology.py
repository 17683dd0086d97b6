"""Rooted tree networks, aggregation weights and local-iteration schedules."""
from __future__ import annotations

import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np

from .dataset import Partition
from .errors import ConfigError, EmptyNode, UnknownNode

WEIGHT_MODES = ("uniform", "data_proportional")
SCHEDULE_MODES = ("uniform", "delayed")
DELAYED_SCOPES = ("proportional", "bottleneck")


@dataclass(frozen=True)
class Node:
    id: int
    layer: int
    parent: int | None
    children: tuple[int, ...] = ()

    @property
    def is_leaf(self) -> bool:
        return not self.children


@dataclass(frozen=True)
class Topology:
    """A rooted tree whose leaves all sit on the deepest layer ``p``.

    The root is on layer 0.
    """

    nodes: Mapping[int, Node]
    root: int

    def __post_init__(self):
        self._check()

    def _check(self):
        if self.root not in self.nodes or self.nodes[self.root].parent is not None:
            raise ConfigError("topology needs exactly one root")
        roots = [n.id for n in self.nodes.values() if n.parent is None]
        if roots != [self.root]:
            raise ConfigError(f"topology has several roots: {roots}")
        seen = set()
        stack = [self.root]
        while stack:
            nid = stack.pop()
            if nid in seen:
                raise ConfigError(f"node {nid} reached twice; not a tree")
            seen.add(nid)
            node = self.nodes[nid]
            for c in node.children:
                if c not in self.nodes:
                    raise ConfigError(f"child {c} of node {nid} is not defined")
                child = self.nodes[c]
                if child.parent != nid or child.layer != node.layer + 1:
                    raise ConfigError(f"node {c} has inconsistent parent/layer")
                stack.append(c)
        if seen != set(self.nodes):
            raise ConfigError(f"nodes {sorted(set(self.nodes) - seen)} are not reachable from the root")
        depths = {n.layer for n in self.nodes.values() if n.is_leaf}
        if len(depths) != 1:
            raise ConfigError(f"all leaves must be on the same layer, found layers {sorted(depths)}")
        if self.nodes[self.root].is_leaf:
            raise ConfigError("the root must have at least one child")

    @property
    def depth(self) -> int:
        """Layer index ``p`` of the leaves."""
        return next(n.layer for n in self.nodes.values() if n.is_leaf)

    def node(self, node_id: int) -> Node:
        try:
            return self.nodes[node_id]
        except KeyError:
            raise UnknownNode(f"unknown node {node_id!r}") from None

    def leaves(self) -> list[int]:
        """Leaf ids in depth-first child order."""
        out = []

        def walk(nid):
            node = self.nodes[nid]
            if node.is_leaf:
                out.append(nid)
            for c in node.children:
                walk(c)

        walk(self.root)
        return out

    def internal_nodes(self) -> list[int]:
        return sorted(n.id for n in self.nodes.values() if not n.is_leaf)

    def layer(self, i: int) -> list[int]:
        return sorted(n.id for n in self.nodes.values() if n.layer == i)

    @classmethod
    def from_children(cls, children: Mapping[int, Sequence[int]], root: int | None = None) -> "Topology":
        """Build a (possibly non-complete) tree from a ``parent -> children`` map."""
        kids = {int(k): tuple(int(c) for c in v) for k, v in children.items()}
        ids = set(kids) | {c for v in kids.values() for c in v}
        parent: dict[int, int] = {}
        for p, cs in kids.items():
            for c in cs:
                if c in parent:
                    raise ConfigError(f"node {c} has two parents ({parent[c]} and {p})")
                parent[c] = p
        if root is None:
            roots = sorted(ids - set(parent))
            if len(roots) != 1:
                raise ConfigError(f"cannot identify a unique root, candidates: {roots}")
            root = roots[0]
        layer = {root: 0}
        order = [root]
        for nid in order:
            for c in kids.get(nid, ()):
                if c in layer:
                    raise ConfigError(f"node {c} reached twice; not a tree")
                layer[c] = layer[nid] + 1
                order.append(c)
        if set(layer) != ids:
            raise ConfigError(f"nodes {sorted(ids - set(layer))} are not reachable from root {root}")
        nodes = {nid: Node(nid, layer[nid], parent.get(nid), kids.get(nid, ())) for nid in ids}
        return cls(nodes, root)


def build_tree(fanout: Sequence[int]) -> Topology:
    """Complete tree with ``fanout[i]`` children per layer-``i`` node.

    Node ids are assigned breadth-first starting at 0 for the root.
    """
    if not fanout or any(int(k) < 1 for k in fanout):
        raise ConfigError(f"fanout must be a nonempty list of positive counts, got {list(fanout)}")
    children: dict[int, list[int]] = {}
    frontier = [0]
    next_id = 1
    for k in fanout:
        new = []
        for nid in frontier:
            children[nid] = list(range(next_id, next_id + int(k)))
            new.extend(children[nid])
            next_id += int(k)
        frontier = new
    return Topology.from_children(children, root=0)


def node_index_set(topology: Topology, partition: Partition, node_id: int) -> np.ndarray:
    """Sorted data indices held by the subtree rooted at ``node_id``."""
    node = topology.node(node_id)
    if node.is_leaf:
        try:
            return partition[node_id]
        except KeyError:
            raise ConfigError(f"leaf {node_id} has no partition entry") from None
    parts = [node_index_set(topology, partition, c) for c in node.children]
    return np.sort(np.concatenate(parts))


def subtree_sizes(topology: Topology, partition: Partition) -> dict[int, int]:
    sizes: dict[int, int] = {}

    def walk(nid):
        node = topology.nodes[nid]
        if node.is_leaf:
            if nid not in partition.assignment:
                raise ConfigError(f"leaf {nid} has no partition entry")
            sizes[nid] = len(partition[nid])
        else:
            sizes[nid] = sum(walk(c) for c in node.children)
        return sizes[nid]

    walk(topology.root)
    return sizes


@dataclass(frozen=True)
class WeightSchedule:
    """Aggregation weight ``beta`` for every (parent, child ordinal) pair."""

    beta: Mapping[tuple[int, int], float]

    def for_parent(self, parent: int, n_children: int) -> list[float]:
        return [self.beta[(parent, k)] for k in range(n_children)]


def compute_betas(topology: Topology, partition: Partition | None, mode: str = "data_proportional") -> WeightSchedule:
    """Per-parent aggregation weights.

    ``uniform`` gives every child ``1/K``; ``data_proportional`` gives child
    ``k`` of ``Q`` the share ``|[Q;k]| / |Q|`` of the parent's data.
    """
    if mode not in WEIGHT_MODES:
        raise ConfigError(f"weight mode must be one of {WEIGHT_MODES}, got {mode!r}")
    beta = {}
    sizes = subtree_sizes(topology, partition) if mode == "data_proportional" else None
    for nid in topology.internal_nodes():
        kids = topology.nodes[nid].children
        if sizes is None:
            for k in range(len(kids)):
                beta[(nid, k)] = 1.0 / len(kids)
            continue
        total = sizes[nid]
        if total == 0:
            raise EmptyNode(f"node {nid} holds no data; data-proportional weights are undefined")
        for k, c in enumerate(kids):
            beta[(nid, k)] = sizes[c] / total
    return WeightSchedule(beta)


@dataclass(frozen=True)
class IterationSchedule:
    """Iteration count per node: outer rounds for internal nodes, LocalSDCA steps for leaves."""

    T: Mapping[int, int] = field(default_factory=dict)

    def __getitem__(self, node_id: int) -> int:
        return self.T[node_id]


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def schedule_iterations(
    topology: Topology,
    partition: Partition | None,
    base_T: Mapping[int, int] | Sequence[int],
    mode: str = "uniform",
    scope: str = "proportional",
    pins: Mapping[int, int] | None = None,
) -> IterationSchedule:
    """Assign iteration counts to every node.

    ``base_T`` gives the count per layer (index 0 is the root). In ``delayed``
    mode leaves are rescaled by their data size: with ``scope='proportional'``
    each leaf gets ``base * |leaf| / mean sibling size``; with
    ``scope='bottleneck'`` every leaf gets ``base * largest leaf / mean leaf size``.
    ``pins`` overrides individual nodes in either mode.
    """
    if mode not in SCHEDULE_MODES:
        raise ConfigError(f"schedule mode must be one of {SCHEDULE_MODES}, got {mode!r}")
    if scope not in DELAYED_SCOPES:
        raise ConfigError(f"delayed scope must be one of {DELAYED_SCOPES}, got {scope!r}")
    base = dict(enumerate(base_T)) if not isinstance(base_T, Mapping) else {int(k): v for k, v in base_T.items()}
    p = topology.depth
    for i in range(p + 1):
        if i not in base:
            raise ConfigError(f"no base iteration count for layer {i}")
        if int(base[i]) < 1:
            raise ConfigError(f"iteration count for layer {i} must be >= 1, got {base[i]}")
    T = {nid: int(base[node.layer]) for nid, node in topology.nodes.items()}

    if mode == "delayed":
        if partition is None:
            raise ConfigError("delayed schedule needs a partition")
        sizes = subtree_sizes(topology, partition)
        leaves = topology.leaves()
        if scope == "bottleneck":
            mean_all = np.mean([sizes[leaf] for leaf in leaves])
            factor = max(sizes[leaf] for leaf in leaves) / mean_all if mean_all > 0 else 1.0
            for leaf in leaves:
                T[leaf] = max(1, _round_half_up(base[p] * factor))
        else:
            for leaf in leaves:
                sibs = topology.nodes[topology.nodes[leaf].parent].children
                mean = np.mean([sizes[s] for s in sibs])
                factor = sizes[leaf] / mean if mean > 0 else 1.0
                T[leaf] = max(1, _round_half_up(base[p] * factor))

    for nid, t in (pins or {}).items():
        topology.node(int(nid))
        if int(t) < 1:
            raise ConfigError(f"pinned iteration count for node {nid} must be >= 1, got {t}")
        T[int(nid)] = int(t)
    return IterationSchedule(T)
