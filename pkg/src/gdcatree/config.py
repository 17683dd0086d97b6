"""Experiment configuration: YAML schema, validation and component construction.

Example::

    seed: 0
    trials: 20
    output: runs/wine_delayed
    dataset:
      format: dense            # dense | libsvm | synthetic
      path: winequality.csv    # relative to this file
      delimiter: ";"
      header: true
      label_column: 11
      normalize: per_instance_unit   # per_instance_unit | cap_at_one | none
    loss: squared              # squared | hinge
    lambda: 1.0
    topology:
      fanout: [2, 2]           # or  children: {0: [1, 2], 1: [3, 4], 2: [5, 6]}
    partition:
      fractions: [0.1, 0.1, 0.1, 0.7]
    weights: data_proportional # uniform | data_proportional
    iterations:
      per_layer: [50, 10, 100] # root rounds, sub-central rounds, LocalSDCA steps
      mode: delayed            # uniform | delayed
      scope: proportional      # proportional | bottleneck
      pins: {6: 300}
    time_model:
      t_lp: 1.0
      t_delay: 10.0
      t_cp: 0.0
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from .dataset import NORMALIZE_MODES, Dataset, Partition, load_dense, load_libsvm, make_synthetic, normalize, partition_by_fractions
from .errors import ConfigError
from .losses import LossSpec
from .timing import TimeModel
from .topology import (
    DELAYED_SCOPES,
    SCHEDULE_MODES,
    WEIGHT_MODES,
    IterationSchedule,
    Topology,
    WeightSchedule,
    build_tree,
    compute_betas,
    schedule_iterations,
)

TOP_KEYS = {"seed", "trials", "parallel", "jobs", "output", "dataset", "loss", "lambda",
            "topology", "partition", "weights", "iterations", "time_model"}
DATASET_KEYS = {"format", "path", "delimiter", "header", "label_column", "label_map",
                "n_features", "normalize", "m", "d", "task", "noise", "seed"}
DEFAULT_INTERNAL_ROUNDS = 10
DEFAULT_LEAF_STEPS = 100


def _unknown(section: str, given: dict, allowed: set):
    extra = sorted(set(given) - allowed)
    if extra:
        raise ConfigError(f"{section}: unknown key(s) {extra}; allowed: {sorted(allowed)}")


def _section(raw: dict, key: str) -> dict:
    val = raw.get(key, {})
    if val is None:
        return {}
    if not isinstance(val, dict):
        raise ConfigError(f"'{key}' must be a mapping, got {type(val).__name__}")
    return val


def _int(value, name, minimum=None):
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{name} must be an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise ConfigError(f"{name} must be >= {minimum}, got {value}")
    return value


def _float(value, name):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{name} must be a number, got {value!r}")
    return float(value)


def _choice(value, name, options):
    if value not in options:
        raise ConfigError(f"{name} must be one of {list(options)}, got {value!r}")
    return value


@dataclass
class ExperimentConfig:
    dataset: dict
    loss: str
    lam: float
    fanout: list[int] | None
    children: dict[int, list[int]] | None
    fractions: list[float]
    partition_seed: int
    weights: str
    per_layer: list[int] | None
    schedule_mode: str
    scope: str
    pins: dict[int, int]
    time_model: TimeModel
    trials: int = 1
    seed: int = 0
    parallel: bool = False
    jobs: int = 1
    output: Path = Path("gdcatree-out")
    base_dir: Path = field(default_factory=Path.cwd)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        p = Path(path)
        try:
            raw = yaml.safe_load(p.read_text())
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {p}") from None
        except yaml.YAMLError as exc:
            raise ConfigError(f"{p}: invalid YAML: {exc}") from None
        return cls.from_dict(raw, base_dir=p.parent)

    @classmethod
    def from_dict(cls, raw: Any, base_dir=None) -> "ExperimentConfig":
        if not isinstance(raw, dict):
            raise ConfigError("config must be a mapping at the top level")
        _unknown("config", raw, TOP_KEYS)
        base_dir = Path(base_dir) if base_dir is not None else Path.cwd()

        ds = _section(raw, "dataset")
        _unknown("dataset", ds, DATASET_KEYS)
        fmt = _choice(ds.get("format"), "dataset.format", ("dense", "libsvm", "synthetic"))
        if fmt != "synthetic" and "path" not in ds:
            raise ConfigError(f"dataset.path is required for format {fmt!r}")
        if fmt == "synthetic":
            for key in ("m", "d"):
                _int(ds.get(key), f"dataset.{key}", 1)
        _choice(ds.get("normalize", "per_instance_unit"), "dataset.normalize", (*NORMALIZE_MODES, "none"))

        if "loss" not in raw:
            raise ConfigError("'loss' is required")
        try:
            LossSpec.from_name(str(raw["loss"]))
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if "lambda" not in raw:
            raise ConfigError("'lambda' is required")
        lam = _float(raw["lambda"], "lambda")
        if lam <= 0:
            raise ConfigError(f"lambda must be positive, got {lam}")

        top = _section(raw, "topology")
        _unknown("topology", top, {"fanout", "children"})
        if ("fanout" in top) == ("children" in top):
            raise ConfigError("topology needs exactly one of 'fanout' or 'children'")
        fanout = children = None
        if "fanout" in top:
            if not isinstance(top["fanout"], list) or not top["fanout"]:
                raise ConfigError("topology.fanout must be a nonempty list")
            fanout = [_int(k, "topology.fanout entry", 1) for k in top["fanout"]]
        else:
            if not isinstance(top["children"], dict):
                raise ConfigError("topology.children must map node id -> list of child ids")
            children = {_int(k, "topology.children key"): [_int(c, "child id") for c in v]
                        for k, v in top["children"].items()}

        part = _section(raw, "partition")
        _unknown("partition", part, {"fractions", "seed"})
        if "fractions" not in part or not isinstance(part["fractions"], list):
            raise ConfigError("partition.fractions must be a list")
        fractions = [_float(f, "partition.fractions entry") for f in part["fractions"]]
        seed = _int(raw.get("seed", 0), "seed", 0)

        weights = _choice(raw.get("weights", "data_proportional"), "weights", WEIGHT_MODES)

        its = _section(raw, "iterations")
        _unknown("iterations", its, {"per_layer", "mode", "scope", "pins"})
        per_layer = None
        if "per_layer" in its:
            if not isinstance(its["per_layer"], list):
                raise ConfigError("iterations.per_layer must be a list")
            per_layer = [_int(t, "iterations.per_layer entry", 1) for t in its["per_layer"]]
        pins = {_int(k, "iterations.pins key"): _int(v, "iterations.pins value", 1)
                for k, v in (its.get("pins") or {}).items()}

        tm = _section(raw, "time_model")
        _unknown("time_model", tm, {"t_lp", "t_delay", "t_cp"})

        def per(v, name):
            if isinstance(v, list):
                return [_float(x, name) for x in v]
            return _float(v, name)

        time_model = TimeModel(per(tm.get("t_lp", 1.0), "time_model.t_lp"),
                               per(tm.get("t_delay", 0.0), "time_model.t_delay"),
                               per(tm.get("t_cp", 0.0), "time_model.t_cp"))

        out = Path(raw.get("output", "gdcatree-out"))
        cfg = cls(
            dataset=dict(ds),
            loss=str(raw["loss"]),
            lam=lam,
            fanout=fanout,
            children=children,
            fractions=fractions,
            partition_seed=_int(part.get("seed", seed), "partition.seed", 0),
            weights=weights,
            per_layer=per_layer,
            schedule_mode=_choice(its.get("mode", "uniform"), "iterations.mode", SCHEDULE_MODES),
            scope=_choice(its.get("scope", "proportional"), "iterations.scope", DELAYED_SCOPES),
            pins=pins,
            time_model=time_model,
            trials=_int(raw.get("trials", 1), "trials", 1),
            seed=seed,
            parallel=bool(raw.get("parallel", False)),
            jobs=_int(raw.get("jobs", 1), "jobs", 1),
            output=out if out.is_absolute() else base_dir / out,
            base_dir=base_dir,
        )
        cfg.topology()  # validates the tree and the fraction count
        return cfg

    def topology(self) -> Topology:
        top = build_tree(self.fanout) if self.fanout is not None else Topology.from_children(self.children)
        if len(self.fractions) != len(top.leaves()):
            raise ConfigError(f"{len(self.fractions)} partition fractions for {len(top.leaves())} leaves")
        if self.per_layer is not None and len(self.per_layer) != top.depth + 1:
            raise ConfigError(f"iterations.per_layer needs {top.depth + 1} entries (layers 0..{top.depth}), "
                              f"got {len(self.per_layer)}")
        for nid in self.pins:
            if nid not in top.nodes:
                raise ConfigError(f"iterations.pins refers to unknown node {nid}")
        return top

    def loss_spec(self) -> LossSpec:
        return LossSpec.from_name(self.loss)

    def load_dataset(self) -> Dataset:
        ds = self.dataset
        fmt = ds["format"]
        if fmt == "synthetic":
            data = make_synthetic(ds["m"], ds["d"], task=ds.get("task", "regression"),
                                  noise=float(ds.get("noise", 0.1)), seed=int(ds.get("seed", 0)))
        else:
            path = Path(ds["path"])
            if not path.is_absolute():
                path = self.base_dir / path
            if fmt == "dense":
                data = load_dense(path, delimiter=ds.get("delimiter", ","),
                                  label_column=int(ds.get("label_column", -1)), header=bool(ds.get("header", False)))
            else:
                data = load_libsvm(path, label_map=ds.get("label_map"), n_features=ds.get("n_features"))
        mode = ds.get("normalize", "per_instance_unit")
        return data if mode == "none" else normalize(data, mode)

    def build(self, ds: Dataset) -> tuple[Topology, Partition, WeightSchedule, IterationSchedule]:
        top = self.topology()
        part = partition_by_fractions(ds.m, self.fractions, top.leaves(), self.partition_seed)
        betas = compute_betas(top, part, self.weights)
        base = self.per_layer
        if base is None:
            base = [DEFAULT_INTERNAL_ROUNDS] * top.depth + [DEFAULT_LEAF_STEPS]
        iters = schedule_iterations(top, part, base, self.schedule_mode, self.scope, self.pins)
        return top, part, betas, iters
