"""Multi-trial experiment driver, trace CSV I/O and run comparison."""
from __future__ import annotations

import csv
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import ExperimentConfig
from .engine import TraceRecord, TreeSolver
from .errors import FormatError

log = logging.getLogger(__name__)

TRIAL_COLUMNS = ("outer_iter", "sim_time", "primal", "dual", "gap")
AVERAGE_COLUMNS = ("outer_iter", "mean_sim_time", "mean_primal", "mean_dual", "mean_gap", "std_gap")


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_trial_csv(path, trace: list[TraceRecord]) -> None:
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(TRIAL_COLUMNS)
        for rec in trace:
            out.writerow([rec.outer_iteration, _fmt(rec.simulated_time), _fmt(rec.primal), _fmt(rec.dual), _fmt(rec.gap)])


def average_traces(traces: list[list[TraceRecord]]) -> list[tuple]:
    """Per-iteration means over trials (population std for the gap)."""
    lengths = {len(t) for t in traces}
    if len(lengths) != 1:
        raise ValueError(f"traces have different lengths: {sorted(lengths)}")
    arr = np.array([[(r.simulated_time, r.primal, r.dual, r.gap) for r in t] for t in traces])
    mean = arr.mean(axis=0)
    std = arr[:, :, 3].std(axis=0)
    iters = [r.outer_iteration for r in traces[0]]
    return [(it, *mean[k], std[k]) for k, it in enumerate(iters)]


def write_average_csv(path, rows: list[tuple]) -> None:
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(AVERAGE_COLUMNS)
        for it, *vals in rows:
            out.writerow([it, *(_fmt(v) for v in vals)])


@dataclass
class ExperimentResult:
    trial_paths: list[Path]
    average_path: Path
    traces: list[list[TraceRecord]]


def run_trials(cfg: ExperimentConfig) -> list[list[TraceRecord]]:
    ds = cfg.load_dataset()
    top, part, betas, iters = cfg.build(ds)
    spec = cfg.loss_spec()
    log.info("m=%d d=%d leaves=%s T=%s beta=%s", ds.m, ds.d, part.sizes(), dict(iters.T), dict(betas.beta))

    def one(trial):
        solver = TreeSolver(ds, spec, cfg.lam, top, part, betas, iters, seed=(cfg.seed, trial), parallel=cfg.parallel)
        trace = solver.solve(cfg.time_model).trace
        log.info("trial %d: final gap %.3e", trial, trace[-1].gap)
        return trace

    if cfg.jobs > 1:
        with ThreadPoolExecutor(cfg.jobs) as pool:
            return list(pool.map(one, range(cfg.trials)))
    return [one(t) for t in range(cfg.trials)]


def run_experiment(cfg: ExperimentConfig | str | Path) -> ExperimentResult:
    """Run every trial, then write ``trial_NNN.csv`` files and ``average.csv``.

    Nothing is written unless all trials succeed.
    """
    if not isinstance(cfg, ExperimentConfig):
        cfg = ExperimentConfig.load(cfg)
    traces = run_trials(cfg)
    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for k, trace in enumerate(traces):
        p = out / f"trial_{k:03d}.csv"
        write_trial_csv(p, trace)
        paths.append(p)
    avg = out / "average.csv"
    write_average_csv(avg, average_traces(traces))
    return ExperimentResult(paths, avg, traces)


def read_trace(path) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(time, gap)`` columns of a per-trial or averaged trace CSV."""
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise FormatError(f"cannot read trace {path}: {exc}") from None
    if not rows:
        raise FormatError(f"{path}: empty trace file")
    header = [h.strip() for h in rows[0]]
    for tcol, gcol in (("mean_sim_time", "mean_gap"), ("sim_time", "gap")):
        if tcol in header and gcol in header:
            ti, gi = header.index(tcol), header.index(gcol)
            break
    else:
        raise FormatError(f"{path}: need columns sim_time/gap or mean_sim_time/mean_gap, got {header}")
    if len(rows) < 2:
        raise FormatError(f"{path}: trace has no records")
    times, gaps = [], []
    for n, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise FormatError(f"{path}: line {n} has {len(row)} fields, expected {len(header)}")
        try:
            times.append(float(row[ti]))
            gaps.append(float(row[gi]))
        except ValueError:
            raise FormatError(f"{path}: line {n}: non-numeric value") from None
    return np.array(times), np.array(gaps)


def time_to_target(times: np.ndarray, gaps: np.ndarray, target_fraction: float) -> float | None:
    """First time the gap drops to ``target_fraction`` of its initial value.

    Linear interpolation between records; ``None`` if never reached.
    """
    target = target_fraction * gaps[0]
    hit = np.flatnonzero(gaps <= target)
    if hit.size == 0:
        return None
    k = int(hit[0])
    if k == 0:
        return float(times[0])
    g0, g1 = gaps[k - 1], gaps[k]
    t0, t1 = times[k - 1], times[k]
    return float(t0 + (target - g0) * (t1 - t0) / (g1 - g0))


@dataclass
class CompareReport:
    time_a: float | None
    time_b: float | None
    speedup: float

    def lines(self, name_a="a", name_b="b", fraction=None) -> list[str]:
        def show(t):
            return "never reached" if t is None else f"{t:.6g}"

        head = "" if fraction is None else f"target gap = {fraction:g} x initial gap\n"
        return [
            f"{head}{name_a}: {show(self.time_a)}",
            f"{name_b}: {show(self.time_b)}",
            f"speedup ({name_a} / {name_b}): {self.speedup:.6g}",
        ]


def compare_runs(trace_a, trace_b, target_fraction: float = 0.1) -> CompareReport:
    """Time for each trace to reach the target gap and the ratio ``time_a / time_b``.

    The speedup is ``inf`` when only ``b`` reaches the target and ``nan``
    when neither does.
    """
    if not 0 < target_fraction:
        raise ValueError(f"target fraction must be positive, got {target_fraction}")
    ta = time_to_target(*read_trace(trace_a), target_fraction)
    tb = time_to_target(*read_trace(trace_b), target_fraction)
    if ta is None and tb is None:
        speedup = math.nan
    elif tb is None:
        speedup = 0.0
    elif ta is None or tb == 0.0:
        speedup = math.inf if (ta is None or ta > 0) else 1.0
    else:
        speedup = ta / tb
    return CompareReport(ta, tb, speedup)
