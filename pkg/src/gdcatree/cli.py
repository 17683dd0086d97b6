"""Command line entry point: ``gdcatree run|compare|analyze``."""
from __future__ import annotations

import argparse
import logging
import sys

from . import analysis
from .config import ExperimentConfig
from .errors import GDCAError
from .experiment import compare_runs, run_experiment
from .topology import node_index_set


def _floats(text: str) -> list[float]:
    return [float(t) for t in text.split(",") if t.strip()]


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="gdcatree", description="Tree-network dual coordinate ascent simulator")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run an experiment from a YAML config")
    p.add_argument("config")
    p.add_argument("--output", help="override the config's output directory")

    p = sub.add_parser("compare", help="time-to-target comparison of two trace CSVs")
    p.add_argument("trace_a")
    p.add_argument("trace_b")
    p.add_argument("--target-fraction", type=float, default=0.1)

    an = sub.add_parser("analyze", help="closed-form calculators").add_subparsers(dest="calc", required=True)

    p = an.add_parser("theta-p", help="local improvement factor of a LocalSDCA leaf")
    p.add_argument("--lam", type=float, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--gamma", type=float, default=0.5)
    p.add_argument("--m-b", type=int, required=True)
    p.add_argument("--tp", type=int, required=True)

    p = an.add_parser("bound", help="per-node convergence bound")
    p.add_argument("--lam", type=float, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--gamma", type=float, default=0.5)
    p.add_argument("--thetas", type=_floats, required=True, help="comma-separated")
    p.add_argument("--betas", type=_floats, required=True, help="comma-separated")
    p.add_argument("--rho", type=float, required=True)
    p.add_argument("--T", type=int, required=True)

    p = an.add_parser("optimal-tp", help="closed-form and brute-force optimal leaf iterations")
    p.add_argument("--c1", type=float, required=True)
    p.add_argument("--c2", type=float, required=True)
    p.add_argument("--n-k", type=int, required=True)
    p.add_argument("--n-q", type=int, required=True)
    p.add_argument("--r", type=float, required=True)
    p.add_argument("--t-max", type=int, default=1_000_000)

    p = an.add_parser("rho-min", help="block-separability constant of a node's children")
    p.add_argument("--config", required=True)
    p.add_argument("--node", type=int, help="internal node id (default: root)")

    p = an.add_parser("lambert-w", help="principal branch of the Lambert W function")
    p.add_argument("--x", type=float, required=True)
    return ap


def _analyze(args) -> None:
    if args.calc == "theta-p":
        print(repr(analysis.theta_p(args.lam, args.m, args.gamma, args.m_b, args.tp)))
    elif args.calc == "bound":
        inputs = analysis.BoundInputs(args.lam, args.m, args.gamma, args.thetas, args.betas, args.rho, args.T)
        print(repr(analysis.convergence_bound(inputs)))
    elif args.calc == "optimal-tp":
        print(f"closed_form: {analysis.optimal_tp(args.c1, args.c2, args.n_k, args.n_q, args.r)!r}")
        print(f"numeric: {analysis.optimal_tp_numeric(args.c1, args.c2, args.n_k, args.n_q, args.r, args.t_max)}")
    elif args.calc == "rho-min":
        cfg = ExperimentConfig.load(args.config)
        ds = cfg.load_dataset()
        top, part, _, _ = cfg.build(ds)
        nid = top.root if args.node is None else args.node
        node = top.node(nid)
        if node.is_leaf:
            raise GDCAError(f"node {nid} is a leaf")
        blocks = [node_index_set(top, part, c) for c in node.children]
        print(repr(analysis.rho_min(ds, cfg.lam, blocks)))
    elif args.calc == "lambert-w":
        print(repr(analysis.lambert_w0(args.x)))


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "run":
            cfg = ExperimentConfig.load(args.config)
            if args.output:
                cfg.output = type(cfg.output)(args.output)
            res = run_experiment(cfg)
            print(f"wrote {len(res.trial_paths)} trial trace(s) and {res.average_path}")
        elif args.command == "compare":
            rep = compare_runs(args.trace_a, args.trace_b, args.target_fraction)
            print("\n".join(rep.lines(args.trace_a, args.trace_b, args.target_fraction)))
        else:
            _analyze(args)
    except (GDCAError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
