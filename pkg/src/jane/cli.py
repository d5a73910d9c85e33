"""Command-line entry point: ``jane {eigs,generate,train,baseline,sweep}``."""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .baselines import LPConfig, propagate
from .classifier import save_checkpoint
from .errors import DivergenceDetected, JaneError
from .genmodel import SynthConfig, generate_synthetic
from .graph import laplacian, load_edge_list
from .harness import SweepSpec, render_outputs, run_sweep
from .io import load_dataset, save_dataset
from .spectral import smallest_nontrivial_eigs
from .trainer import VARIANTS, TrainConfig, train

log = logging.getLogger("jane")


def _clean(obj):
    """Replace non-finite floats by ``None`` so the output is strict JSON."""
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def _write_json(path, payload):
    Path(path).write_text(json.dumps(_clean(payload), indent=2) + "\n", encoding="utf-8")


def cmd_eigs(args) -> int:
    g = load_edge_list(args.edges, n=args.n)
    basis = smallest_nontrivial_eigs(laplacian(g), args.k, method=args.method)
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(",".join(repr(float(v)) for v in basis.eigenvalues) + "\n")
        for row in basis.eigenvectors.tolist():
            fh.write(",".join(map(repr, row)) + "\n")
    print(f"wrote {args.k} eigenpairs of a {g.n}-node graph to {args.out}")
    return 0


def cmd_generate(args) -> int:
    cfg = SynthConfig(n=args.n, d=args.d, k=args.k, M=args.M, alpha=args.alpha,
                      scale_sq_gen=args.scale_sq, seed=args.seed,
                      train_frac=args.train_frac, val_frac=args.val_frac)
    ds, g = generate_synthetic(cfg)
    save_dataset(ds, g, args.out)
    dropped = len(ds.meta.get("dropped_nodes", []))
    print(f"wrote {ds.n} nodes, {g.num_edges} edges to {args.out}"
          + (f" ({dropped} nodes outside the largest component dropped)" if dropped else ""))
    return 0


def cmd_train(args) -> int:
    ds, g = load_dataset(args.data)
    cfg = TrainConfig(epochs=args.epochs, lr_w=args.lr_w, lr_u=args.lr_u, dropout=args.dropout,
                      weight_decay=args.weight_decay, k=args.k, scale_sq=args.scale_sq,
                      variant=args.variant, seed=args.seed, hidden=args.hidden,
                      early_stop_patience=args.early_stop, u_update_every=args.u_update_every,
                      u_gain=args.u_gain)
    status = 0
    try:
        report = train(ds, g, cfg)
    except DivergenceDetected as exc:
        print(f"error: {exc}", file=sys.stderr)
        report, status = exc.report, 3
    if args.report:
        _write_json(args.report, report.to_dict())
    if args.checkpoint and report.params is not None:
        save_checkpoint(report.params, args.checkpoint,
                        extra={"variant": cfg.variant, "k": cfg.k, "u_gain": cfg.u_gain})
    if status == 0:
        print(f"{cfg.variant}: test accuracy {report.test_acc:.4f} after {report.epochs_run} epochs "
              f"({report.duration_ms:.0f} ms)")
    return status


def cmd_baseline(args) -> int:
    ds, g = load_dataset(args.data)
    cfg = LPConfig(max_iters=args.max_iters, tol=args.tol)
    start = time.perf_counter()
    res = propagate(g, ds.y, ds.train, ds.num_classes, cfg)
    known = ds.test[ds.y[ds.test] >= 0]
    acc = float(np.mean(res.labels[known] == ds.y[known])) if known.size else math.nan
    payload = {"method": args.method, "config": {"max_iters": cfg.max_iters, "tol": cfg.tol},
               "iterations": res.iterations, "converged": res.converged, "test_acc": acc,
               "duration_ms": (time.perf_counter() - start) * 1e3}
    if args.report:
        _write_json(args.report, payload)
    print(f"lp: test accuracy {acc:.4f} after {res.iterations} iterations")
    return 0


def cmd_sweep(args) -> int:
    raw = json.loads(Path(args.spec).read_text(encoding="utf-8"))
    if args.workers is not None:
        raw["workers"] = args.workers
    spec = SweepSpec.from_dict(raw)
    table = run_sweep(spec)
    if len(table):
        render_outputs(table, args.out)
    elif table.failures:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        _write_json(Path(args.out) / "summary.json", {"cells": [], "failures": table.failures})
    for cell in table.aggregate():
        std = "n/a" if cell["std"] is None else f"{cell['std']:.4f}"
        print(f"alpha={cell['alpha']:g} frac={cell['frac']:g} {cell['method']:<8} "
              f"mean={cell['mean']:.4f} std={std} n={cell['count']}")
    if table.failures:
        print(f"{len(table.failures)} cell(s) failed; see summary.json", file=sys.stderr)
        return 1
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="jane", description="Latent-embedding node classification on attributed graphs.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    e = sub.add_parser("eigs", help="smallest nontrivial Laplacian eigenpairs of an edge list")
    e.add_argument("edges", help="edge-list file")
    e.add_argument("--k", type=int, required=True)
    e.add_argument("--out", required=True, help="CSV: eigenvalues on the first row, then one row per node")
    e.add_argument("--n", type=int, default=None, help="node count (default: largest id + 1)")
    e.add_argument("--method", choices=("auto", "dense", "lanczos"), default="auto")
    e.set_defaults(func=cmd_eigs)

    gp = sub.add_parser("generate", help="write a synthetic dataset directory")
    d = SynthConfig()
    gp.add_argument("--n", type=int, default=d.n)
    gp.add_argument("--d", type=int, default=d.d)
    gp.add_argument("--k", type=int, default=d.k)
    gp.add_argument("--M", type=int, default=d.M)
    gp.add_argument("--alpha", type=float, default=d.alpha)
    gp.add_argument("--scale-sq", type=float, default=d.scale_sq_gen)
    gp.add_argument("--seed", type=int, default=d.seed)
    gp.add_argument("--train-frac", type=float, default=d.train_frac)
    gp.add_argument("--val-frac", type=float, default=d.val_frac)
    gp.add_argument("--out", required=True)
    gp.set_defaults(func=cmd_generate)

    t = sub.add_parser("train", help="train on a dataset directory")
    c = TrainConfig()
    t.add_argument("--data", required=True)
    t.add_argument("--variant", choices=VARIANTS, default=c.variant)
    t.add_argument("--epochs", type=int, default=c.epochs)
    t.add_argument("--lr-w", type=float, default=c.lr_w)
    t.add_argument("--lr-u", type=float, default=c.lr_u)
    t.add_argument("--dropout", type=float, default=c.dropout)
    t.add_argument("--weight-decay", type=float, default=c.weight_decay)
    t.add_argument("--k", type=int, default=c.k)
    t.add_argument("--scale-sq", type=float, default=c.scale_sq)
    t.add_argument("--seed", type=int, default=c.seed)
    t.add_argument("--hidden", type=int, default=c.hidden)
    t.add_argument("--u-gain", type=float, default=c.u_gain,
                   help="classifier sees u_gain * sqrt(n) * U")
    t.add_argument("--u-update-every", type=int, default=c.u_update_every)
    t.add_argument("--early-stop", type=int, default=None, metavar="PATIENCE")
    t.add_argument("--report", help="training report JSON")
    t.add_argument("--checkpoint", help="binary weight checkpoint")
    t.set_defaults(func=cmd_train)

    b = sub.add_parser("baseline", help="label propagation on a dataset directory")
    lp = LPConfig()
    b.add_argument("--data", required=True)
    b.add_argument("--method", choices=("lp",), default="lp")
    b.add_argument("--max-iters", type=int, default=lp.max_iters)
    b.add_argument("--tol", type=float, default=lp.tol)
    b.add_argument("--report")
    b.set_defaults(func=cmd_baseline)

    s = sub.add_parser("sweep", help="run a synthetic sweep from a JSON spec")
    s.add_argument("--spec", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--workers", type=int, default=None)
    s.set_defaults(func=cmd_sweep)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (JaneError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
