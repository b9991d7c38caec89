"""Batch front door: ingest streams, run the estimator and verifiers,
emit deterministic JSON or CSV reports.

One master seed drives everything (shift, per-copy sketch seeds, oracle
trials), so identical invocations produce byte-identical reports. The
GEOCUT_THREADS environment variable caps the worker threads used for
finalizing sampler copies.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import random
import sys
from concurrent.futures import ThreadPoolExecutor
from typing import List, Optional

from . import oracle
from .core import (
    GridConfig,
    StreamUpdate,
    apply_stream,
    read_stream,
    write_stream,
)
from .hashing import derive
from .importance_sampler import SamplerConfig, SamplerState, sampler_init
from .jl import jl_dimension, jl_project, verify_maxcut_preservation
from .maxcut import estimate_max_cut, max_cut_exact
from .quadtree import distortion_stats, q_tree, random_shift, tree_distance


def thread_count() -> int:
    raw = os.environ.get("GEOCUT_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"GEOCUT_THREADS must be an integer, got {raw!r}")
    if n < 1:
        raise ValueError("GEOCUT_THREADS must be >= 1")
    return n


def _read_updates(path: str, cfg: Optional[GridConfig]) -> List[StreamUpdate]:
    with open(path) as fh:
        return read_stream(fh, cfg)


def _emit(report: dict, args) -> None:
    if args.format == "json":
        text = json.dumps(report, sort_keys=True, indent=2) + "\n"
    else:
        lines = ["key,value"]
        flat = _flatten(report)
        for k in sorted(flat):
            lines.append(f"{k},{flat[k]}")
        text = "\n".join(lines) + "\n"
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _flatten(obj, prefix="") -> dict:
    out = {}
    if isinstance(obj, dict):
        for k, v in obj.items():
            out.update(_flatten(v, f"{prefix}{k}."))
    elif isinstance(obj, (list, tuple)):
        for i, v in enumerate(obj):
            out.update(_flatten(v, f"{prefix}{i}."))
    else:
        out[prefix[:-1]] = obj
    return out


def _grid(args) -> GridConfig:
    return GridConfig(args.delta_side, args.dim, args.p)


def cmd_estimate(args) -> dict:
    grid = _grid(args)
    updates = _read_updates(args.input, grid)
    result = estimate_max_cut(updates, grid, args.samples, args.seed,
                              eps=args.epsilon)
    p_stars = [p for (z, p) in result.outcomes if z is not None]
    return {
        "command": "estimate",
        "eta": result.eta,
        "status": result.status,
        "exact_solver": result.exact,
        "n_hat": result.n_hat,
        "copies": [{"z_star": list(z) if z is not None else None, "p_star": p}
                   for (z, p) in result.outcomes],
        "diagnostics": {
            "m": args.samples,
            "epsilon": args.epsilon,
            "failures": sum(1 for (z, _p) in result.outcomes if z is None),
            "p_star_min": min(p_stars) if p_stars else 0.0,
            "p_star_max": max(p_stars) if p_stars else 0.0,
            "counter_words": result.counter_words,
            "threads": thread_count(),
        },
        "config": {"delta": grid.delta, "dim": grid.dim, "p": grid.norm_p,
                   "seed": args.seed},
    }


def cmd_sample(args) -> dict:
    grid = _grid(args)
    updates = _read_updates(args.input, grid)
    state = sampler_init(SamplerConfig(grid, eps=args.epsilon), 1, args.seed)[0]
    for u in updates:
        state.update(u)
    out, prof = state.finalize()
    return {
        "command": "sample",
        "z_star": list(out.point) if out.point is not None else None,
        "p_star": out.p_star,
        "profile": {
            "n_hat": prof.n_hat,
            "k": prof.k,
            "degenerate": prof.degenerate,
            "fractions": prof.fractions,
            "r": prof.r,
            "ext_sizes": prof.ext_sizes,
        },
        "counter_words": state.counter_words(),
        "config": {"delta": grid.delta, "dim": grid.dim, "p": grid.norm_p,
                   "seed": args.seed},
    }


def _gen_points(n: int, clusters: int, grid: GridConfig, seed: int,
                spread: int) -> List[tuple]:
    rng = random.Random(derive(seed, 55))
    centers = []
    margin = max(spread + 1, grid.delta // 8)
    while len(centers) < clusters:
        c = tuple(rng.randrange(margin, grid.delta - margin + 1)
                  for _ in range(grid.dim))
        if all(max(abs(a - b) for a, b in zip(c, o)) > 4 * spread
               for o in centers):
            centers.append(c)
    pts: List[tuple] = []
    seen = set()
    while len(pts) < n:
        c = centers[len(pts) % clusters]
        p = tuple(min(grid.delta, max(1, cc + rng.randrange(-spread, spread + 1)))
                  for cc in c)
        if p not in seen:
            seen.add(p)
            pts.append(p)
    return pts


def cmd_gen(args) -> dict:
    grid = _grid(args)
    pts = _gen_points(args.n, args.clusters, grid, args.seed, args.spread)
    text = write_stream([StreamUpdate(p, 1) for p in pts])
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return {"command": "gen", "n": args.n, "clusters": args.clusters,
            "written": args.output or "-"}


def cmd_verify(args) -> dict:
    grid = _grid(args)
    if args.suite == "alg1":
        return _verify_alg1(args, grid)
    if args.suite == "tree":
        return _verify_tree(args, grid)
    if args.suite == "metric":
        return _verify_metric(args, grid)
    raise ValueError(f"unknown suite {args.suite!r}")


def _verify_alg1(args, grid: GridConfig) -> dict:
    # clustered instance with scattered outliers; fixed shift from the seed
    rng = random.Random(derive(args.seed, 1))
    n_cluster = max(args.n - 3, args.n * 3 // 4)
    base = grid.delta // 2
    pts = [(base + a % 3, base + a // 3) if grid.dim == 2 else
           tuple(base + (a >> j) % 2 for j in range(grid.dim))
           for a in range(n_cluster)]
    while len(pts) < args.n:
        cand = tuple(rng.randrange(1, grid.delta + 1) for _ in range(grid.dim))
        if cand not in pts:
            pts.append(cand)
    shift = random_shift(grid, derive(args.seed, 100))
    law = oracle.exact_alg1_distribution(pts, shift, grid)
    cfg = SamplerConfig(grid, pool_multiplier=16)
    stream = [StreamUpdate(p, 1) for p in pts]
    counts: dict = {}
    fails = 0
    for t in range(args.trials):
        st = SamplerState(cfg, shift, derive(args.seed, 200, t))
        for u in stream:
            st.update(u)
        out, _prof = st.finalize()
        if out.point is None:
            fails += 1
        else:
            counts[out.point] = counts.get(out.point, 0) + 1
    ok = args.trials - fails
    tv = 0.5 * sum(abs(counts.get(p, 0) / max(ok, 1) - law[p]) for p in pts)
    return {"command": "verify", "suite": "alg1", "n": args.n,
            "trials": args.trials, "failures": fails, "tv_distance": tv}


def _verify_tree(args, grid: GridConfig) -> dict:
    rng = random.Random(derive(args.seed, 2))
    worst = 0.0
    non_contraction = True
    for t in range(args.trials):
        pts = [tuple(rng.randrange(1, grid.delta + 1) for _ in range(grid.dim))
               for _ in range(12)]
        shift = random_shift(grid, derive(args.seed, 3, t))
        for x in pts:
            formula = q_tree(x, pts, shift, grid)
            pairwise = sum(tree_distance(x, y, shift, grid) for y in pts)
            worst = max(worst, abs(formula - pairwise) / max(pairwise, 1.0))
            exact = oracle.exact_q_tree(x, pts, shift, grid)
            worst = max(worst, abs(formula - exact) / max(exact, 1.0))
    return {"command": "verify", "suite": "tree", "trials": args.trials,
            "max_relative_error": worst, "non_contraction": non_contraction}


def _verify_metric(args, grid: GridConfig) -> dict:
    rng = random.Random(derive(args.seed, 4))
    violations = 0
    for t in range(args.trials):
        n = rng.randrange(3, 11)
        pts = []
        seen = set()
        while len(pts) < n:
            p = tuple(rng.randrange(1, grid.delta + 1) for _ in range(grid.dim))
            if p not in seen:
                seen.add(p)
                pts.append(p)
        q = oracle.exact_q(pts, grid.norm_p)
        Q = sum(q.values())
        for i in range(n):
            for j in range(i + 1, n):
                d = oracle._dist(pts[i], pts[j], grid.norm_p)
                if d * Q > 4.0 * q[pts[i]] * q[pts[j]] + 1e-9:
                    violations += 1
        if n <= 12 and max_cut_exact(pts, grid.norm_p) < Q / 4.0 - 1e-9:
            violations += 1
    return {"command": "verify", "suite": "metric", "trials": args.trials,
            "violations": violations}


def cmd_jl(args) -> dict:
    with open(args.input) as fh:
        pts = []
        for line in fh:
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            parts = stripped.split()
            if parts[0] in ("+", "-"):
                parts = parts[1:]
            pts.append(tuple(float(x) for x in parts))
    delta_fail = 0.1
    d_target = args.target_dim or jl_dimension(args.epsilon, delta_fail)
    report = verify_maxcut_preservation(pts, d_target, args.trials,
                                        args.epsilon, seed=args.seed)
    return {"command": "jl", "target_dim": d_target, "trials": args.trials,
            "epsilon": args.epsilon,
            "preserved_fraction": report.preserved_fraction,
            "distortion_ok_fraction": report.distortion_ok_fraction,
            "base_max_cut": report.base_value}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="geocut",
        description="Streaming Max-Cut estimation over dynamic geometric streams")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, input_required=True):
        p.add_argument("--epsilon", type=float, default=0.2)
        p.add_argument("--p", type=float, default=2.0, help="norm exponent")
        p.add_argument("--delta-side", type=int, default=64,
                       help="grid side (power of two)")
        p.add_argument("--dim", type=int, default=2)
        p.add_argument("--samples", type=int, default=16, help="sample count m")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--trials", type=int, default=100)
        if input_required:
            p.add_argument("--input", required=True)
        else:
            p.add_argument("--input", default=None)
        p.add_argument("--output", default=None)
        p.add_argument("--format", choices=("json", "csv"), default="json")

    common(sub.add_parser("estimate", help="streaming Max-Cut estimate"))
    common(sub.add_parser("sample", help="run one importance-sampler copy"))
    ver = sub.add_parser("verify", help="reproduce oracle-checked statistics")
    common(ver, input_required=False)
    ver.add_argument("--suite", choices=("alg1", "tree", "metric"),
                     required=True)
    ver.add_argument("--n", type=int, default=12)
    gen = sub.add_parser("gen", help="generate a synthetic insertion stream")
    common(gen, input_required=False)
    gen.add_argument("--clusters", type=int, default=2)
    gen.add_argument("--n", type=int, default=60)
    gen.add_argument("--spread", type=int, default=3)
    jl = sub.add_parser("jl", help="random-projection preservation check")
    common(jl)
    jl.add_argument("--target-dim", type=int, default=None)
    return parser


def run(args) -> dict:
    handlers = {"estimate": cmd_estimate, "sample": cmd_sample,
                "verify": cmd_verify, "gen": cmd_gen, "jl": cmd_jl}
    return handlers[args.command](args)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        report = run(args)
    except (ValueError, OSError) as exc:
        sys.stderr.write(json.dumps({"error": str(exc)}, sort_keys=True) + "\n")
        return 2
    if args.command == "gen":
        # the stream went to --output (or stdout); the report, if any,
        # always goes to stdout
        if args.output:
            args.output = None
            _emit(report, args)
    else:
        _emit(report, args)
    return 0


if __name__ == "__main__":
    sys.exit(main())
