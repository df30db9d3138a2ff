"""Command-line entry point: ``kconn <subcommand>``.

Exit codes: 0 success, 1 a check failed, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict
from pathlib import Path

from .connectivity import connectivity_report
from .graph_gen import GraphError, ModelParams, export_edge_list, generate, import_edge_list
from .harness import (
    BoundsConfig,
    ConfigError,
    SweepConfig,
    run_sweep,
    sweep_metadata,
    verify_bounds,
    write_csv,
)
from .model_spec import DistributionError, load_distribution, moments
from .theory import NotSolvableError, solve_m

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def _cmd_moments(args) -> int:
    dist = load_distribution(args.dist)
    tq = moments(dist, args.n, k_max=max(args.k, 2))
    print(json.dumps(tq.to_json(), indent=2))
    return EXIT_OK


def _cmd_generate(args) -> int:
    dist = load_distribution(args.dist)
    m = args.m
    if m is None:
        if args.lam is None:
            raise ConfigError("give --m or --lambda")
        m = solve_m(args.n, args.k, moments(dist, args.n).kappa_n, args.lam)
    g = generate(ModelParams(args.n, m, args.k), dist, args.seed)
    if args.json:
        text = json.dumps(g.to_json())
        if args.out:
            Path(args.out).write_text(text + "\n")
        else:
            print(text)
    elif args.out:
        export_edge_list(g, args.out)
    else:
        export_edge_list(g, sys.stdout)
    return EXIT_OK


def _cmd_check(args) -> int:
    g = import_edge_list(args.graph)
    rep = connectivity_report(g, args.k)
    if args.json:
        print(json.dumps(rep.to_json(), indent=2))
    else:
        d = rep.to_json()
        for key in ("n", "k", "min_degree", "vertex_connected_k", "edge_connected_k",
                    "vertex_cut_witness", "edge_cut_witness"):
            print(f"{key}: {d[key]}")
    if args.strict and not rep.vertex_connected_k:
        return EXIT_FAIL
    return EXIT_OK


def _cmd_sweep(args) -> int:
    cfg = SweepConfig.load(args.config)
    rows = run_sweep(cfg, progress=lambda s: print(s, file=sys.stderr) if args.verbose else None)
    if args.out:
        write_csv(rows, args.out)
        Path(str(args.out) + ".meta.json").write_text(json.dumps(sweep_metadata(cfg), indent=2) + "\n")
    if args.json:
        print(json.dumps({"meta": sweep_metadata(cfg), "rows": [asdict(r) for r in rows]}, indent=2))
    elif not args.out:
        write_csv(rows, sys.stdout)
    if any(r.menger_violations for r in rows):
        return EXIT_FAIL
    return EXIT_OK


def _cmd_verify(args) -> int:
    if args.config:
        with open(args.config) as fh:
            cfg = BoundsConfig.from_json(json.load(fh), base=Path(args.config).parent)
    else:
        cfg = BoundsConfig()
    if args.dist:
        cfg.dist = load_distribution(args.dist)
    if args.trials:
        cfg.trials = args.trials
    rep = verify_bounds(cfg)
    print(json.dumps(rep.to_json(), indent=2) if args.json else rep.to_text())
    return EXIT_OK if rep.passed else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="kconn", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("moments", help="threshold functionals of a distribution")
    sp.add_argument("--dist", required=True)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--k", type=int, default=2)
    sp.add_argument("--json", action="store_true", help="(output is always JSON)")
    sp.set_defaults(func=_cmd_moments)

    sp = sub.add_parser("generate", help="sample G_[n,m] and emit its edge list")
    sp.add_argument("--dist", required=True)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--m", type=int)
    sp.add_argument("--lambda", dest="lam", type=float, help="solve m for this threshold value")
    sp.add_argument("--k", type=int, default=2)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out")
    sp.add_argument("--json", action="store_true")
    sp.set_defaults(func=_cmd_generate)

    sp = sub.add_parser("check", help="decide k-connectivity of an edge-list graph")
    sp.add_argument("--graph", required=True)
    sp.add_argument("--k", type=int, required=True)
    sp.add_argument("--json", action="store_true")
    sp.add_argument("--strict", action="store_true", help="exit 1 unless vertex k-connected")
    sp.set_defaults(func=_cmd_check)

    sp = sub.add_parser("sweep", help="Monte Carlo threshold sweep to CSV")
    sp.add_argument("--config", required=True)
    sp.add_argument("--out")
    sp.add_argument("--json", action="store_true")
    sp.set_defaults(func=_cmd_sweep)

    sp = sub.add_parser("verify-bounds", help="check moment inequalities and single-layer bounds")
    sp.add_argument("--config")
    sp.add_argument("--dist")
    sp.add_argument("--trials", type=int)
    sp.add_argument("--json", action="store_true")
    sp.set_defaults(func=_cmd_verify)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, DistributionError, GraphError, NotSolvableError,
            FileNotFoundError, json.JSONDecodeError, ValueError) as exc:
        print(f"kconn: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
