"""Command-line entry point: ``afpump run | compare | plot``."""

from __future__ import annotations

import argparse
import glob
import json
import logging
import sys
from pathlib import Path

from .bench import Manifest, compare_gaps, read_metrics, run_experiment
from .moves import MoveKind
from .projection import QualityNorm


def _seeds(text: str) -> list[int]:
    """``0-9`` or ``1,2,5`` or a mix of both."""
    out: list[int] = []
    for part in text.split(","):
        part = part.strip()
        if "-" in part[1:]:
            lo, hi = part.split("-", 1)
            out.extend(range(int(lo), int(hi) + 1))
        elif part:
            out.append(int(part))
    if not out:
        raise argparse.ArgumentTypeError("empty seed list")
    return out


def _moves(text: str) -> list[str]:
    kinds = [m.strip() for m in text.split(",") if m.strip()]
    valid = {k.value for k in MoveKind}
    bad = [k for k in kinds if k not in valid]
    if bad:
        raise argparse.ArgumentTypeError(f"unknown move(s) {bad}; choose from {sorted(valid)}")
    return kinds


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="afpump", description="Feasibility pump and annealed feasibility pump benchmarks.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a benchmark over MPS instances")
    r.add_argument("instances", nargs="*", help="MPS paths or glob patterns (.mps or .mps.gz)")
    r.add_argument("--manifest", help="JSON manifest; command-line options override its fields")
    r.add_argument("--algorithm", choices=["fp", "afp"])
    r.add_argument("--stages", type=int, choices=[1, 2])
    r.add_argument("--seeds", type=_seeds, help="e.g. 0-9 or 1,3,5")
    r.add_argument("--n-total", type=int, help="global iteration budget per solve")
    r.add_argument("--n-run", type=int, help="iteration limit per run")
    r.add_argument("--stall", type=int, help="iterations without fractionality improvement before a run stops")
    r.add_argument("--alpha-decay", type=float)
    r.add_argument("--p-h", type=float, help="initial acceptance probability of the worst move")
    r.add_argument("--alpha-h", type=float, help="calibration temperature")
    r.add_argument("--quality-norm", choices=[q.value for q in QualityNorm])
    r.add_argument("--moves", type=_moves, help="comma-separated move kinds: " + ",".join(k.value for k in MoveKind))
    r.add_argument("--time-limit", type=float, help="seconds per run")
    r.add_argument("--references", help="sidecar file of 'name objective' lines")
    r.add_argument("--workers", type=int, help="worker processes (default from AFPUMP_WORKERS, else 1)")
    r.add_argument("--out", required=True, help="output directory")

    c = sub.add_parser("compare", help="count instances with strictly lower gap between two metrics.csv files")
    c.add_argument("a")
    c.add_argument("b")
    c.add_argument("--classes", help="sidecar file of 'name class' lines")

    pl = sub.add_parser("plot", help="render per-iteration diagnostics from an event log to SVG")
    pl.add_argument("events", help="line-delimited JSON event log")
    pl.add_argument("--out", required=True, help="output SVG path")
    pl.add_argument("--run", type=int, help="restrict to one run index")
    return p


_CONFIG_FLAGS = {
    "n_total": "n_total", "n_run": "n_run", "stall": "stall", "alpha_decay": "alpha_decay",
    "p_h": "p_h0", "alpha_h": "alpha_h", "quality_norm": "quality_norm", "moves": "moves",
    "time_limit": "time_limit",
}


def _manifest_from_args(args: argparse.Namespace) -> Manifest:
    if args.manifest:
        m = Manifest.load(args.manifest)
    else:
        m = Manifest(instances=[], seeds=args.seeds or [0])
    if args.instances:
        paths: list[str] = []
        for pattern in args.instances:
            paths.extend(sorted(glob.glob(pattern)) or [pattern])
        m.instances = paths
    if not m.instances:
        raise SystemExit("no instances given")
    if args.seeds:
        m.seeds = args.seeds
    if args.algorithm:
        m.algorithm = args.algorithm
    if args.stages:
        m.stages = args.stages
    if args.references:
        m.references = args.references
    config = dict(m.config)
    for flag, key in _CONFIG_FLAGS.items():
        value = getattr(args, flag)
        if value is not None:
            config[key] = value
    m.config = config
    m.__post_init__()
    return m


def _read_pairs(path: str) -> dict[str, str]:
    out = {}
    for line in Path(path).read_text().splitlines():
        parts = line.split("#", 1)[0].split()
        if len(parts) == 2:
            out[parts[0]] = parts[1]
    return out


def cmd_run(args: argparse.Namespace) -> int:
    manifest = _manifest_from_args(args)
    code = run_experiment(manifest, args.out, workers=args.workers)
    print(Path(args.out, "metrics.csv").read_text(), end="")
    return code


def cmd_compare(args: argparse.Namespace) -> int:
    classes = _read_pairs(args.classes) if args.classes else None
    counts = compare_gaps(read_metrics(args.a), read_metrics(args.b), classes)
    print("class,lower_gap_a,lower_gap_b,ties")
    for cls in sorted(counts):
        c = counts[cls]
        print(f"{cls},{c['a']},{c['b']},{c['ties']}")
    return 0


def cmd_plot(args: argparse.Namespace) -> int:
    from .plot import plot_events

    with open(args.events) as fh:
        events = [json.loads(line) for line in fh if line.strip()]
    plot_events(events, args.out, run=args.run)
    return 0


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handlers = {"run": cmd_run, "compare": cmd_compare, "plot": cmd_plot}
    return handlers[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
