"""Benchmark harness: run variants over instances and seeds, aggregate gap/success/time."""

from __future__ import annotations

import csv
import glob
import io
import json
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Iterable

import numpy as np

from .afp import afp_solve
from .config import SolverConfig
from .fp import fp_solve
from .model import MipInstance, is_mip_feasible
from .moves import MoveKind
from .mps import read_mps
from .projection import QualityNorm
from .report import SolveReport, write_events
from .twostage import twostage_solve

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
WORKERS_ENV = "AFPUMP_WORKERS"

RUN_FIELDS = ["schema", "instance", "algorithm", "stages", "seed", "status", "feasible",
              "objective", "iterations", "runs"]
METRIC_FIELDS = ["schema", "instance", "algorithm", "stages", "seeds", "successes", "success",
                 "best_objective", "reference", "gap", "mean_iterations", "status"]
TIMING_FIELDS = ["schema", "instance", "algorithm", "stages", "seeds", "time_all_runs",
                 "time_successful_runs", "parse_seconds"]


def compute_gap(best_found: float | None, reference: float | None) -> float | None:
    """Relative gap in percent, with the denominator guarded below by 1.

    ``None`` when either value is missing; the gap is never reported as 0 by default.
    """
    if best_found is None or reference is None:
        return None
    if not (np.isfinite(best_found) and np.isfinite(reference)):
        return None
    return 100.0 * (best_found - reference) / max(abs(reference), 1.0)


def success_ratio(flags: Iterable[bool]) -> float:
    flags = list(flags)
    if not flags:
        return 0.0
    return sum(1 for f in flags if f) / len(flags)


def read_references(path: str | os.PathLike) -> dict[str, float]:
    """Parse ``name value`` lines; ``#`` starts a comment."""
    refs: dict[str, float] = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(f"{path}:{lineno}: expected 'name value'")
        refs[parts[0]] = float(parts[1])
    return refs


def instance_key(path: str) -> str:
    base = os.path.basename(path)
    for suffix in (".gz", ".mps", ".MPS", ".free"):
        if base.endswith(suffix):
            base = base[: -len(suffix)]
    return base


@dataclass
class Manifest:
    instances: list[str]
    seeds: list[int]
    algorithm: str = "afp"
    stages: int = 2
    config: dict[str, Any] = field(default_factory=dict)
    references: str | None = None
    workers: int | None = None

    def __post_init__(self) -> None:
        if self.algorithm not in ("afp", "fp"):
            raise ValueError(f"algorithm must be 'afp' or 'fp', not {self.algorithm!r}")
        if self.stages not in (1, 2):
            raise ValueError("stages must be 1 or 2")
        if not self.seeds:
            raise ValueError("at least one seed is required")

    @classmethod
    def load(cls, path: str | os.PathLike) -> Manifest:
        data = json.loads(Path(path).read_text())
        base = Path(path).parent
        insts = []
        for pattern in data.pop("instances"):
            pattern = str(base / pattern) if not os.path.isabs(pattern) else pattern
            insts.extend(sorted(glob.glob(pattern)) or [pattern])
        refs = data.pop("references", None)
        if refs is not None and not os.path.isabs(refs):
            refs = str(base / refs)
        return cls(instances=insts, references=refs, **data)

    def solver_config(self) -> SolverConfig:
        return build_config(self.config)


def build_config(options: dict[str, Any]) -> SolverConfig:
    opts = dict(options)
    if "quality_norm" in opts:
        opts["quality_norm"] = QualityNorm(opts["quality_norm"])
    if "moves" in opts:
        opts["moves"] = tuple(MoveKind(m) for m in opts["moves"])
    return SolverConfig(**opts)


def solve(inst: MipInstance, cfg: SolverConfig, seed: int, algorithm: str, stages: int) -> SolveReport:
    rng = np.random.default_rng(seed)
    if stages == 2:
        return twostage_solve(inst, cfg, rng, algorithm=algorithm)
    if algorithm == "afp":
        return afp_solve(inst, cfg, rng)
    return fp_solve(inst, cfg, rng)


def _task(args: tuple) -> dict[str, Any]:
    path, seed, algorithm, stages, options = args
    key = instance_key(path)
    row: dict[str, Any] = {"instance": key, "algorithm": algorithm, "stages": stages, "seed": seed}
    t0 = time.perf_counter()
    try:
        inst = read_mps(path)
    except (OSError, ValueError) as exc:
        row.update(status=f"parse error: {exc}", feasible=False, objective=None, iterations=0, runs=0,
                   wall_seconds=0.0, parse_seconds=time.perf_counter() - t0, events=[])
        return row
    parse_seconds = time.perf_counter() - t0
    try:
        rep = solve(inst, build_config(options), seed, algorithm, stages)
    except Exception as exc:  # noqa: BLE001 - one failing solve must not abort the batch
        logger.exception("solve failed on %s seed %d", key, seed)
        row.update(status=f"error: {exc}", feasible=False, objective=None, iterations=0, runs=0,
                   wall_seconds=0.0, parse_seconds=parse_seconds, events=[])
        return row
    objective = None
    if rep.feasible:
        if not is_mip_feasible(inst, rep.best_point):
            raise AssertionError(f"uncertified solution reported on {key}")
        objective = inst.report_objective(inst.evaluate(rep.best_point))
    row.update(status=rep.status, feasible=rep.feasible, objective=objective, iterations=rep.iterations,
               runs=len(rep.runs), wall_seconds=rep.wall_seconds, parse_seconds=parse_seconds,
               maximize=inst.maximize, run_seconds=[r.wall_seconds for r in rep.runs],
               run_feasible=[r.feasible for r in rep.runs], events=rep.events)
    return row


def default_workers() -> int:
    raw = os.environ.get(WORKERS_ENV)
    if raw:
        return max(1, int(raw))
    return 1


def _fmt(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _csv(rows: list[dict[str, Any]], fields: list[str]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(fields)
    for r in rows:
        w.writerow([_fmt(r.get(f)) for f in fields])
    return buf.getvalue()


def aggregate(rows: list[dict[str, Any]], references: dict[str, float]) -> tuple[list[dict], list[dict]]:
    """Per-instance metrics (deterministic) and timings (wall-clock) from per-seed rows."""
    by_inst: dict[str, list[dict]] = {}
    for r in rows:
        by_inst.setdefault(r["instance"], []).append(r)
    metrics, timing = [], []
    for name in sorted(by_inst):
        group = sorted(by_inst[name], key=lambda r: r["seed"])
        first = group[0]
        feas = [r for r in group if r["feasible"]]
        best = None
        if feas:
            maximize = first.get("maximize", False)
            pick = max if maximize else min
            best = pick(r["objective"] for r in feas)
        ref = references.get(name)
        gap = None
        if best is not None and ref is not None:
            # the gap is taken in minimization sense so that positive always means worse
            sign = -1.0 if first.get("maximize", False) else 1.0
            gap = compute_gap(sign * best, sign * ref)
        statuses = sorted({r["status"] for r in group})
        metrics.append({
            "schema": SCHEMA_VERSION, "instance": name, "algorithm": first["algorithm"],
            "stages": first["stages"], "seeds": len(group), "successes": len(feas),
            "success": success_ratio(r["feasible"] for r in group), "best_objective": best,
            "reference": ref, "gap": gap,
            "mean_iterations": float(np.mean([r["iterations"] for r in group])),
            "status": ";".join(statuses),
        })
        all_runs = [t for r in group for t in r.get("run_seconds", [])]
        ok_runs = [t for r in group for t, f in zip(r.get("run_seconds", []), r.get("run_feasible", [])) if f]
        timing.append({
            "schema": SCHEMA_VERSION, "instance": name, "algorithm": first["algorithm"],
            "stages": first["stages"], "seeds": len(group),
            "time_all_runs": float(np.mean(all_runs)) if all_runs else None,
            "time_successful_runs": float(np.mean(ok_runs)) if ok_runs else None,
            "parse_seconds": float(np.mean([r["parse_seconds"] for r in group])),
        })
    return metrics, timing


def run_experiment(manifest: Manifest, out_dir: str | os.PathLike, workers: int | None = None) -> int:
    """Execute the manifest and write the report files; returns a process exit code.

    The code is 0 when every instance was executed, whether or not it was solved.
    """
    out = Path(out_dir)
    (out / "events").mkdir(parents=True, exist_ok=True)
    refs = read_references(manifest.references) if manifest.references else {}
    options = dict(manifest.config)
    tasks = [(p, s, manifest.algorithm, manifest.stages, options)
             for p in manifest.instances for s in manifest.seeds]
    n_workers = workers or manifest.workers or default_workers()
    if n_workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            rows = list(pool.map(_task, tasks))
    else:
        rows = [_task(t) for t in tasks]
    rows.sort(key=lambda r: (r["instance"], r["seed"]))

    for r in rows:
        with open(out / "events" / f"{r['instance']}__seed{r['seed']}.jsonl", "w") as fh:
            write_events(r["events"], fh)
    metrics, timing = aggregate(rows, refs)
    for r in rows:
        r["schema"] = SCHEMA_VERSION
    (out / "runs.csv").write_text(_csv(rows, RUN_FIELDS))
    (out / "metrics.csv").write_text(_csv(metrics, METRIC_FIELDS))
    (out / "timing.csv").write_text(_csv(timing, TIMING_FIELDS))
    summary = {
        "schema": SCHEMA_VERSION,
        "manifest": asdict(manifest),
        "metrics": metrics,
        "timing": timing,
        "runs": [{k: v for k, v in r.items() if k != "events"} for r in rows],
    }
    (out / "results.json").write_text(json.dumps(summary, indent=2, sort_keys=True, default=_json_default))
    failed = [r for r in rows if r["status"].startswith(("parse error", "error"))]
    return 1 if failed else 0


def _json_default(value: Any) -> Any:
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, np.bool_):
        return bool(value)
    raise TypeError(f"not serializable: {type(value).__name__}")


def read_metrics(path: str | os.PathLike) -> list[dict[str, str]]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def compare_gaps(a: list[dict[str, str]], b: list[dict[str, str]], classes: dict[str, str] | None = None,
                 tol: float = 1e-9) -> dict[str, dict[str, int]]:
    """Count, per class, the instances where each side has the strictly lower gap.

    An instance with no gap on one side counts for the other side when that
    side has one; instances missing on both are ignored.
    """
    gaps_a = {r["instance"]: (float(r["gap"]) if r["gap"] else None) for r in a}
    gaps_b = {r["instance"]: (float(r["gap"]) if r["gap"] else None) for r in b}
    classes = classes or {}
    counts: dict[str, dict[str, int]] = {}
    for name in sorted(set(gaps_a) & set(gaps_b)):
        cls = classes.get(name, "all")
        c = counts.setdefault(cls, {"a": 0, "b": 0, "ties": 0})
        ga, gb = gaps_a[name], gaps_b[name]
        if ga is None and gb is None:
            continue
        if gb is None or (ga is not None and ga < gb - tol):
            c["a"] += 1
        elif ga is None or gb < ga - tol:
            c["b"] += 1
        else:
            c["ties"] += 1
    return counts
