"""SVG diagnostics from event logs: distance/quality and fractionality/alpha per iteration."""

from __future__ import annotations

from typing import Any

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def _series(events: list[dict[str, Any]], run: int | None):
    # keep one record per (run, iter): the accepted candidate if any, else the last one
    per_iter: dict[tuple, dict] = {}
    for ev in events:
        if "iter" not in ev or ev.get("move") == "stage":
            continue
        if run is not None and ev.get("run") != run:
            continue
        key = (ev.get("phase", ""), ev["run"], ev["iter"])
        if key not in per_iter or ev.get("accepted"):
            per_iter[key] = ev
    return [per_iter[k] for k in sorted(per_iter, key=lambda k: (k[1], k[2]))]


def plot_events(events: list[dict[str, Any]], out_path: str, run: int | None = None) -> None:
    rows = _series(events, run)
    if not rows:
        raise ValueError("no iteration events to plot")
    x = list(range(1, len(rows) + 1))
    frac = [r["fractionality"] for r in rows]
    quality = [r.get("quality") for r in rows]
    alpha = [r["alpha"] for r in rows]

    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(8, 6), sharex=True)
    ax1.plot(x, frac, color="tab:blue", label="distance")
    ax1.set_ylabel("distance")
    if any(q is not None for q in quality):
        twin = ax1.twinx()
        twin.plot(x, [q if q is not None else float("nan") for q in quality], color="tab:orange", label="quality")
        twin.set_ylabel("quality")
    ax2.plot(x, frac, color="tab:blue", label="fractionality")
    bad = [(i, f) for i, f, r in zip(x, frac, rows) if r.get("accepted") and r.get("delta", 0.0) > 0]
    if bad:
        ax2.scatter(*zip(*bad), marker="x", color="tab:red", label="accepted bad move", zorder=3)
    ax2.set_ylabel("fractionality")
    ax2.set_xlabel("iteration")
    ta = ax2.twinx()
    ta.plot(x, alpha, color="tab:green", linestyle="--", label="alpha")
    ta.set_ylabel("alpha")
    ax2.legend(loc="upper right")
    fig.tight_layout()
    fig.savefig(out_path, format="svg")
    plt.close(fig)
