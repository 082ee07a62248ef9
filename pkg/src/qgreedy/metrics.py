"""Approximation-ratio computation and ensemble aggregation."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .baselines import sk_cmin_proxy


def ratio_exact(c_star: float, c_min: float, c_max: float) -> float:
    """(c_max - c_star) / (c_max - c_min): 1 at the optimum, 0 at the worst.

    Values outside [c_min, c_max] clip to the nearest bound; a degenerate
    spectrum (c_min == c_max) has no meaningful ratio and raises.
    """
    if c_min > c_max:
        raise ValueError("c_min exceeds c_max")
    if c_min == c_max:
        raise ValueError("degenerate spectrum: c_min == c_max")
    c = min(max(c_star, c_min), c_max)
    return (c_max - c) / (c_max - c_min)


def ratio_proxy_sk(c_star: float, n: int) -> float:
    """Ensemble proxy (1/2)(1 + c_star / C_min(n)) with the closed-form
    optimum estimate for fully connected +-1 instances; may exceed [0, 1]
    for lucky finite instances (reported raw, flagged when clipped)."""
    return 0.5 * (1.0 + c_star / sk_cmin_proxy(n))


@dataclass(frozen=True)
class RatioEstimate:
    value: float
    mode: str  # "exact" or "proxy"
    n: int
    c_star: float
    clipped: bool


def estimate_ratio(c_star: float, n: int, extrema: tuple[float, float] | None = None,
                   family: str = "sk") -> RatioEstimate:
    """Ratio from exact extrema when available, else from the family proxy.

    Proxy families: "sk" uses the closed-form optimum estimate with
    C_max = -C_min; "ring" uses the trivial bound C_min = -C_max = -n.
    Proxy values are reported raw; the flag marks excursions past [0, 1].
    """
    if extrema is not None:
        c_min, c_max = extrema
        raw = (c_max - c_star) / (c_max - c_min)
        clipped = not 0.0 <= raw <= 1.0
        return RatioEstimate(ratio_exact(c_star, c_min, c_max), "exact", n,
                             c_star, clipped)
    if family == "sk":
        raw = ratio_proxy_sk(c_star, n)
    elif family == "ring":
        raw = 0.5 * (1.0 + c_star / (-float(n)))
    else:
        raise ValueError(f"no ratio proxy for family {family!r}")
    return RatioEstimate(raw, "proxy", n, c_star, not 0.0 <= raw <= 1.0)


@dataclass(frozen=True)
class AggregateRow:
    method: str
    n: int
    mean_r: float
    std_r: float
    stderr_r: float
    count: int
    mode: str


def aggregate(runs: list[dict]) -> list[AggregateRow]:
    """Group per-run records by (method, n) and reduce to mean / sample std /
    standard error; rows come out sorted by (method, n).

    Each run is a mapping with at least ``method``, ``n``, ``r`` and ``mode``;
    runs with r = None are counted but excluded from the moments.
    """
    groups: dict[tuple[str, int], list[dict]] = {}
    for run in runs:
        groups.setdefault((str(run["method"]), int(run["n"])), []).append(run)
    rows = []
    for (method, n), items in sorted(groups.items()):
        vals = np.array([r["r"] for r in items if r.get("r") is not None],
                        dtype=float)
        modes = sorted({str(r.get("mode", "none")) for r in items})
        if vals.size == 0:
            rows.append(AggregateRow(method, n, math.nan, math.nan, math.nan,
                                     len(items), "+".join(modes)))
            continue
        mean = float(np.mean(vals))
        std = float(np.std(vals, ddof=1)) if vals.size > 1 else 0.0
        stderr = std / math.sqrt(vals.size) if vals.size > 1 else 0.0
        rows.append(AggregateRow(method, n, mean, std, stderr, len(items),
                                 "+".join(modes)))
    return rows


def format_float(x: float) -> str:
    return f"{x:.10g}"


def write_aggregate_csv(rows: list[AggregateRow], path) -> None:
    with open(path, "w") as fh:
        fh.write("method,n,mean_r,std_r,stderr_r,count,mode\n")
        for r in rows:
            fh.write(f"{r.method},{r.n},{format_float(r.mean_r)},"
                     f"{format_float(r.std_r)},{format_float(r.stderr_r)},"
                     f"{r.count},{r.mode}\n")


def write_runs_json(runs: list[dict], path) -> None:
    with open(path, "w") as fh:
        json.dump({"runs": runs}, fh, indent=1)
        fh.write("\n")
