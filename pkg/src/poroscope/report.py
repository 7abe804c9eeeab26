"""Combined porosity / dimension / bound tables and report envelopes."""

from __future__ import annotations

import csv
import io
import json
import math

from . import __version__
from .dimension import minkowski_dim, safe_bound
from .errors import InputError
from .geometry import Subspace
from .porosity import grid_slack, porosity_ladder, set_porosity

TABLE_COLUMNS = [
    "label", "n", "k", "por_k", "por_slack", "dim", "dim_stderr",
    "dim_depths", "bound_full", "bound_directed", "seed",
]


def half_window(depth: int) -> range:
    """Deepest half of the available depths, never fewer than four."""
    w = max(4, math.ceil(depth / 2))
    return range(max(1, depth - w + 1), depth + 1)


def porosity_dimension_table(
    family,
    sample_count: int = 16,
    ladder_count: int = 4,
    frame_budget: int = 64,
    refine_steps: int = 32,
    seed: int = 0,
    threads: int = 1,
):
    """One row per (label, raster, k[, directed axes]) combining porosity, dimension and bounds.

    Entries of ``family`` are (label, S, k) or (label, S, k, axes); with axes
    the porosity is directed along span(e_i : i in axes) and bound_directed is
    filled in with m = len(axes).
    Returns (header, rows) with rows as dicts.
    """
    family = list(family)
    if not family:
        raise InputError("porosity_dimension_table needs a nonempty family")
    rows = []
    for entry in family:
        label, S, k = entry[:3]
        axes = entry[3] if len(entry) > 3 else None
        ladder = porosity_ladder(S.depth, ladder_count)
        V = Subspace.axes(S.n, axes) if axes else None
        rho, _ = set_porosity(S, k, sample_count, ladder, frame_budget, refine_steps, seed, threads, V=V)
        slack = grid_slack(S.n, S.depth, ladder[-1])
        est = minkowski_dim(S, half_window(S.depth))
        rho_lo = rho - slack
        rows.append({
            "label": label,
            "n": S.n,
            "k": k,
            "por_k": rho,
            "por_slack": slack,
            "dim": est.value,
            "dim_stderr": est.stderr,
            "dim_depths": f"{est.depths[0]}-{est.depths[-1]}",
            "bound_full": safe_bound(S.n, rho_lo),
            "bound_directed": safe_bound(S.n, rho_lo, len(axes)) if axes else "",
            "seed": seed,
        })
    return TABLE_COLUMNS, rows


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.10g}"
    return v


def to_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        vals = [r[h] for h in header] if isinstance(r, dict) else r
        w.writerow([_fmt(v) for v in vals])
    return buf.getvalue()


def envelope(command: str, config: dict, seed: int, result) -> dict:
    return {"tool_version": __version__, "command": command, "config_echo": config, "seed": seed, "result": result}


def to_json(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True, default=_json_default) + "\n"


def _json_default(o):
    import numpy as np

    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serializable: {type(o).__name__}")
