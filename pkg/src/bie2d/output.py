"""Persisted solutions, CSV tables and JSON reports."""
from __future__ import annotations

import csv
import json
from dataclasses import asdict, fields, is_dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .config import ProblemConfig
from .discretization import InterfaceGrid, make_paneled_grid, make_uniform_grid
from .evaluation import FieldSamples
from .operators import SystemContext
from .solver import DensitySolution, GMRESResult
from .summation import Backend

DENSITY_COLUMNS = ("interface", "node", "q", "x", "y", "phi", "gamma")
FIELD_COLUMNS = ("x", "y", "u", "method", "dist")


def grid_from_description(curve, desc: dict) -> InterfaceGrid:
    if desc["scheme"] == "uniform":
        return make_uniform_grid(curve, int(desc["M"]), float(desc["shift"]))
    return make_paneled_grid(curve, np.asarray(desc["breaks"][:-1]), np.asarray(desc["orders"], dtype=int))


def save_solution(path, config: ProblemConfig, sol: DensitySolution) -> None:
    """Store the config, the grids and the unknown vector; everything else is rebuilt on load."""
    meta = {
        "config": config.to_dict(),
        "grids": [g.describe() for g in sol.grids],
        "rescale": bool(sol.ctx.rescale),
        "iterations": sol.gmres.iterations,
        "converged": bool(sol.gmres.converged),
        "resolved": [bool(r) for r in sol.resolved],
        "charges_ok": bool(sol.charges_ok),
    }
    np.savez(Path(path), meta=np.array(json.dumps(meta)), x=sol.x, gamma=sol.gamma, rhs=sol.rhs,
             residuals=np.asarray(sol.gmres.residuals), charges=sol.charges)


def load_solution(path, backend: Backend | None = None) -> tuple[ProblemConfig, DensitySolution]:
    with np.load(Path(path)) as data:
        meta = json.loads(str(data["meta"]))
        arrays = {k: data[k] for k in ("x", "gamma", "rhs", "residuals", "charges")}
    config = ProblemConfig.from_dict(meta["config"])
    tree = config.build_tree()
    grids = tuple(grid_from_description(c, d) for c, d in zip(tree.curves, meta["grids"]))
    ctx = SystemContext(tree, grids, meta["rescale"], backend or config.backend)
    res = GMRESResult(arrays["x"], meta["iterations"], list(arrays["residuals"]), meta["converged"])
    sol = DensitySolution(ctx, arrays["x"], arrays["gamma"], arrays["rhs"], res, [], meta["resolved"],
                          arrays["charges"], meta["charges_ok"])
    return config, sol


def write_densities(path, sol: DensitySolution) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(DENSITY_COLUMNS)
        for i, g in enumerate(sol.grids):
            phi, gamma = sol.phi_on(i), sol.gamma_on(i)
            for m in range(g.size):
                w.writerow([i, m, repr(float(g.q[m])), repr(float(g.points[m, 0])), repr(float(g.points[m, 1])),
                            repr(float(phi[m])), repr(float(gamma[m]))])


def write_field(path, samples: FieldSamples) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(FIELD_COLUMNS)
        for (x, y), u, meth, d in zip(samples.points, samples.u, samples.method, samples.dist):
            w.writerow([repr(float(x)), repr(float(y)), repr(float(u)), meth, repr(float(d))])


def write_rows(path, rows: Sequence) -> None:
    """CSV of a list of dataclass rows; an empty list still gets nothing but a newline."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        if not rows:
            fh.write("\n")
            return
        w.writerow([f.name for f in fields(rows[0])])
        for r in rows:
            w.writerow([_cell(getattr(r, f.name)) for f in fields(r)])


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def _jsonable(obj):
    if is_dataclass(obj):
        return _jsonable(asdict(obj))
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if np.isfinite(v) else None
    return obj


def solution_report(sol: DensitySolution) -> dict:
    return {
        "rounds": [asdict(r) for r in sol.rounds],
        "iterations": sol.gmres.iterations,
        "relative_residual": sol.gmres.relative_residual,
        "gmres_converged": sol.gmres.converged,
        "nodes": [g.size for g in sol.grids],
        "panels": [g.n_panels for g in sol.grids],
        "schemes": [g.scheme for g in sol.grids],
        "tails": [[t.size for t in ts] for ts in sol.tails],
        "resolved": list(sol.resolved),
        "charges": sol.charges,
        "charges_ok": sol.charges_ok,
        "converged": sol.converged,
    }


def write_json(path, payload: dict) -> None:
    Path(path).write_text(json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n")


def rows_to_dicts(rows: Iterable) -> list[dict]:
    return [_jsonable(r) for r in rows]
