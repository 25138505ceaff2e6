"""Run directories: snapshot CSVs, invariants, the per-step log and metadata."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .grid import (Grid, InitialDatum, norm, read_field_csv, spectral_derivative,
                   write_field_csv)
from .estimates import cumulative_integral, snapshot_indices
from .params import KSParams
from .solver import LOG_COLUMNS, Trajectory

INVARIANT_COLUMNS = ("t", "mass", "E", "dissipation_integral", "linf")
RUN_FILE = "run.json"
INDEX_FILE = "snapshots.csv"
INVARIANTS_FILE = "invariants.csv"
STEPLOG_FILE = "steplog.csv"


def write_csv(path, columns, rows) -> None:
    """Numbers are written with 17 significant digits so rereads are exact."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


def read_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def invariants_table(traj: Trajectory) -> np.ndarray:
    """Rows ``t, mass, E, dissipation_integral, linf`` at each snapshot."""
    p = traj.params
    if "energy" in traj.log:
        idx = snapshot_indices(traj)
        diss = cumulative_integral(traj, "dissipation_rate")[idx]
        return np.column_stack([
            traj.times, traj.log["mass"][idx], traj.log["energy"][idx], diss,
            traj.log["linf"][idx],
        ])
    # reference runs keep no dense log
    h = traj.grid.spacing
    rows = []
    for t, f in traj.snapshots:
        u = f.values
        grad = norm(spectral_derivative(f, 1), "L2") if p.beta > 0 else 0.0
        rows.append((t, h * u.sum(), h * np.dot(u, u) + p.beta * grad**2, 0.0, np.abs(u).max()))
    return np.array(rows)


def save_run(traj: Trajectory, out_dir, extra: dict | None = None) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    index = []
    for i, (t, f) in enumerate(traj.snapshots):
        name = f"snapshot_{i:04d}.csv"
        write_field_csv(out / name, f)
        index.append((i, t, name))
    write_csv(out / INDEX_FILE, ("index", "t", "file"), index)
    write_csv(out / INVARIANTS_FILE, INVARIANT_COLUMNS, invariants_table(traj))
    if all(c in traj.log for c in LOG_COLUMNS):
        write_csv(out / STEPLOG_FILE, LOG_COLUMNS,
                  np.column_stack([traj.log[c] for c in LOG_COLUMNS]))
    meta = dict(
        params=traj.params.as_dict(),
        grid=dict(half_length=traj.grid.half_length, n_points=traj.grid.n_points),
        datum=traj.datum.describe() if traj.datum is not None else None,
        step_count=traj.step_count,
        failure=traj.failure,
    )
    if extra:
        meta.update(extra)
    (out / RUN_FILE).write_text(json.dumps(meta, indent=2, default=_json_default) + "\n")
    return out


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, (tuple, np.ndarray)):
        return list(o)
    raise TypeError(f"cannot serialize {type(o).__name__}")


def _datum_from_meta(d: dict | None) -> InitialDatum | None:
    if not d or d.get("kind") in (None, "custom"):
        return None
    d = dict(d)
    kind = d.pop("kind")
    w = d.pop("mollification_width", None)
    if kind == "zero":
        return InitialDatum.zero(w)
    return getattr(InitialDatum, kind)(**d, mollification_width=w)


def load_run(run_dir) -> Trajectory:
    """Rebuild the trajectory stored by :func:`save_run`."""
    src = Path(run_dir)
    meta_path = src / RUN_FILE
    if not meta_path.is_file():
        raise FileNotFoundError(f"{src} is not a run directory (no {RUN_FILE})")
    meta = json.loads(meta_path.read_text())
    pr = meta["params"]
    params = KSParams(pr["a"], pr["b"], pr["c"], pr["d"], pr["beta"], pr["eps"])
    grid = Grid(float(meta["grid"]["half_length"]), int(meta["grid"]["n_points"]))
    traj = Trajectory(params=params, grid=grid, datum=_datum_from_meta(meta.get("datum")),
                      step_count=int(meta.get("step_count", 0)), failure=meta.get("failure"))
    for row in read_csv(src / INDEX_FILE):
        traj.snapshots.append((float(row["t"]), read_field_csv(src / row["file"], grid)))
    steplog = src / STEPLOG_FILE
    if steplog.is_file():
        data = np.loadtxt(steplog, delimiter=",", skiprows=1, ndmin=2)
        traj.log = {c: data[:, i].copy() for i, c in enumerate(LOG_COLUMNS)}
    return traj
