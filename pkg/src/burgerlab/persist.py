"""On-disk formats: field CSVs, trajectory manifests, cell solutions, scans, reports.

Every float is written with 17 significant digits so that a rerun of the same
configuration reproduces the files byte for byte.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .analysis import ConvergenceReport
from .cell import Branch, CellSolution
from .forcing import ForcingSpec
from .resonance import Classification, ResonanceScan
from .solver import Diagnostics, Trajectory
from .torus import TorusField, read_field_csv, write_field_csv

DIAGNOSTICS_HEADER = ["t", "mean", "l2_energy", "power_input", "shock_indicator"]
SCAN_HEADER = ["omega", "avg_power", "classification", "slope"]
CONVERGENCE_HEADER = ["t", "d_l1", "d_l2", "shocked"]


def fmt(x: float) -> str:
    return f"{float(x):.17g}"


def json_float(x: float):
    """JSON-safe float: non-finite values become strings."""
    x = float(x)
    if math.isfinite(x):
        return x
    return "inf" if x > 0 else ("-inf" if x < 0 else "nan")


def parse_json_float(v) -> float:
    return float(v)


def write_json(obj, path: str | Path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def write_rows(path: str | Path, header: list[str], rows) -> Path:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])
    return path


def read_rows(path: str | Path, header: list[str]) -> list[list[str]]:
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != header:
        raise ValueError(f"{path}: expected header {','.join(header)}")
    return [r for r in rows[1:] if r]


def forcing_echo(spec: ForcingSpec) -> dict:
    if spec.kind == "cosine_squared":
        return {"kind": "cosine_squared", "kappa0": spec.kappa0, "omega": json_float(spec.omega)}
    return {"kind": "tabulated", "n": spec.tabulated.table.grid.n,
            "omega": json_float(spec.omega)}


# -- trajectories -------------------------------------------------------------

def write_trajectory(traj: Trajectory, directory: str | Path, echo: dict | None = None
                     ) -> list[Path]:
    """Manifest ``trajectory.json``, one field CSV per snapshot and ``diagnostics.csv``."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    written = []
    names = []
    for i, snap in enumerate(traj.snapshots):
        name = f"snapshot_{i:05d}.csv"
        write_field_csv(snap, d / name)
        names.append(name)
        written.append(d / name)
    diag = traj.diagnostics
    written.append(write_rows(d / "diagnostics.csv", DIAGNOSTICS_HEADER,
                              zip(diag.times, diag.mean, diag.l2_energy, diag.power_input,
                                  diag.shock_indicator)))
    cfg = traj.config
    config_echo = dict(echo or {})
    if cfg is not None:
        config_echo.update({"n": cfg.grid.n, "cfl": cfg.cfl, "t_end": cfg.t_end,
                            "record_every": cfg.record_every,
                            "forcing": forcing_echo(cfg.forcing)})
    manifest = {
        "kind": "trajectory",
        "config": config_echo,
        "times": [float(t) for t in traj.times],
        "snapshots": names,
        "diagnostics": "diagnostics.csv",
        "steps": int(traj.steps),
    }
    written.append(write_json(manifest, d / "trajectory.json"))
    return written


def read_trajectory(directory: str | Path) -> Trajectory:
    d = Path(directory)
    manifest = json.loads((d / "trajectory.json").read_text(encoding="utf-8"))
    snaps = [read_field_csv(d / name) for name in manifest["snapshots"]]
    rows = np.array([[float(v) for v in r]
                     for r in read_rows(d / manifest["diagnostics"], DIAGNOSTICS_HEADER)])
    rows = rows.reshape(-1, len(DIAGNOSTICS_HEADER))
    diag = Diagnostics(rows[:, 0], rows[:, 1], rows[:, 2], rows[:, 3], rows[:, 4],
                       np.full(len(rows), np.nan))
    return Trajectory(np.array(manifest["times"]), snaps, diag, steps=manifest["steps"])


# -- cell solutions -----------------------------------------------------------

def write_cell_solution(sol: CellSolution, directory: str | Path, stem: str = "cell"
                        ) -> list[Path]:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    phi, ubar = d / f"{stem}_phi.csv", d / f"{stem}_ubar.csv"
    write_field_csv(sol.phi, phi)
    write_field_csv(sol.ubar, ubar)
    meta = {
        "kind": "cell_solution",
        "p": sol.p,
        "lambda": sol.lam,
        "branch": sol.branch.value,
        "x0": sol.x0,
        "xbar": sol.xbar,
        "forcing": forcing_echo(sol.spec),
        "phi": phi.name,
        "ubar": ubar.name,
    }
    return [phi, ubar, write_json(meta, d / f"{stem}.json")]


def read_cell_solution(path: str | Path, spec: ForcingSpec) -> CellSolution:
    path = Path(path)
    meta = json.loads(path.read_text(encoding="utf-8"))
    phi = read_field_csv(path.parent / meta["phi"])
    ubar = read_field_csv(path.parent / meta["ubar"])
    return CellSolution(spec, float(meta["p"]), float(meta["lambda"]), Branch(meta["branch"]),
                        float(meta["x0"]), None if meta["xbar"] is None else float(meta["xbar"]),
                        phi, ubar)


# -- scans and reports --------------------------------------------------------

def write_scan(scan: ResonanceScan, path: str | Path) -> Path:
    return write_rows(path, SCAN_HEADER,
                      ([float(w), float(pw), c.value, float(s)]
                       for w, pw, c, s in zip(scan.omegas, scan.avg_power, scan.classification,
                                              scan.slopes)))


def read_scan(path: str | Path) -> list[tuple[float, float, Classification, float]]:
    return [(float(r[0]), float(r[1]), Classification(r[2]), float(r[3]))
            for r in read_rows(path, SCAN_HEADER)]


def write_convergence(report: ConvergenceReport, csv_path: str | Path,
                      json_path: str | Path) -> list[Path]:
    rows = ([float(t), float(a), float(b), int(bool(s))]
            for t, a, b, s in zip(report.times, report.distances_l1, report.distances_l2,
                                  report.shocked))
    return [
        write_rows(csv_path, CONVERGENCE_HEADER, rows),
        write_json({"argmin_index": int(report.argmin_index),
                    "shock_time_estimate": json_float(report.shock_time_estimate)}, json_path),
    ]


def read_convergence(csv_path: str | Path, json_path: str | Path) -> ConvergenceReport:
    rows = np.array([[float(v) for v in r] for r in read_rows(csv_path, CONVERGENCE_HEADER)])
    meta = json.loads(Path(json_path).read_text(encoding="utf-8"))
    return ConvergenceReport(rows[:, 0], rows[:, 1], rows[:, 2], int(meta["argmin_index"]),
                             parse_json_float(meta["shock_time_estimate"]),
                             rows[:, 3].astype(bool))


def write_field(field: TorusField, path: str | Path) -> Path:
    write_field_csv(field, path)
    return Path(path)
