"""Named experiments, run records, the rescale-equivalence test and plot data.

Each experiment writes into its own output directory and returns a
``RunRecord`` whose manifest lists every file written there (relative
paths). Nothing in the pipeline is random: rerunning a configuration
reproduces all CSV files byte for byte.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import persist
from .analysis import (
    BELOW_NOISE,
    decay_exponent,
    distance_to_set,
    spectrum_dynamics,
    track_convergence,
)
from .cell import (
    CellProblemError,
    WaveSolutionSpec,
    build_corrector,
    check_entropy_jumps,
    critical_momentum,
    effective_hamiltonian,
    enumerate_stationary,
    stationary_residual,
    wave_convergence,
)
from .config import ConfigError, ExperimentConfig, serialize
from .forcing import ForcingError, ForcingSpec
from .quadrature import QuadratureError
from .resonance import Classification, resonance_scan
from .solver import SolverConfig, SolverError, evolve, reconstruct_potential, sandwich_bound
from .torus import (
    TWO_PI,
    TorusField,
    TorusGrid,
    dft_magnitudes,
    parseval_defect,
    read_field_csv,
    sine_field,
)

RECORD_NAME = "run_record.json"


class ExperimentError(RuntimeError):
    """Numerical failure inside an experiment, with the experiment named."""


@dataclass
class RunRecord:
    experiment: str
    config_text: str
    out_dir: str
    started: str
    finished: str
    manifest: list[str] = field(default_factory=list)
    metrics: dict = field(default_factory=dict)

    def path(self, name: str) -> Path:
        return Path(self.out_dir) / name

    def to_json(self) -> dict:
        return {
            "experiment": self.experiment,
            "config": self.config_text,
            "started": self.started,
            "finished": self.finished,
            "manifest": self.manifest,
            "metrics": self.metrics,
        }

    def save(self) -> Path:
        return persist.write_json(self.to_json(), self.path(RECORD_NAME))

    @classmethod
    def load(cls, out_dir: str | Path) -> RunRecord:
        d = json.loads((Path(out_dir) / RECORD_NAME).read_text(encoding="utf-8"))
        return cls(d["experiment"], d["config"], str(out_dir), d["started"], d["finished"],
                   d["manifest"], d["metrics"])

    def missing_files(self) -> list[str]:
        return [name for name in self.manifest if not self.path(name).is_file()]


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


# -- building blocks ------------------------------------------------------------

def build_forcing(cfg: ExperimentConfig, omega: float | None = None) -> ForcingSpec:
    omega = cfg.omega if omega is None else omega
    if cfg.forcing_kind == "cosine_squared":
        return ForcingSpec.cosine_squared(cfg.kappa0, omega)
    return ForcingSpec.from_csv(cfg.resolve(cfg.table), omega)


def initial_field(cfg: ExperimentConfig, grid: TorusGrid, spec: ForcingSpec) -> TorusField:
    """Initial data with mean ``cfg.p``."""
    if cfg.u0_kind == "sine":
        return sine_field(grid, 1, cfg.amplitude, cfg.p)
    if cfg.u0_kind == "constant":
        return TorusField.constant(grid, cfg.p)
    if cfg.u0_kind == "stationary":
        sols = enumerate_stationary(spec.with_omega(0.0), cfg.p, grid)
        if cfg.index >= len(sols):
            raise ConfigError(f"[initial] index: {cfg.index} out of range, "
                              f"{len(sols)} stationary solutions at p = {cfg.p}")
        return sols[cfg.index].ubar
    fld = read_field_csv(cfg.resolve(cfg.u0_path))
    if fld.grid != grid:
        raise ConfigError(f"[initial] path: {cfg.u0_path} has {fld.grid.n} cells, "
                          f"grid has {grid.n}")
    if abs(float(np.mean(fld.values)) - cfg.p) > 1e-8:
        raise ConfigError(f"[initial] path: mean of {cfg.u0_path} is "
                          f"{np.mean(fld.values):.12g}, not p = {cfg.p}")
    return fld


def _solver_config(cfg: ExperimentConfig, grid: TorusGrid, spec: ForcingSpec,
                   t_end: float | None = None, record_every: float | None = None
                   ) -> SolverConfig:
    return SolverConfig(grid, spec, cfl=cfg.cfl, t_end=t_end or cfg.t_end,
                        record_every=record_every or cfg.record_every)


def _spectrum_rows(fld: TorusField):
    rep = dft_magnitudes(fld)
    return zip(rep.wavenumbers.tolist(), rep.magnitudes.astype(float))


class _Outputs:
    """Tracks files written under one run directory."""

    def __init__(self, root: Path) -> None:
        self.root = root
        self.files: list[str] = []
        root.mkdir(parents=True, exist_ok=True)

    def add(self, paths) -> None:
        if isinstance(paths, (str, Path)):
            paths = [paths]
        for p in paths:
            rel = Path(p).resolve().relative_to(self.root.resolve()).as_posix()
            if rel not in self.files:
                self.files.append(rel)

    def __truediv__(self, name: str) -> Path:
        return self.root / name


# -- experiments ----------------------------------------------------------------

def _run_evolve(cfg: ExperimentConfig, out: _Outputs, workers: int) -> dict:
    grid = TorusGrid(cfg.grid_n)
    spec = build_forcing(cfg)
    u0 = initial_field(cfg, grid, spec)
    traj = evolve(_solver_config(cfg, grid, spec), u0)
    out.add(persist.write_trajectory(traj, out / "trajectory"))
    diag = traj.diagnostics
    metrics = {
        "steps": traj.steps,
        "mean_drift": float(np.max(np.abs(diag.mean - diag.mean[0]))),
        "avg_power": diag.average_power(0.5 * cfg.t_end, cfg.t_end),
    }
    if spec.steady:
        cands = enumerate_stationary(spec, cfg.p, grid)
        for i, sol in enumerate(cands):
            out.add(persist.write_cell_solution(sol, out / "stationary", f"candidate_{i}"))
        rep = track_convergence(traj, cands, cfg.shock_fraction)
        out.add(persist.write_convergence(rep, out / "convergence.csv", out / "convergence.json"))
        metrics.update({
            "final_d_l1": float(rep.distances_l1[-1]),
            "final_d_l2": float(rep.distances_l2[-1]),
            "argmin_index": rep.argmin_index,
            "shock_time_estimate": persist.json_float(rep.shock_time_estimate),
        })
    return metrics


def _run_stationary(cfg: ExperimentConfig, out: _Outputs, workers: int) -> dict:
    grid = TorusGrid(cfg.grid_n)
    spec = build_forcing(cfg, omega=0.0)
    p_cr = critical_momentum(spec)
    sols = enumerate_stationary(spec, cfg.p, grid)
    rows = []
    for i, sol in enumerate(sols):
        out.add(persist.write_cell_solution(sol, out.root, f"solution_{i}"))
        rep = check_entropy_jumps(sol)
        rows.append({
            "index": i,
            "branch": sol.branch.value,
            "lambda": sol.lam,
            "x0": sol.x0,
            "xbar": sol.xbar,
            "residual": stationary_residual(sol),
            "jumps": [[j.location, j.size] for j in rep.jumps],
            "admissible": rep.admissible,
        })
    return {"p": cfg.p, "p_cr": p_cr, "solutions": rows}


def _run_hbar(cfg: ExperimentConfig, out: _Outputs, workers: int) -> dict:
    spec = build_forcing(cfg, omega=0.0)
    p_cr = critical_momentum(spec)
    ps = np.array(cfg.scan.values)
    hs = np.array([effective_hamiltonian(spec, p, p_cr=p_cr) for p in ps])
    out.add(persist.write_rows(out / "hbar.csv", ["p", "hbar"], zip(ps.astype(float),
                                                                     hs.astype(float))))
    inside = np.abs(ps) <= p_cr
    mirror = {float(p): h for p, h in zip(ps, hs)}
    even = [abs(h - mirror[-float(p)]) for p, h in zip(ps, hs) if -float(p) in mirror]
    return {
        "p_cr": p_cr,
        "max_hbar_in_window": float(np.max(np.abs(hs[inside]))) if inside.any() else 0.0,
        "evenness_defect": float(max(even)) if even else 0.0,
        "points": len(ps),
    }


def _run_spectrum(cfg: ExperimentConfig, out: _Outputs, workers: int) -> dict:
    grid = TorusGrid(cfg.grid_n)
    spec = build_forcing(cfg)
    steady = spec.with_omega(0.0)
    sol = build_corrector(steady, cfg.p, None, grid)
    out.add(persist.write_rows(out / "spectrum_ubar.csv", ["k", "magnitude"],
                               _spectrum_rows(sol.ubar)))
    out.add(persist.write_rows(out / "spectrum_phi.csv", ["k", "magnitude"],
                               _spectrum_rows(sol.phi)))
    u0 = initial_field(cfg, grid, spec)
    traj = evolve(_solver_config(cfg, grid, spec), u0)
    dyn = spectrum_dynamics(traj, cfg.kmin, cfg.kmax, cfg.shock_fraction)
    out.add(persist.write_rows(
        out / "spectrum_dynamics.csv", ["t", "slope", "below_noise"],
        ([t, math.nan if s == BELOW_NOISE else float(s), int(s == BELOW_NOISE)]
         for t, s in dyn)))
    out.add(persist.write_rows(out / "spectrum_final.csv", ["k", "magnitude"],
                               _spectrum_rows(traj.final)))
    fitted = [s for _, s in dyn if s != BELOW_NOISE]
    fields = [sol.ubar, sol.phi] + list(traj.snapshots)
    return {
        "slope_ubar": decay_exponent(dft_magnitudes(sol.ubar), cfg.kmin, cfg.kmax),
        "slope_phi": decay_exponent(dft_magnitudes(sol.phi), cfg.kmin, cfg.kmax),
        "slope_min": float(min(fitted)) if fitted else None,
        "slope_max": float(max(fitted)) if fitted else None,
        "below_noise_count": sum(1 for _, s in dyn if s == BELOW_NOISE),
        "max_parseval_defect": max(parseval_defect(f) for f in fields),
    }


def _run_resonance(cfg: ExperimentConfig, out: _Outputs, workers: int) -> dict:
    grid = TorusGrid(cfg.grid_n)
    spec = build_forcing(cfg, omega=0.0)
    u0 = initial_field(cfg, grid, spec)
    kept: list = []
    scan = resonance_scan(spec, cfg.p, cfg.scan.values, u0, t_end=cfg.t_end,
                          t_burn=cfg.t_burn, cfl=cfg.cfl, workers=workers, keep=kept)
    out.add(persist.write_scan(scan, out / "scan.csv"))
    runs = []
    for i, (w, traj) in enumerate(zip(scan.omegas, kept)):
        name = f"trajectories/omega_{i:03d}"
        out.add(persist.write_trajectory(traj, out / name, echo={"omega": float(w)}))
        runs.append({"omega": float(w), "directory": name})
    out.add(persist.write_json({"kind": "resonance_scan", "scan": "scan.csv", "runs": runs},
                               out / "scan.json"))
    res = np.array([c is Classification.RESONANT for c in scan.classification])
    i_p = int(np.argmin(np.abs(scan.omegas - cfg.p)))
    edges = scan.boundaries()
    return {
        "omega_cr": scan.omega_cr,
        "window": list(scan.window),
        "threshold": scan.threshold,
        "boundaries": edges,
        "boundary_offsets": [min(abs(b - scan.window[0]), abs(b - scan.window[1]))
                             for b in edges],
        "plateau_power": float(scan.avg_power[i_p]),
        "plateau_analytic": float(scan.analytic_power[i_p]),
        "max_nonresonant_power": float(np.max(scan.avg_power[~res])) if (~res).any() else 0.0,
    }


def _run_rescale(cfg: ExperimentConfig, out: _Outputs, workers: int) -> dict:
    rows = [(m, rescale_equivalence(cfg, m)) for m in cfg.rescale_m]
    out.add(persist.write_rows(out / "rescale.csv", ["m", "max_discrepancy"],
                               ((m, float(d)) for m, d in rows)))
    control = rescale_negative_control(cfg)
    out.add(persist.write_rows(out / "rescale_control.csv", ["dt", "max_discrepancy"],
                               ((float(dt), float(d)) for dt, d in control)))
    return {
        "discrepancies": {str(m): float(d) for m, d in rows},
        "control": [[float(dt), float(d)] for dt, d in control],
    }


def _run_waveconv(cfg: ExperimentConfig, out: _Outputs, workers: int) -> dict:
    grid = TorusGrid(cfg.grid_n)
    if cfg.wave_mode == "affine":
        rows = epsilon_sweep(cfg)
        out.add(persist.write_rows(out / "waveconv_affine.csv", ["m", "epsilon", "sup_error"],
                                   ((m, 1.0 / m, float(e)) for m, e in rows)))
        return {"errors": {str(m): float(e) for m, e in rows}}
    spec = build_forcing(cfg, omega=0.0)
    u0 = initial_field(cfg, grid, spec)
    traj = evolve(_solver_config(cfg, grid, spec), u0)
    cands = enumerate_stationary(spec, cfg.p, grid)
    _, arg = distance_to_set(traj.final, cands, 1)
    sol = cands[arg]
    d = wave_convergence(reconstruct_potential(traj, cfg.p, spec), sol)
    out.add(persist.write_rows(out / "waveconv.csv", ["t", "d"],
                               zip(traj.times.astype(float), d.astype(float))))
    out.add(persist.write_cell_solution(sol, out.root, "limit"))
    return {"argmin_index": arg, "lambda": sol.lam, "final_d": float(d[-1])}


_DISPATCH = {
    "evolve": _run_evolve,
    "stationary": _run_stationary,
    "hbar": _run_hbar,
    "spectrum": _run_spectrum,
    "resonance": _run_resonance,
    "rescale": _run_rescale,
    "waveconv": _run_waveconv,
}


def run_experiment(cfg: ExperimentConfig, out_dir: str | Path | None = None,
                   workers: int = 1, plot: bool | None = None) -> RunRecord:
    """Run ``cfg.experiment`` into ``out_dir`` (default ``cfg.out_dir``)."""
    root = Path(out_dir if out_dir is not None else cfg.out_dir)
    out = _Outputs(root)
    started = _now()
    (out / "config.ini").write_text(serialize(cfg), encoding="utf-8")
    out.add(out / "config.ini")
    try:
        metrics = _DISPATCH[cfg.experiment](cfg, out, max(1, int(workers)))
    except (SolverError, CellProblemError, QuadratureError, FloatingPointError,
            ForcingError) as exc:
        raise ExperimentError(f"{cfg.experiment}: {exc}") from exc
    record = RunRecord(cfg.experiment, serialize(cfg), str(root), started, _now(),
                       out.files, metrics)
    if cfg.plot if plot is None else plot:
        record.manifest.extend(p.relative_to(root).as_posix() for p in emit_plot_data(record))
    record.save()
    return record


# -- rescaling --------------------------------------------------------------------

def _rescale_pair(base: ExperimentConfig, m: int):
    if base.forcing_kind != "cosine_squared":
        raise ValueError("rescale equivalence needs a cosine-squared forcing")
    if m < 1 or base.grid_n % m:
        raise ValueError(f"m = {m} must be positive and divide n = {base.grid_n}")
    grid_a, grid_b = TorusGrid(base.grid_n), TorusGrid(base.grid_n // m)
    spec_a = ForcingSpec.cosine_squared(m * base.kappa0)
    spec_b = ForcingSpec.cosine_squared(base.kappa0)
    u0_b = initial_field(base, grid_b, spec_b)
    u0_a = TorusField(grid_a, np.tile(u0_b.values, m))
    return grid_a, grid_b, spec_a, spec_b, u0_a, u0_b


def _max_discrepancy(ta, tb, m: int) -> float:
    if len(ta.times) != len(tb.times):
        raise ExperimentError("rescaled runs recorded different numbers of snapshots")
    return max(float(np.max(np.abs(a.values - np.tile(b.values, m))))
               for a, b in zip(ta.snapshots, tb.snapshots))


def rescale_equivalence(base: ExperimentConfig, m: int, t_end: float | None = None,
                        dt_a: float | None = None, dt_b: float | None = None) -> float:
    """Largest difference between the fast-forcing run and the rescaled slow run.

    Run A: ``n`` cells, forcing ``V(m x)`` (whose derivative is ``m f(m x)``),
    data ``u0(m x)``, up to ``t_end``. Run B: ``n / m`` cells, forcing ``V(y)``,
    data ``u0(y)``, up to ``m t_end`` with steps ``m`` times longer. Cell
    ``j`` of A corresponds to cell ``j mod (n / m)`` of B. The time steps are
    adaptive in both runs unless ``dt_a`` / ``dt_b`` fix them.
    """
    t_end = base.t_end if t_end is None else t_end
    grid_a, grid_b, spec_a, spec_b, u0_a, u0_b = _rescale_pair(base, m)
    rec = min(base.record_every, t_end)
    ta = evolve(SolverConfig(grid_a, spec_a, base.cfl, t_end, rec), u0_a, fixed_dt=dt_a)
    tb = evolve(SolverConfig(grid_b, spec_b, base.cfl, m * t_end, m * rec), u0_b,
                fixed_dt=dt_b)
    return _max_discrepancy(ta, tb, m)


def rescale_negative_control(base: ExperimentConfig, m: int = 2, t_end: float = 0.5,
                             levels: int = 3) -> list[tuple[float, float]]:
    """Discrepancy when run B takes steps twice as long as the rescaling requires.

    Fixed steps ``dt_a`` and ``dt_b = 2 m dt_a`` on a pre-shock horizon; the
    discrepancy is then the first-order time error, ``O(dt_a)``. Returns
    ``(dt_a, discrepancy)`` for ``levels`` successive halvings of ``dt_a``.
    """
    grid_a, _, spec_a, _, u0_a, _ = _rescale_pair(base, m)
    bound = sandwich_bound(u0_a, spec_a)
    dt0 = 0.5 * base.cfl * grid_a.dx / bound
    out = []
    for i in range(levels):
        dt = dt0 / 2**i
        d = rescale_equivalence(base, m, t_end=t_end, dt_a=dt, dt_b=2 * m * dt)
        out.append((dt, d))
    return out


def epsilon_sweep(cfg: ExperimentConfig) -> list[tuple[int, float]]:
    """Sup distance between the oscillating-forcing potential and ``alpha + p|x| - t Hbar(p)``.

    For ``eps = 1/m`` the Hamilton-Jacobi problem with ``V(x / eps)`` is
    solved through its derivative (forcing ``V(m x)``, data ``p sign(x)``
    on ``[-pi, pi)``), and the reconstructed potential at ``t_end`` is
    compared at the cell faces. The affine limit is the viscosity solution
    for ``|p| <= p_cr``.
    """
    grid = TorusGrid(cfg.grid_n)
    base = build_forcing(cfg, omega=0.0)
    if base.kind != "cosine_squared":
        raise ValueError("the epsilon sweep needs a cosine-squared forcing")
    limit = WaveSolutionSpec.for_forcing(base, cfg.alpha, cfg.p)
    faces = grid.faces + grid.dx
    u0 = TorusField(grid, np.where(grid.centers < math.pi, cfg.p, -cfg.p))
    out = []
    for m in cfg.wave_m:
        spec = ForcingSpec.cosine_squared(m * base.kappa0)
        traj = evolve(SolverConfig(grid, spec, cfg.cfl, cfg.t_end, cfg.record_every), u0,
                      keep_snapshots=False)
        pot = reconstruct_potential(traj, 0.0, spec)
        err = max(float(np.max(np.abs(cfg.alpha + f.values - limit(t, faces))))
                  for t, f in zip(pot.times, pot.fields))
        out.append((m, err))
    return out


# -- plot data --------------------------------------------------------------------

_PLOTS = {
    "evolve": [("convergence.csv", "convergence.dat", (0, 1), "t", "L1 distance", False),
               ("trajectory/diagnostics.csv", "energy.dat", (0, 2), "t", "mean u^2", False)],
    "stationary": [("solution_0_ubar.csv", "ubar.dat", (0, 1), "x", "ubar", False),
                   ("solution_0_phi.csv", "phi.dat", (0, 1), "x", "phi", False)],
    "hbar": [("hbar.csv", "hbar.dat", (0, 1), "p", "Hbar(p)", False)],
    "spectrum": [("spectrum_ubar.csv", "spectrum.dat", (0, 1), "k", "|u_hat(k)|", True),
                 ("spectrum_phi.csv", "spectrum_phi.dat", (0, 1), "k", "|phi_hat(k)|", True),
                 ("spectrum_final.csv", "spectrum_final.dat", (0, 1), "k", "|u_hat(k)|", True)],
    "resonance": [("scan.csv", "power.dat", (0, 1), "omega", "average power", False)],
    "rescale": [("rescale.csv", "rescale.dat", (0, 1), "m", "max discrepancy", False),
                ("rescale_control.csv", "rescale_control.dat", (0, 1), "dt", "discrepancy",
                 True)],
    "waveconv": [("waveconv.csv", "waveconv.dat", (0, 1), "t", "d(t)", False),
                 ("waveconv_affine.csv", "waveconv_affine.dat", (1, 2), "epsilon",
                  "sup error", True)],
}


def emit_plot_data(record: RunRecord) -> list[Path]:
    """Two-column ``.dat`` files under ``plot/`` and a gnuplot script ``plot/plot.gp``."""
    root = Path(record.out_dir)
    plot_dir = root / "plot"
    specs = [s for s in _PLOTS[record.experiment] if s[0] in record.manifest]
    if not specs:
        raise ValueError(f"{record.experiment} record lists none of the files to plot")
    plot_dir.mkdir(parents=True, exist_ok=True)
    written = []
    script = ["# gnuplot script; run from this directory with: gnuplot -p plot.gp"]
    for src, dat, (ci, cj), xl, yl, loglog in specs:
        path = root / src
        if not path.is_file():
            raise ValueError(f"manifest entry {src} is missing on disk")
        lines = path.read_text(encoding="utf-8").splitlines()[1:]
        rows = [line.split(",") for line in lines if line]
        with (plot_dir / dat).open("w", encoding="utf-8") as fh:
            fh.write(f"# {xl} {yl}\n")
            for r in rows:
                fh.write(f"{r[ci]} {r[cj]}\n")
        written.append(plot_dir / dat)
        script += ["", "set logscale xy" if loglog else "unset logscale",
                   f"set xlabel '{xl}'", f"set ylabel '{yl}'",
                   f"plot '{dat}' using 1:2 with lines title '{dat[:-4]}'"]
        if len(specs) > 1:
            script.append("pause -1")
    (plot_dir / "plot.gp").write_text("\n".join(script) + "\n", encoding="utf-8")
    written.append(plot_dir / "plot.gp")
    return written
