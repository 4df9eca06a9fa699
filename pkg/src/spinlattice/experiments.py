"""Experiment harness: parameterized runs, ensemble averaging, result files.

Four experiments are provided:

* spinwave         -- flip the central atom of a chain and track <j_z,k>(t)
                      under the isotropic zz+xx+yy coupling (split-operator).
* squeeze_full     -- fully occupied chain; angle-minimized transverse variance
                      and squeezing parameter versus time for each number of
                      neighbors visited, for the xx or xx-yy coupling.
* squeeze_partial  -- randomly occupied chain (exactly N atoms on round(N/p)
                      sites); ensemble-averaged squeezing plus the analytic
                      initial-slope prediction.
* twist_scaling    -- all-to-all coupling; minimum variance and squeezing
                      versus atom number, with a log-log slope fit.

Result files are long-form CSV tables (one row per emitted record) plus a
"*_summary.csv" table of per-configuration minima and a "*_config.json"
sidecar holding the full configuration, grid metadata, and (for ensemble runs)
the sampled occupancy masks as 0/1 strings.  The JSON output format bundles
the same three parts into a single document.  Identical configurations with
the same master seed produce byte-identical files.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from . import __version__ as _version
from .evolution import apply_layers, run_schedule
from .lattice import (
    MAX_LATTICE_SITES,
    LatticeConfig,
    OccupancyMask,
    exact_count_pair_correlation,
    pair_correlation_matrix,
    sample_occupancy,
)
from .observables import (
    SqueezingReport,
    collective_moments,
    min_variance_theta,
    minimize_on_grid,
    squeezing_report,
    xi_squared,
)
from .schedule import (
    HEISENBERG,
    PARTIAL_XX,
    XX,
    XX_MINUS_YY,
    ZZ,
    HamiltonianSpec,
    compile_heisenberg,
    compile_xx,
    compile_xx_minus_yy,
    coupling_pattern,
)
from .statevector import MAX_SITES, new_register, site_rotation

EXPERIMENTS = ("spinwave", "squeeze_full", "squeeze_partial", "twist_scaling")

#: CLI coupling tokens -> schedule kinds.
COUPLING_KINDS = {
    "zz": ZZ,
    "heisenberg": HEISENBERG,
    "xx": XX,
    "xxyy": XX_MINUS_YY,
}


class ConfigError(ValueError):
    """Invalid experiment configuration (CLI exit code 2)."""


@dataclass
class ExperimentConfig:
    experiment: str
    n_atoms: int | tuple[int, ...] = 15
    filling: float = 1.0
    neighbor_range: int = 1
    coupling: str = "xx"
    chi: float = 1.0
    dt: float = 0.1
    t_max: float = 3.0
    stride: int = 1
    realizations: int = 1
    master_seed: int = 1
    out: str = "result.csv"
    fmt: str = "csv"
    #: time-grid density for exact couplings (the minimization grid knob)
    grid_points: int = 400
    #: golden-section tolerance for refined minima of exact couplings
    refine_tol: float = 1e-9

    def validate(self) -> None:
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}")
        if self.coupling not in COUPLING_KINDS:
            raise ConfigError(f"unknown coupling {self.coupling!r}")
        if not 0.0 < self.filling <= 1.0:
            raise ConfigError("filling must be in (0, 1]")
        if self.realizations < 1:
            raise ConfigError("realizations must be >= 1")
        if self.dt <= 0.0:
            raise ConfigError("dt must be positive")
        if self.t_max < self.dt:
            raise ConfigError("t_max must be at least dt")
        if self.stride < 1:
            raise ConfigError("stride must be >= 1")
        if self.neighbor_range < 1:
            raise ConfigError("neighbor range must be >= 1")
        if not (math.isfinite(self.chi) and self.chi != 0.0):
            raise ConfigError("chi must be finite and nonzero")
        if self.grid_points < 2:
            raise ConfigError("grid_points must be >= 2")
        if self.fmt not in ("csv", "json"):
            raise ConfigError(f"unknown output format {self.fmt!r}")
        atoms = self.atom_list()
        if self.experiment == "twist_scaling":
            if len(atoms) < 1:
                raise ConfigError("twist_scaling needs at least one atom count")
        elif len(atoms) != 1:
            raise ConfigError(f"{self.experiment} takes a single atom count")
        for n in atoms:
            if not 2 <= n <= MAX_SITES:
                raise ConfigError(f"atom count {n} outside supported range 2..{MAX_SITES}")
        if self.experiment == "spinwave" and self.coupling != "heisenberg":
            raise ConfigError("spinwave runs the isotropic heisenberg coupling")
        if self.experiment in ("squeeze_full", "squeeze_partial"):
            if self.experiment == "squeeze_full" and self.filling != 1.0:
                raise ConfigError("squeeze_full needs filling = 1")
            if self.experiment == "squeeze_partial" and self.coupling != "xx":
                raise ConfigError("squeeze_partial supports the xx coupling only")
            if self.experiment == "squeeze_full" and self.coupling not in ("xx", "xxyy"):
                raise ConfigError("squeeze_full supports couplings xx and xxyy")
        if self.experiment == "squeeze_partial":
            m = self.lattice_sites()
            if m > MAX_LATTICE_SITES:
                raise ConfigError(
                    f"a lattice of {m} sites exceeds the {MAX_LATTICE_SITES}-site "
                    "capacity; reduce --atoms or increase --filling"
                )

    def atom_list(self) -> tuple[int, ...]:
        if isinstance(self.n_atoms, int):
            return (self.n_atoms,)
        return tuple(self.n_atoms)

    def lattice_sites(self) -> int:
        """Lattice length round(N/p) for the single-atom-count experiments."""
        (n,) = self.atom_list()
        return int(round(n / self.filling))

    def payload(self) -> dict:
        data = {
            "experiment": self.experiment,
            "n_atoms": list(self.atom_list()) if self.experiment == "twist_scaling" else self.atom_list()[0],
            "filling": self.filling,
            "neighbor_range": self.neighbor_range,
            "coupling": self.coupling,
            "chi": self.chi,
            "dt": self.dt,
            "t_max": self.t_max,
            "stride": self.stride,
            "realizations": self.realizations,
            "master_seed": self.master_seed,
            "out": self.out,
            "format": self.fmt,
            "grid_points": self.grid_points,
            "refine_tol": self.refine_tol,
            "version": _version,
        }
        return data


@dataclass
class RunResult:
    rows: list[dict]
    summary: list[dict]
    metadata: dict
    paths: list[Path] = field(default_factory=list)


# ---------------------------------------------------------------------------
# output writing


def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        if math.isnan(value):
            return ""
        return repr(value)
    return str(value)


def _jsonable(value):
    if isinstance(value, float) and math.isnan(value):
        return None
    return value


def _write_csv(path: Path, rows: Sequence[Mapping]) -> None:
    fields = list(rows[0].keys()) if rows else []
    lines = [",".join(fields)]
    for row in rows:
        lines.append(",".join(_format_cell(row[f]) for f in fields))
    path.write_text("\n".join(lines) + "\n")


def _write_outputs(config: ExperimentConfig, result: RunResult) -> None:
    out = Path(config.out)
    if out.parent != Path(""):
        out.parent.mkdir(parents=True, exist_ok=True)
    metadata = {"config": config.payload(), **result.metadata}
    if config.fmt == "json":
        doc = {
            "metadata": metadata,
            "rows": [{k: _jsonable(v) for k, v in r.items()} for r in result.rows],
            "summary": [{k: _jsonable(v) for k, v in r.items()} for r in result.summary],
        }
        out.write_text(json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n")
        result.paths = [out]
        return
    summary_path = out.with_name(out.stem + "_summary" + (out.suffix or ".csv"))
    sidecar_path = out.with_name(out.stem + "_config.json")
    _write_csv(out, result.rows)
    _write_csv(summary_path, result.summary)
    sidecar_path.write_text(
        json.dumps(metadata, indent=2, sort_keys=True, allow_nan=False) + "\n"
    )
    result.paths = [out, summary_path, sidecar_path]


# ---------------------------------------------------------------------------
# shared evolution helpers


def _evolve_exact(
    spec: HamiltonianSpec,
    t: float,
    n_register: int,
    register_sites: Sequence[int] | None,
):
    state = new_register(n_register)
    schedule = compile_xx(spec, t, register_sites)
    apply_layers(state, schedule.layers())
    return state


def _exact_report_at(
    spec: HamiltonianSpec,
    t: float,
    n_register: int,
    register_sites: Sequence[int] | None,
) -> SqueezingReport:
    state = _evolve_exact(spec, t, n_register, register_sites)
    return squeezing_report(state, t)


def _trotter_reports(
    spec: HamiltonianSpec, t_max: float, dt: float, n_register: int
) -> list[SqueezingReport]:
    state = new_register(n_register)
    schedule = compile_xx_minus_yy(spec, t_max, dt)
    trace = run_schedule(state, schedule, snapshot_every=1, probes=("moments",))
    reports = []
    for t, moments in zip(trace.times, trace.moments):
        theta, variance = min_variance_theta(moments)
        reports.append(
            SqueezingReport(
                time=float(t),
                theta_opt=theta,
                min_variance=variance,
                xi2=xi_squared(moments, n_register, theta),
            )
        )
    return reports


def _emit_indices(n_rows: int, stride: int) -> list[int]:
    idx = list(range(0, n_rows, stride))
    if idx[-1] != n_rows - 1:
        idx.append(n_rows - 1)
    return idx


def _refined_minima(
    reports: Sequence[SqueezingReport],
    grid: np.ndarray,
    fn_report,
    refine_tol: float,
) -> dict:
    """Min-over-time of xi^2 and of the variance, golden-section refined."""
    xi_vals = np.array([r.xi2 for r in reports])
    var_vals = np.array([r.min_variance for r in reports])

    t_xi, xi_min = minimize_on_grid(
        lambda t: fn_report(t).xi2, grid, values=xi_vals, tol=refine_tol
    )
    t_var, var_min = minimize_on_grid(
        lambda t: fn_report(t).min_variance, grid, values=var_vals, tol=refine_tol
    )
    return {
        "xi2_min": xi_min,
        "t_at_xi2_min": t_xi,
        "variance_min": var_min,
        "t_at_variance_min": t_var,
        "refined": 1,
    }


def _grid_minima(reports: Sequence[SqueezingReport]) -> dict:
    xi_vals = np.array([r.xi2 for r in reports])
    var_vals = np.array([r.min_variance for r in reports])
    times = np.array([r.time for r in reports])
    if np.all(np.isnan(xi_vals)):
        raise ValueError("squeezing parameter undefined along the whole run")
    i_xi = int(np.nanargmin(xi_vals))
    i_var = int(np.argmin(var_vals))
    return {
        "xi2_min": float(xi_vals[i_xi]),
        "t_at_xi2_min": float(times[i_xi]),
        "variance_min": float(var_vals[i_var]),
        "t_at_variance_min": float(times[i_var]),
        "refined": 0,
    }


# ---------------------------------------------------------------------------
# experiments


def run_spinwave(config: ExperimentConfig) -> RunResult:
    """Flip the central atom and record the per-site magnetization grid."""
    config.validate()
    (n,) = config.atom_list()
    center = n // 2
    lattice = LatticeConfig(n)
    spec = HamiltonianSpec(
        HEISENBERG,
        lattice,
        chi=config.chi,
        eta=config.chi,
        lam=config.chi,
        neighbor_range=config.neighbor_range,
    )
    schedule = compile_heisenberg(spec, config.t_max, config.dt)
    state = new_register(n)
    site_rotation(state, center, "x", math.pi)  # state preparation, not a modeled pulse
    trace = run_schedule(
        state, schedule, snapshot_every=config.stride, probes=("site_z",)
    )
    rows = []
    for t, mags in zip(trace.times, trace.site_z):
        row = {"time": float(t)}
        for k in range(n):
            row[f"jz_site_{k:02d}"] = float(mags[k])
        row["jz_sum"] = float(mags.sum())
        row["realizations"] = 1
        rows.append(row)
    summary = [
        {
            "n_atoms": n,
            "center_site": center,
            "steps": schedule.num_steps,
            "jz_sum_initial": rows[0]["jz_sum"],
            "jz_sum_final": rows[-1]["jz_sum"],
        }
    ]
    metadata = {"center_site": center, "trotter_step": schedule.dt}
    result = RunResult(rows=rows, summary=summary, metadata=metadata)
    _write_outputs(config, result)
    return result


def _squeeze_rows(reports: Sequence[SqueezingReport], r: int, coupling: str) -> list[dict]:
    rows = []
    for rep in reports:
        rows.append(
            {
                "coupling": coupling,
                "neighbors": r,
                "time": rep.time,
                "theta_opt": rep.theta_opt,
                "variance": rep.min_variance,
                "xi2": rep.xi2,
                "xi2_defined": int(rep.xi2_defined),
                "realizations": 1,
            }
        )
    return rows


def run_squeeze_full(config: ExperimentConfig) -> RunResult:
    """Fully occupied chain: squeezing versus time for each neighbor count."""
    config.validate()
    (n,) = config.atom_list()
    lattice = LatticeConfig(n)
    rows: list[dict] = []
    summary: list[dict] = []
    exact = config.coupling == "xx"
    if exact:
        grid = np.linspace(0.0, config.t_max, config.grid_points)
        grid_step = float(grid[1] - grid[0])
    else:
        grid_step = None
    for r in range(1, config.neighbor_range + 1):
        if exact:
            spec = HamiltonianSpec(XX, lattice, chi=config.chi, neighbor_range=r)
            reports = [_exact_report_at(spec, float(t), n, None) for t in grid]
            minima = _refined_minima(
                reports,
                grid,
                lambda t, s=spec: _exact_report_at(s, t, n, None),
                config.refine_tol,
            )
        else:
            spec = HamiltonianSpec(
                XX_MINUS_YY, lattice, chi=config.chi, neighbor_range=r
            )
            reports = _trotter_reports(spec, config.t_max, config.dt, n)
            minima = _grid_minima(reports)
            grid_step = config.t_max / max(1, len(reports) - 1)
        for i in _emit_indices(len(reports), config.stride):
            rows.extend(_squeeze_rows([reports[i]], r, config.coupling))
        summary.append(
            {"coupling": config.coupling, "neighbors": r, "n_atoms": n, **minima}
        )
    metadata = {"grid_step": grid_step, "refine_tol": config.refine_tol}
    result = RunResult(rows=rows, summary=summary, metadata=metadata)
    _write_outputs(config, result)
    return result


def run_squeeze_partial(config: ExperimentConfig) -> RunResult:
    """Partially occupied chain: ensemble-averaged squeezing and slope prediction."""
    config.validate()
    (n,) = config.atom_list()
    m = config.lattice_sites()
    lattice = LatticeConfig(m)
    masks = [
        sample_occupancy(lattice, n, config.master_seed, realization=i)
        for i in range(config.realizations)
    ]
    corr = pair_correlation_matrix(masks)
    grid = np.linspace(0.0, config.t_max, config.grid_points)
    grid_step = float(grid[1] - grid[0])
    rows: list[dict] = []
    summary: list[dict] = []
    for r in range(1, config.neighbor_range + 1):
        per_real: list[list[SqueezingReport]] = []
        mins: list[dict] = []
        for mask in masks:
            spec = HamiltonianSpec(
                PARTIAL_XX, lattice, chi=config.chi, neighbor_range=r, mask=mask
            )
            register = mask.occupied_sites
            reports = [
                _exact_report_at(spec, float(t), n, register) for t in grid
            ]
            per_real.append(reports)
            mins.append(
                _refined_minima(
                    reports,
                    grid,
                    lambda t, s=spec, reg=register: _exact_report_at(s, t, n, reg),
                    config.refine_tol,
                )
            )
        for i in _emit_indices(len(grid), config.stride):
            reps = [reports[i] for reports in per_real]
            variances = np.array([rep.min_variance for rep in reps])
            thetas = np.array([rep.theta_opt for rep in reps])
            xi = np.array([rep.xi2 for rep in reps])
            defined = ~np.isnan(xi)
            rows.append(
                {
                    "coupling": config.coupling,
                    "neighbors": r,
                    "time": float(grid[i]),
                    "theta_opt": float(thetas.mean()),
                    "variance": float(variances.mean()),
                    "variance_sem": float(
                        variances.std(ddof=1) / math.sqrt(len(variances))
                    )
                    if len(variances) > 1
                    else 0.0,
                    "xi2": float(xi[defined].mean()) if defined.any() else math.nan,
                    "xi2_defined": int(defined.sum()),
                    "realizations": len(reps),
                }
            )
        # per-realization refined minima, then ensemble statistics
        xi_mins = np.array([mn["xi2_min"] for mn in mins])
        var_mins = np.array([mn["variance_min"] for mn in mins])
        # finite-difference slope of the angle-minimized variance at the origin
        dt0 = float(grid[1] - grid[0])
        slopes = np.array(
            [(reports[1].min_variance - reports[0].min_variance) / dt0 for reports in per_real]
        )
        pattern = coupling_pattern(lattice, r, config.chi, symmetric=True)
        pred_empirical = -0.25 * sum(
            chi_kl * corr[k, l] for (k, l), chi_kl in pattern.items()
        )
        hyper = exact_count_pair_correlation(m, n)
        pred_exact_count = -0.25 * sum(chi_kl * hyper for chi_kl in pattern.values())
        n_real = len(masks)
        summary.append(
            {
                "coupling": config.coupling,
                "neighbors": r,
                "n_atoms": n,
                "lattice_sites": m,
                "xi2_min_mean": float(xi_mins.mean()),
                "xi2_min_sem": float(xi_mins.std(ddof=1) / math.sqrt(n_real))
                if n_real > 1
                else 0.0,
                "variance_min_mean": float(var_mins.mean()),
                "slope_measured_mean": float(slopes.mean()),
                "slope_measured_sem": float(slopes.std(ddof=1) / math.sqrt(n_real))
                if n_real > 1
                else 0.0,
                "slope_predicted_empirical": float(pred_empirical),
                "slope_predicted_exact_count": float(pred_exact_count),
                "realizations": n_real,
            }
        )
    metadata = {
        "lattice_sites": m,
        "grid_step": grid_step,
        "refine_tol": config.refine_tol,
        "masks": [mask.to01() for mask in masks],
    }
    result = RunResult(rows=rows, summary=summary, metadata=metadata)
    _write_outputs(config, result)
    return result


def run_twist_scaling(config: ExperimentConfig) -> RunResult:
    """All-to-all coupling: minimum variance and squeezing versus atom number."""
    config.validate()
    rows: list[dict] = []
    fit_points: list[tuple[int, float]] = []
    grid = None
    for n in config.atom_list():
        lattice = LatticeConfig(n)
        r = n - 1
        grid = np.linspace(0.0, config.t_max, config.grid_points)
        # exact transverse coupling
        spec = HamiltonianSpec(XX, lattice, chi=config.chi, neighbor_range=r)
        reports = [_exact_report_at(spec, float(t), n, None) for t in grid]
        minima = _refined_minima(
            reports,
            grid,
            lambda t, s=spec, nn=n: _exact_report_at(s, t, nn, None),
            config.refine_tol,
        )
        rows.append({"coupling": "xx", "n_atoms": n, **minima})
        fit_points.append((n, minima["variance_min"]))
        # split-operator difference coupling
        spec_d = HamiltonianSpec(XX_MINUS_YY, lattice, chi=config.chi, neighbor_range=r)
        dreports = _trotter_reports(spec_d, config.t_max, config.dt, n)
        rows.append({"coupling": "xxyy", "n_atoms": n, **_grid_minima(dreports)})
    fit_used = [(n, v) for n, v in fit_points if n >= 6]
    if len(fit_used) >= 2:
        log_n = np.log([n for n, _ in fit_used])
        log_v = np.log([v for _, v in fit_used])
        slope, intercept = np.polyfit(log_n, log_v, 1)
    else:
        slope, intercept = math.nan, math.nan
    summary = [
        {
            "coupling": "xx",
            "fit_min_atoms": 6,
            "fit_points": len(fit_used),
            "loglog_slope": float(slope),
            "loglog_intercept": float(intercept),
        }
    ]
    metadata = {
        "grid_step": float(grid[1] - grid[0]) if grid is not None else None,
        "refine_tol": config.refine_tol,
        "trotter_step": config.dt,
    }
    result = RunResult(rows=rows, summary=summary, metadata=metadata)
    _write_outputs(config, result)
    return result


def run_experiment(config: ExperimentConfig) -> RunResult:
    runner = {
        "spinwave": run_spinwave,
        "squeeze_full": run_squeeze_full,
        "squeeze_partial": run_squeeze_partial,
        "twist_scaling": run_twist_scaling,
    }[config.experiment]
    return runner(config)
