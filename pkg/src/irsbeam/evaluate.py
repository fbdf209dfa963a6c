"""Pattern sweeps, exact metric reports, and the canned experiment battery."""

import csv
import json
import math
import os
import time
import warnings
from dataclasses import dataclass, replace

import numpy as np

from . import dna
from .channel import SUPPORT_TOL, erp
from .masks import build_samples
from .optimizer import achieved_levels, save_solution, solve_ao, solve_joint
from .scenario import MaskRegion, MaskShape, MaskSpec
from .scenario import replace as scenario_replace
from .steering import unit_direction
from .units import SPEED_OF_LIGHT, lin2db


@dataclass(frozen=True)
class PatternGrid:
    """Dense gain map over the reflect ranges; gain_db is indexed [phi, theta]."""

    phi_deg: np.ndarray
    theta_deg: np.ndarray
    gain_db: np.ndarray


@dataclass(frozen=True)
class MetricsReport:
    """Exact constraint-sample metrics for one solution under one scenario."""

    method: str
    m_y: int
    m_z: int
    rho_db: float  # worst weight-normalized mainlobe gain
    mainlobe_min_db: float
    mainlobe_max_db: float
    sidelobe_max_db: float  # NEG_GAIN_DB when the sidelobe set is empty
    sidelobe_margin_db: float  # rho_db - sidelobe_max_db, compare to delta_db
    delta_db: float
    n_mainlobe: int
    n_sidelobe: int
    degenerate: bool
    wall_time_s: float

    def to_dict(self):
        return {k: getattr(self, k) for k in (
            "method", "m_y", "m_z", "rho_db", "mainlobe_min_db",
            "mainlobe_max_db", "sidelobe_max_db", "sidelobe_margin_db",
            "delta_db", "n_mainlobe", "n_sidelobe", "degenerate",
            "wall_time_s")}


def _axis_grid(lo, hi, step):
    count = int((hi - lo) / step + 1e-9) + 1
    return lo + step * np.arange(count)


def sweep_pattern(scn, sol, phi_step=1.0, theta_step=1.0):
    """Dense shaped-gain map of a solution over the reflect ranges.

    Uses the separable form of the response: with the phase grid reshaped to
    (m_y, m_z), the array response at any direction is a_y^T Wgrid a_z, so a
    full sweep costs cells x m_y x m_z flops instead of cells x (m_y*m_z)^2.
    """
    if phi_step <= 0 or theta_step <= 0:
        raise ValueError("sweep steps must be positive")
    phis = _axis_grid(scn.reflect_phi_deg[0], scn.reflect_phi_deg[1], phi_step)
    thetas = _axis_grid(scn.reflect_theta_deg[0], scn.reflect_theta_deg[1], theta_step)
    phi_rad = np.radians(phis)
    theta_rad = np.radians(thetas)

    d_y, d_z = scn.spacing_m
    k = 2.0 * np.pi * scn.f_c_hz / SPEED_OF_LIGHT
    u_i = unit_direction(scn.incident)
    u_y = np.sin(phi_rad)[:, None] * np.sin(theta_rad)[None, :]  # (P, T)
    u_z = np.cos(theta_rad)  # (T,)

    a_y = np.exp(1j * k * d_y * (u_i[1] + u_y)[:, :, None] * np.arange(scn.m_y))
    a_z = np.exp(1j * k * d_z * (u_i[2] + u_z)[:, None] * np.arange(scn.m_z))
    w_grid = np.exp(1j * sol.phases).reshape(scn.m_y, scn.m_z)
    response = np.einsum("pty,yz,tz->pt", a_y, w_grid, a_z)

    base = np.cos(phi_rad)[:, None] * np.sin(theta_rad)[None, :]
    q = scn.g_linear / 2.0 - 1.0
    support = base > SUPPORT_TOL
    f_r = np.where(support, np.power(base, q, where=support), 0.0)
    f_i = erp(scn.incident, scn.g_linear)
    eta2 = scn.g_t_linear * scn.g_linear ** 2 * f_i * f_r
    gain = eta2 * np.abs(response) ** 2
    return PatternGrid(phi_deg=phis, theta_deg=thetas, gain_db=lin2db(gain))


def write_pattern_csv(grid, path):
    """Long-form CSV phi_deg,theta_deg,gain_db (phi outer, theta inner)."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("phi_deg,theta_deg,gain_db\n")
        for i, phi in enumerate(grid.phi_deg):
            for j, theta in enumerate(grid.theta_deg):
                fh.write(f"{float(phi)!r},{float(theta)!r},{float(grid.gain_db[i, j])!r}\n")


def metrics(scn, sol):
    """Recompute the constraint-sample metrics for a solution."""
    samples = build_samples(scn)
    rho, main, side = achieved_levels(scn, samples, sol.w)
    side_max = float(np.max(side)) if side.size else 0.0
    rho_db = lin2db(rho)
    side_max_db = lin2db(side_max)
    return MetricsReport(
        method=sol.method, m_y=sol.m_y, m_z=sol.m_z, rho_db=rho_db,
        mainlobe_min_db=lin2db(float(np.min(main))),
        mainlobe_max_db=lin2db(float(np.max(main))),
        sidelobe_max_db=side_max_db,
        sidelobe_margin_db=rho_db - side_max_db,
        delta_db=scn.delta_db, n_mainlobe=int(main.size),
        n_sidelobe=int(side.size), degenerate=sol.degenerate,
        wall_time_s=sol.wall_time_s)


# ---------------------------------------------------------------------------
# Experiments

EXPERIMENT_KINDS = ("table1", "size_sweep", "quantization", "masks_demo")

_TABLE1_MASK = MaskSpec(
    mainlobe=(MaskRegion(phi_deg=(-10.0, 10.0), theta_deg=(120.0, 140.0)),),
    shape=MaskShape(), sample_step_deg=10.0, gap_deg=10.0)
_TABLE1_DELTA_DB = 5.0


def _sized(scn, m):
    return scenario_replace(scn, m_y=m, m_z=m)


def _fit_line(x, y):
    """Least-squares line with R^2 (the sweep's scaling check)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    slope, intercept = np.polyfit(x, y, 1)
    pred = slope * x + intercept
    ss_res = float(np.sum((y - pred) ** 2))
    ss_tot = float(np.sum((y - np.mean(y)) ** 2))
    r_squared = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(intercept), r_squared


def _convergence_rows(traces):
    """Flatten a solution's trace dict into CSV rows (one per iteration).

    Alternating runs use the per-round table; single-pass runs use the
    per-iteration table. Returns (fieldnames, rows), or None when the
    solution carries no iteration trace (focus/random).
    """
    if not isinstance(traces, dict):
        return None
    table = traces.get("rounds", traces)
    lists = {k: v for k, v in table.items()
             if isinstance(v, list) and v and not isinstance(v[0], (dict, list))}
    if not lists:
        return None
    count = min(len(v) for v in lists.values())
    fields = ["iteration"] + sorted(lists)
    rows = [{"iteration": i, **{k: lists[k][i] for k in sorted(lists)}}
            for i in range(count)]
    return fields, rows


class _Recorder:
    """Accumulates metric and timing rows; isolates per-run failures."""

    def __init__(self, out_dir):
        self.out_dir = out_dir
        self.rows = []
        self.timings = []

    def run(self, label, scn, solver):
        t0 = time.perf_counter()
        try:
            sol = solver()
        except Exception as exc:  # record and keep sweeping
            warnings.warn(f"{label} failed: {exc}", stacklevel=2)
            self.rows.append({"label": label, "status": f"error: {exc}"})
            self.timings.append((label, time.perf_counter() - t0))
            return None
        self.timings.append((label, time.perf_counter() - t0))
        report = metrics(scn, sol)
        row = {"label": label, "status": "ok"}
        row.update(report.to_dict())
        self.rows.append(row)
        save_solution(sol, os.path.join(self.out_dir, f"solution_{label}.json"))
        table = _convergence_rows(sol.traces)
        if table is not None:
            fields, conv_rows = table
            path = os.path.join(self.out_dir, f"convergence_{label}.csv")
            with open(path, "w", encoding="utf-8", newline="") as fh:
                writer = csv.DictWriter(fh, fieldnames=fields)
                writer.writeheader()
                for conv_row in conv_rows:
                    writer.writerow(conv_row)
        return sol

    def flush(self):
        fields = ["label", "status", "method", "m_y", "m_z", "rho_db",
                  "mainlobe_min_db", "mainlobe_max_db", "sidelobe_max_db",
                  "sidelobe_margin_db", "delta_db", "n_mainlobe", "n_sidelobe",
                  "degenerate", "wall_time_s"]
        with open(os.path.join(self.out_dir, "metrics.csv"), "w",
                  encoding="utf-8", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=fields, extrasaction="ignore")
            writer.writeheader()
            for row in self.rows:
                writer.writerow(row)
        # wall-clock lives apart so every other artifact is deterministic
        with open(os.path.join(self.out_dir, "timings.csv"), "w",
                  encoding="utf-8", newline="") as fh:
            fh.write("label,seconds\n")
            for label, seconds in self.timings:
                fh.write(f"{label},{seconds:.3f}\n")


def run_experiment(scn, kind, out_root, seed=0, sizes=None):
    """Run one canned experiment; returns the created output directory.

    * ``table1``: joint vs alternating synthesis across surface sizes on the
      narrow-mask comparison configuration (delta 5 dB, 20x20 degree lobe).
    * ``size_sweep``: alternating synthesis across sizes; fits sqrt(margin)
      against element count.
    * ``quantization``: continuous vs 4/3/2-bit margins on this scenario.
    * ``masks_demo``: square flat-top, trapezoid, and parabolic-taper lobes.

    Sub-run failures are recorded in metrics.csv and the sweep continues.
    """
    if kind not in EXPERIMENT_KINDS:
        raise ValueError(f"unknown experiment {kind!r}; choose from {EXPERIMENT_KINDS}")
    out_dir = os.path.join(out_root, f"{kind}_{time.strftime('%Y%m%d_%H%M%S')}")
    os.makedirs(out_dir, exist_ok=True)
    rec = _Recorder(out_dir)

    if kind == "table1":
        base = scenario_replace(scn, mask=_TABLE1_MASK, delta_db=_TABLE1_DELTA_DB)
        ao_sizes = sizes or [4, 8, 16]
        joint_sizes = [m for m in ao_sizes if m * m <= min(base.joint_size_limit, 64)]
        for m in joint_sizes:
            rec.run(f"joint_{m}x{m}", _sized(base, m),
                    lambda s=_sized(base, m): solve_joint(s))
        for m in ao_sizes:
            rec.run(f"ao_{m}x{m}", _sized(base, m),
                    lambda s=_sized(base, m): solve_ao(s))

    elif kind == "size_sweep":
        points = []
        for m in (sizes or [4, 8, 16]):
            sized = _sized(scn, m)
            sol = rec.run(f"ao_{m}x{m}", sized, lambda s=sized: solve_ao(s))
            if sol is not None:
                points.append((m * m, math.sqrt(10.0 ** (sol.rho_db / 10.0))))
        if len(points) >= 2:
            slope, intercept, r_squared = _fit_line([p[0] for p in points],
                                                    [p[1] for p in points])
            with open(os.path.join(out_dir, "fit.json"), "w", encoding="utf-8") as fh:
                json.dump({"x": "m_total", "y": "sqrt_rho_linear",
                           "slope": slope, "intercept": intercept,
                           "r_squared": r_squared,
                           "points": points}, fh, indent=1)

    elif kind == "quantization":
        sol = rec.run("continuous", scn, lambda: solve_ao(scn))
        if sol is not None:
            rows = [{"bits": "continuous", "rho_db": sol.rho_db, "loss_db": 0.0}]
            for bits in (4, 3, 2):
                q = dna.quantize(scn, sol, bits)
                beam = dna.to_beam_solution(q)
                save_solution(beam, os.path.join(out_dir, f"solution_q{bits}.json"))
                rows.append({"bits": bits, "rho_db": q.rho_db,
                             "loss_db": sol.rho_db - q.rho_db})
            with open(os.path.join(out_dir, "quantization.csv"), "w",
                      encoding="utf-8", newline="") as fh:
                fh.write("bits,rho_db,loss_db\n")
                for row in rows:
                    fh.write(f"{row['bits']},{row['rho_db']!r},{row['loss_db']!r}\n")

    elif kind == "masks_demo":
        region = scn.mask.mainlobe[0]
        lo, hi = region.phi_deg
        shrink = 0.3
        center = 0.5 * (lo + hi)
        half = 0.5 * (hi - lo) * shrink
        variants = {
            "square_flat": scn.mask,
            "trapezoid": MaskSpec(
                mainlobe=(MaskRegion(phi_deg=region.phi_deg,
                                     theta_deg=region.theta_deg,
                                     phi_deg_top=(center - half, center + half)),),
                shape=scn.mask.shape, sample_step_deg=scn.mask.sample_step_deg,
                gap_deg=scn.mask.gap_deg),
            "parabolic": MaskSpec(
                mainlobe=scn.mask.mainlobe,
                shape=MaskShape(kind="parabolic", l_db=3.0),
                sample_step_deg=scn.mask.sample_step_deg,
                gap_deg=scn.mask.gap_deg),
        }
        for label, mask in variants.items():
            varied = scenario_replace(scn, mask=mask)
            sol = rec.run(label, varied, lambda s=varied: solve_ao(s))
            if sol is not None:
                grid = sweep_pattern(varied, sol, phi_step=2.0, theta_step=2.0)
                write_pattern_csv(grid, os.path.join(out_dir, f"pattern_{label}.csv"))

    rec.flush()
    return out_dir
