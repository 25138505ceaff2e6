"""Vanishing-regularization sweeps against a Burgers reference solution."""

from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np
from scipy.integrate import trapezoid

from .burgers import burgers_solve, profile_trajectory, riemann_exact
from .grid import Field, Grid, InitialDatum, SupportError
from .params import KSParams, coupling_beta
from .solver import BlowUpError, SolverConfig, Trajectory, simulate

log = logging.getLogger(__name__)

REFERENCES = ("godunov_fine", "riemann_exact", "self")
COUPLINGS = ("quartic", "linear")


class Window(NamedTuple):
    t1: float
    t2: float
    x1: float
    x2: float

    @property
    def area(self) -> float:
        return (self.t2 - self.t1) * (self.x2 - self.x1)


@dataclass(frozen=True, eq=False)
class SweepConfig:
    """One sweep over ``eps``; ``beta = coupling_c * eps**4`` unless
    ``coupling="linear"`` (``beta = coupling_c * eps``), which marks the
    table ``coupling_violated``."""

    eps_sequence: tuple
    datum: InitialDatum
    grid: Grid
    solver: SolverConfig
    a_coeff: float = 1.0
    coupling_c: float = 1.0
    window: Window = Window(0.5, 1.0, -2.0, 2.0)
    p_exponents: tuple = (1, 2, 3)
    reference: str = "godunov_fine"
    refinement: int = 8
    coupling: str = "quartic"

    def __post_init__(self):
        eps = tuple(float(e) for e in self.eps_sequence)
        if not eps or any(e <= 0 for e in eps):
            raise ValueError("eps_sequence must hold positive values")
        if any(b >= a for a, b in zip(eps, eps[1:])):
            raise ValueError("eps_sequence must be strictly decreasing")
        object.__setattr__(self, "eps_sequence", eps)
        object.__setattr__(self, "window", Window(*map(float, self.window)))
        ps = tuple(int(p) for p in self.p_exponents)
        bad = [p for p in ps if p not in (1, 2, 3)]
        if bad:
            raise ValueError(f"p must be 1, 2 or 3 (convergence holds only for 1 <= p < 4), got {bad}")
        object.__setattr__(self, "p_exponents", ps)
        if not self.coupling_c > 0:
            raise ValueError("coupling_c must be positive")
        if self.reference not in REFERENCES:
            raise ValueError(f"reference must be one of {REFERENCES}")
        if self.coupling not in COUPLINGS:
            raise ValueError(f"coupling must be one of {COUPLINGS}")
        if int(self.refinement) < 1:
            raise ValueError("refinement must be a positive integer")
        w = self.window
        if not (0 <= w.t1 < w.t2 <= self.solver.t_final):
            raise ValueError(f"window times [{w.t1}, {w.t2}] must lie in [0, t_final]")
        L = self.grid.half_length
        if not (-L <= w.x1 < w.x2 <= L):
            raise ValueError(f"window [{w.x1}, {w.x2}] must lie inside the box ±{L}")
        times = np.array(self.solver.snapshot_times)
        for t in (w.t1, w.t2):
            if not np.any(np.abs(times - t) <= 1e-12 * max(1.0, t)):
                raise ValueError(f"window edge t={t} is not a snapshot time")

    @property
    def coupling_violated(self) -> bool:
        return self.coupling != "quartic"

    def beta(self, eps: float) -> float:
        if self.coupling == "quartic":
            return coupling_beta(eps, self.coupling_c)
        return self.coupling_c * eps

    def params(self, eps: float) -> KSParams:
        return KSParams.from_a(self.a_coeff, eps=eps, beta=self.beta(eps))


@dataclass
class ConvergenceTable:
    p_exponents: tuple
    rows: list = field(default_factory=list)
    coupling_violated: bool = False
    trajectories: dict = field(default_factory=dict)
    reference: Trajectory | None = None

    @classmethod
    def from_errors(cls, eps, errors: dict) -> "ConvergenceTable":
        """Table from precomputed errors ``{p: [e_0, e_1, ...]}``."""
        ps = tuple(sorted(errors))
        table = cls(p_exponents=ps)
        for i, e in enumerate(eps):
            row = dict(eps=float(e), beta=float("nan"), status="ok", runtime=0.0)
            for p in ps:
                row[f"error_L{p}"] = float(errors[p][i])
            table.rows.append(row)
        return table

    def ok_rows(self) -> list:
        return [r for r in self.rows if r["status"] == "ok"]

    def eps(self) -> np.ndarray:
        return np.array([r["eps"] for r in self.ok_rows()])

    def errors(self, p: int) -> np.ndarray:
        return np.array([r[f"error_L{p}"] for r in self.ok_rows()])

    def pairwise_orders(self, p: int) -> np.ndarray:
        """``log(e_n / e_{n+1}) / log(eps_n / eps_{n+1})``; ``log2`` ratios for halvings."""
        e, eps = self.errors(p), self.eps()
        return np.log(e[:-1] / e[1:]) / np.log(eps[:-1] / eps[1:])

    def strictly_decreasing(self, p: int) -> bool:
        e = self.errors(p)
        return len(e) >= 2 and bool(np.all(np.diff(e) < 0))

    def columns(self) -> list[str]:
        return ["eps", "beta", *[f"error_L{p}" for p in self.p_exponents],
                "runtime", "status", "coupling_violated"]


class OrderEstimate(NamedTuple):
    order: float
    residual: float
    n_rows: int
    no_convergence: bool


def empirical_order(table: ConvergenceTable) -> dict[int, OrderEstimate]:
    """Least-squares slope of ``log e`` against ``log eps`` for each ``p``.

    Needs at least three successful rows; a nonpositive slope is flagged
    ``no_convergence``.
    """
    eps = table.eps()
    if len(eps) < 3:
        raise ValueError(f"need at least 3 successful rows, have {len(eps)}")
    out = {}
    for p in table.p_exponents:
        e = table.errors(p)
        if np.any(e <= 0):
            raise ValueError(f"L{p} errors must be positive to fit an order")
        x, y = np.log(eps), np.log(e)
        slope, intercept = np.polyfit(x, y, 1)
        resid = float(np.sqrt(np.mean((y - (slope * x + intercept)) ** 2)))
        order = float(slope)
        out[p] = OrderEstimate(order, resid, len(e), order <= 1e-12)
    return out


# ---------------------------------------------------------------------------
# errors


def _on_grid(values: np.ndarray, src: Grid, dst: Grid) -> np.ndarray:
    if src == dst:
        return values
    ratio = src.n_points // dst.n_points
    if (src.half_length == dst.half_length and ratio >= 1
            and ratio * dst.n_points == src.n_points):
        return values[::ratio]
    period = src.length
    return np.interp(dst.x, src.x, values, period=period)


def _window_mask(grid: Grid, w: Window) -> np.ndarray:
    tol = 1e-9 * grid.spacing
    return (grid.x >= w.x1 - tol) & (grid.x < w.x2 - tol)


def _window_snapshots(traj: Trajectory, w: Window) -> list:
    out = [(t, f) for t, f in traj.snapshots if w.t1 - 1e-12 <= t <= w.t2 + 1e-12]
    ts = [t for t, _ in out]
    if not out or abs(ts[0] - w.t1) > 1e-12 or abs(ts[-1] - w.t2) > 1e-12:
        raise ValueError(f"window [{w.t1}, {w.t2}] is not covered by snapshots")
    return out


def lp_window_error(f, g, window, p: float) -> float:
    """``(int int_window |f - g|**p dx dt)**(1/p)``.

    ``f``, ``g`` are both Fields (space-only integral over ``[x1, x2)``) or
    both Trajectories. ``g`` may live on a finer grid; it is sampled onto
    the grid of ``f``.
    """
    w = Window(*window)
    if not p >= 1:
        raise ValueError("p must be >= 1")
    if isinstance(f, Field):
        mask = _window_mask(f.grid, w)
        diff = f.values - _on_grid(g.values, g.grid, f.grid)
        return float((f.grid.spacing * np.sum(np.abs(diff[mask]) ** p)) ** (1.0 / p))
    grid = f.grid
    mask = _window_mask(grid, w)
    fs = _window_snapshots(f, w)
    ref = {round(t, 12): gf for t, gf in _window_snapshots(g, w)}
    vals, ts = [], []
    for t, ff in fs:
        gf = ref.get(round(t, 12))
        if gf is None:
            raise ValueError(f"reference has no snapshot at t={t}")
        diff = ff.values - _on_grid(gf.values, gf.grid, grid)
        vals.append(grid.spacing * np.sum(np.abs(diff[mask]) ** p))
        ts.append(t)
    integral = float(trapezoid(vals, ts)) if len(ts) > 1 else 0.0
    return integral ** (1.0 / p)


# ---------------------------------------------------------------------------
# sweep


def reference_solution(cfg: SweepConfig) -> Trajectory:
    times = cfg.solver.snapshot_times
    if cfg.reference == "godunov_fine":
        fine = Grid(cfg.grid.half_length, cfg.grid.n_points * int(cfg.refinement))
        return burgers_solve(cfg.datum, cfg.a_coeff, fine, cfg.solver.t_final, times)
    if cfg.reference == "riemann_exact":
        d = cfg.datum
        if d.kind != "riemann_step":
            raise ValueError("riemann_exact reference needs step data")
        o = d.options
        # waves from the outer edges of the step must stay out of the window
        speed = abs(cfg.a_coeff) * max(abs(o["u_l"]), abs(o["u_r"]))
        w = cfg.window
        if (w.x1 < o["x0"] - o["extent"] + speed * w.t2
                or w.x2 > o["x0"] + o["extent"] - speed * w.t2):
            raise ValueError("window is reached by waves from the outer step edges")

        def profile(t, x):
            if t == 0:
                return d.sample(cfg.grid)
            inside = np.abs(x - o["x0"]) < o["extent"]
            u = riemann_exact(o["u_l"], o["u_r"], cfg.a_coeff, (x - o["x0"]) / t)
            return np.where(inside, u, 0.0)

        return profile_trajectory(cfg.grid, profile, times, cfg.a_coeff)
    raise ValueError(f"no reference of kind {cfg.reference!r}")


def _run_row(args):
    eps, params, datum, solver, grid = args
    start = time.perf_counter()
    try:
        traj = simulate(datum, params, solver, grid)
        status = "ok"
    except BlowUpError as exc:
        traj, status = exc.trajectory, f"failed: {exc}"
    except SupportError as exc:
        traj, status = None, f"failed: {exc}"
    return eps, traj, status, time.perf_counter() - start


def run_sweep(cfg: SweepConfig, jobs: int = 1) -> ConvergenceTable:
    """One regularized run per eps, one reference, and the error table.

    Runs are independent and may be spread over ``jobs`` processes; results
    do not depend on ``jobs``.
    """
    h = cfg.grid.spacing
    eps_min = min(cfg.eps_sequence)
    if h > eps_min / 4:
        log.warning("spacing %.3g exceeds eps_min/4 = %.3g; layers under-resolved", h, eps_min / 4)
    if cfg.coupling_violated:
        log.warning("beta = c*eps violates the quartic coupling; no convergence is claimed")
    tasks = [(eps, cfg.params(eps), cfg.datum, cfg.solver, cfg.grid) for eps in cfg.eps_sequence]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=min(jobs, len(tasks))) as pool:
            results = list(pool.map(_run_row, tasks))
    else:
        results = [_run_row(t) for t in tasks]

    table = ConvergenceTable(p_exponents=cfg.p_exponents, coupling_violated=cfg.coupling_violated)
    ref = None if cfg.reference == "self" else reference_solution(cfg)
    table.reference = ref
    for eps, traj, status, runtime in results:
        row = dict(eps=eps, beta=cfg.beta(eps), status=status, runtime=runtime)
        for p in cfg.p_exponents:
            if status == "ok":
                row[f"error_L{p}"] = lp_window_error(traj, traj if ref is None else ref,
                                                     cfg.window, p)
            else:
                row[f"error_L{p}"] = math.nan
        table.rows.append(row)
        if traj is not None:
            table.trajectories[eps] = traj
    return table


def with_coupling_c(cfg: SweepConfig, c: float) -> SweepConfig:
    return replace(cfg, coupling_c=float(c))
