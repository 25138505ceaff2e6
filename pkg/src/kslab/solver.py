"""Fourier pseudo-spectral integrator for the regularized equation.

The linear symbol ``i*beta*k**3 - eps*k**2`` is integrated exactly through
an integrating factor; the remaining terms are advanced with classical RK4
(the Lawson form of RK4).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .grid import Field, Grid, InitialDatum, SupportError, boundary_fraction, mollify
from .params import KSParams

log = logging.getLogger(__name__)

_TINY = np.finfo(float).tiny

# Columns of the dense per-step log, in CSV order.
LOG_COLUMNS = (
    "t", "mass", "l2_sq", "grad_sq", "hess_sq", "energy", "dissipation_rate",
    "linf", "l4_4", "uux_sq", "uxuxx_l1", "uuxx_sq", "uuxuxx_l1",
)


class BlowUpError(RuntimeError):
    def __init__(self, message, t=None, trajectory=None):
        super().__init__(message)
        self.t = t
        self.trajectory = trajectory


class NonConservativeError(ValueError):
    pass


@dataclass(frozen=True)
class SolverConfig:
    t_final: float
    snapshot_times: tuple = ()
    cfl_advective: float = 0.5
    cfl_dispersive: float = 0.5
    dealias_fraction: float = 2.0 / 3.0
    boundary_tolerance: float = 1e-4
    max_steps: int = 5_000_000

    def __post_init__(self):
        if not self.t_final > 0:
            raise ValueError("t_final must be positive")
        for name in ("cfl_advective", "cfl_dispersive"):
            v = getattr(self, name)
            if not 0 < v <= 1:
                raise ValueError(f"{name} must lie in (0, 1], got {v}")
        if not 0 < self.dealias_fraction <= 1:
            raise ValueError("dealias_fraction must lie in (0, 1]")
        times = sorted({0.0, float(self.t_final), *map(float, self.snapshot_times)})
        if times[0] < 0 or times[-1] > self.t_final:
            raise ValueError("snapshot times must lie in [0, t_final]")
        object.__setattr__(self, "snapshot_times", tuple(times))


@dataclass
class Trajectory:
    params: KSParams
    grid: Grid
    snapshots: list = field(default_factory=list)
    step_count: int = 0
    accepted_dt_history: list = field(default_factory=list)
    log: dict = field(default_factory=dict)
    datum: InitialDatum | None = None
    failure: str | None = None

    @property
    def times(self) -> np.ndarray:
        return np.array([t for t, _ in self.snapshots])

    def values(self) -> np.ndarray:
        """Snapshot values stacked as ``(n_snapshots, n_points)``."""
        return np.array([f.values for _, f in self.snapshots])

    def at(self, t: float, tol: float = 1e-12) -> Field:
        for ts, f in self.snapshots:
            if abs(ts - t) <= tol * max(1.0, abs(t)):
                return f
        raise KeyError(f"no snapshot at t={t}")

    @property
    def final(self) -> Field:
        return self.snapshots[-1][1]


class KSOperator:
    """Linear symbol and dealiased nonlinear terms on a fixed grid."""

    def __init__(self, grid: Grid, p: KSParams, dealias_fraction: float = 2.0 / 3.0):
        self.grid = grid
        self.p = p
        k = grid.wavenumbers
        self.ik = 1j * grid.odd_wavenumbers
        self.k2 = k * k
        self.linear = 1j * p.beta * grid.odd_wavenumbers**3 - p.eps * self.k2
        self.mask = grid.dealias_mask(dealias_fraction)
        self.n = grid.n_points
        self._exp_cache = (None, None, None)

    def exponentials(self, dt):
        if self._exp_cache[0] != dt:
            half = np.exp(0.5 * dt * self.linear)
            self._exp_cache = (dt, half, half * half)
        return self._exp_cache[1], self._exp_cache[2]

    def nonlinear(self, u_hat: np.ndarray) -> np.ndarray:
        p, n, ik = self.p, self.n, self.ik
        v = u_hat * self.mask
        u = np.fft.irfft(v, n)
        ux = np.fft.irfft(ik * v, n)
        terms = {}
        # split form 1/2 [A u u_x + (A u^2/2)_x]
        uux_hat = np.fft.rfft(u * ux)
        terms["advection"] = -0.5 * p.a_coeff * (uux_hat + 0.5 * ik * np.fft.rfft(u * u))
        if p.beta != 0.0:
            uxx = np.fft.irfft(-self.k2 * v, n)
            if p.b_coeff != 0.0:
                terms["B (u u_xx)_x"] = p.b_coeff * p.beta * ik * np.fft.rfft(u * uxx)
            if p.c_coeff != 0.0:
                # u_x u_xx = (u_x^2 / 2)_x
                terms["C u_x u_xx"] = 0.5 * p.c_coeff * p.beta * ik * np.fft.rfft(ux * ux)
            if p.d_coeff != 0.0:
                terms["D (u u_x)_x"] = p.d_coeff * p.beta * ik * uux_hat
        total = sum(terms.values())
        if not np.all(np.isfinite(total)):
            bad = [name for name, t in terms.items() if not np.all(np.isfinite(t))]
            raise OverflowError(f"non-finite value in term(s): {', '.join(bad) or 'sum'}")
        return total * self.mask

    def rhs(self, u_hat: np.ndarray) -> np.ndarray:
        return self.linear * u_hat + self.nonlinear(u_hat)

    def step(self, u_hat: np.ndarray, dt: float) -> np.ndarray:
        e_half, e_full = self.exponentials(dt)
        k1 = self.nonlinear(u_hat)
        k2 = self.nonlinear(e_half * (u_hat + 0.5 * dt * k1))
        k3 = self.nonlinear(e_half * u_hat + 0.5 * dt * k2)
        k4 = self.nonlinear(e_full * u_hat + dt * e_half * k3)
        return e_full * u_hat + (dt / 6.0) * (e_full * k1 + 2.0 * e_half * (k2 + k3) + k4)

    def functionals(self, u_hat: np.ndarray, t: float) -> tuple:
        """One row of the dense per-step log (see ``LOG_COLUMNS``)."""
        n, h, p = self.n, self.grid.spacing, self.p
        u = np.fft.irfft(u_hat, n)
        ux = np.fft.irfft(self.ik * u_hat, n)
        uxx = np.fft.irfft(-self.k2 * u_hat, n)
        l2_sq = h * np.dot(u, u)
        grad_sq = h * np.dot(ux, ux)
        hess_sq = h * np.dot(uxx, uxx)
        uux = u * ux
        uxuxx = np.abs(ux * uxx)
        uuxx = u * uxx
        return (
            t,
            h * u.sum(),
            l2_sq,
            grad_sq,
            hess_sq,
            l2_sq + p.beta * grad_sq,
            2 * p.eps * grad_sq + 2 * p.beta * p.eps * hess_sq,
            np.abs(u).max(),
            h * np.sum(u**4),
            h * np.dot(uux, uux),
            h * uxuxx.sum(),
            h * np.dot(uuxx, uuxx),
            h * np.sum(np.abs(u) * uxuxx),
        )


def ks_rhs(f: Field, p: KSParams, dealias_fraction: float = 2.0 / 3.0) -> Field:
    """Time derivative ``u_t`` of the regularized equation at state ``f``."""
    op = KSOperator(f.grid, p, dealias_fraction)
    return Field(f.grid, np.fft.irfft(op.rhs(np.fft.rfft(f.values)), f.grid.n_points))


def select_timestep(f: Field, p: KSParams, cfg: SolverConfig, gap: float = math.inf) -> float:
    """Stable step for the explicit terms, capped at ``gap`` (time to the next snapshot)."""
    linf = float(np.max(np.abs(f.values), initial=0.0))
    return _timestep(linf, f.grid.spacing, p, cfg, gap)


def step(f: Field, p: KSParams, dt: float, dealias_fraction: float = 2.0 / 3.0) -> Field:
    """Advance ``f`` by one integrating-factor RK4 step of size ``dt``."""
    op = KSOperator(f.grid, p, dealias_fraction)
    out = np.fft.irfft(op.step(np.fft.rfft(f.values), dt), f.grid.n_points)
    if not np.all(np.isfinite(out)):
        raise BlowUpError(f"non-finite state after step of size {dt:g}", t=dt)
    return Field(f.grid, out)


def _check_support(f: Field, t: float, cfg: SolverConfig):
    frac = boundary_fraction(f)
    if frac > cfg.boundary_tolerance:
        raise SupportError(
            f"solution reaches the outer 10% of the box at t={t:g} "
            f"(relative amplitude {frac:.2e}); enlarge half_length"
        )


def simulate(datum: InitialDatum, p: KSParams, cfg: SolverConfig, grid: Grid, *,
             allow_nonconservative: bool = False, check_support: bool = True,
             initial: Field | None = None) -> Trajectory:
    """Integrate from the mollified datum, recording snapshots and a dense log.

    Raises
    ------
    NonConservativeError
        Coefficients violate the energy-preserving constraints and
        ``allow_nonconservative`` is false.
    BlowUpError
        The state became non-finite; ``err.trajectory`` holds everything up
        to the last good step.
    SupportError
        The solution came within 10% of the box edge.
    """
    if not p.energy_preserving and not allow_nonconservative:
        raise NonConservativeError(
            "coefficients are not energy preserving (need B=2A/3, C=-A/3, D=0); "
            "pass allow_nonconservative=True to run anyway"
        )
    f0 = initial if initial is not None else mollify(datum, grid, eps=p.eps)
    op = KSOperator(grid, p, cfg.dealias_fraction)
    traj = Trajectory(params=p, grid=grid, datum=datum)
    traj.snapshots.append((0.0, f0))
    rows = []
    u_hat = np.fft.rfft(f0.values)
    rows.append(op.functionals(u_hat, 0.0))
    if check_support:
        _check_support(f0, 0.0, cfg)

    t = 0.0
    n = grid.n_points
    u = f0.values
    # overflow is detected explicitly below; silence numpy's warnings
    with np.errstate(over="ignore", invalid="ignore"):
        for target in cfg.snapshot_times[1:]:
            while t < target:
                gap = target - t
                linf = float(np.max(np.abs(u)))
                dt = _timestep(linf, grid.spacing, p, cfg, gap)
                hit = dt >= gap * (1.0 - 1e-12)
                if hit:
                    dt = gap
                try:
                    new_hat = op.step(u_hat, dt)
                except OverflowError as exc:
                    _fail(traj, rows, t, str(exc))
                u_new = np.fft.irfft(new_hat, n)
                if not np.all(np.isfinite(u_new)):
                    _fail(traj, rows, t, f"non-finite state at t={t + dt:g}")
                u_hat, u = new_hat, u_new
                t = target if hit else t + dt
                traj.step_count += 1
                traj.accepted_dt_history.append(dt)
                rows.append(op.functionals(u_hat, t))
                if traj.step_count > cfg.max_steps:
                    _fail(traj, rows, t, f"step budget {cfg.max_steps} exhausted")
            snap = Field(grid, u.copy())
            traj.snapshots.append((target, snap))
            if check_support:
                _check_support(snap, target, cfg)
    traj.log = _rows_to_log(rows)
    return traj


def _timestep(linf, h, p, cfg, gap):
    # the D term is parabolic, hence the extra h**2 bound
    dt_adv = cfg.cfl_advective * h / (abs(p.a_coeff) * linf + _TINY)
    dt_disp = cfg.cfl_dispersive * h**3 / (
        p.beta * (abs(p.b_coeff) + abs(p.c_coeff)) * (linf + 1.0) + _TINY
    )
    dt = min(dt_adv, dt_disp, gap)
    if p.d_coeff != 0.0:
        dt = min(dt, cfg.cfl_dispersive * h**2 / (abs(p.d_coeff) * p.beta * (linf + 1.0) + _TINY))
    return dt


def _rows_to_log(rows) -> dict:
    arr = np.array(rows, dtype=float).reshape(-1, len(LOG_COLUMNS))
    return {name: arr[:, i].copy() for i, name in enumerate(LOG_COLUMNS)}


def _fail(traj, rows, t, message):
    traj.log = _rows_to_log(rows)
    traj.failure = message
    log.warning("blow-up: %s", message)
    raise BlowUpError(message, t=t, trajectory=traj)
