"""Entropy-solution reference for ``u_t + A u u_x = 0``.

Exact Riemann solutions, a first-order Godunov finite-volume scheme,
entropy/entropy-flux pairs and space-time residual tests of the weak and
entropy formulations.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import quad, trapezoid
from scipy.interpolate import CubicHermiteSpline

from .grid import Field, Grid, InitialDatum, mollify
from .params import KSParams
from .solver import Trajectory

log = logging.getLogger(__name__)


def riemann_exact(u_l, u_r, a_coeff, xi):
    """Entropy solution of the Riemann problem at similarity coordinate ``xi = x/t``."""
    if a_coeff == 0:
        raise ValueError("A = 0 is pure transport-free; the Riemann problem is degenerate")
    xi = np.asarray(xi, dtype=float)
    if a_coeff < 0:
        return -riemann_exact(-u_l, -u_r, -a_coeff, xi)
    a = a_coeff
    if u_l > u_r:
        s = 0.5 * a * (u_l + u_r)
        out = np.where(xi < s, u_l, u_r)
    elif u_l < u_r:
        out = np.clip(xi / a, u_l, u_r)
    else:
        out = np.full_like(xi, u_l)
    return out if out.ndim else float(out)


def godunov_flux(u_l, u_r, a_coeff):
    """Godunov flux for ``f(u) = A u^2 / 2``.

    ``min f`` over ``[u_l, u_r]`` when ``u_l <= u_r``, ``max f`` over
    ``[u_r, u_l]`` otherwise. Valid for either sign of ``A``.
    """
    ul = np.asarray(u_l, dtype=float)
    ur = np.asarray(u_r, dtype=float)
    f = lambda v: 0.5 * a_coeff * v * v  # noqa: E731
    lo, hi = np.minimum(ul, ur), np.maximum(ul, ur)
    fl, fr = f(ul), f(ur)
    # extremum of the parabola sits at u = 0
    f_vertex = f(np.clip(0.0, lo, hi))
    if a_coeff >= 0:
        fmin, fmax = f_vertex, np.maximum(fl, fr)
    else:
        fmin, fmax = np.minimum(fl, fr), f_vertex
    out = np.where(ul <= ur, fmin, fmax)
    return out if out.ndim else float(out)


def burgers_params(a_coeff: float) -> KSParams:
    return KSParams(a_coeff=a_coeff, b_coeff=0.0, c_coeff=0.0, d_coeff=0.0)


def total_variation(values: np.ndarray) -> float:
    return float(np.abs(np.diff(np.append(values, values[0]))).sum())


def godunov_run(u0: np.ndarray, a_coeff: float, grid: Grid, times, cfl: float = 0.9,
                speed: float | None = None):
    """Advance cell averages ``u0`` and return the states at ``times``.

    ``speed`` fixes the wave-speed bound used for the step size; by default
    it is ``|A| max|u|`` of the current state.
    """
    h = grid.spacing
    u = np.array(u0, dtype=float)
    t = 0.0
    out, steps, dts = [], 0, []
    for target in times:
        while t < target:
            c = abs(a_coeff) * np.abs(u).max() if speed is None else speed
            gap = target - t
            dt = min(cfl * h / c if c > 0 else np.inf, gap)
            hit = dt >= gap * (1.0 - 1e-12)
            if hit:
                dt = gap
            flux = godunov_flux(u, np.roll(u, -1), a_coeff)  # F_{i+1/2}
            u = u - (dt / h) * (flux - np.roll(flux, 1))
            t = target if hit else t + dt
            steps += 1
            dts.append(dt)
        out.append(u.copy())
    return out, steps, dts


def burgers_solve(datum: InitialDatum, a_coeff: float, grid: Grid, t_final: float,
                  snapshot_times=(), cfl: float = 0.9) -> Trajectory:
    """First-order Godunov solution from the mollified datum.

    The time step obeys ``dt |A| max|u| / h <= cfl``; ``cfl > 0.9`` is
    reduced to 0.9 and logged.
    """
    if cfl > 0.9:
        log.warning("CFL %.3g exceeds 0.9; reduced", cfl)
        cfl = 0.9
    times = sorted({0.0, float(t_final), *map(float, snapshot_times)})
    if times[0] < 0 or times[-1] > t_final:
        raise ValueError("snapshot times must lie in [0, t_final]")
    f0 = mollify(datum, grid, eps=0.0)
    states, steps, dts = godunov_run(f0.values, a_coeff, grid, times[1:], cfl)
    traj = Trajectory(params=burgers_params(a_coeff), grid=grid, datum=datum)
    traj.snapshots.append((0.0, f0))
    for t, s in zip(times[1:], states):
        traj.snapshots.append((t, Field(grid, s)))
    traj.step_count = steps
    traj.accepted_dt_history = dts
    h = grid.spacing
    traj.log = dict(
        t=np.array(times),
        mass=np.array([h * f.values.sum() for _, f in traj.snapshots]),
        total_variation=np.array([total_variation(f.values) for _, f in traj.snapshots]),
    )
    return traj


def profile_trajectory(grid: Grid, profile: Callable, times, a_coeff: float = 1.0) -> Trajectory:
    """Trajectory sampled from an analytic ``profile(t, x)``."""
    traj = Trajectory(params=burgers_params(a_coeff), grid=grid)
    for t in times:
        traj.snapshots.append((float(t), Field(grid, profile(float(t), grid.x))))
    traj.log = dict(t=traj.times)
    return traj


# ---------------------------------------------------------------------------
# entropy pairs


def _bump(s):
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    inside = np.abs(s) < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - s[inside] ** 2))
    return out


def _bump_d1(s):
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    i = np.abs(s) < 1.0
    w = 1.0 - s[i] ** 2
    out[i] = np.exp(-1.0 / w) * (-2.0 * s[i] / w**2)
    return out


def _bump_d2(s):
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    i = np.abs(s) < 1.0
    si = s[i]
    w = 1.0 - si**2
    out[i] = np.exp(-1.0 / w) * ((2.0 * si / w**2) ** 2 - 2.0 / w**2 - 8.0 * si**2 / w**3)
    return out


@dataclass
class EntropyPair:
    """Entropy ``eta`` with flux ``q(u) = int_0^u A xi eta'(xi) dxi``."""

    kind: str
    a_coeff: float
    eta: Callable
    eta_prime: Callable
    eta_second: Callable
    options: dict = field(default_factory=dict)
    u_range: tuple = (-4.0, 4.0)
    _spline: object = field(default=None, repr=False)
    _closed_q: Callable | None = field(default=None, repr=False)

    @property
    def convex(self) -> bool:
        """The sign test ``R <= 0`` only applies to convex entropies."""
        return self.kind in ("square", "kruzhkov_smoothed")

    def flux_integrand(self, xi):
        return self.a_coeff * xi * self.eta_prime(np.asarray(xi, dtype=float))

    def q(self, u):
        u = np.asarray(u, dtype=float)
        if self._closed_q is not None:
            return self._closed_q(u)
        lo, hi = self.u_range
        inside = (u >= lo) & (u <= hi)
        out = np.empty_like(u)
        out[inside] = self._spline(u[inside])
        for i in np.flatnonzero(~inside.ravel()):
            out.flat[i] = self._quad(0.0, float(u.flat[i]))
        return out if out.ndim else float(out)

    def _quad(self, a, b):
        pts = [p for p in self._kinks() if min(a, b) < p < max(a, b)]
        val, _ = quad(lambda s: float(self.flux_integrand(s)), a, b,
                      points=pts or None, epsabs=1e-13, epsrel=1e-12, limit=200)
        return val

    def _kinks(self):
        o = self.options
        if self.kind == "kruzhkov_smoothed":
            return [o["k"]]
        if self.kind == "compact_bump":
            return [o["center"] - o["radius"], o["center"] + o["radius"]]
        return []

    def label(self) -> str:
        if not self.options:
            return self.kind
        return self.kind + "(" + ",".join(f"{k}={v:g}" for k, v in self.options.items()) + ")"


def make_entropy_pair(kind: str = "square", a_coeff: float = 1.0, *, k: float = 0.0,
                      delta: float = 0.1, center: float = 0.5, radius: float = 1.0,
                      u_range=(-4.0, 4.0), n_mesh: int = 4001) -> EntropyPair:
    """Entropy pair of the given kind.

    ``square``: ``eta = u^2`` with closed-form ``q = 2 A u^3 / 3``.
    ``kruzhkov_smoothed``: ``eta = sqrt((u - k)^2 + delta^2)``.
    ``compact_bump``: smooth bump of the given center and radius.

    Non-closed fluxes are tabulated by adaptive quadrature on a mesh over
    ``u_range`` and interpolated with a cubic Hermite spline whose slopes
    are the exact ``A u eta'(u)``.
    """
    if kind == "square":
        return EntropyPair(
            kind, a_coeff,
            eta=lambda u: np.asarray(u, dtype=float) ** 2,
            eta_prime=lambda u: 2.0 * np.asarray(u, dtype=float),
            eta_second=lambda u: np.full_like(np.asarray(u, dtype=float), 2.0),
            u_range=tuple(u_range),
            _closed_q=lambda u: 2.0 * a_coeff * np.asarray(u, dtype=float) ** 3 / 3.0,
        )
    if kind == "kruzhkov_smoothed":
        if not delta > 0:
            raise ValueError("delta must be positive")
        d2 = delta * delta

        def eta(u):
            return np.sqrt((np.asarray(u, dtype=float) - k) ** 2 + d2)

        def eta_prime(u):
            v = np.asarray(u, dtype=float) - k
            return v / np.sqrt(v * v + d2)

        def eta_second(u):
            v = np.asarray(u, dtype=float) - k
            return d2 / (v * v + d2) ** 1.5

        pair = EntropyPair(kind, a_coeff, eta, eta_prime, eta_second,
                           dict(k=float(k), delta=float(delta)), tuple(u_range))
    elif kind == "compact_bump":
        if not radius > 0:
            raise ValueError("radius must be positive")
        pair = EntropyPair(
            kind, a_coeff,
            eta=lambda u: _bump((np.asarray(u, dtype=float) - center) / radius),
            eta_prime=lambda u: _bump_d1((np.asarray(u, dtype=float) - center) / radius) / radius,
            eta_second=lambda u: _bump_d2((np.asarray(u, dtype=float) - center) / radius) / radius**2,
            options=dict(center=float(center), radius=float(radius)),
            u_range=tuple(u_range),
        )
    else:
        raise ValueError(f"unknown entropy pair kind {kind!r}")
    _tabulate(pair, n_mesh)
    return pair


def _tabulate(pair: EntropyPair, n_mesh: int):
    lo, hi = pair.u_range
    if not lo <= 0.0 <= hi:
        raise ValueError("u_range must contain 0")
    anchors = np.array([0.0, *pair._kinks()])
    pieces = [np.linspace(lo, hi, n_mesh)]
    if pair.kind == "kruzhkov_smoothed":
        # resolve the smoothed kink when delta is below the mesh spacing
        o = pair.options
        pieces.append(o["k"] + o["delta"] * np.linspace(-10.0, 10.0, 2001))
    mesh = np.unique(np.concatenate(pieces))
    near = np.min(np.abs(mesh[:, None] - anchors[None, :]), axis=1) < 1e-9
    mesh = np.unique(np.concatenate([mesh[~near], anchors]))
    mesh = mesh[(mesh >= lo) & (mesh <= hi)]
    mesh = mesh[np.concatenate([[True], np.diff(mesh) > 1e-9])]
    i0 = int(np.searchsorted(mesh, 0.0))
    q = np.zeros_like(mesh)
    for i in range(i0 + 1, len(mesh)):
        q[i] = q[i - 1] + pair._quad(mesh[i - 1], mesh[i])
    for i in range(i0 - 1, -1, -1):
        q[i] = q[i + 1] - pair._quad(mesh[i], mesh[i + 1])
    pair._spline = CubicHermiteSpline(mesh, q, pair.flux_integrand(mesh))


# ---------------------------------------------------------------------------
# space-time residuals


@dataclass(frozen=True)
class TestFunction:
    """Separable bump ``amplitude * b((t - tc)/tr) * b((x - xc)/xr)``."""

    __test__ = False  # keep pytest from collecting this class

    t_center: float
    t_radius: float
    x_center: float
    x_radius: float
    amplitude: float = 1.0

    def __post_init__(self):
        if not (self.t_radius > 0 and self.x_radius > 0):
            raise ValueError("test-function radii must be positive")

    @property
    def nonnegative(self) -> bool:
        return self.amplitude >= 0

    @property
    def t_support(self):
        return self.t_center - self.t_radius, self.t_center + self.t_radius

    @property
    def x_support(self):
        return self.x_center - self.x_radius, self.x_center + self.x_radius

    def tau(self, t):
        return _bump((np.asarray(t, dtype=float) - self.t_center) / self.t_radius)

    def tau_prime(self, t):
        return _bump_d1((np.asarray(t, dtype=float) - self.t_center) / self.t_radius) / self.t_radius

    def chi(self, x):
        return _bump((np.asarray(x, dtype=float) - self.x_center) / self.x_radius)

    def chi_prime(self, x):
        return _bump_d1((np.asarray(x, dtype=float) - self.x_center) / self.x_radius) / self.x_radius

    def label(self) -> str:
        return f"t={self.t_center:g}±{self.t_radius:g},x={self.x_center:g}±{self.x_radius:g}"


class SupportViolation(ValueError):
    pass


def _check_window(traj: Trajectory, phi: TestFunction, allow_initial: bool):
    t = traj.times
    t_lo, t_hi = phi.t_support
    x_lo, x_hi = phi.x_support
    L = traj.grid.half_length
    if t_hi > t[-1] + 1e-12 or t_hi <= 0:
        raise SupportViolation(f"test function time support {phi.t_support} not inside [0, {t[-1]}]")
    if not allow_initial and t_lo < 0:
        raise SupportViolation("test function must vanish near t = 0")
    if x_lo <= -L or x_hi >= L:
        raise SupportViolation(f"test function space support {phi.x_support} leaves the box")


def _space_time(traj: Trajectory, integrand) -> float:
    h = traj.grid.spacing
    t = traj.times
    vals = [h * np.sum(integrand(ts, f.values)) for ts, f in traj.snapshots]
    return float(trapezoid(vals, t))


def weak_form_residual(traj: Trajectory, a_coeff: float, datum_field: Field,
                       phi: TestFunction) -> float:
    """``int int (u phi_t + A u^2/2 phi_x) dt dx + int u0 phi(0, x) dx``."""
    _check_window(traj, phi, allow_initial=True)
    x = traj.grid.x
    chi, dchi = phi.chi(x), phi.chi_prime(x)

    def integrand(t, u):
        return u * phi.tau_prime(t) * chi + 0.5 * a_coeff * u * u * phi.tau(t) * dchi

    initial = traj.grid.spacing * np.sum(datum_field.values * phi.tau(0.0) * chi)
    return _space_time(traj, integrand) + float(initial)


def entropy_residual(traj: Trajectory, pair: EntropyPair, phi: TestFunction) -> float:
    """``-int int (eta(u) phi_t + q(u) phi_x) dt dx``; nonpositive for entropy solutions."""
    if not phi.nonnegative:
        raise ValueError("entropy test functions must be nonnegative")
    _check_window(traj, phi, allow_initial=False)
    x = traj.grid.x
    chi, dchi = phi.chi(x), phi.chi_prime(x)

    def integrand(t, u):
        return pair.eta(u) * phi.tau_prime(t) * chi + pair.q(u) * phi.tau(t) * dchi

    return -_space_time(traj, integrand)


def entropy_report(traj: Trajectory, pairs, phis, datum_field: Field | None = None,
                   tolerance: float | None = None) -> list[dict]:
    """One row per ``(phi, pair)``.

    For convex pairs the verdict is PASS when the entropy residual is at most
    ``tolerance`` (default ``1e-8 + 10 * spacing``). Non-convex pairs carry
    no sign constraint and are reported as INFO.
    """
    if tolerance is None:
        tolerance = 1e-8 + 10.0 * traj.grid.spacing
    if datum_field is None:
        datum_field = traj.snapshots[0][1]
    a = traj.params.a_coeff
    rows = []
    for i, phi in enumerate(phis):
        weak = weak_form_residual(traj, a, datum_field, phi)
        for pair in pairs:
            r = entropy_residual(traj, pair, phi)
            rows.append(dict(phi_id=i, phi=phi.label(), pair_kind=pair.label(),
                             weak_residual=weak, entropy_residual=r,
                             verdict=("PASS" if r <= tolerance else "FAIL") if pair.convex
                             else "INFO"))
    return rows
