"""Periodic 1-D grids, fields, spectral calculus and mollified initial data."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Sequence

import numpy as np


class SupportError(ValueError):
    """Raised when data come too close to the edge of the periodic box."""


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid on ``[-half_length, half_length)``."""

    half_length: float
    n_points: int

    def __post_init__(self):
        n = self.n_points
        if not isinstance(n, (int, np.integer)) or n < 16 or n & (n - 1):
            raise ValueError(f"n_points must be a power of two >= 16, got {n!r}")
        if not self.half_length > 0:
            raise ValueError(f"half_length must be positive, got {self.half_length!r}")

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_length / self.n_points

    @property
    def length(self) -> float:
        return 2.0 * self.half_length

    @cached_property
    def x(self) -> np.ndarray:
        return -self.half_length + self.spacing * np.arange(self.n_points)

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        """Angular wavenumbers matching ``np.fft.rfft`` output."""
        return 2.0 * np.pi * np.fft.rfftfreq(self.n_points, d=self.spacing)

    @cached_property
    def odd_wavenumbers(self) -> np.ndarray:
        # Nyquist zeroed so odd derivatives stay real
        k = self.wavenumbers.copy()
        k[-1] = 0.0
        return k

    def dealias_mask(self, fraction: float = 2.0 / 3.0) -> np.ndarray:
        m = np.arange(self.n_points // 2 + 1)
        return m < fraction * (self.n_points / 2)

    def zeros(self) -> "Field":
        return Field(self, np.zeros(self.n_points))

    def field(self, func: Callable[[np.ndarray], np.ndarray]) -> "Field":
        return Field(self, np.asarray(func(self.x), dtype=float))


def make_grid(half_length: float, n_points: int) -> Grid:
    return Grid(float(half_length), int(n_points))


@dataclass(frozen=True, eq=False)
class Field:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.n_points,):
            raise ValueError(
                f"field has shape {v.shape}, grid expects ({self.grid.n_points},)"
            )
        if not np.all(np.isfinite(v)):
            raise ValueError("field contains non-finite values")
        object.__setattr__(self, "values", v)

    @property
    def x(self) -> np.ndarray:
        return self.grid.x

    def __len__(self):
        return self.grid.n_points


def spectral_derivative(f: Field, order: int) -> Field:
    """Differentiate the trigonometric interpolant of ``f`` exactly.

    Odd orders drop the Nyquist mode, which keeps the result real.
    """
    if order not in (1, 2, 3):
        raise ValueError(f"derivative order must be 1, 2 or 3, got {order!r}")
    g = f.grid
    k = g.odd_wavenumbers if order % 2 else g.wavenumbers
    factor = {1: 1j * k, 2: -k * k, 3: -1j * k**3}[order]
    u_hat = np.fft.rfft(f.values)
    return Field(g, np.fft.irfft(factor * u_hat, n=g.n_points))


def norm(f: Field, which: str = "L2") -> float:
    """Rectangle-rule Lebesgue norm; ``which`` is one of L1, L2, L4, Linf."""
    v = np.abs(f.values)
    if which == "Linf":
        return float(v.max(initial=0.0))
    p = {"L1": 1, "L2": 2, "L4": 4}.get(which)
    if p is None:
        raise ValueError(f"unknown norm {which!r}")
    return float((f.grid.spacing * np.sum(v**p)) ** (1.0 / p))


def product_integral(fs: Sequence[Field]) -> float:
    """Integral over the box of the pointwise product of ``|f_i|``."""
    if not fs:
        raise ValueError("need at least one field")
    g = fs[0].grid
    prod = np.ones(g.n_points)
    for f in fs:
        if f.grid != g:
            raise ValueError("fields live on different grids")
        prod *= np.abs(f.values)
    return float(g.spacing * prod.sum())


def _cell_average_box(grid: Grid, left: float, right: float) -> np.ndarray:
    """Average over each node's cell of the indicator of ``[left, right)``."""
    h = grid.spacing
    lo = np.maximum(grid.x - h / 2, left)
    hi = np.minimum(grid.x + h / 2, right)
    return np.clip(hi - lo, 0.0, None) / h


def _smoothed_box(x: np.ndarray, left: float, right: float, width: float) -> np.ndarray:
    return 0.5 * (np.tanh((x - left) / width) - np.tanh((x - right) / width))


@dataclass(frozen=True, eq=False)
class InitialDatum:
    """Compactly supported (or Gaussian-tailed) initial profile.

    Build instances with :meth:`riemann_step`, :meth:`gaussian`,
    :meth:`custom` or :meth:`zero`. ``mollification_width=None`` defers
    the width to :func:`default_mollification_width`.
    """

    kind: str
    options: dict = field(default_factory=dict)
    mollification_width: float | None = None

    def __post_init__(self):
        if self.kind not in ("riemann_step", "gaussian", "custom", "zero"):
            raise ValueError(f"unknown datum kind {self.kind!r}")
        w = self.mollification_width
        if w is not None and not w > 0:
            raise ValueError("mollification_width must be positive")

    @classmethod
    def riemann_step(cls, u_l, u_r, x0=0.0, extent=4.0, transition_width=0.0,
                     mollification_width=None):
        """``u_l`` on ``[x0-extent, x0)``, ``u_r`` on ``[x0, x0+extent)``, zero elsewhere."""
        if not extent > 0:
            raise ValueError("extent must be positive")
        opts = dict(u_l=float(u_l), u_r=float(u_r), x0=float(x0),
                    extent=float(extent), transition_width=float(transition_width))
        return cls("riemann_step", opts, mollification_width)

    @classmethod
    def gaussian(cls, amplitude, width, center=0.0, mollification_width=None):
        if not width > 0:
            raise ValueError("gaussian width must be positive")
        opts = dict(amplitude=float(amplitude), width=float(width), center=float(center))
        return cls("gaussian", opts, mollification_width)

    @classmethod
    def custom(cls, sample_function, support=None, mollification_width=None):
        """``support=None`` skips the box-edge check (periodic or constant data)."""
        if support is not None:
            lo, hi = support
            support = (float(lo), float(hi))
        return cls("custom", dict(func=sample_function, support=support), mollification_width)

    @classmethod
    def zero(cls, mollification_width=None):
        return cls("zero", {}, mollification_width)

    def support(self) -> tuple[float, float] | None:
        o = self.options
        if self.kind == "riemann_step":
            tw = 6 * o["transition_width"]
            left = o["x0"] - o["extent"] if o["u_l"] != 0 else o["x0"]
            right = o["x0"] + o["extent"] if o["u_r"] != 0 else o["x0"]
            if o["u_l"] == 0 and o["u_r"] == 0:
                return None
            return left - tw, right + tw
        if self.kind == "gaussian":
            if o["amplitude"] == 0:
                return None
            # exp(-s^2/2) < 1e-8 beyond 6 widths
            return o["center"] - 6 * o["width"], o["center"] + 6 * o["width"]
        if self.kind == "custom":
            return o["support"]
        return None

    def sample(self, grid: Grid) -> np.ndarray:
        """Raw node values; sharp steps are sampled as cell averages."""
        o = self.options
        x = grid.x
        if self.kind == "riemann_step":
            x0, ext, tw = o["x0"], o["extent"], o["transition_width"]
            if tw > 0:
                return (o["u_l"] * _smoothed_box(x, x0 - ext, x0, tw)
                        + o["u_r"] * _smoothed_box(x, x0, x0 + ext, tw))
            return (o["u_l"] * _cell_average_box(grid, x0 - ext, x0)
                    + o["u_r"] * _cell_average_box(grid, x0, x0 + ext))
        if self.kind == "gaussian":
            s = (x - o["center"]) / o["width"]
            return o["amplitude"] * np.exp(-0.5 * s * s)
        if self.kind == "custom":
            return np.asarray(o["func"](x), dtype=float) * np.ones_like(x)
        return np.zeros_like(x)

    def describe(self) -> dict:
        d = {"kind": self.kind}
        d.update({k: v for k, v in self.options.items() if k != "func"})
        if self.mollification_width is not None:
            d["mollification_width"] = self.mollification_width
        return d


def default_mollification_width(eps: float, grid: Grid) -> float:
    return max(float(eps), 2.0 * grid.spacing)


def mollify(datum: InitialDatum, grid: Grid, eps: float = 0.0) -> Field:
    """Periodic Gaussian convolution of the datum, done in Fourier space.

    The kernel's standard deviation is ``datum.mollification_width`` or,
    when unset, ``max(eps, 2*spacing)``.
    """
    w = datum.mollification_width or default_mollification_width(eps, grid)
    supp = datum.support()
    if supp is not None:
        lo, hi = supp
        margin = 4.0 * w
        if lo - margin < -grid.half_length or hi + margin > grid.half_length:
            raise SupportError(
                f"datum support [{lo:g}, {hi:g}] is within 4 mollification widths "
                f"({margin:g}) of the box edge ±{grid.half_length:g}"
            )
    raw = datum.sample(grid)
    k = grid.wavenumbers
    smooth = np.fft.irfft(np.fft.rfft(raw) * np.exp(-0.5 * (k * w) ** 2), n=grid.n_points)
    return Field(grid, smooth)


def boundary_fraction(f: Field, zone: float = 0.1) -> float:
    """Largest ``|u|`` within the outer ``zone`` fraction of the box, relative to ``max|u|``."""
    peak = float(np.max(np.abs(f.values), initial=0.0))
    if peak == 0.0:
        return 0.0
    outer = np.abs(f.x) >= (1.0 - zone) * f.grid.half_length
    return float(np.max(np.abs(f.values[outer]), initial=0.0)) / peak


def write_field_csv(path, f: Field) -> None:
    data = np.column_stack([f.x, f.values])
    np.savetxt(path, data, delimiter=",", header="x,u", comments="", fmt="%.17g")


def read_field_csv(path, grid: Grid | None = None) -> Field:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    x, u = data[:, 0], data[:, 1]
    if grid is None:
        n = len(x)
        grid = Grid(float(-x[0]), n)
    if not np.allclose(x, grid.x, rtol=0, atol=1e-9 * max(1.0, grid.half_length)):
        raise ValueError(f"{path}: node coordinates do not match the grid")
    return Field(grid, u)


def interpolation_gap(f: Field) -> float:
    """``max(u^2) - min(u^2) - 2 ||u||_2 ||u_x||_2``; nonpositive for any field."""
    u2 = f.values**2
    ux = spectral_derivative(f, 1)
    return float(u2.max() - u2.min() - 2.0 * norm(f, "L2") * norm(ux, "L2"))


__all__ = [
    "Grid", "Field", "InitialDatum", "SupportError", "make_grid",
    "spectral_derivative", "norm", "product_integral", "mollify",
    "default_mollification_width", "boundary_fraction", "write_field_csv",
    "read_field_csv", "interpolation_gap",
]
