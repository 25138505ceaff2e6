"""Coefficient tuples for the regularized equation and the root analysis of
``g(X) = X**(2n) + 3X - 3*alpha`` used when ``A = (C + alpha)**(2n)``."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

CONSTRAINT_TOL = 1e-12


@dataclass(frozen=True)
class KSParams:
    """Coefficients of

    u_t + A u u_x + beta u_xxx - B beta (u u_xx)_x - C beta u_x u_xx
        - eps u_xx - D beta (u u_x)_x = 0
    """

    a_coeff: float = 1.0
    b_coeff: float = 2.0 / 3.0
    c_coeff: float = -1.0 / 3.0
    d_coeff: float = 0.0
    beta: float = 0.0
    eps: float = 0.0

    def __post_init__(self):
        if self.beta < 0 or self.eps < 0:
            raise ValueError("beta and eps must be nonnegative")
        for name in ("a_coeff", "b_coeff", "c_coeff", "d_coeff", "beta", "eps"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")

    @classmethod
    def from_a(cls, a_coeff: float = 1.0, eps: float = 0.0, beta: float = 0.0):
        """Energy-preserving tuple ``B = 2A/3``, ``C = -A/3``, ``D = 0``."""
        b, c = energy_preserving_coefficients(a_coeff)
        return cls(a_coeff, b, c, 0.0, beta, eps)

    @property
    def energy_preserving(self) -> bool:
        return verify_constraint_system(self)

    def constraint_residuals(self) -> tuple[float, float]:
        a, b, c = self.a_coeff, self.b_coeff, self.c_coeff
        return abs(a - b + c), abs(b + 2 * c)

    def as_dict(self) -> dict:
        return dict(a=self.a_coeff, b=self.b_coeff, c=self.c_coeff, d=self.d_coeff,
                    beta=self.beta, eps=self.eps)


def energy_preserving_coefficients(a_coeff: float) -> tuple[float, float]:
    """Return ``(B, C) = (2A/3, -A/3)``."""
    return 2.0 * a_coeff / 3.0, -a_coeff / 3.0


def verify_constraint_system(p: KSParams) -> bool:
    """True iff ``A - B + C = 0``, ``B + 2C = 0`` (to 1e-12) and ``D = 0``."""
    r1, r2 = p.constraint_residuals()
    return r1 < CONSTRAINT_TOL and r2 < CONSTRAINT_TOL and p.d_coeff == 0.0


def coupling_beta(eps: float, c_coupling: float = 1.0) -> float:
    if not eps > 0 or not c_coupling > 0:
        raise ValueError("eps and the coupling constant must be positive")
    return c_coupling * eps**4


# ---------------------------------------------------------------------------
# A = (C + alpha)^(2n)


@dataclass(frozen=True)
class AppendixProblem:
    n_exponent: int
    alpha: float = 0.0

    def __post_init__(self):
        if int(self.n_exponent) != self.n_exponent or self.n_exponent < 1:
            raise ValueError("n_exponent must be a positive integer")


class NoRealRootsError(ValueError):
    pass


class RootFindingError(RuntimeError):
    pass


def _ipow(x: float, m: int) -> float:
    result = 1.0
    base = x
    while m:
        if m & 1:
            result *= base
        base *= base
        m >>= 1
    return result


def appendix_g(x: float, prob: AppendixProblem) -> float:
    return _ipow(x, 2 * prob.n_exponent) + 3.0 * x - 3.0 * prob.alpha


def critical_point(n_exponent: int) -> float:
    """The unique minimiser ``X0 = -(3/2n)**(1/(2n-1))`` of ``g``."""
    n = n_exponent
    return -((3.0 / (2 * n)) ** (1.0 / (2 * n - 1)))


def alpha_threshold(n_exponent: int) -> float:
    """Smallest alpha for which ``g`` has real zeros.

    Equivalent to ``g(X0) <= 0``:
    ``alpha >= 3**(1/(2n-1)) * (1/2n)**(2n/(2n-1)) - (3/2n)**(1/(2n-1))``.
    """
    n = n_exponent
    e = 1.0 / (2 * n - 1)
    return 3.0**e * (1.0 / (2 * n)) ** (2 * n * e) - (3.0 / (2 * n)) ** e


def two_roots_certificate(prob: AppendixProblem) -> bool:
    """``g(X0) <= 0``: with ``g -> +inf`` at both ends and ``g`` convex this
    gives exactly two real zeros ``X1 <= X0 <= X2`` (a double zero on equality)."""
    return appendix_g(critical_point(prob.n_exponent), prob) <= 0.0


@dataclass(frozen=True)
class AppendixRoots:
    x1: float
    x2: float
    a1: float
    a2: float
    c1: float
    c2: float
    boundary_root: bool

    def admissible(self) -> list[tuple[float, float]]:
        """``(A, C)`` pairs with ``C != 0``."""
        out = []
        for a, c in ((self.a1, self.c1), (self.a2, self.c2)):
            if c != 0.0:
                out.append((a, c))
        return out


def _bisect(g, lo: float, hi: float, max_iter: int = 200) -> float:
    """Zero of ``g`` on ``[lo, hi]`` given a sign change (or an endpoint zero)."""
    glo, ghi = g(lo), g(hi)
    if glo == 0.0:
        return lo
    if ghi == 0.0:
        return hi
    if glo * ghi > 0:
        raise RootFindingError(f"no sign change on [{lo}, {hi}]")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        gm = g(mid)
        if gm == 0.0:
            return mid
        if (gm < 0) == (glo < 0):
            lo, glo = mid, gm
        else:
            hi, ghi = mid, gm
    return lo if abs(glo) <= abs(ghi) else hi


def _expand(g, x0: float, direction: float, max_expansions: int = 1000) -> float:
    step = 1.0
    for _ in range(max_expansions):
        x = x0 + direction * step
        if g(x) > 0:
            return x
        step *= 2.0
    raise RootFindingError("bracket expansion did not find a sign change")


def appendix_roots(prob: AppendixProblem) -> AppendixRoots:
    """Both real zeros of ``g`` and the coefficients ``A = X**(2n)``, ``C = X - alpha``."""
    if not two_roots_certificate(prob):
        raise NoRealRootsError(
            f"g(X0) > 0 for n={prob.n_exponent}, alpha={prob.alpha}: no real zeros"
        )
    g = lambda x: appendix_g(x, prob)  # noqa: E731
    x0 = critical_point(prob.n_exponent)
    x1 = _bisect(g, _expand(g, x0, -1.0), x0)
    x2 = _bisect(g, x0, _expand(g, x0, +1.0))
    tol = 1e-12 * (1.0 + abs(3.0 * prob.alpha))
    for xr in (x1, x2):
        if abs(g(xr)) >= tol:
            raise RootFindingError(f"residual {g(xr):.3e} at X={xr!r} exceeds {tol:.1e}")
    m = 2 * prob.n_exponent
    return AppendixRoots(
        x1=x1, x2=x2,
        a1=_ipow(x1, m), a2=_ipow(x2, m),
        c1=x1 - prob.alpha, c2=x2 - prob.alpha,
        boundary_root=(x1 == 0.0 or x2 == 0.0),
    )


def odd_exponent_check(n_exponent: int, mesh=None) -> dict:
    """``A = C**(2n+1)`` with ``A = -3C`` reduces to ``C**(2n) + 3 = 0``.

    Returns the sampled minimum of ``C**(2n) + 3`` and the analytic lower
    bound 3; ``has_real_root`` is False whenever both are positive.
    """
    if mesh is None:
        mesh = np.linspace(-10.0, 10.0, 20001)
    vals = np.asarray(mesh, dtype=float) ** (2 * n_exponent) + 3.0
    sampled_min = float(vals.min())
    # C**(2n) >= 0 everywhere, so 3 is a rigorous lower bound
    return dict(sampled_min=sampled_min, lower_bound=3.0,
                has_real_root=sampled_min <= 0.0)


def scan_has_real_roots(prob: AppendixProblem, x_lo=-6.0, x_hi=6.0, n_mesh=4001) -> bool:
    """Brute-force oracle: sign scan of ``g`` on a mesh, refined near the
    sampled minimum; independent of the critical-point formula."""
    from scipy.optimize import minimize_scalar

    xs = np.linspace(x_lo, x_hi, n_mesh)
    vals = xs ** (2 * prob.n_exponent) + 3.0 * xs - 3.0 * prob.alpha
    if np.any(vals <= 0.0):
        return True
    i = int(np.argmin(vals))
    lo, hi = xs[max(i - 1, 0)], xs[min(i + 1, n_mesh - 1)]
    res = minimize_scalar(lambda x: appendix_g(x, prob), bounds=(lo, hi),
                          method="bounded", options=dict(xatol=1e-14))
    return bool(min(res.fun, vals[i]) <= 1e-12 * (1.0 + abs(3.0 * prob.alpha)))
