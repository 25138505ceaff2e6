"""Acceptance gate: one test per criterion, each printing a single verdict line.

Run with ``pytest tests/test_acceptance.py -v -s``.
"""

import time
from pathlib import Path

import numpy as np
import pytest
from scipy.integrate import trapezoid

from kslab.burgers import (TestFunction, burgers_solve, entropy_residual, make_entropy_pair,
                           profile_trajectory, riemann_exact)
from kslab.config import parse_config
from kslab.estimates import RATE_LABELS, dissipation_budget, rate_quantities
from kslab.grid import InitialDatum, interpolation_gap, make_grid, mollify
from kslab.limit import empirical_order, run_sweep
from kslab.params import (AppendixProblem, KSParams, alpha_threshold, appendix_roots,
                          energy_preserving_coefficients, odd_exponent_check,
                          scan_has_real_roots, two_roots_certificate, verify_constraint_system)
from kslab.solver import KSOperator, SolverConfig, simulate

SWEEP_CONFIG = Path(__file__).resolve().parents[1] / "configs" / "limit_shock.ini"
GAUSS = InitialDatum.gaussian(1.0, 1.0)


@pytest.fixture
def verdict(capsys):
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\n[criterion {n}] {'PASS' if ok else 'FAIL'} {detail}")
        assert ok, detail
    return emit


# --- shared runs -----------------------------------------------------------


@pytest.fixture(scope="module")
def gaussian_runs():
    g = make_grid(10.0, 1024)
    cfg = SolverConfig(1.0, tuple(np.round(np.arange(1, 10) * 0.1, 12)))
    start = time.perf_counter()
    viscous = simulate(GAUSS, KSParams.from_a(1.0, eps=0.05, beta=0.05**4), cfg, g)
    conservative = simulate(GAUSS, KSParams.from_a(1.0, eps=0.0, beta=0.05**4), cfg, g)
    return dict(viscous=viscous, conservative=conservative,
                runtime=time.perf_counter() - start)


@pytest.fixture(scope="module")
def linear_run():
    p = KSParams.from_a(0.0, eps=0.05, beta=1e-3)
    return simulate(GAUSS, p, SolverConfig(1.0, tuple(np.arange(1, 11) * 0.1)),
                    make_grid(10.0, 256))


@pytest.fixture(scope="module")
def sweep():
    cfg = parse_config(SWEEP_CONFIG, "limit").sweep()
    start = time.perf_counter()
    table = run_sweep(cfg, jobs=4)
    return cfg, table, time.perf_counter() - start


def _fixed_step_run(p, n, dt, t_final):
    g = make_grid(10.0, n)
    op = KSOperator(g, p)
    u = np.fft.rfft(mollify(InitialDatum.gaussian(1, 1, mollification_width=0.1), g).values)
    for _ in range(int(round(t_final / dt))):
        u = op.step(u, dt)
    return np.fft.irfft(u, n)


# --- criteria --------------------------------------------------------------


def test_criterion_1_coefficient_algebra(verdict):
    rng = np.random.default_rng(1)
    start = time.perf_counter()
    worst, all_ok = 0.0, True
    for a in rng.uniform(-100, 100, 100):
        b, c = energy_preserving_coefficients(a)
        p = KSParams(a, b, c, 0.0)
        worst = max(worst, *map(abs, p.constraint_residuals()))
        all_ok &= verify_constraint_system(p)
    runtime = time.perf_counter() - start
    ok = all_ok and worst < 1e-12 and runtime < 1.0
    verdict(1, ok, f"max residual {worst:.1e} over 100 random A, {runtime:.3f} s")


def test_criterion_2_appendix_roots(verdict):
    start = time.perf_counter()
    r = appendix_roots(AppendixProblem(1, 0.0))
    e1 = max(abs(r.x1 + 3), abs(r.x2))
    # X^2 + 3X - 3 = 0
    q = np.array([(-3 - np.sqrt(21)) / 2, (-3 + np.sqrt(21)) / 2])
    r = appendix_roots(AppendixProblem(1, 1.0))
    e2 = np.abs(np.array([r.x1, r.x2]) - q).max()
    r = appendix_roots(AppendixProblem(2, 0.0))
    e3 = max(abs(r.x1 + 3 ** (1 / 3)), abs(r.x2))
    odd = [odd_exponent_check(n)["has_real_root"] for n in (1, 2, 3)]
    # the scan oracle agrees with the certificate on the three cases above
    scans = [scan_has_real_roots(AppendixProblem(n, a)) for n, a in ((1, 0), (1, 1), (2, 0))]
    runtime = time.perf_counter() - start
    ok = e1 < 1e-10 and e2 < 1e-10 and e3 < 1e-10 and not any(odd) and all(scans) \
        and runtime < 1.0
    verdict(2, ok, f"errors {e1:.1e} {e2:.1e} {e3:.1e}, odd exponent real root {any(odd)}, "
                   f"{runtime:.3f} s")


def test_criterion_3_solver_correctness(verdict, linear_run):
    start = time.perf_counter()
    # single steps of the linear operator against the exact Fourier factor
    p = KSParams.from_a(0.0, eps=0.05, beta=1e-3)
    g = make_grid(10.0, 256)
    op = KSOperator(g, p)
    sym = 1j * p.beta * g.odd_wavenumbers**3 - p.eps * g.wavenumbers**2
    u = np.fft.rfft(mollify(GAUSS, g).values)
    step_err = 0.0
    for dt in (1e-3, 0.01, 0.1):
        exact = np.fft.irfft(np.exp(dt * sym) * u, 256)
        got = np.fft.irfft(op.step(u, dt), 256)
        step_err = max(step_err, np.abs(got - exact).max() / np.abs(exact).max())
    # snapshot-to-snapshot on the adaptive run
    run_err = 0.0
    prev_t, prev = linear_run.snapshots[0]
    for t, f in linear_run.snapshots[1:]:
        exact = np.fft.irfft(np.exp((t - prev_t) * sym) * np.fft.rfft(prev.values), 256)
        run_err = max(run_err, np.abs(f.values - exact).max() / np.abs(exact).max())
        prev_t, prev = t, f

    p = KSParams.from_a(1.0, eps=0.01, beta=1e-3)
    ref = _fixed_step_run(p, 256, 0.05 / 32, 0.5)
    errs = [np.abs(_fixed_step_run(p, 256, dt, 0.5) - ref).max() for dt in (0.05, 0.025, 0.0125)]
    orders = np.log2(np.array(errs[:-1]) / errs[1:])

    ref = _fixed_step_run(p, 512, 0.01, 0.5)
    serr = [np.abs(_fixed_step_run(p, n, 0.01, 0.5) - ref[:: 512 // n]).max()
            for n in (32, 64, 128, 256)]
    spectral_ok = all(f <= max(c / 10, 1e-11) for c, f in zip(serr, serr[1:]))
    runtime = time.perf_counter() - start
    ok = step_err < 1e-12 and run_err < 1e-12 and np.all(orders >= 3.5) and spectral_ok \
        and runtime < 120
    verdict(3, ok, f"linear step {step_err:.1e}, linear run {run_err:.1e}, "
                   f"temporal orders {np.round(orders, 2).tolist()}, "
                   f"spatial errors {[f'{e:.1e}' for e in serr]}, {runtime:.1f} s")


def test_criterion_4_energy_identity(verdict, gaussian_runs):
    b = dissipation_budget(gaussian_runs["viscous"])
    defect = abs(b["defect"][-1])
    log = gaussian_runs["viscous"].log
    # independent recomputation of the budget from the raw per-step log
    raw = abs(log["energy"][0] - log["energy"][-1]
              - trapezoid(log["dissipation_rate"], log["t"]))
    e = gaussian_runs["conservative"].log["energy"]
    drift = abs(e[-1] - e[0])
    ok = defect < 1e-5 and raw < 1e-5 and drift < 1e-8 and gaussian_runs["runtime"] < 120
    verdict(4, ok, f"budget defect {defect:.2e}, eps=0 energy drift {drift:.2e}, "
                   f"{gaussian_runs['runtime']:.1f} s")


def test_criterion_5_mass(verdict, gaussian_runs, linear_run):
    runs = [gaussian_runs["viscous"], gaussian_runs["conservative"], linear_run]
    drift = 0.0
    for traj in runs:
        h = traj.grid.spacing
        drift = max(drift, abs(h * traj.final.values.sum() - h * traj.snapshots[0][1].values.sum()))
    verdict(5, drift < 1e-8, f"max mass drift {drift:.2e} over {len(runs)} smooth runs")


def test_criterion_6_uniform_bounds(verdict, sweep):
    cfg, table, runtime = sweep
    rows, norm_rates = [], {}
    for eps in cfg.eps_sequence:
        traj = table.trajectories[eps]
        log = traj.log
        rows.append((np.sqrt(log["l2_sq"]).max(), (log["l4_4"] ** 0.25).max(),
                     log["energy"].max()))
        rq = rate_quantities(traj)
        norm_rates[eps] = {k: rq[k + "_normalized"][-1] for k in RATE_LABELS}
    rows = np.array(rows)
    spread = rows.max(axis=0) / rows.min(axis=0) - 1
    first = norm_rates[cfg.eps_sequence[0]]
    ratio = max(norm_rates[e][k] / first[k] for e in cfg.eps_sequence for k in RATE_LABELS)
    ok = np.all(spread < 0.5) and ratio <= 4 and runtime < 600
    verdict(6, ok, f"spread of max L2/L4/E {np.round(spread, 4).tolist()}, "
                   f"largest normalized rate ratio {ratio:.3f}, sweep {runtime:.1f} s")


def test_criterion_7_interpolation(verdict, gaussian_runs, linear_run, sweep):
    runs = [gaussian_runs["viscous"], gaussian_runs["conservative"], linear_run,
            *sweep[1].trajectories.values()]
    gaps = [interpolation_gap(f) for traj in runs for _, f in traj.snapshots]
    worst = max(gaps)
    verdict(7, worst <= 1e-10,
            f"max of max(u^2) - min(u^2) - 2|u|_2|u_x|_2 is {worst:.3e} "
            f"over {len(gaps)} snapshots of {len(runs)} runs")


def test_criterion_8_entropy_reference(verdict):
    start = time.perf_counter()
    g = make_grid(8.0, 4096)
    h = g.spacing
    window = np.abs(g.x) < 1.5
    times = np.round(np.arange(101) * 0.01, 12)
    errs, envs = [], []
    for ul, ur, env in ((1, 0, 3 * h**0.5), (0, 1, 5 * h * abs(np.log(h)))):
        traj = burgers_solve(InitialDatum.riemann_step(ul, ur, extent=3.0), 1.0, g, 1.0, times)
        errs.append(h * np.abs(traj.final.values - riemann_exact(ul, ur, 1.0, g.x))[window].sum())
        # cell averages of the datum smear the jump over one cell on each side
        envs.append(env + 2 * h)
        if (ul, ur) == (1, 0):
            shock = traj
    pairs = [make_entropy_pair("square"), make_entropy_pair("kruzhkov_smoothed", k=0.5, delta=0.05)]
    phis = [TestFunction(tc, tr, xc, xr) for tc, tr, xc, xr in (
        (0.5, 0.4, 0.25, 0.5), (0.6, 0.3, 0.3, 0.3), (0.7, 0.25, 0.35, 0.8),
        (0.5, 0.45, -0.5, 1.0), (0.8, 0.15, 1.0, 0.6))]
    assert all(phi.nonnegative for phi in phis)
    worst = max(entropy_residual(shock, pair, phi) for pair in pairs for phi in phis)
    tol = 1e-8 + 10 * h
    planted = profile_trajectory(g, lambda t, x: ((x > 0.5 * t) & (x < 3)).astype(float), times)
    r_planted = entropy_residual(planted, pairs[0], TestFunction(0.5, 0.3, 0.25, 0.5))
    runtime = time.perf_counter() - start
    ok = all(e < v for e, v in zip(errs, envs)) and worst <= tol and r_planted > 0 \
        and runtime < 60
    verdict(8, ok, f"L1 shock {errs[0]:.4f} < {envs[0]:.4f}, rarefaction {errs[1]:.4f} < "
                   f"{envs[1]:.4f}, max R {worst:.2e} <= {tol:.2e}, planted R {r_planted:.2e}, "
                   f"{runtime:.1f} s")


def test_criterion_9_limit_sweep(verdict, sweep):
    cfg, table, runtime = sweep
    orders = empirical_order(table)
    parts, ok = [], runtime < 900 and len(table.ok_rows()) == len(cfg.eps_sequence)
    for p in (1, 2, 3):
        dec = table.strictly_decreasing(p)
        ok &= dec and orders[p].order > 0 and not orders[p].no_convergence
        parts.append(f"L{p} {np.round(table.errors(p), 4).tolist()} order {orders[p].order:.3f}")
    verdict(9, ok, "; ".join(parts) + f", {runtime:.1f} s")


def test_criterion_10_alpha_threshold(verdict):
    start = time.perf_counter()
    alphas = np.round(np.arange(-300, 301) / 100, 2)
    mismatches, printed_wrong = 0, 0
    for n in (1, 2, 3):
        e = 1.0 / (2 * n - 1)
        printed = 3.0**e * (1.0 / (2 * n)) ** (2 * n * e) + (3.0 / (2 * n)) ** e
        for a in alphas:
            prob = AppendixProblem(n, float(a))
            truth = scan_has_real_roots(prob)
            mismatches += two_roots_certificate(prob) != truth
            printed_wrong += (a <= printed) != truth
    runtime = time.perf_counter() - start
    thresholds = [round(alpha_threshold(n), 6) for n in (1, 2, 3)]
    ok = mismatches == 0 and runtime < 5 and printed_wrong > 0
    verdict(10, ok, f"certificate vs scan mismatches {mismatches}/{3 * len(alphas)}; adopted "
                    f"alpha >= {thresholds}; printed upper-bound form wrong at {printed_wrong} "
                    f"points; {runtime:.2f} s")
