"""Command-line entry point: ``kslab <subcommand> ...``.

Exit status is 0 on success, 1 when a PASS/FAIL report contains a FAIL
and 2 on usage or configuration errors.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from fractions import Fraction
from pathlib import Path

from . import __version__
from .burgers import burgers_solve, entropy_report
from .config import SCHEMA_VERSION, ConfigError, parse_config
from .estimates import check_estimates, estimate_report
from .io import load_run, save_run, write_csv
from .limit import empirical_order, run_sweep, with_coupling_c
from .params import (AppendixProblem, KSParams, NoRealRootsError, alpha_threshold,
                     appendix_roots, critical_point, odd_exponent_check,
                     two_roots_certificate)
from .solver import BlowUpError, simulate

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

log = logging.getLogger("kslab")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}\n{self.format_usage()}")


def _out_dir(args, sub: str) -> Path:
    if args.out:
        return Path(args.out)
    root = Path(os.environ.get("KSLAB_OUT", "kslab_out"))
    stem = Path(args.config).stem if getattr(args, "config", None) else sub
    return root / f"{sub}-{stem}"


def _report(lines) -> int:
    width = max((len(n) for n, _, _ in lines), default=0)
    for name, verdict, detail in lines:
        print(f"{name:<{width}}  {verdict:<4}  {detail}")
    return EXIT_FAIL if any(v == "FAIL" for _, v, _ in lines) else EXIT_OK


def _nice(v: float) -> str:
    fr = Fraction(v).limit_denominator(1000)
    if fr.denominator != 1 and abs(float(fr) - v) < 1e-14:
        return f"{v:.16g} (= {fr})"
    return f"{v:.16g}"


# ---------------------------------------------------------------------------


def cmd_simulate(args) -> int:
    cfg = parse_config(args.config, "simulate")
    p = cfg.params()
    traj_kwargs = dict(allow_nonconservative=cfg.section("params")["allow_nonconservative"])
    out = _out_dir(args, "simulate")
    try:
        traj = simulate(cfg.datum(), p, cfg.solver(), cfg.grid(), **traj_kwargs)
    except BlowUpError as exc:
        if exc.trajectory is not None and exc.trajectory.snapshots:
            save_run(exc.trajectory, out)
        print(f"blow-up: {exc}", file=sys.stderr)
        return EXIT_FAIL
    save_run(traj, out, extra=dict(config=str(args.config)))
    e = traj.log["energy"]
    print(f"wrote {len(traj.snapshots)} snapshots to {out}")
    print(f"steps={traj.step_count}  E(0)={e[0]:.12g}  E(T)={e[-1]:.12g}  "
          f"mass drift={traj.log['mass'][-1] - traj.log['mass'][0]:.3e}")
    return EXIT_OK


def cmd_burgers(args) -> int:
    cfg = parse_config(args.config, "burgers")
    a = cfg.section("params")["a"]
    s = cfg.solver()
    grid = cfg.grid()
    traj = burgers_solve(cfg.datum(), a, grid, s.t_final, s.snapshot_times,
                         cfl=cfg.section("solver")["burgers_cfl"])
    out = _out_dir(args, "burgers")
    save_run(traj, out, extra=dict(config=str(args.config)))
    ent = cfg.section("entropy")
    rows = entropy_report(traj, cfg.entropy_pairs(a), cfg.test_functions(s.t_final),
                          tolerance=ent.get("tolerance"))
    cols = ("phi_id", "pair_kind", "weak_residual", "entropy_residual", "verdict")
    write_csv(out / "entropy_report.csv", cols, [[r[c] for c in cols] for r in rows])
    print(f"wrote {len(traj.snapshots)} snapshots and entropy_report.csv to {out}")
    return _report([(f"phi{r['phi_id']} {r['pair_kind']}", r["verdict"],
                     f"R={r['entropy_residual']:.3e} weak={r['weak_residual']:.3e}")
                    for r in rows])


def cmd_check_estimates(args) -> int:
    run = Path(args.run)
    traj = load_run(run)
    if not traj.log:
        raise UsageError(f"{run} has no per-step log; run 'simulate' first")
    lines = check_estimates(traj)
    rep = estimate_report(traj)
    cum = rep.cumulative
    keys = [k for k in cum if k != "t"]
    cols = ["t", "l2", "l4", "linf", "grad_l2", "hess_l2", "energy", *keys]
    rows = [[r["t"], r["l2"], r["l4"], r["linf"], r["grad_l2"], r["hess_l2"], r["energy"],
             *[cum[k][i] for k in keys]] for i, r in enumerate(rep.rows)]
    target = Path(args.out) if args.out else run / "estimates.csv"
    write_csv(target, cols, rows)
    summary = "\n".join(f"{n}: {v} {d}" for n, v, d in lines) + "\n"
    (target.parent / "estimates_summary.txt").write_text(summary)
    return _report(lines)


def cmd_limit(args) -> int:
    cfg = parse_config(args.config, "limit")
    sweep = cfg.sweep()
    if args.coupling_c is not None:
        sweep = with_coupling_c(sweep, args.coupling_c)
    out = _out_dir(args, "limit")
    out.mkdir(parents=True, exist_ok=True)
    table = run_sweep(sweep, jobs=args.jobs)
    for i, r in enumerate(table.rows):
        traj = table.trajectories.get(r["eps"])
        if traj is not None:
            save_run(traj, out / f"run_{i:02d}_eps_{r['eps']:g}", extra=dict(sweep_row=i))
    cols = table.columns()
    write_csv(out / "convergence.csv", cols,
              [[r.get(c, table.coupling_violated) for c in cols] for r in table.rows])

    lines = []
    failed = [r for r in table.rows if r["status"] != "ok"]
    lines.append(("runs", "FAIL" if failed else "PASS",
                  f"{len(table.rows) - len(failed)}/{len(table.rows)} completed"))
    order_rows = []
    try:
        orders = empirical_order(table)
    except ValueError as exc:
        orders = {}
        lines.append(("order", "SKIP", str(exc)))
    for p in sweep.p_exponents:
        pair = table.pairwise_orders(p) if len(table.ok_rows()) > 1 else []
        est = orders.get(p)
        if est is not None:
            order_rows.append((p, est.order, est.residual, est.n_rows, est.no_convergence,
                               ";".join(f"{v:.17g}" for v in pair)))
        if table.coupling_violated:
            lines.append((f"L{p}", "SKIP", "coupling_violated: no convergence claimed"))
            continue
        dec = table.strictly_decreasing(p)
        pos = est is not None and not est.no_convergence
        lines.append((f"L{p}", "PASS" if dec and pos else "FAIL",
                      f"errors={[f'{e:.4g}' for e in table.errors(p)]} "
                      f"order={est.order if est else float('nan'):.4g}"))
    write_csv(out / "orders.csv",
              ("p", "order", "residual", "n_rows", "no_convergence", "pairwise"), order_rows)
    print(f"wrote convergence.csv, orders.csv and {len(table.trajectories)} runs to {out}")
    return _report(lines)


def cmd_params(args) -> int:
    p = KSParams.from_a(args.a)
    r1, r2 = p.constraint_residuals()
    rows = [("A", args.a), ("B", p.b_coeff), ("C", p.c_coeff), ("D", p.d_coeff),
            ("A-B+C", r1), ("B+2C", r2)]
    print("energy-preserving coefficients")
    for k, v in rows:
        print(f"  {k:<6} = {_nice(v)}")
    print(f"  verified = {p.energy_preserving}")
    csv_rows = [("coefficients", k, v) for k, v in rows]
    if args.n is not None:
        n = args.n
        prob = AppendixProblem(n, args.alpha)
        cert = two_roots_certificate(prob)
        print(f"\nA = (C + alpha)^(2n), n={n}, alpha={args.alpha:g}")
        print(f"  X0          = {critical_point(n):.16g}")
        print(f"  alpha_min   = {alpha_threshold(n):.16g}")
        print(f"  certificate = {cert}")
        csv_rows += [("roots", "X0", critical_point(n)), ("roots", "alpha_min", alpha_threshold(n)),
                     ("roots", "certificate", cert)]
        try:
            roots = appendix_roots(prob)
        except NoRealRootsError as exc:
            print(f"  {exc}")
        else:
            for name in ("x1", "x2", "a1", "a2", "c1", "c2"):
                v = getattr(roots, name)
                print(f"  {name.upper():<11} = {v:.16g}")
                csv_rows.append(("roots", name.upper(), v))
            print(f"  admissible (A, C) with C != 0: {roots.admissible()}")
        odd = odd_exponent_check(n)
        print(f"\nA = C^(2n+1): min C^(2n)+3 sampled {odd['sampled_min']:.6g} "
              f">= {odd['lower_bound']:g}; real solution: {odd['has_real_root']}")
        csv_rows.append(("odd", "has_real_root", odd["has_real_root"]))
    elif args.alpha != 0.0:
        raise UsageError("--alpha needs --n")
    if args.csv:
        write_csv(args.csv, ("group", "name", "value"), csv_rows)
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="kslab", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version",
                    version=f"kslab {__version__} (config schema {SCHEMA_VERSION})")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", parser_class=_Parser)

    s = sub.add_parser("simulate", help="integrate the regularized equation")
    s.add_argument("--config", required=True)
    s.add_argument("--out")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("burgers", help="Godunov reference run and entropy report")
    s.add_argument("--config", required=True)
    s.add_argument("--out")
    s.set_defaults(func=cmd_burgers)

    s = sub.add_parser("check-estimates", help="PASS/FAIL check of the a priori bounds")
    s.add_argument("--run", required=True)
    s.add_argument("--out", help="estimates CSV path (default <run>/estimates.csv)")
    s.set_defaults(func=cmd_check_estimates)

    s = sub.add_parser("limit", help="sweep eps -> 0 and tabulate L^p errors")
    s.add_argument("--config", required=True)
    s.add_argument("--out")
    s.add_argument("--jobs", type=int, default=1)
    s.add_argument("--coupling-c", type=float, default=None)
    s.set_defaults(func=cmd_limit)

    s = sub.add_parser("params", help="coefficient algebra and root analysis")
    s.add_argument("--a", type=float, required=True)
    s.add_argument("--n", type=int)
    s.add_argument("--alpha", type=float, default=0.0)
    s.add_argument("--csv")
    s.set_defaults(func=cmd_params)
    return ap


def dispatch(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help and --version
        return int(exc.code or 0)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "jobs", 1) < 1:
        print("--jobs must be at least 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except ConfigError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except (UsageError, FileNotFoundError, ValueError) as exc:
        # NonConservativeError and SupportError are ValueErrors too
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main() -> None:
    sys.exit(dispatch())
