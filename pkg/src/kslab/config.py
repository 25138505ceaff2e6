"""INI-style run configuration shared by every subcommand.

A file starts with ``version = 1`` and carries any of the sections
``[grid]``, ``[params]``, ``[datum]``, ``[solver]``, ``[sweep]`` and
``[entropy]``. Unknown keys are errors; every problem found is reported at
once through :class:`ConfigError`.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .burgers import TestFunction, make_entropy_pair
from .grid import Grid, InitialDatum
from .limit import SweepConfig, Window
from .params import KSParams, coupling_beta
from .solver import SolverConfig

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("invalid configuration:\n  " + "\n  ".join(self.errors))


def _float(s):
    v = float(s)
    if not math.isfinite(v):
        raise ValueError("not finite")
    return v


def _int(s):
    return int(s)


def _floats(s):
    return tuple(_float(v) for v in s.replace(";", ",").split(",") if v.strip())


def _ints(s):
    return tuple(int(v) for v in s.replace(";", ",").split(",") if v.strip())


def _bool(s):
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError("expected true or false")


def _str(s):
    return s.strip()


SCHEMA = {
    "grid": {"half_length": _float, "n_points": _int},
    "params": {"a": _float, "b": _float, "c": _float, "d": _float, "eps": _float,
               "beta": _float, "coupling_c": _float, "allow_nonconservative": _bool},
    "datum": {"kind": _str, "u_l": _float, "u_r": _float, "x0": _float, "extent": _float,
              "transition_width": _float, "amplitude": _float, "width": _float,
              "center": _float, "mollification_width": _float},
    "solver": {"t_final": _float, "snapshot_times": _floats, "snapshot_every": _float,
               "cfl_advective": _float, "cfl_dispersive": _float, "dealias": _float,
               "boundary_tolerance": _float, "max_steps": _int, "burgers_cfl": _float},
    "sweep": {"eps": _floats, "coupling_c": _float, "coupling": _str, "window": _floats,
              "p": _ints, "reference": _str, "refinement": _int},
    "entropy": {"pairs": _str, "k": _float, "delta": _float, "center": _float,
                "radius": _float, "test_functions": _str, "tolerance": _float},
}

REQUIRED_SECTIONS = {
    "simulate": ("grid", "params", "datum", "solver"),
    "burgers": ("grid", "datum", "solver"),
    "limit": ("grid", "datum", "solver", "sweep"),
}

DEFAULTS = {
    "solver": {"cfl_advective": 0.5, "cfl_dispersive": 0.5, "dealias": 2.0 / 3.0,
               "boundary_tolerance": 1e-4, "max_steps": 5_000_000, "burgers_cfl": 0.9},
    "params": {"a": 1.0, "eps": 0.0, "coupling_c": 1.0, "allow_nonconservative": False},
    "sweep": {"coupling_c": 1.0, "coupling": "quartic", "window": (0.5, 1.0, -2.0, 2.0),
              "p": (1, 2, 3), "reference": "godunov_fine", "refinement": 8},
    "entropy": {"pairs": "square", "k": 0.0, "delta": 0.1, "center": 0.5, "radius": 1.0},
}


@dataclass
class RunConfig:
    path: Path | None
    sections: dict = field(default_factory=dict)

    def section(self, name: str) -> dict:
        return self.sections.get(name, {})

    # -- builders ----------------------------------------------------------

    def grid(self) -> Grid:
        g = self.section("grid")
        return Grid(g["half_length"], g["n_points"])

    def params(self) -> KSParams:
        pr = self.section("params")
        a = pr["a"]
        eps = pr["eps"]
        if "beta" in pr:
            beta = pr["beta"]
        else:
            beta = coupling_beta(eps, pr["coupling_c"]) if eps > 0 else 0.0
        b = pr.get("b", 2.0 * a / 3.0)
        c = pr.get("c", -a / 3.0)
        return KSParams(a, b, c, pr.get("d", 0.0), beta, eps)

    def datum(self) -> InitialDatum:
        d = dict(self.section("datum"))
        kind = d.pop("kind")
        w = d.pop("mollification_width", None)
        if kind == "zero":
            return InitialDatum.zero(w)
        return getattr(InitialDatum, kind)(**d, mollification_width=w)

    def solver(self) -> SolverConfig:
        s = self.section("solver")
        t_final = s["t_final"]
        times = tuple(s.get("snapshot_times", ()))
        if "snapshot_every" in s:
            n = int(round(t_final / s["snapshot_every"]))
            times += tuple(np.round(np.arange(n + 1) * s["snapshot_every"], 12))
        times = tuple(t for t in times if t <= t_final)
        return SolverConfig(t_final, times, s["cfl_advective"], s["cfl_dispersive"],
                            s["dealias"], s["boundary_tolerance"], s["max_steps"])

    def sweep(self) -> SweepConfig:
        sw = self.section("sweep")
        return SweepConfig(
            eps_sequence=sw["eps"], datum=self.datum(), grid=self.grid(), solver=self.solver(),
            a_coeff=self.section("params").get("a", 1.0), coupling_c=sw["coupling_c"],
            window=Window(*sw["window"]), p_exponents=sw["p"], reference=sw["reference"],
            refinement=sw["refinement"], coupling=sw["coupling"],
        )

    def entropy_pairs(self, a_coeff: float) -> list:
        e = self.section("entropy") or DEFAULTS["entropy"]
        pairs = []
        for kind in (s.strip() for s in e.get("pairs", "square").split(",")):
            if kind == "square":
                pairs.append(make_entropy_pair("square", a_coeff))
            elif kind == "kruzhkov_smoothed":
                pairs.append(make_entropy_pair(kind, a_coeff, k=e.get("k", 0.0),
                                               delta=e.get("delta", 0.1)))
            else:
                pairs.append(make_entropy_pair(kind, a_coeff, center=e.get("center", 0.5),
                                               radius=e.get("radius", 1.0)))
        return pairs

    def test_functions(self, t_final: float) -> list[TestFunction]:
        """``test_functions = tc:tr:xc:xr; ...`` or five bumps across the datum support."""
        text = self.section("entropy").get("test_functions")
        if text:
            out = []
            for item in text.split(";"):
                if item.strip():
                    tc, tr, xc, xr = (float(v) for v in item.split(":"))
                    out.append(TestFunction(tc, tr, xc, xr))
            return out
        supp = self.datum().support() or (-1.0, 1.0)
        lo, hi = supp
        xr = (hi - lo) / 8.0
        return [TestFunction(0.5 * t_final, 0.45 * t_final, xc, xr)
                for xc in np.linspace(lo + 2 * xr, hi - 2 * xr, 5)]


def parse_config(path, subcommand: str | None = None) -> RunConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError([f"{path}: no such file"])
    return parse_config_text(path.read_text(), subcommand, path)


def parse_config_text(text: str, subcommand: str | None = None, path=None) -> RunConfig:
    errors = []
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    cp.optionxform = str
    try:
        # top-level keys land in a synthetic section
        cp.read_string("[__top__]\n" + text)
    except configparser.Error as exc:
        raise ConfigError([f"syntax: {exc}"]) from None

    top = dict(cp["__top__"])
    version = top.pop("version", None)
    if version is None:
        errors.append("missing 'version = 1' before the first section")
    elif version.strip() != str(SCHEMA_VERSION):
        errors.append(f"version mismatch: file has {version.strip()}, expected {SCHEMA_VERSION}")
    errors.extend(f"unknown top-level key {k!r}" for k in top)

    sections = {}
    for name in cp.sections():
        if name == "__top__":
            continue
        if name not in SCHEMA:
            errors.append(f"unknown section [{name}]")
            continue
        values = dict(DEFAULTS.get(name, {}))
        for key, raw in cp[name].items():
            conv = SCHEMA[name].get(key)
            if conv is None:
                errors.append(f"[{name}] unknown key {key!r}")
                continue
            try:
                values[key] = conv(raw)
            except ValueError as exc:
                errors.append(f"[{name}] {key} = {raw!r}: {exc}")
        sections[name] = values

    for name in REQUIRED_SECTIONS.get(subcommand, ()):
        if name not in sections:
            errors.append(f"missing section [{name}] required by '{subcommand}'")
    if subcommand in REQUIRED_SECTIONS:
        for name in ("params", "entropy"):
            sections.setdefault(name, dict(DEFAULTS[name]))
    errors.extend(_validate(sections))
    if errors:
        raise ConfigError(errors)
    return RunConfig(Path(path) if path else None, sections)


def _require(sec, name, keys, errors):
    for k in keys:
        if k not in sec:
            errors.append(f"[{name}] missing key {k!r}")


def _validate(sections: dict) -> list[str]:
    errors = []
    if "grid" in sections:
        g = sections["grid"]
        _require(g, "grid", ("half_length", "n_points"), errors)
        if "n_points" in g:
            n = g["n_points"]
            if n < 16 or n & (n - 1):
                errors.append(f"[grid] n_points = {n} must be a power of two >= 16")
        if g.get("half_length", 1.0) <= 0:
            errors.append("[grid] half_length must be positive")
    if "params" in sections:
        pr = sections["params"]
        eps, beta = pr.get("eps", 0.0), pr.get("beta")
        if eps < 0 or (beta is not None and beta < 0):
            errors.append("[params] eps and beta must be nonnegative")
        if eps == 0 and beta is not None and beta > 0:
            errors.append("[params] eps = 0 with beta > 0: the coupling beta = c*eps^4 is undefined")
        if pr.get("coupling_c", 1.0) <= 0:
            errors.append("[params] coupling_c must be positive")
    if "datum" in sections:
        d = sections["datum"]
        kind = d.get("kind")
        allowed = {
            "riemann_step": ({"u_l", "u_r"}, {"x0", "extent", "transition_width"}),
            "gaussian": ({"amplitude", "width"}, {"center"}),
            "zero": (set(), set()),
        }
        if kind not in allowed:
            errors.append(f"[datum] kind must be one of {sorted(allowed)}, got {kind!r}")
        else:
            need, opt = allowed[kind]
            keys = set(d) - {"kind", "mollification_width"}
            for k in sorted(need - keys):
                errors.append(f"[datum] kind {kind} needs {k!r}")
            for k in sorted(keys - need - opt):
                errors.append(f"[datum] key {k!r} does not apply to kind {kind}")
    if "solver" in sections:
        s = sections["solver"]
        _require(s, "solver", ("t_final",), errors)
        if s.get("t_final", 1.0) <= 0:
            errors.append("[solver] t_final must be positive")
        for k in ("cfl_advective", "cfl_dispersive", "dealias"):
            if not 0 < s[k] <= 1:
                errors.append(f"[solver] {k} must lie in (0, 1]")
        if s.get("snapshot_every", 1.0) <= 0:
            errors.append("[solver] snapshot_every must be positive")
    if "sweep" in sections:
        sw = sections["sweep"]
        _require(sw, "sweep", ("eps",), errors)
        bad = [p for p in sw["p"] if p not in (1, 2, 3)]
        if bad:
            errors.append(f"[sweep] p = {bad}: convergence holds only for 1 <= p < 4")
        if len(sw["window"]) != 4:
            errors.append("[sweep] window needs four numbers t1, t2, x1, x2")
        eps = sw.get("eps", ())
        if any(e <= 0 for e in eps) or any(b >= a for a, b in zip(eps, eps[1:])):
            errors.append("[sweep] eps must be positive and strictly decreasing")
        if sw["coupling"] not in ("quartic", "linear"):
            errors.append("[sweep] coupling must be quartic or linear")
        if sw["reference"] not in ("godunov_fine", "riemann_exact"):
            errors.append("[sweep] reference must be godunov_fine or riemann_exact")
    if "entropy" in sections:
        e = sections["entropy"]
        for kind in (s.strip() for s in e.get("pairs", "square").split(",")):
            if kind not in ("square", "kruzhkov_smoothed", "compact_bump"):
                errors.append(f"[entropy] unknown pair kind {kind!r}")
        if e.get("delta", 1.0) <= 0:
            errors.append("[entropy] delta must be positive")
        text = e.get("test_functions")
        if text:
            for item in text.split(";"):
                if item.strip() and len(item.split(":")) != 4:
                    errors.append(f"[entropy] test function {item.strip()!r} needs tc:tr:xc:xr")
    return errors
