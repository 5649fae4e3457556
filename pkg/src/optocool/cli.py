"""Command-line front end.

    optocool budget|metrics|optimize|sweep --config run.toml --out DIR [--axes phi-r|omega-q]

Exit codes: 0 success, 2 input error, 3 numeric failure. Outputs are
deterministic: floats are written with their shortest round-trip repr and JSON
keys are sorted.
"""

import argparse
import csv
import io
import json
import math
import os
import sys

import numpy as np

from . import __version__
from .budget import (
    NoiseFileError,
    apparent_motion,
    load_noise_curve,
    to_single_sided_hz,
    total_measurement_psd,
    total_motion_psd,
)
from .feedback import TrapSpec, crossover_frequency
from .optimize import (
    CoolingSystem,
    SearchError,
    SearchSpace,
    evaluate_point,
    search,
    sweep_phi_r,
    sweep_trap,
)
from .plants import LossBudget, MirrorParams, RSEParams, SqueezerConfig
from .presets import preset
from .qnoise import MetricsError, measurement_metrics, motion_metrics
from .twophoton import SingularityError, make_grid

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

__all__ = ["main", "main_exit", "ConfigError", "RunConfig", "load_config"]

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3

SCHEMA = {
    "system": {"kind", "preset", "M", "P", "P_a", "L_a", "F_a", "F_s", "wavelength", "R", "L", "M_eff", "losses"},
    "losses": {"eps_arm", "eps_sec", "eps_inj", "eps_ro"},
    "squeezer": {"level_db", "phi_deg", "phi_rms_mrad"},
    "trap": {"f_eff", "Q"},
    "grid": {"f_min", "f_max", "n", "spacing"},
    "noise": {"path", "kind", "name"},
    "thermometry": {"mu"},
    "search": {"f_eff_min", "f_eff_max", "n_f_eff", "Q_min", "Q_max", "n_Q", "r_max_db", "band_points"},
    "sweep": {"phi_min_deg", "phi_max_deg", "n_phi", "r_min_db", "r_max_db", "n_r"},
}
TOP = {"system", "squeezer", "trap", "grid", "noise", "thermometry", "search", "sweep"}
PRESET_KEYS = ("M", "P_a", "L_a", "F_a", "F_s", "wavelength")


class ConfigError(ValueError):
    pass


def _check_keys(section, table, allowed):
    if not isinstance(table, dict):
        raise ConfigError(f"[{section}] must be a table")
    extra = sorted(set(table) - allowed)
    if extra:
        raise ConfigError(f"[{section}] has unknown keys: {', '.join(extra)}")


def _num(table, key, section, default=None, required=False):
    if key not in table:
        if required:
            raise ConfigError(f"[{section}] missing required key {key!r}")
        return default
    v = table[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"[{section}] {key} must be a number, got {v!r}")
    v = float(v)
    if not math.isfinite(v):
        raise ConfigError(f"[{section}] {key} must be finite")
    return v


class RunConfig:
    """Parsed configuration with internal units (rad/s, rad, W, m)."""

    def __init__(self, doc, base_dir="."):
        _check_keys("top level", doc, TOP)
        self.doc = doc
        self.base_dir = base_dir
        self.system = self._system(doc.get("system"))
        self.squeezer = self._squeezer(doc.get("squeezer", {}))
        self.trap = self._trap(doc.get("trap"))
        self.grid = self._grid(doc.get("grid", {}))
        self.noise = self._noise(doc.get("noise", []))
        self.mu = self._thermometry(doc.get("thermometry", {}))
        self.search_doc = doc.get("search", {})
        self.sweep_doc = doc.get("sweep", {})
        _check_keys("search", self.search_doc, SCHEMA["search"])
        _check_keys("sweep", self.sweep_doc, SCHEMA["sweep"])

    # --- sections ----------------------------------------------------------
    def _system(self, t):
        if t is None:
            raise ConfigError("missing [system] section")
        _check_keys("system", t, SCHEMA["system"])
        kind = t.get("kind", "rse")
        values = {}
        if "preset" in t:
            if kind != "rse":
                raise ConfigError("presets describe rse systems")
            try:
                p = preset(t["preset"])
            except KeyError as e:
                raise ConfigError(str(e.args[0])) from None
            values.update({k: p[k] for k in PRESET_KEYS})
        for k in t:
            if k not in ("kind", "preset", "losses"):
                values[k] = _num(t, k, "system")
        lt = t.get("losses", {})
        _check_keys("system.losses", lt, SCHEMA["losses"])
        losses = LossBudget(**{k: _num(lt, k, "system.losses", 0.0) for k in SCHEMA["losses"]})
        wl = values.pop("wavelength", 1064e-9)
        if not wl > 0:
            raise ConfigError("[system] wavelength must be > 0")
        k = 2 * math.pi / wl
        try:
            if kind == "mirror":
                allowed = {"M", "P", "R", "L", "M_eff"}
                extra = sorted(set(values) - allowed)
                if extra:
                    raise ConfigError(f"[system] keys not valid for a mirror: {', '.join(extra)}")
                for req in ("M", "P"):
                    if req not in values:
                        raise ConfigError(f"[system] missing required key {req!r}")
                params = MirrorParams(k=k, **values)
            elif kind == "rse":
                allowed = {"M", "P_a", "L_a", "F_a", "F_s", "L"}
                extra = sorted(set(values) - allowed)
                if extra:
                    raise ConfigError(f"[system] keys not valid for rse: {', '.join(extra)}")
                for req in ("M", "P_a", "L_a", "F_a", "F_s"):
                    if req not in values:
                        raise ConfigError(f"[system] missing required key {req!r}")
                params = RSEParams(k=k, **values)
            else:
                raise ConfigError(f"[system] kind must be 'mirror' or 'rse', got {kind!r}")
        except (TypeError, ValueError) as e:
            if isinstance(e, ConfigError):
                raise
            raise ConfigError(f"[system] {e}") from None
        self.kind, self.params, self.losses, self.wavelength = kind, params, losses, wl
        return params

    def _squeezer(self, t):
        _check_keys("squeezer", t, SCHEMA["squeezer"])
        self.level_db = _num(t, "level_db", "squeezer", 0.0)
        self.phi_deg = _num(t, "phi_deg", "squeezer", 0.0)
        self.phi_rms_mrad = _num(t, "phi_rms_mrad", "squeezer", 0.0)
        try:
            return SqueezerConfig(self.level_db, math.radians(self.phi_deg), self.phi_rms_mrad * 1e-3)
        except ValueError as e:
            raise ConfigError(f"[squeezer] {e}") from None

    def _trap(self, t):
        if t is None:
            return None
        _check_keys("trap", t, SCHEMA["trap"])
        f = _num(t, "f_eff", "trap", required=True)
        Q = _num(t, "Q", "trap", required=True)
        try:
            return TrapSpec.from_hz(f, Q)
        except ValueError as e:
            raise ConfigError(f"[trap] {e}") from None

    def _grid(self, t):
        _check_keys("grid", t, SCHEMA["grid"])
        n = t.get("n", 1000)
        if isinstance(n, bool) or not isinstance(n, int):
            raise ConfigError("[grid] n must be an integer")
        spacing = t.get("spacing", "log")
        try:
            return make_grid(_num(t, "f_min", "grid", 1.0), _num(t, "f_max", "grid", 1000.0), n, spacing)
        except ValueError as e:
            raise ConfigError(f"[grid] {e}") from None

    def _noise(self, entries):
        if not isinstance(entries, list):
            raise ConfigError("[[noise]] must be an array of tables")
        forces, sensings = [], []
        for i, t in enumerate(entries):
            _check_keys(f"noise {i}", t, SCHEMA["noise"])
            if "path" not in t or "kind" not in t:
                raise ConfigError(f"[[noise]] entry {i} needs 'path' and 'kind'")
            path = t["path"]
            if not os.path.isabs(path):
                path = os.path.join(self.base_dir, path)
            if not os.path.exists(path):
                raise ConfigError(f"noise file not found: {path}")
            kind = t["kind"]
            if kind not in ("force", "sensing"):
                raise ConfigError(f"[[noise]] entry {i} kind must be 'force' or 'sensing'")
            curve = load_noise_curve(path, kind, t.get("name"))
            (forces if kind == "force" else sensings).append(curve)
        return tuple(forces), tuple(sensings)

    def _thermometry(self, t):
        _check_keys("thermometry", t, SCHEMA["thermometry"])
        mu = _num(t, "mu", "thermometry")
        if mu is not None and not mu > 0:
            raise ConfigError("[thermometry] mu must be > 0")
        return mu

    # --- derived -----------------------------------------------------------
    def cooling_system(self):
        forces, sensings = self.noise
        return CoolingSystem(self.kind, self.params, self.losses, self.squeezer.phi_rms,
                             forces, sensings, self.mu)

    def require_trap(self):
        if self.trap is None:
            raise ConfigError("this command needs a [trap] section")
        return self.trap

    def search_space(self):
        s = self.search_doc
        vals = dict(
            Omega_min=2 * math.pi * _num(s, "f_eff_min", "search", 10.0),
            Omega_max=2 * math.pi * _num(s, "f_eff_max", "search", 100.0),
            n_Omega=s.get("n_f_eff", 46),
            Q_min=_num(s, "Q_min", "search", 0.5),
            Q_max=_num(s, "Q_max", "search", 5.0),
            n_Q=s.get("n_Q", 19),
            r_max_db=_num(s, "r_max_db", "search", 20.0),
            band_points=s.get("band_points", 201),
        )
        for key in ("n_Omega", "n_Q", "band_points"):
            if isinstance(vals[key], bool) or not isinstance(vals[key], int):
                raise ConfigError(f"[search] {key} must be an integer")
        try:
            return SearchSpace(**vals)
        except ValueError as e:
            raise ConfigError(f"[search] {e}") from None

    def resolved(self):
        p = self.params
        out = {"kind": self.kind, "wavelength": self.wavelength}
        if self.kind == "mirror":
            out.update(M=p.M, P=p.P, R=p.R, L=p.L, M_eff=p.M_eff)
        else:
            out.update(M=p.M, P_a=p.P_a, L_a=p.L_a, F_a=float(p.F_a), F_s=float(p.F_s), L=p.L)
        out["losses"] = {k: getattr(self.losses, k) for k in SCHEMA["losses"]}
        out["squeezer"] = {"level_db": self.level_db, "phi_deg": self.phi_deg, "phi_rms_mrad": self.phi_rms_mrad}
        if self.trap is not None:
            out["trap"] = {"f_eff": self.trap.Omega_eff / (2 * math.pi), "Q": self.trap.Q_eff}
        g = self.grid
        out["grid"] = {"f_min": float(g.f[0]), "f_max": float(g.f[-1]), "n": len(g)}
        forces, sensings = self.noise
        out["noise"] = [{"kind": c.kind, "name": c.name} for c in forces + sensings]
        out["mu"] = self.mu
        return out


def load_config(path):
    try:
        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"{path}: {e}") from None
    return RunConfig(doc, os.path.dirname(os.path.abspath(path)))


# --- output ------------------------------------------------------------------
def _fmt(x):
    x = float(x)
    if math.isnan(x):
        return "nan"
    return repr(x)


def _write_csv(path, header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(buf.getvalue())


def _json_clean(obj):
    if isinstance(obj, dict):
        return {str(k): _json_clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    return obj


def _write_json(path, obj):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(_json_clean(obj), sort_keys=True, indent=2))
        fh.write("\n")


def _budget_rows(grid, budget):
    names = list(budget.traces)
    cols = [to_single_sided_hz(budget.traces[n].real) for n in names]
    cols.append(to_single_sided_hz(budget.total.real))
    rows = zip(grid.f, *cols)
    return ["frequency_hz"] + names + ["total"], rows


def _write_budgets(cfg, out, trap, sqz):
    system = cfg.cooling_system()
    grid = cfg.grid
    loop = system.loop(trap, grid)
    forces, sensings = cfg.noise
    motion = total_motion_psd(loop, sqz, forces, sensings)
    meas = apparent_motion(loop, total_measurement_psd(loop, sqz, forces, sensings))
    header, rows = _budget_rows(grid, motion)
    _write_csv(os.path.join(out, "budget_motion.csv"), header, rows)
    header, rows = _budget_rows(grid, meas)
    _write_csv(os.path.join(out, "budget_measurement.csv"), header, rows)
    return system, loop, motion


def _report(cfg, system, loop, trap, sqz, motion):
    occ = evaluate_point(system, trap, sqz.phi, sqz.level_db)
    W_sql = system.Omega_sql
    W_x = crossover_frequency(trap, W_sql)
    metrics = motion_metrics(loop, sqz.phi_rms)
    w = loop.grid.omega
    theta = None
    if w[0] <= trap.Omega_eff <= w[-1]:
        theta = math.degrees(float(np.interp(trap.Omega_eff, w, metrics.theta.real)))
    resolved = cfg.resolved()
    resolved["squeezer"] = {"level_db": sqz.level_db, "phi_deg": math.degrees(sqz.phi),
                            "phi_rms_mrad": sqz.phi_rms * 1e3}
    resolved["trap"] = {"f_eff": trap.Omega_eff / (2 * math.pi), "Q": trap.Q_eff}
    return {
        "parameters": resolved,
        "derived": {
            "f_sql_hz": W_sql / (2 * math.pi),
            "f_x_hz": None if W_x is None else W_x / (2 * math.pi),
            "theta_x_deg_at_f_eff": theta,
            "n_bar": occ.n_bar,
            "n_bar_raw": occ.n_raw,
            "n_bar_floored": occ.floored,
            "T_bar_K": occ.T_bar,
            "band_hz": [occ.band[0] / (2 * math.pi), occ.band[1] / (2 * math.pi)],
        },
        "traces": list(motion.traces) + ["total"],
        "units": {"psd": "m^2/Hz single-sided", "frequency": "Hz"},
        "version": __version__,
    }


def cmd_budget(cfg, out, args):
    trap = cfg.require_trap()
    system, loop, motion = _write_budgets(cfg, out, trap, cfg.squeezer)
    _write_json(os.path.join(out, "report.json"), _report(cfg, system, loop, trap, cfg.squeezer, motion))


def cmd_metrics(cfg, out, args):
    # without a [trap] section the loop stays open
    system = cfg.cooling_system()
    loop = system.loop(cfg.trap, cfg.grid)
    mx = motion_metrics(loop, cfg.squeezer.phi_rms)
    my = measurement_metrics(loop, cfg.squeezer.phi_rms)
    header = ["frequency_hz"]
    cols = []
    for tag, m in (("x", mx), ("y", my)):
        header += [f"theta_{tag}_deg", f"Xi_{tag}", f"Xi_prime_{tag}", f"etaGamma_{tag}", f"lossGamma_{tag}"]
        cols += [np.degrees(m.theta.real), m.Xi.real, m.Xi_prime.real, m.etaGamma.real, m.lossGamma.real]
    _write_csv(os.path.join(out, "metrics.csv"), header, zip(cfg.grid.f, *cols))


def cmd_optimize(cfg, out, args):
    system = cfg.cooling_system()
    opt = search(system, cfg.search_space())
    sqz = SqueezerConfig(opt.r_db, opt.phi, system.phi_rms)
    system, loop, motion = _write_budgets(cfg, out, opt.trap, sqz)
    report = _report(cfg, system, loop, opt.trap, sqz, motion)
    _write_json(os.path.join(out, "report.json"), report)
    _write_json(os.path.join(out, "optimum.json"), {
        "f_eff_hz": opt.trap.Omega_eff / (2 * math.pi),
        "Q": opt.trap.Q_eff,
        "phi_deg": math.degrees(opt.phi),
        "r_db": opt.r_db,
        "r_at_bound": opt.at_bound,
        "n_bar": opt.n_bar,
        "T_bar_K": opt.occupation.T_bar,
        "band_hz": [opt.occupation.band[0] / (2 * math.pi), opt.occupation.band[1] / (2 * math.pi)],
        "evaluated_points": opt.evaluated,
        "failed_points": opt.failed,
    })


def _axis(doc, lo_key, hi_key, n_key, lo, hi, n):
    a = _num(doc, lo_key, "sweep", lo)
    b = _num(doc, hi_key, "sweep", hi)
    m = doc.get(n_key, n)
    if isinstance(m, bool) or not isinstance(m, int) or m < 1:
        raise ConfigError(f"[sweep] {n_key} must be a positive integer")
    if m == 1:
        if a != b:
            raise ConfigError(f"[sweep] a single point needs {lo_key} == {hi_key}")
        return np.array([a])
    if not a < b:
        raise ConfigError(f"[sweep] need {lo_key} < {hi_key}")
    return np.linspace(a, b, m)


def cmd_sweep(cfg, out, args):
    system = cfg.cooling_system()
    path = os.path.join(out, "sweep.csv")
    if args.axes == "phi-r":
        trap = cfg.require_trap()
        d = cfg.sweep_doc
        phis = _axis(d, "phi_min_deg", "phi_max_deg", "n_phi", -90.0, 90.0, 181)
        rs = _axis(d, "r_min_db", "r_max_db", "n_r", 0.0, 12.0, 25)
        if np.any(rs < 0):
            raise ConfigError("[sweep] squeeze levels must be >= 0 dB")
        rows = sweep_phi_r(system, trap, np.radians(phis), rs)
        rows = [(math.degrees(p), r, n) for (p, r, n) in rows]
        # report the configured axis values exactly
        rows = [(phis[i // len(rs)], rs[i % len(rs)], row[2]) for i, row in enumerate(rows)]
        _write_csv(path, ["phi_deg", "r_db", "n_bar"], rows)
    else:
        space = cfg.search_space()
        rows = sweep_trap(system, space.omegas(), space.qs(), space.r_max_db, space.band_points)
        rows = [(W / (2 * math.pi), Q, n) for W, Q, n in rows]
        _write_csv(path, ["f_eff_hz", "Q", "n_bar"], rows)


COMMANDS = {"budget": cmd_budget, "metrics": cmd_metrics, "optimize": cmd_optimize, "sweep": cmd_sweep}


def build_parser():
    p = argparse.ArgumentParser(prog="optocool", description="Quantum-noise budgets and feedback cooling of optomechanical test masses.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, help="TOML run configuration")
        sp.add_argument("--out", required=True, help="output directory (created if missing)")
        if name == "sweep":
            sp.add_argument("--axes", choices=("phi-r", "omega-q"), default="phi-r")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        os.makedirs(args.out, exist_ok=True)
        COMMANDS[args.command](cfg, args.out, args)
    except (SingularityError, MetricsError, SearchError, ArithmeticError) as e:
        print(f"optocool: numeric failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConfigError, NoiseFileError, ValueError, TypeError, OSError) as e:
        print(f"optocool: input error: {e}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK


def main_exit():
    sys.exit(main())


if __name__ == "__main__":
    main_exit()
