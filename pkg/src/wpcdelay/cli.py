"""Command-line experiment runner: ``solve``, ``sweep`` and ``figure``.

Every output is CSV preceded by a ``#`` block holding the fully resolved
configuration, tool version, kernel backend and worker count. Settings come
from built-in defaults, then an optional ``--config`` file of ``key = value``
lines (keys spelled like the long flags, lists comma-separated), then the
command line.
"""

import argparse
import io
import math
import sys
import time
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import __version__
from . import multi_user as mu_mod
from . import single_user as su
from ._backend import backend_name
from .channel import FadingModel, db_to_linear
from .errors import ConvergenceGuardError, DomainError, WpcError

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_GUARD = 0, 2, 3, 4
PROBLEMS = ("p1", "p2", "p3", "p4", "p5", "p6")
SWEEP_VARS = ("r0", "snr", "m")
FIG4_HEADER = "r0_bits, td_p1_s, td_p2_s, td_p3_s, td_p4_s"
FIGURE_SNRS_DB = (5.0, 10.0, 20.0)
DEFAULT_SNR_DB = 5.0


class ConfigError(Exception):
    pass


@dataclass
class ExperimentConfig:
    problem: str = "p1"
    bandwidth_hz: float = 100e3
    payload_bits: float = 50e3
    snr_db: list = None
    snr_linear: list = None
    m: float = 4.0
    gain: list = None
    mc_samples: int = 100_000
    calibration_samples: int = 10_000
    seed: int = 42
    mode: str = "exact"
    workers: int = 1
    out: str = None
    mu: float = None
    theta: float = None
    sweep_var: str = "r0"
    start: float = 1e3
    stop: float = 100e3
    points: int = 20
    values: list = None
    figure: int = None

    def snrs(self):
        if self.snr_linear:
            return [float(x) for x in self.snr_linear]
        return [db_to_linear(x) for x in (self.snr_db or [DEFAULT_SNR_DB])]

    def validate(self):
        if self.problem not in PROBLEMS:
            raise ConfigError(f"problem must be one of {', '.join(PROBLEMS)}")
        if self.mode not in su.MODES:
            raise ConfigError("mode must be exact or approx")
        for name in ("bandwidth_hz", "payload_bits", "m"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise ConfigError(f"{name} must be positive")
        if self.snr_linear and self.snr_db:
            raise ConfigError("give either snr-db or snr-linear, not both")
        if self.snr_linear and any(not x > 0 for x in self.snr_linear):
            raise ConfigError("snr-linear values must be positive")
        if self.mc_samples < 2 or self.calibration_samples < 1000:
            raise ConfigError("mc-samples must be >= 2 and calibration-samples >= 1000")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.sweep_var not in SWEEP_VARS:
            raise ConfigError(f"sweep-var must be one of {', '.join(SWEEP_VARS)}")
        if self.values is None:
            if not (0 < self.start < self.stop) and not (self.sweep_var == "snr" and self.start < self.stop):
                raise ConfigError("sweep bounds must satisfy 0 < start < stop")
            if self.points < 2:
                raise ConfigError("points must be >= 2")
        multi = self.problem in ("p5", "p6")
        if not multi and len(self.snrs()) != 1:
            raise ConfigError(f"{self.problem} takes exactly one SNR")
        if self.gain is not None:
            if any(not g > 0 for g in self.gain):
                raise ConfigError("gains must be positive")
            if len(self.gain) != len(self.snrs()):
                raise ConfigError("need one --gain per node SNR")

    def sweep_values(self):
        if self.values is not None:
            return [float(v) for v in self.values]
        if self.sweep_var == "r0":
            return list(np.geomspace(self.start, self.stop, self.points))
        return list(np.linspace(self.start, self.stop, self.points))


# ---------------------------------------------------------------- config parsing

_LIST_KEYS = {"snr_db", "snr_linear", "gain", "values"}
_INT_KEYS = {"mc_samples", "calibration_samples", "seed", "workers", "points", "figure"}
_STR_KEYS = {"problem", "mode", "out", "sweep_var"}


def _coerce(key, raw):
    try:
        if key in _LIST_KEYS:
            items = raw if isinstance(raw, list) else [p for p in str(raw).split(",") if p.strip()]
            return [float(x) for x in items]
        if key in _INT_KEYS:
            return int(float(raw))
        if key in _STR_KEYS:
            return str(raw).strip()
        return float(raw)
    except (TypeError, ValueError):
        raise ConfigError(f"bad value for {key.replace('_', '-')}: {raw!r}") from None


def read_config_file(path):
    known = set(ExperimentConfig.__dataclass_fields__)
    out = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from None
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in known:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        out[key] = _coerce(key, value)
    return out


def resolve_config(ns) -> ExperimentConfig:
    values = read_config_file(ns.config) if getattr(ns, "config", None) else {}
    given = {}
    for key in ExperimentConfig.__dataclass_fields__:
        v = getattr(ns, key, None)
        if v is not None:
            given[key] = _coerce(key, v)
    # a command-line SNR in one unit overrides a config-file SNR in the other
    if "snr_db" in given or "snr_linear" in given:
        values.pop("snr_db", None)
        values.pop("snr_linear", None)
    values.update(given)
    cfg = ExperimentConfig(**values)
    cfg.validate()
    return cfg


# ---------------------------------------------------------------- output

def _fmt(v):
    if isinstance(v, str):
        return v
    if v is None:
        return ""
    return format(float(v), ".12g")


def metadata_lines(command, cfg):
    lines = [f"# wpcdelay {__version__}", f"# command: {command}",
             f"# backend: {backend_name()}", f"# workers: {cfg.workers}", f"# seed: {cfg.seed}"]
    for key, value in asdict(cfg).items():
        if isinstance(value, list):
            value = ",".join(_fmt(x) for x in value)
        lines.append(f"# {key.replace('_', '-')} = {_fmt(value) if value is not None else 'none'}")
    return lines


def render(command, cfg, header, rows, footer=()):
    buf = io.StringIO()
    for line in metadata_lines(command, cfg):
        buf.write(line + "\n")
    buf.write(header + "\n")
    for row in rows:
        buf.write(", ".join(_fmt(v) for v in row) + "\n")
    for line in footer:
        buf.write(f"# {line}\n")
    return buf.getvalue()


def emit(text, path, stdout):
    if path:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text)
    stdout.write(text)


# ---------------------------------------------------------------- builders

def _single(cfg, r0=None, snr=None, m=None):
    return su.SystemParams(cfg.bandwidth_hz, cfg.payload_bits if r0 is None else r0,
                           cfg.snrs()[0] if snr is None else snr, FadingModel(cfg.m if m is None else m))


def _multi(cfg, r0=None, snr=None, m=None):
    snrs = cfg.snrs() if snr is None else [snr] * len(cfg.snrs())
    return mu_mod.MultiUserParams(cfg.bandwidth_hz, cfg.payload_bits if r0 is None else r0,
                                  tuple(snrs), FadingModel(cfg.m if m is None else m))


def _multiplier(cfg, params, problem):
    if problem == "p2":
        return su.MultiplierState(cfg.mu) if cfg.mu else su.calibrate_mu_p2(params)
    if problem == "p4":
        if cfg.mu:
            return su.MultiplierState(cfg.mu, mode=cfg.mode)
        return su.calibrate(params, "p4", cfg.mode)
    return None


def average(cfg, problem, r0=None, snr=None, m=None):
    """(mean, error, method, multiplier, samples) for one grid point."""
    if problem in ("p5", "p6"):
        params = _multi(cfg, r0, snr, m)
        if problem == "p5":
            st = mu_mod.avg_td_p5(params, cfg.mc_samples, cfg.seed, cfg.workers)
            return st.mean, st.std_error, st.method, None, st.samples
        state = (mu_mod.SubgradientState(theta=cfg.theta) if cfg.theta
                 else mu_mod.calibrate_theta(params, cfg.calibration_samples, cfg.seed))
        st = mu_mod.avg_td_p6(params, cfg.mc_samples, cfg.seed, state=state, workers=cfg.workers)
        return st.mean, st.std_error, st.method, state.theta, st.samples
    params = _single(cfg, r0, snr, m)
    state = _multiplier(cfg, params, problem)
    st = su._avg(params, problem, state, cfg.mode)
    return st.mean, st.std_error, st.method, state.mu if state else None, st.samples


# ---------------------------------------------------------------- commands

def cmd_solve(cfg):
    if cfg.gain is None:
        raise ConfigError("solve needs --gain (one per node)")
    p = cfg.problem
    if p in ("p5", "p6"):
        params = _multi(cfg)
        if p == "p5":
            alloc, mult = mu_mod.solve_p5(params, cfg.gain), None
        else:
            theta = cfg.theta or mu_mod.calibrate_theta(params, cfg.calibration_samples,
                                                        cfg.seed).theta
            alloc, _ = mu_mod.solve_p6_inner(params, cfg.gain, theta)
            mult = theta
        k = params.k_nodes
        header = ", ".join(["problem"] + [f"gain_{i + 1}" for i in range(k)] + ["t1_s"]
                           + [f"t2_{i + 1}_s" for i in range(k)] + ["beta"]
                           + [f"rate_{i + 1}_bits" for i in range(k)] + ["td_s", "multiplier_s"])
        row = [p, *cfg.gain, alloc.t1, *alloc.t2, alloc.beta, *alloc.rates, alloc.td, mult]
        return header, [row]
    params = _single(cfg)
    h = cfg.gain[0]
    state = _multiplier(cfg, params, p)
    if p == "p1":
        alloc = su.solve_p1(params, h)
    elif p == "p2":
        alloc = su.solve_p2(params, h, state)
    elif p == "p3":
        alloc = su.solve_p3(params, h)
    else:
        alloc = su.solve_p4(params, h, state, cfg.mode)
    header = "problem, gain, t1_s, t2_s, beta, rate_bits, td_s, multiplier_s"
    return header, [[p, h, alloc.t1, alloc.t2, alloc.beta, alloc.rate_bits, alloc.td,
                     state.mu if state else None]]


def cmd_sweep(cfg):
    var = cfg.sweep_var
    label = {"r0": "r0_bits", "snr": "snr_db", "m": "m"}[var]
    rows, footer = [], []
    for v in cfg.sweep_values():
        kw = {"snr": db_to_linear(v)} if var == "snr" else {var: v}
        t0 = time.perf_counter()
        mean, err, method, mult, n = average(cfg, cfg.problem, **kw)
        footer.append(f"runtime_s {label}={_fmt(v)}: {time.perf_counter() - t0:.4f}")
        rows.append([v, mean, err, method, mult, n])
    header = f"{label}, td_mean_s, td_error_s, method, multiplier_s, samples"
    return header, rows, footer


def _r0_grid(cfg):
    return cfg.sweep_values() if cfg.sweep_var == "r0" else \
        list(np.geomspace(1e3, 100e3, 20))


def figure_tables(cfg, n):
    """List of (suffix, header, rows) tables for figure ``n``."""
    r0s = _r0_grid(cfg)
    if cfg.snr_linear:
        raise ConfigError("figures take SNRs in dB (--snr-db)")
    snrs_db = list(cfg.snr_db) if cfg.snr_db else list(FIGURE_SNRS_DB)
    if n == 2:
        cols, rows = ["r0_bits"], [[r] for r in r0s]
        for db in snrs_db:
            cols += [f"mu_exact_{db:g}db_s", f"mu_approx_{db:g}db_s"]
            for row, r in zip(rows, r0s):
                params = su.SystemParams(cfg.bandwidth_hz, r, db_to_linear(db), FadingModel(cfg.m))
                row += [su.calibrate_mu_p4_exact(params).mu, su.p4_approx_mu(params).mu]
        return [("", ", ".join(cols), rows)]
    if n == 3:
        cols, rows = ["r0_bits"], [[r] for r in r0s]
        for db in snrs_db:
            cols += [f"td_p4_exact_{db:g}db_s", f"td_p4_approx_{db:g}db_s",
                     f"td_p4_mc_{db:g}db_s", f"td_p4_mc_se_{db:g}db_s"]
            for row, r in zip(rows, r0s):
                params = su.SystemParams(cfg.bandwidth_hz, r, db_to_linear(db), FadingModel(cfg.m))
                ex = su.calibrate_mu_p4_exact(params)
                mc = su.mc_td(params, "p4", ex, "exact", cfg.mc_samples, cfg.seed, cfg.workers)
                row += [su.avg_td_p4(params, ex).mean,
                        su.avg_td_p4(params, su.p4_approx_mu(params), "approx").mean,
                        mc.mean, mc.std_error]
        return [("", ", ".join(cols), rows)]
    if n == 4:
        tables = []
        for db in snrs_db:
            rows = []
            for r in r0s:
                params = su.SystemParams(cfg.bandwidth_hz, r, db_to_linear(db), FadingModel(cfg.m))
                rows.append([r, su.avg_td_p1(params).mean, su.avg_td_p2(params).mean,
                             su.avg_td_p3(params).mean,
                             su.avg_td_p4(params, su.calibrate(params, "p4", cfg.mode),
                                          cfg.mode).mean])
            tables.append((f"_{db:g}db", FIG4_HEADER, rows))
        return tables
    if n == 5:
        ms = sorted({cfg.m, 10.0}) if cfg.m != 4.0 else [4.0, 10.0]
        db = snrs_db[0] if cfg.snr_db else DEFAULT_SNR_DB
        cols, rows = ["r0_bits"], [[r] for r in r0s]
        for m in ms:
            cols += [f"td_p{k}_m{m:g}_s" for k in range(1, 5)]
            for row, r in zip(rows, r0s):
                params = su.SystemParams(cfg.bandwidth_hz, r, db_to_linear(db), FadingModel(m))
                row += [su.avg_td_p1(params).mean, su.avg_td_p2(params).mean,
                        su.avg_td_p3(params).mean,
                        su.avg_td_p4(params, su.calibrate(params, "p4", cfg.mode), cfg.mode).mean]
        return [("", ", ".join(cols), rows)]
    if n == 6:
        cols, rows = ["r0_bits"], [[r] for r in r0s]
        for db in snrs_db:
            cols += [f"td_p5_{db:g}db_s", f"td_p5_se_{db:g}db_s",
                     f"td_p6_{db:g}db_s", f"td_p6_se_{db:g}db_s", f"theta_{db:g}db_s"]
            for row, r in zip(rows, r0s):
                params = mu_mod.MultiUserParams(cfg.bandwidth_hz, r, (db_to_linear(db),) * 2,
                                                FadingModel(cfg.m))
                p5 = mu_mod.avg_td_p5(params, cfg.mc_samples, cfg.seed, cfg.workers)
                state = mu_mod.calibrate_theta(params, cfg.calibration_samples, cfg.seed)
                p6 = mu_mod.avg_td_p6(params, cfg.mc_samples, cfg.seed, state=state,
                                      workers=cfg.workers)
                row += [p5.mean, p5.std_error, p6.mean, p6.std_error, state.theta]
        return [("", ", ".join(cols), rows)]
    raise ConfigError("figure must be one of 2, 3, 4, 5, 6")


def _figure_path(out, n, suffix):
    if out is None:
        return None
    p = Path(out)
    if p.suffix.lower() == ".csv":
        return str(p.with_name(p.stem + suffix + p.suffix))
    return str(p / f"figure{n}{suffix}.csv")


# ---------------------------------------------------------------- entry point

def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    a = common.add_argument
    a("--config", help="key = value file; command-line flags win")
    a("--problem", choices=PROBLEMS)
    a("--bandwidth-hz", type=float)
    a("--payload-bits", type=float)
    a("--snr-db", type=float, action="append", help="average SNR in dB; repeat per node")
    a("--snr-linear", type=float, action="append", help="average SNR, linear; repeat per node")
    a("--m", type=float, help="Nakagami fading order")
    a("--gain", type=float, action="append", help="channel power gain; repeat per node")
    a("--mc-samples", type=int)
    a("--calibration-samples", type=int)
    a("--seed", type=int)
    a("--mode", choices=su.MODES, help="P4 multiplier: exact calibration or closed-form approx")
    a("--workers", type=int)
    a("--out", help="output CSV (figure: directory or base file name)")
    a("--mu", type=float, help="fixed P2/P4 multiplier in seconds (skips calibration)")
    a("--theta", type=float, help="fixed P6 price in seconds (skips calibration)")
    a("--sweep-var", choices=SWEEP_VARS)
    a("--start", type=float)
    a("--stop", type=float)
    a("--points", type=int)
    a("--values", type=float, nargs="+")

    parser = argparse.ArgumentParser(prog="wpcdelay", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"wpcdelay {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("solve", parents=[common], help="allocation for one fixed gain")
    sub.add_parser("sweep", parents=[common], help="average delay over an R0, SNR or m grid")
    fig = sub.add_parser("figure", parents=[common], help="data behind one of figures 2-6")
    fig.add_argument("figure", type=int, choices=(2, 3, 4, 5, 6))
    return parser


def main(argv=None, stdout=None, stderr=None):
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    try:
        cfg = resolve_config(ns)
        if ns.command == "solve":
            header, rows = cmd_solve(cfg)
            emit(render("solve", cfg, header, rows), cfg.out, stdout)
        elif ns.command == "sweep":
            header, rows, footer = cmd_sweep(cfg)
            emit(render("sweep", cfg, header, rows, footer), cfg.out, stdout)
        else:
            cfg.figure = ns.figure
            for suffix, header, rows in figure_tables(cfg, ns.figure):
                emit(render(f"figure {ns.figure}", cfg, header, rows),
                     _figure_path(cfg.out, ns.figure, suffix), stdout)
    except ConfigError as exc:
        stderr.write(f"config error: {exc}\n")
        return EXIT_CONFIG
    except ConvergenceGuardError as exc:
        stderr.write(f"convergence guard: {exc}\n")
        return EXIT_GUARD
    except DomainError as exc:
        stderr.write(f"invalid input: {exc}\n")
        return EXIT_CONFIG
    except WpcError as exc:
        stderr.write(f"solver error ({type(exc).__name__}): {exc}\n")
        return EXIT_SOLVER
    return EXIT_OK
