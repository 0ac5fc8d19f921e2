"""Command-line front end producing plot-ready tables.

Every subcommand evaluates one quantity of the pumped V-system on a grid and
writes a CSV or JSON table.  Exit status is 0 on success, 2 for invalid
configuration and 3 for numerical failure.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import os
import sys
import tempfile
from dataclasses import asdict, dataclass, fields
from typing import Sequence

import numpy as np

from . import __version__, fcs, lindblad, vmodel
from .vmodel import ModelParams

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
AUDIT_TOL = 1e-9

COMMANDS = ("bounds", "populations", "dscan", "ldf", "audit", "mc", "cgf", "heat", "nonunitality")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    B: float = 1.0
    J: float = 1.0
    omega1: float = 0.0
    beta: float = 1.0
    gamma: float = 4.0
    phi: float = math.pi / 2
    alpha: float = 0.0
    t: list[float] | None = None
    t_min: float = 0.0
    t_max: float = 2 * math.pi
    t_steps: int = 200
    eta: list[float] | None = None
    eta_min: float = -1.0
    eta_max: float = 1.0
    eta_steps: int = 201
    omega1_min: float = 0.1
    omega1_max: float = 3.0
    omega1_steps: int = 30
    samples: int = 100_000
    seed: int = 0
    output: str = "-"
    format: str = "csv"

    def params(self) -> ModelParams:
        return ModelParams(B=self.B, J=self.J, omega1=self.omega1, beta=self.beta,
                           gamma=self.gamma, phi=self.phi, alpha=self.alpha)

    def times(self) -> np.ndarray:
        if self.t is not None:
            return np.asarray(self.t, dtype=float)
        if self.t_steps < 2:
            raise ConfigError(f"t_steps must be at least 2, got {self.t_steps}")
        if not self.t_max > self.t_min:
            raise ConfigError(f"need t_max > t_min, got [{self.t_min}, {self.t_max}]")
        return np.linspace(self.t_min, self.t_max, self.t_steps)

    def etas(self, default: list[float] | None = None) -> np.ndarray:
        if self.eta is not None:
            return np.asarray(self.eta, dtype=float)
        if default is not None:
            return np.asarray(default, dtype=float)
        if self.eta_steps < 1:
            raise ConfigError(f"eta_steps must be positive, got {self.eta_steps}")
        return np.linspace(self.eta_min, self.eta_max, self.eta_steps)

    def pumps(self) -> np.ndarray:
        if self.omega1_steps < 1:
            raise ConfigError(f"omega1_steps must be positive, got {self.omega1_steps}")
        return np.linspace(self.omega1_min, self.omega1_max, self.omega1_steps)

    def echo(self) -> dict:
        return {k: _json_value(v) for k, v in asdict(self).items()}


# ---------------------------------------------------------------------------
# parsing


def _float_list(text: str) -> list[float]:
    try:
        values = [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def _format(text: str) -> str:
    if text not in ("csv", "json"):
        raise argparse.ArgumentTypeError(f"format must be csv or json, got {text!r}")
    return text


CONVERTERS = {f.name: float for f in fields(RunConfig)}
CONVERTERS.update(t=_float_list, eta=_float_list, t_steps=int, eta_steps=int,
                  omega1_steps=int, samples=int, seed=int, output=str, format=_format)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("model")
    for name in ("B", "J", "omega1", "beta", "gamma", "phi", "alpha"):
        g.add_argument(f"--{name}", type=float, default=None)
    g = common.add_argument_group("grids")
    g.add_argument("--t", type=_float_list, default=None, help="explicit times, comma separated")
    g.add_argument("--t-min", dest="t_min", type=float, default=None)
    g.add_argument("--t-max", dest="t_max", type=float, default=None)
    g.add_argument("--t-steps", dest="t_steps", type=int, default=None)
    g.add_argument("--eta", type=_float_list, default=None, help="counting parameters, comma separated")
    g.add_argument("--eta-min", dest="eta_min", type=float, default=None)
    g.add_argument("--eta-max", dest="eta_max", type=float, default=None)
    g.add_argument("--eta-steps", dest="eta_steps", type=int, default=None)
    g.add_argument("--omega1-min", dest="omega1_min", type=float, default=None)
    g.add_argument("--omega1-max", dest="omega1_max", type=float, default=None)
    g.add_argument("--omega1-steps", dest="omega1_steps", type=int, default=None)
    g = common.add_argument_group("run")
    g.add_argument("--samples", type=int, default=None)
    g.add_argument("--seed", type=int, default=None)
    g.add_argument("--output", "-o", default=None, help="output file, '-' for stdout")
    g.add_argument("--format", type=_format, default=None)
    g.add_argument("--config", default=None, help="flat key = value file; flags take precedence")

    parser = argparse.ArgumentParser(prog="heatcount", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"heatcount {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "bounds": "mean heat and CGF bounds over time",
        "populations": "system populations over time",
        "dscan": "dissipation gap against pump strength",
        "ldf": "large-deviation function of the damped model",
        "audit": "entropy-production identity over time",
        "mc": "sampled heat histogram against exact probabilities",
        "cgf": "cumulant generating function over time and eta",
        "heat": "heat distribution at one time",
        "nonunitality": "non-unitality of the environment channel",
    }
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name])
    return parser


def read_config_file(path: str) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from exc
    out = {}
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in CONVERTERS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        try:
            out[key] = CONVERTERS[key](value)
        except (ValueError, argparse.ArgumentTypeError) as exc:
            raise ConfigError(f"{path}:{lineno}: bad value for {key}: {exc}") from exc
    return out


def resolve_config(ns: argparse.Namespace) -> RunConfig:
    values = read_config_file(ns.config) if ns.config else {}
    for key in CONVERTERS:
        v = getattr(ns, key, None)
        if v is not None:
            values[key] = v
    return RunConfig(**values)


# ---------------------------------------------------------------------------
# output


def _json_value(v):
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_json_value(x) for x in v]
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return None
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if isinstance(v, np.integer):
        return int(v)
    return v


def _csv_cell(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def render_table(rows: Sequence[Sequence], columns: Sequence[str], fmt: str, meta: dict) -> str:
    if fmt == "csv":
        buf = io.StringIO(newline="")
        buf.write(",".join(columns) + "\n")
        for row in rows:
            if len(row) != len(columns):
                raise ValueError(f"row of length {len(row)} does not match {len(columns)} columns")
            buf.write(",".join(_csv_cell(v) for v in row) + "\n")
        return buf.getvalue()
    data = {c: [_json_value(row[i]) for row in rows] for i, c in enumerate(columns)}
    return json.dumps({"meta": meta, "data": data}, indent=2, allow_nan=False) + "\n"


def write_table(rows: Sequence[Sequence], columns: Sequence[str], path: str, fmt: str = "csv",
                meta: dict | None = None) -> None:
    """Write a table to ``path`` (``-`` for stdout), replacing the file atomically."""
    text = render_table(rows, columns, fmt, meta or {})
    if path == "-":
        sys.stdout.write(text)
        return
    directory = os.path.dirname(os.path.abspath(path))
    if not os.path.isdir(directory):
        raise ConfigError(f"output directory does not exist: {directory}")
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".heatcount-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except OSError as exc:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise OSError(f"failed writing {path}: {exc}") from exc


# ---------------------------------------------------------------------------
# subcommands


def _need_finite_beta(p: ModelParams, what: str):
    if math.isinf(p.beta) or p.beta <= 0:
        raise ConfigError(f"{what} needs a finite positive beta, got {p.beta}")


def _eta_label(v: float) -> str:
    return repr(float(v))


def cmd_bounds(cfg: RunConfig):
    p = cfg.params()
    _need_finite_beta(p, "bounds")
    etas = cfg.etas(default=[p.beta])
    if np.any(etas == 0):
        raise ConfigError("bounds are undefined at eta = 0")
    cols = ["t", "beta_mean_q"] + [f"bound_eta_{_eta_label(e)}" for e in etas]

    def row(t):
        dist = vmodel.heat_distribution(p, t)
        # -(beta/eta) Theta is the lower bound for eta > 0 and the upper one for eta < 0
        bounds = [-(p.beta / e) * fcs.cgf_from_distribution(dist, float(e)).theta for e in etas]
        return [t, p.beta * dist.mean(), *bounds]

    times = cfg.times()
    grid_rows = [row(float(t)) for t in times]
    # peaks of the bounds can be far narrower than the grid step at low temperature,
    # so the refined maximum of every column is added as an extra row
    extra_t = set()
    if cfg.t is None:
        table = np.array(grid_rows)
        for c in range(1, len(cols)):
            k = int(np.argmax(table[:, c]))
            if 0 < k < len(times) - 1:
                t_best, _ = vmodel.locate_maximum(lambda t: row(t)[c], times[k - 1:k + 2])
                extra_t.add(t_best)
    extra_t -= set(float(t) for t in times)
    rows = sorted(grid_rows + [row(t) for t in extra_t], key=lambda r: r[0])
    return rows, cols, {"refined_times": sorted(extra_t)}


def cmd_populations(cfg: RunConfig):
    p = cfg.params()
    rows = [[float(t), *vmodel.populations(p, float(t))] for t in cfg.times()]
    return rows, ["t", "rho00", "rho11", "rho22"], None


def cmd_dscan(cfg: RunConfig):
    p = cfg.params()
    _need_finite_beta(p, "dscan")
    scan = vmodel.gap_scan(p, cfg.pumps(), cfg.times())
    rows = [[float(o), float(d)] for o, d in zip(scan.omega1_values, scan.d_values)]
    return rows, ["omega1", "d"], None


def cmd_ldf(cfg: RunConfig):
    p = cfg.params()
    curve = lindblad.ldf(p, cfg.etas())
    rows = [[float(e), float(th), float(lo), float(hi)] for e, th, lo, hi in
            zip(curve.etas, curve.theta, curve.lower_stationary, curve.upper_stationary)]
    return rows, ["eta", "theta", "b_lower", "b_upper"], {"kink": curve.kink, "bound_scale": curve.bound_scale}


def cmd_audit(cfg: RunConfig):
    p = cfg.params()
    _need_finite_beta(p, "audit")
    h = vmodel.build_interaction_hamiltonian(p)
    rho0, h_env = vmodel.initial_state(p), vmodel.env_hamiltonian(p)
    rows = []
    for t in cfg.times():
        a = fcs.landauer_audit(h, rho0, h_env, p.beta, float(t))
        rows.append([float(t), a.beta_mean_q, a.delta_s, a.mutual_info, a.env_relative_entropy, a.residual])
    worst = max((abs(r[-1]) for r in rows), default=0.0)
    return rows, ["t", "beta_mean_q", "delta_s", "mutual_info", "rel_entropy", "residual"], {"max_residual": worst}


def _single_time(cfg: RunConfig, what: str) -> float:
    if cfg.t is None or len(cfg.t) != 1:
        raise ConfigError(f"{what} needs exactly one time via --t")
    return float(cfg.t[0])


def cmd_mc(cfg: RunConfig):
    p = cfg.params()
    t = _single_time(cfg, "mc")
    u, rho0, h_env = vmodel.protocol(p, t)
    exact = fcs.heat_distribution_from_protocol(u, rho0, h_env, p.beta)
    emp = fcs.mc_sample_heat(u, rho0, h_env, p.beta, cfg.samples, seed=cfg.seed)
    rows = []
    for q, pe in zip(exact.q, exact.prob):
        pm = emp.probability(float(q))
        rows.append([float(q), pm, float(pe), math.sqrt(pe * (1 - pe) / cfg.samples)])
    for q in emp.q:
        if exact.probability(float(q)) == 0.0:
            rows.append([float(q), emp.probability(float(q)), 0.0, 0.0])
    rows.sort(key=lambda r: r[0])
    return rows, ["q", "prob_empirical", "prob_exact", "sigma"], None


def cmd_cgf(cfg: RunConfig):
    p = cfg.params()
    etas = cfg.etas(default=[p.beta] if math.isfinite(p.beta) else [1.0])
    rows = []
    for t in cfg.times():
        dist = vmodel.heat_distribution(p, float(t))
        for e in etas:
            rows.append([float(t), float(e), fcs.cgf_from_distribution(dist, float(e)).theta])
    return rows, ["t", "eta", "theta"], None


def cmd_heat(cfg: RunConfig):
    p = cfg.params()
    dist = vmodel.heat_distribution(p, _single_time(cfg, "heat"))
    return [[float(q), float(w)] for q, w in zip(dist.q, dist.prob)], ["q", "prob"], None


def cmd_nonunitality(cfg: RunConfig):
    p = cfg.params()
    try:
        vmodel.non_unitality_closed(p, 0.0)
        closed = True
    except ValueError:
        closed = False
    rows = []
    for t in cfg.times():
        t = float(t)
        rows.append([t, vmodel.non_unitality(p, t), vmodel.non_unitality_closed(p, t) if closed else math.nan])
    return rows, ["t", "n_e", "n_e_closed"], None


HANDLERS = {name: globals()[f"cmd_{name}"] for name in COMMANDS}


def run(command: str, cfg: RunConfig) -> int:
    rows, cols, extra = HANDLERS[command](cfg)
    meta = {"command": command, "version": __version__, "seed": cfg.seed, "config": cfg.echo()}
    if extra:
        meta.update({k: _json_value(v) for k, v in extra.items()})
    write_table(rows, cols, cfg.output, cfg.format, meta)
    if command == "audit" and extra["max_residual"] > AUDIT_TOL:
        print(f"heatcount: audit residual {extra['max_residual']:.3e} exceeds {AUDIT_TOL}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        cfg = resolve_config(ns)
        return run(ns.command, cfg)
    except (ConfigError, ValueError, TypeError) as exc:
        print(f"heatcount: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ArithmeticError, RuntimeError, np.linalg.LinAlgError) as exc:
        print(f"heatcount: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"heatcount: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
