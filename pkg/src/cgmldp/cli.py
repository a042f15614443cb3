"""Command-line front end.

Usage::

    cgmldp <command> --config run.json [--key value ...]

The config is a JSON object. Any key may be overridden on the command line;
override values are parsed as JSON when possible and kept as strings
otherwise. Results go to ``output`` (default: stdout) as CSV or JSON.

Exit status: 0 success, 1 config error, 2 domain error, 3 consistency failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import annealed_entropy as ae
from . import lattice_sim as ls
from . import lyapunov as ly
from . import param_laws as pl
from . import rate as rt
from . import shape as sh
from .errors import ConfigError, ConsistencyError, DomainError

__all__ = ["COLUMNS", "run", "main"]

COLUMNS = {
    "shape": ["s", "t", "g", "zeta", "level_s", "level_t"],
    "phase": ["s", "t", "c1", "c2", "zeta", "region"],
    "lyapunov": ["s", "t", "kind", "lambda", "L", "zhat", "boundary", "stationary_L"],
    "rate": ["s", "t", "kind", "r", "J", "lambda_star", "z_star", "regime"],
    "expand": ["s", "t", "kind", "region", "exponent", "coefficient",
               "moment_condition_met", "eps", "J", "prediction", "ratio"],
    "tilt": ["s", "t", "r", "lambda_star", "z_star", "H1", "H2", "nu1", "nu2", "residual"],
    "left-tail": ["s", "t", "x", "y", "bound"],
    "simulate": ["estimator", "s", "t", "n", "reps", "seed", "mode", "param", "value",
                 "stderr"],
    "burke": ["series", "index", "mean", "var", "expected", "z", "mean_stat", "corr_stat",
              "passed"],
    "tasep": ["t", "i", "position", "unreliable"],
    "duality-check": ["s", "t", "kind", "lambda", "dual", "L", "residual", "r_argmax"],
}

DEFAULT_TOL = 1e-6


# -- config helpers --------------------------------------------------------------


def _get(cfg: dict, key: str, default=None, required: bool = False):
    if key in cfg:
        return cfg[key]
    if required:
        raise ConfigError(f"missing required field {key!r}")
    return default


def _number(cfg, key, default=None, required=False, kind=float):
    value = _get(cfg, key, default, required)
    if value is None:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"field {key!r} must be a number, got {value!r}")
    if kind is int:
        if float(value) != int(value):
            raise ConfigError(f"field {key!r} must be an integer, got {value!r}")
        return int(value)
    return float(value)


def _grid(cfg, key, required=True) -> list[float]:
    values = _get(cfg, key, None, required)
    if values is None:
        return []
    if not isinstance(values, list) or not all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in values):
        raise ConfigError(f"field {key!r} must be a list of numbers")
    values = [float(v) for v in values]
    if any(b <= a for a, b in zip(values, values[1:])):
        raise ConfigError(f"field {key!r} must be strictly increasing")
    return values


def _law(cfg, key):
    spec = _get(cfg, key, required=True)
    try:
        return pl.law_from_spec(spec)
    except ConfigError as exc:
        raise ConfigError(f"field {key!r}: {exc}") from exc


def _pair(value, key):
    if not (isinstance(value, (list, tuple)) and len(value) == 2 and all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in value)):
        raise ConfigError(f"field {key!r} must hold [a, b] number pairs, got {value!r}")
    return float(value[0]), float(value[1])


def _directions(cfg) -> list[sh.Direction]:
    if "directions" in cfg:
        raw = cfg["directions"]
        if not isinstance(raw, list) or not raw:
            raise ConfigError("field 'directions' must be a nonempty list of [s, t] pairs")
        pairs = [_pair(d, "directions") for d in raw]
    elif "direction" in cfg:
        pairs = [_pair(cfg["direction"], "direction")]
    else:
        pairs = [(1.0, 1.0)]
    return [sh.as_direction(p) for p in pairs]


def _kinds(cfg) -> list[ly.Kind]:
    raw = _get(cfg, "kinds", ["quenched", "annealed"])
    if isinstance(raw, str):
        raw = [raw]
    try:
        return [ly.Kind(k) for k in raw]
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"field 'kinds': {exc}") from exc


def _mode(cfg) -> ls.Mode:
    try:
        return ls.Mode(_get(cfg, "mode", "quenched"))
    except ValueError as exc:
        raise ConfigError(f"field 'mode': {exc}") from exc


def _law_label(law) -> str:
    if isinstance(law, pl.TiltedLaw):
        base = json.dumps(pl.law_to_spec(law.base), sort_keys=True)
        return f"tilt_{law.kind}({base}, z0={law.z0!r}, lam0={law.lam0!r})"
    return json.dumps(pl.law_to_spec(law), sort_keys=True)


# -- commands ----------------------------------------------------------------------


def _cmd_shape(cfg):
    alpha, beta = _law(cfg, "alpha"), _law(cfg, "beta")
    dirs = _directions(cfg)
    count = _number(cfg, "level_set_points", 0, kind=int)
    if count:
        angles = (np.arange(count) + 0.5) * (0.5 * math.pi / count)
        dirs = dirs + [sh.Direction(math.cos(a), math.sin(a)) for a in angles]
    rows = []
    for d in dirs:
        res = sh.shape_function(alpha, beta, d)
        # g is 1-homogeneous, so scaling by 1/g lands on the level set g = 1
        rows.append({"s": d.s, "t": d.t, "g": res.g, "zeta": res.zeta,
                     "level_s": d.s / res.g, "level_t": d.t / res.g})
    return rows, {}


def _cmd_phase(cfg):
    alpha, beta = _law(cfg, "alpha"), _law(cfg, "beta")
    rows = []
    for d in _directions(cfg):
        p = sh.phase_portrait(alpha, beta, d)
        rows.append({"s": d.s, "t": d.t, "c1": p.c1, "c2": p.c2, "zeta": p.zeta,
                     "region": p.region.value})
    return rows, {}


def _cmd_lyapunov(cfg):
    alpha, beta = _law(cfg, "alpha"), _law(cfg, "beta")
    lams = _grid(cfg, "lambdas")
    z = _number(cfg, "z")
    cap = 0.0
    if z is not None:
        if not -alpha.ess_inf < z < beta.ess_inf:
            raise DomainError(f"z={z!r} outside ({-alpha.ess_inf!r}, {beta.ess_inf!r})")
        cap = min(alpha.ess_inf + z, beta.ess_inf - z)
    rows = []
    for d in _directions(cfg):
        for kind in _kinds(cfg):
            curve = ly.LyapunovCurve(kind, alpha, beta, d)
            for lam in lams:
                pt = curve.point(lam)
                stat = None
                # the stationary exponent is only defined below min(a_lo + z, b_lo - z)
                if z is not None and kind is ly.Kind.QUENCHED and lam < cap:
                    stat = ly.stationary_L(alpha, beta, z, d, lam)
                rows.append({"s": d.s, "t": d.t, "kind": kind.value, "lambda": lam,
                             "L": pt.value, "zhat": pt.zhat, "boundary": pt.boundary.value,
                             "stationary_L": stat})
    return rows, {}


def _cmd_rate(cfg):
    alpha, beta = _law(cfg, "alpha"), _law(cfg, "beta")
    rs = _grid(cfg, "rs")
    rows = []
    for d in _directions(cfg):
        for kind in _kinds(cfg):
            for r in rs:
                ev = rt.right_tail_J(kind, alpha, beta, d, r)
                rows.append({"s": d.s, "t": d.t, "kind": kind.value, "r": r, "J": ev.value,
                             "lambda_star": ev.lambda_star, "z_star": ev.z_star,
                             "regime": ev.regime.value})
    return rows, {}


def _cmd_expand(cfg):
    alpha, beta = _law(cfg, "alpha"), _law(cfg, "beta")
    eps_grid = _grid(cfg, "eps")
    rows = []
    for d in _directions(cfg):
        for kind in _kinds(cfg):
            rep = rt.expansion(kind, alpha, beta, d)
            for row in rt.expansion_table(kind, alpha, beta, d, eps_grid):
                rows.append({"s": d.s, "t": d.t, "kind": kind.value,
                             "region": rep.region.value, "exponent": rep.exponent,
                             "coefficient": rep.coefficient,
                             "moment_condition_met": rep.moment_condition_met, **row})
    return rows, {}


def _cmd_tilt(cfg):
    alpha, beta = _law(cfg, "alpha"), _law(cfg, "beta")
    rs = _grid(cfg, "rs")
    tol = _number(cfg, "tol", DEFAULT_TOL)
    rows = []
    for d in _directions(cfg):
        for r in rs:
            pair = ae.optimal_tilts(alpha, beta, d, r)
            lhs = rt.annealed_J(alpha, beta, d, r).value
            rhs = ae.decomposition_objective(alpha, beta, pair.nu1, pair.nu2, d, r)
            rows.append({"s": d.s, "t": d.t, "r": r, "lambda_star": pair.lambda_star,
                         "z_star": pair.z_star, "H1": pair.H1, "H2": pair.H2,
                         "nu1": _law_label(pair.nu1), "nu2": _law_label(pair.nu2),
                         "residual": abs(lhs - rhs)})
    worst = max((row["residual"] for row in rows), default=0.0)
    return rows, {"max_residual": worst, "tol": tol, "consistent": worst <= tol}


def _cmd_left_tail(cfg):
    alpha, beta = _law(cfg, "alpha"), _law(cfg, "beta")
    raw = _get(cfg, "intervals", required=True)
    if not isinstance(raw, list) or not raw:
        raise ConfigError("field 'intervals' must be a nonempty list of [x, y] pairs")
    intervals = [_pair(v, "intervals") for v in raw]
    rows = []
    for d in _directions(cfg):
        for x, y in intervals:
            rows.append({"s": d.s, "t": d.t, "x": x, "y": y,
                         "bound": ae.left_tail_bound(alpha, beta, d, x, y)})
    return rows, {}


def _cmd_simulate(cfg):
    alpha, beta = _law(cfg, "alpha"), _law(cfg, "beta")
    n = _number(cfg, "n", required=True, kind=int)
    reps = _number(cfg, "reps", required=True, kind=int)
    seed = _number(cfg, "seed", required=True, kind=int)
    mode = _mode(cfg)
    side = _get(cfg, "side", "upper")
    lams = _grid(cfg, "lambdas", required=False)
    rs = _grid(cfg, "rs", required=False)
    replicates = _get(cfg, "replicates_output")
    rows = []
    for d in _directions(cfg):
        base = {"s": d.s, "t": d.t, "n": n, "reps": reps, "seed": seed, "mode": mode.value}
        samples = ls.mc_passage_samples(alpha, beta, d, n, reps, seed, mode)
        scaled = samples / n
        err = float(scaled.std(ddof=1) / math.sqrt(reps)) if reps > 1 else math.inf
        rows.append({"estimator": "shape", **base, "param": None,
                     "value": float(scaled.mean()), "stderr": err})
        for lam in lams:
            rows.append({"estimator": "lyapunov", **base, "param": lam,
                         "value": ls.mc_lyapunov_estimate(alpha, beta, d, lam, n, reps, seed,
                                                          mode),
                         "stderr": None})
        for r in rs:
            rows.append({"estimator": f"tail_{side}", **base, "param": r,
                         "value": ls.mc_tail_estimate(alpha, beta, d, r, n, reps, seed, mode,
                                                      side),
                         "stderr": None})
        if replicates:
            suffix = "" if len(_directions(cfg)) == 1 else f".{d.s:g}_{d.t:g}"
            with open(f"{replicates}{suffix}", "w", newline="") as fh:
                ls.write_replicates_csv(fh, n, scaled)
    return rows, {}


def _cmd_burke(cfg):
    alpha, beta = _law(cfg, "alpha"), _law(cfg, "beta")
    rep = ls.burke_check(alpha, beta, _number(cfg, "z", required=True),
                         _number(cfg, "m", required=True, kind=int),
                         _number(cfg, "n", required=True, kind=int),
                         _number(cfg, "reps", required=True, kind=int),
                         _number(cfg, "seed", required=True, kind=int))
    common = {"z": rep.z, "mean_stat": rep.mean_stat, "corr_stat": rep.corr_stat,
              "passed": rep.passed}
    rows = []
    for series, means, vars_, exp in (("I", rep.I_mean, rep.I_var, rep.I_expected),
                                      ("J", rep.J_mean, rep.J_var, rep.J_expected)):
        for idx, (mu, var, e) in enumerate(zip(means, vars_, exp), start=1):
            rows.append({"series": series, "index": idx, "mean": mu, "var": var,
                         "expected": e, **common})
    return rows, {"means_pass": rep.means_pass, "corr_pass": rep.corr_pass,
                  "corner": list(rep.corner)}


def _cmd_tasep(cfg):
    alpha, beta = _law(cfg, "alpha"), _law(cfg, "beta")
    if _get(cfg, "query", "positions") == "rate":
        x, y, t = (_number(cfg, k, required=True) for k in ("x", "y", "t"))
        rows = [{"kind": k.value, "x": x, "y": y, "t": t,
                 "rate": rt.tasep_rate(k, alpha, beta, x, y, t)} for k in _kinds(cfg)]
        return rows, {"columns": ["kind", "x", "y", "t", "rate"]}
    m = _number(cfg, "m", required=True, kind=int)
    n = _number(cfg, "n", required=True, kind=int)
    seed = _number(cfg, "seed", required=True, kind=int)
    times = _grid(cfg, "times")
    env = ls.sample_env(alpha, beta, m, n, seed, ls.Mode.QUENCHED)
    table = ls.passage_times(ls.sample_weights(env))
    rows = []
    for t in times:
        pos = ls.tasep_positions(table, t)
        for i, (p, bad) in enumerate(zip(pos.positions, pos.unreliable), start=1):
            rows.append({"t": t, "i": i, "position": int(p), "unreliable": bool(bad)})
    return rows, {}


def _cmd_duality(cfg):
    alpha, beta = _law(cfg, "alpha"), _law(cfg, "beta")
    fractions = _grid(cfg, "lambda_fractions", required=False)
    lams = _grid(cfg, "lambdas", required=not fractions)
    tol = _number(cfg, "tol", DEFAULT_TOL)
    top = ly.lambda_max(alpha, beta)
    lams = lams or [f * top for f in fractions]
    rows = []
    for d in _directions(cfg):
        for kind in _kinds(cfg):
            for lam in lams:
                dual, r_arg = rt.legendre_dual(kind, alpha, beta, d, lam)
                value = ly.lyapunov_L(kind, alpha, beta, d, lam).value
                rows.append({"s": d.s, "t": d.t, "kind": kind.value, "lambda": lam,
                             "dual": dual, "L": value, "residual": abs(dual - value),
                             "r_argmax": r_arg})
    worst = max((row["residual"] for row in rows), default=0.0)
    return rows, {"max_residual": worst, "tol": tol, "consistent": worst <= tol}


COMMANDS = {
    "shape": _cmd_shape,
    "phase": _cmd_phase,
    "lyapunov": _cmd_lyapunov,
    "rate": _cmd_rate,
    "expand": _cmd_expand,
    "tilt": _cmd_tilt,
    "left-tail": _cmd_left_tail,
    "simulate": _cmd_simulate,
    "burke": _cmd_burke,
    "tasep": _cmd_tasep,
    "duality-check": _cmd_duality,
}


# -- output ------------------------------------------------------------------------


def _cell(value):
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def _json_value(value):
    if isinstance(value, (np.bool_,)):
        return bool(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
    return value


def render(command: str, rows: list[dict], meta: dict, fmt: str) -> str:
    columns = meta.pop("columns", COLUMNS[command])
    if fmt == "json":
        doc = {"command": command, "columns": columns,
               "rows": [{c: _json_value(row.get(c)) for c in columns} for row in rows],
               **{k: _json_value(v) for k, v in meta.items()}}
        return json.dumps(doc, indent=2) + "\n"
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(row.get(c)) for c in columns])
    return buf.getvalue()


def run(command: str, cfg: dict) -> tuple[str, int]:
    """Execute one command; returns the rendered artifact and the exit status."""
    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}")
    fmt = _get(cfg, "format", "csv")
    if fmt not in ("csv", "json"):
        raise ConfigError(f"field 'format' must be 'csv' or 'json', got {fmt!r}")
    rows, meta = COMMANDS[command](cfg)
    status = 0 if meta.get("consistent", True) else 3
    return render(command, rows, meta, fmt), status


def _parse_overrides(extra: list[str]) -> dict:
    out = {}
    if len(extra) % 2:
        raise ConfigError(f"overrides must come as --key value pairs, got {extra!r}")
    for flag, raw in zip(extra[::2], extra[1::2]):
        if not flag.startswith("--") or len(flag) < 3:
            raise ConfigError(f"expected --key, got {flag!r}")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        out[flag[2:].replace("-", "_")] = value
    return out


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        cfg = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path!r} is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    return cfg


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="cgmldp", description=__doc__.split("\n")[0])
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", help="JSON config file")
    args, extra = parser.parse_known_args(argv)
    try:
        cfg = _load_config(args.config)
        cfg.update(_parse_overrides(extra))
        text, status = run(args.command, cfg)
        output = _get(cfg, "output", "-")
        if output == "-":
            sys.stdout.write(text)
        else:
            Path(output).write_text(text)
        if status == 3:
            print("error: consistency check failed (residual above tol)", file=sys.stderr)
        return status
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ConsistencyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
