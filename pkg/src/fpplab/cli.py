"""Command-line front end: ``fpplab COMMAND [--config FILE] [flags]``.

Settings come from, in increasing priority: built-in defaults, the INI
config file, the ``FPPLAB_SEED`` environment variable (seed only), and
command-line flags.  Exit codes: 0 pass, 1 property failure or violated
assumption, 2 inconclusive, 3 configuration error, 4 runtime error.
"""

from __future__ import annotations

import argparse
import configparser
import json
import math
import os
import sys
from dataclasses import asdict, dataclass, field
from typing import Any, Sequence

import numpy as np
from scipy import stats

from . import __version__
from .coupling import assemble_field, sample_coupling
from .io import atomic_write, header, render_csv, render_json
from .paths import WeightField, estimate_time_constant
from .seeding import DEFAULT_SEED, SEED_ENV, stream, worker_map
from .weights import (
    Distribution,
    ModeThreshold,
    choose_threshold,
    default_epsilon,
    make_distribution,
    validate_distribution,
)

EXIT_PASS, EXIT_FAIL, EXIT_INCONCLUSIVE, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2, 3, 4
STATUS_CODE = {"pass": EXIT_PASS, "fail": EXIT_FAIL, "inconclusive": EXIT_INCONCLUSIVE}

COMMANDS = (
    "validate",
    "scan",
    "cylinder-scan",
    "coupling-check",
    "median-find",
    "goodset",
    "flip",
    "antichain",
    "smallball",
    "reckon",
    "time-constant",
)
NEEDS_X = {"coupling-check", "median-find", "goodset", "flip", "antichain", "smallball", "reckon"}
NEEDS_NLIST = {"scan", "cylinder-scan", "time-constant"}


class ConfigError(Exception):
    def __init__(self, errors: list[str]):
        super().__init__("; ".join(errors))
        self.errors = errors


@dataclass
class RunConfig:
    command: str
    dist_name: str
    dist_params: dict[str, str]
    seed: int = DEFAULT_SEED
    K: int = 4
    j_max: int | None = None
    pad: float = 1.5
    q: float = 0.5
    d0: float | None = None
    x: tuple[int, ...] | None = None
    n_list: tuple[int, ...] | None = None
    alpha: float | None = None
    direction: tuple[int, ...] = (1, 0)
    replicates: int = 200
    outer: int = 200
    inner: int = 100
    xi: float = 0.1
    epsilon: float | None = None
    r: float | None = None
    a_low: float | None = None
    tol: float | None = None
    c_grid: tuple[float, ...] = (0.05, 0.1, 0.15, 0.2, 0.25, 0.3)
    require_good: bool = True
    output: str | None = None
    format: str = "csv"
    workers: int = 1
    dist: Distribution = field(default=None, repr=False, compare=False)

    def echo(self) -> dict:
        """Config as embedded in outputs; execution-only knobs (workers, output path) are left out."""
        d = asdict(self)
        for k in ("dist", "workers", "output"):
            d.pop(k)
        d["distribution"] = self.dist.describe()
        return d


# ---------------------------------------------------------------------------
# parsing


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(t) for t in str(text).replace(",", " ").split())


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(t) for t in str(text).replace(",", " ").split())


def _bool(text: str) -> bool:
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


CONVERTERS = {
    "seed": int,
    "K": int,
    "j_max": int,
    "pad": float,
    "q": float,
    "d0": float,
    "x": _ints,
    "n_list": _ints,
    "alpha": float,
    "direction": _ints,
    "replicates": int,
    "outer": int,
    "inner": int,
    "xi": float,
    "epsilon": float,
    "r": float,
    "a_low": float,
    "tol": float,
    "c_grid": _floats,
    "require_good": _bool,
    "output": str,
    "format": str,
    "workers": int,
}
ALIASES = {"k": "K", "jmax": "j_max", "nlist": "n_list", "outer_draws": "outer", "outerdraws": "outer", "c1grid": "c_grid"}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fpplab", description="First-passage percolation fluctuation experiments.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", help="INI file with [run], [model], [experiment] and [distribution] sections")
    p.add_argument("--dist", help="distribution name (exponential, uniform, two_point, shifted_exponential, table, atom, mixture)")
    p.add_argument("--dist-param", action="append", default=[], metavar="KEY=VALUE", help="distribution parameter; repeatable")
    p.add_argument("--seed", type=str)
    p.add_argument("--K", type=str)
    p.add_argument("--j-max", dest="j_max", type=str)
    p.add_argument("--pad", type=str)
    p.add_argument("--q", type=str)
    p.add_argument("--d0", type=str)
    p.add_argument("--x", type=str, help="target point, e.g. 8,0")
    p.add_argument("--n-list", dest="n_list", type=str, help="e.g. 8,16,32")
    p.add_argument("--alpha", type=str)
    p.add_argument("--direction", type=str)
    p.add_argument("--replicates", type=str)
    p.add_argument("--outer", type=str, help="outer draws of the counts vector")
    p.add_argument("--inner", type=str, help="inner replicates used by the window search")
    p.add_argument("--xi", type=str)
    p.add_argument("--epsilon", type=str)
    p.add_argument("--r", type=str)
    p.add_argument("--a-low", dest="a_low", type=str)
    p.add_argument("--tol", type=str)
    p.add_argument("--c-grid", dest="c_grid", type=str)
    p.add_argument("--require-good", dest="require_good", type=str)
    p.add_argument("--output", "-o", type=str)
    p.add_argument("--format", type=str)
    p.add_argument("--workers", type=str)
    p.add_argument("--version", action="version", version=f"fpplab {__version__}")
    return p


def _read_ini(path: str) -> tuple[dict[str, str], dict[str, str]]:
    cp = configparser.ConfigParser()
    cp.optionxform = str
    if not cp.read(path):
        raise ConfigError([f"cannot read config file {path!r}"])
    flat, dist = {}, {}
    for section in cp.sections():
        target = dist if section.lower() == "distribution" else flat
        for k, v in cp.items(section):
            target[k] = v
    return flat, dist


def parse_config(argv: Sequence[str] | None = None, env: dict | None = None) -> RunConfig:
    """Merge defaults, config file, environment and flags; raise ConfigError listing every bad field."""
    env = os.environ if env is None else env
    args = build_parser().parse_args(argv)
    raw: dict[str, str] = {}
    dist_raw: dict[str, str] = {}
    if args.config:
        raw, dist_raw = _read_ini(args.config)
        raw = {ALIASES.get(k.lower(), k): v for k, v in raw.items()}
    if env.get(SEED_ENV):
        raw["seed"] = env[SEED_ENV]
    for key in CONVERTERS:
        val = getattr(args, key, None)
        if val is not None:
            raw[key] = val
    if args.dist:
        dist_raw["name"] = args.dist
    errors = []
    for item in args.dist_param:
        if "=" not in item:
            errors.append(f"--dist-param expects KEY=VALUE, got {item!r}")
            continue
        k, v = item.split("=", 1)
        dist_raw[k.strip()] = v.strip()

    values: dict[str, Any] = {}
    for k, v in raw.items():
        if k == "command":
            continue
        if k not in CONVERTERS:
            errors.append(f"unknown field {k!r}")
            continue
        try:
            values[k] = CONVERTERS[k](v)
        except (TypeError, ValueError):
            errors.append(f"field {k!r}: cannot parse {v!r}")

    name = dist_raw.pop("name", None) or dist_raw.pop("dist", None)
    dist = None
    if not name:
        errors.append("missing field: distribution (set [distribution] name or --dist)")
    else:
        try:
            dist = make_distribution(name, **dist_raw)
        except (TypeError, ValueError) as exc:
            errors.append(f"distribution: {exc}")

    cmd = args.command
    if cmd in NEEDS_X and not values.get("x"):
        errors.append("missing field: x")
    if cmd in NEEDS_NLIST and not values.get("n_list"):
        errors.append("missing field: n_list")
    if cmd == "cylinder-scan" and values.get("alpha") is None:
        errors.append("missing field: alpha")
    a = values.get("alpha")
    if a is not None and not 0.0 < a < 1.0:
        errors.append("alpha must lie in (0,1)")
    if values.get("K", 4) < 2:
        errors.append("K must be >= 2")
    if "j_max" in values and values["j_max"] < 1:
        errors.append("j_max must be >= 1")
    if values.get("pad", 1.5) < 1.0:
        errors.append("pad must be >= 1")
    if not 0.0 < values.get("q", 0.5) < 1.0:
        errors.append("q must lie in (0,1)")
    for k in ("replicates", "outer", "inner", "workers"):
        if k in values and values[k] < 1:
            errors.append(f"{k} must be >= 1")
    if values.get("format", "csv") not in ("csv", "json"):
        errors.append("format must be csv or json")
    if "epsilon" in values and values["epsilon"] <= 0:
        errors.append("epsilon must be > 0")
    if "xi" in values and not 0.0 < values["xi"] < 1.0:
        errors.append("xi must lie in (0,1)")
    x = values.get("x")
    if x is not None and (len(x) < 2 or all(c == 0 for c in x)):
        errors.append("x must be a nonzero point with at least 2 coordinates")
    nl = values.get("n_list")
    if nl is not None and (any(n < 1 for n in nl) or list(nl) != sorted(set(nl))):
        errors.append("n_list must be strictly increasing positive integers")
    if errors:
        raise ConfigError(errors)
    dist_params = {k: str(v) for k, v in sorted(dist_raw.items())}
    cfg = RunConfig(command=cmd, dist_name=name, dist_params=dist_params, **values)
    cfg.dist = dist
    return cfg


# ---------------------------------------------------------------------------
# commands


def _model(cfg: RunConfig, cylinder: bool = True):
    from .experiments import ModelParams

    return ModelParams(
        cfg.dist,
        cfg.x,
        K=cfg.K,
        pad=cfg.pad,
        q=cfg.q,
        d0=cfg.d0,
        alpha=cfg.alpha if cylinder else None,
        j_max=cfg.j_max,
    )


def _window(cfg: RunConfig, model):
    from .experiments import TruncationWindow, find_truncation

    if cfg.a_low is not None:
        return TruncationWindow(cfg.a_low, model.width()), None
    res = find_truncation(model, cfg.seed, cfg.tol, cfg.outer, cfg.inner, workers=cfg.workers)
    return res.window, res


def cmd_validate(cfg: RunConfig):
    rep = validate_distribution(cfg.dist)
    return ("pass" if rep.passed else "fail"), rep.to_dict(), [], None


def cmd_scan(cfg: RunConfig):
    from .experiments.scans import SCAN_COLUMNS, fluctuation_scan

    alpha = cfg.alpha if cfg.command == "cylinder-scan" else None
    d = len(cfg.direction)
    res = fluctuation_scan(cfg.dist, cfg.n_list, cfg.replicates, cfg.seed, alpha, d, cfg.pad, cfg.workers)
    return "pass", {"mode": res.mode, "alpha": alpha}, res.rows, SCAN_COLUMNS


def ks_critical(n: int, m: int, level: float = 0.01) -> float:
    """Asymptotic two-sample KS critical value c(level) sqrt((n + m) / (n m))."""
    c = math.sqrt(-0.5 * math.log(level / 2.0))
    return c * math.sqrt((n + m) / (n * m))


def cmd_coupling_check(cfg: RunConfig):
    model = _model(cfg)
    box, geom, thr = model.box, model.geometry, model.threshold

    def assembled(r: int) -> float:
        return model.passage(assemble_field(sample_coupling(geom, cfg.dist, thr, stream(cfg.seed, "coupled", r))))

    def direct(r: int) -> float:
        return model.passage(WeightField.iid(box, cfg.dist, stream(cfg.seed, "direct", r)))

    a = np.asarray(worker_map(assembled, range(cfg.replicates), cfg.workers))
    b = np.asarray(worker_map(direct, range(cfg.replicates), cfg.workers))
    ks = stats.ks_2samp(a, b)
    crit = ks_critical(a.size, b.size)
    result = {
        "ks_statistic": float(ks.statistic),
        "p_value": float(ks.pvalue),
        "critical_1pct": crit,
        "mean_assembled": float(a.mean()),
        "mean_direct": float(b.mean()),
        "replicates": cfg.replicates,
    }
    return ("pass" if ks.statistic < crit else "fail"), result, [], None


def cmd_median_find(cfg: RunConfig):
    from .experiments import find_truncation

    model = _model(cfg)
    res = find_truncation(model, cfg.seed, cfg.tol, cfg.outer, cfg.inner, workers=cfg.workers)
    return ("pass" if res.converged else "inconclusive"), res.to_dict(), [], None


def cmd_goodset(cfg: RunConfig):
    from .experiments import good_set_probe
    from .experiments.truncation import outer_counts

    model = _model(cfg)
    window, _ = _window(cfg, model)
    rows = []
    for i in range(cfg.outer):
        rep = good_set_probe(model, outer_counts(model, cfg.seed, i), window, cfg.xi, cfg.replicates, cfg.seed, (i,), cfg.workers)
        row = {"draw": i, "item1_freq": rep.item1_freq, "is_good": rep.is_good, "cond_mean": rep.cond_mean}
        for j, v in rep.item2_freq.items():
            row[f"item2_freq_{j}"] = v
        rows.append(row)
    frac = float(np.mean([r["is_good"] for r in rows]))
    result = {"good_fraction": frac, "indices": list(model.indices()), **{f"window_{k}": v for k, v in window.to_dict().items()}}
    return "pass", result, rows, None


def cmd_flip(cfg: RunConfig):
    from .experiments import flip_delta
    from .experiments.truncation import outer_counts

    model = _model(cfg)
    window, _ = _window(cfg, model)
    idx = model.indices() or tuple(range(1, model.geometry.j_max + 1))
    rows = []
    for i in range(cfg.outer):
        counts = outer_counts(model, cfg.seed, i)
        rng = stream(cfg.seed, "flip", i)
        j = int(idx[rng.integers(len(idx))])
        new_n = int(rng.integers(0, counts[j] + 1))
        res = flip_delta(model, counts, j, new_n, window, cfg.replicates, cfg.seed, (i,), cfg.workers)
        rows.append({"draw": i, **res.to_dict()})
    negatives = sum(r["negative"] for r in rows)
    result = {"pairs": cfg.outer * cfg.replicates, "negative": negatives}
    return ("pass" if negatives == 0 else "fail"), result, rows, None


def cmd_antichain(cfg: RunConfig):
    from .experiments import antichain_extract

    model = _model(cfg)
    window, _ = _window(cfg, model)
    eps = cfg.epsilon if cfg.epsilon is not None else default_epsilon(cfg.dist, model.threshold)
    r = cfg.r if cfg.r is not None else window.inner_interval[0]
    res = antichain_extract(
        model, window, eps, r, cfg.replicates, cfg.seed, xi=cfg.xi, require_good=cfg.require_good, workers=cfg.workers
    )
    return res.verdict, res.to_dict(), [], None


def cmd_smallball(cfg: RunConfig):
    from .experiments import small_ball_scan

    model = _model(cfg)
    window, _ = _window(cfg, model)
    eps = cfg.epsilon if cfg.epsilon is not None else default_epsilon(cfg.dist, model.threshold)
    res = small_ball_scan(model, window, eps, cfg.replicates, cfg.outer, cfg.seed, cfg.xi, cfg.require_good, cfg.workers)
    result = {"epsilon": eps, "sup_freq": res.sup_freq, "argmax_r": res.argmax_r, "good_fraction": float(res.good.mean())}
    return "pass", result, res.rows(), ("r", "freq")


def cmd_reckon(cfg: RunConfig):
    from .experiments import reckoning_check

    model = _model(cfg)
    window, _ = _window(cfg, model)
    rep = reckoning_check(model, window, cfg.c_grid, cfg.replicates, cfg.seed, cfg.workers)
    result = {"certified_c": rep.certified_c, "samples": rep.samples, **{f"window_{k}": v for k, v in window.to_dict().items()}}
    return ("pass" if rep.certified_c > 0 else "inconclusive"), result, rep.rows(), ("c", "lower_freq", "upper_freq")


def cmd_time_constant(cfg: RunConfig):
    # paired augmented-field estimates need a threshold; skip them when F has none
    if cfg.d0 is not None:
        thr = ModeThreshold(cfg.d0, float(cfg.dist.cdf(cfg.d0)))
    else:
        try:
            thr = choose_threshold(cfg.dist, cfg.q)
        except ValueError:
            thr = None
    rows = estimate_time_constant(cfg.dist, cfg.direction, cfg.n_list, cfg.replicates, cfg.seed, thr, cfg.pad, cfg.workers)
    bad = thr is not None and any(r["min_paired_gap"] < 0 for r in rows)
    return ("fail" if bad else "pass"), {"direction": list(cfg.direction)}, rows, None


DISPATCH = {
    "validate": cmd_validate,
    "scan": cmd_scan,
    "cylinder-scan": cmd_scan,
    "coupling-check": cmd_coupling_check,
    "median-find": cmd_median_find,
    "goodset": cmd_goodset,
    "flip": cmd_flip,
    "antichain": cmd_antichain,
    "smallball": cmd_smallball,
    "reckon": cmd_reckon,
    "time-constant": cmd_time_constant,
}


def run(cfg: RunConfig) -> tuple[int, str]:
    """Execute ``cfg``; returns (exit code, rendered output)."""
    status, result, rows, columns = DISPATCH[cfg.command](cfg)
    head = header(cfg.command, cfg.seed, cfg.echo())
    if cfg.format == "json":
        text = render_json(head, status, result, rows)
    else:
        text = render_csv(head, status, result, rows, columns)
    if cfg.output:
        atomic_write(cfg.output, text)
    return STATUS_CODE[status], text


def _error(kind: str, messages: list[str]) -> None:
    sys.stderr.write(json.dumps({"error": kind, "messages": messages}, sort_keys=True) + "\n")


def main(argv: Sequence[str] | None = None) -> int:
    try:
        cfg = parse_config(argv)
    except ConfigError as exc:
        _error("config", exc.errors)
        return EXIT_CONFIG
    except SystemExit as exc:  # argparse usage errors
        return EXIT_CONFIG if exc.code else EXIT_PASS
    try:
        code, text = run(cfg)
    except (ValueError, RuntimeError, KeyError, IndexError, OSError) as exc:
        _error("runtime", [f"{type(exc).__name__}: {exc}"])
        return EXIT_RUNTIME
    if not cfg.output:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
