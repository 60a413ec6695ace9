"""Command-line entry point.

Every run writes its outputs plus ``manifest.json`` (config echo, package
version, wall-clock time and a sha256 per output) into ``--out``.
Exit codes: 0 success, 2 configuration error, 3 domain error, 4 numeric failure.
"""

import argparse
import csv
import hashlib
import itertools
import json
import math
import os
import sys
import time
from dataclasses import replace
from importlib import metadata

from . import backend, config, moments, pricing, simulator, transforms
from .errors import BcdcpError, ConfigError, DomainError, NumericFailure
from .model import validate as validate_model

SUBCOMMANDS = ("simulate", "moments", "premium-table", "transform-eval", "validate")


def _version():
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "unknown"


def sha256_of(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_rows(target, header, rows):
    with open(target, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if header:
            w.writerow(header)
        w.writerows(rows)


def _num(v):
    return repr(float(v)) if isinstance(v, (int, float)) and not isinstance(v, bool) else str(v)


def build_parser():
    p = argparse.ArgumentParser(prog="bcdcp", description="Bivariate compound dynamic contagion process toolkit")
    sub = p.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        s = sub.add_parser(name)
        src = s.add_mutually_exclusive_group()
        src.add_argument("--config", help="YAML run configuration")
        src.add_argument("--example", choices=config.EXAMPLES, help="bundled example configuration")
        s.add_argument("--seed", type=int, help="overrides mc.seed")
        s.add_argument("--paths", type=int, help="overrides mc.paths")
        s.add_argument("--workers", type=int, help="overrides mc.workers")
        s.add_argument("--out", default=".", help="output directory (default: current directory)")
        s.add_argument("--round", choices=("paper",), dest="round_mode",
                       help="round table cells to the published number of decimals")
        s.add_argument("--mc-cross-moment", action="store_true",
                       help="estimate the shock cross moment by seeded sampling instead of quadrature")
    return p


def _load_config(args):
    if args.config:
        cfg = config.load(args.config)
    elif args.example:
        cfg = config.load_example(args.example)
    else:
        raise ConfigError("one of --config or --example is required")
    mc = cfg.mc
    if args.seed is not None:
        mc = replace(mc, seed=args.seed)
    if args.paths is not None:
        if args.paths < 1:
            raise ConfigError("--paths: must be at least 1")
        mc = replace(mc, paths=args.paths)
    if args.workers is not None:
        if args.workers < 1:
            raise ConfigError("--workers: must be at least 1")
        mc = replace(mc, workers=args.workers)
    cfg = replace(cfg, mc=mc)
    if args.mc_cross_moment:
        numeric = replace(cfg.numeric, cross_method="mc")
        shocks = replace(cfg.model.shocks, cross_method="mc")
        cfg = replace(cfg, numeric=numeric, model=replace(cfg.model, shocks=shocks))
    return cfg


# ------------------------------------------------------------------ commands

def cmd_simulate(cfg, args, out):
    if cfg.mc.seed is None:
        raise ConfigError("mc.seed: required for simulate (set it in the config or pass --seed)")
    model, seed = cfg.model, cfg.mc.seed
    path = simulator.simulate_path(model, cfg.horizon, seed, 0, "full", cfg.mc.grid_step)
    target = os.path.join(out, "path.csv")
    simulator.write_path_csv(path, target)
    written = [target]
    if cfg.mc.paths > 1:
        burn = cfg.mc.burn_in
        if burn is None and not model.is_stationary():
            burn = 0.0
        res = simulator.monte_carlo(model, cfg.horizon, cfg.mc.paths, seed, burn_in=burn,
                                    workers=cfg.mc.workers)
        target = os.path.join(out, "estimates.csv")
        simulator.write_estimates_csv(res, target)
        written.append(target)
    return written


def cmd_moments(cfg, args, out):
    rep = moments.moment_report(cfg.model, cfg.horizon, stationary=cfg.stationary)
    rows = [("mode", rep.mode)] + [(k, _num(v)) for k, v in rep.rows() if k != "mode"]
    rows.append(("cross_moment_method", cfg.model.shocks.cross_method_tag()))
    target = os.path.join(out, "moments.csv")
    _write_rows(target, ("key", "value"), rows)
    return [target]


def cmd_premium_table(cfg, args, out):
    tables = pricing.table_suite(cfg, workers=cfg.mc.workers)
    written = []
    for tab in tables:
        target = os.path.join(out, f"table-{tab.number}.csv")
        tab.write_csv(target, rounded=args.round_mode == "paper")
        written.append(target)
    return written


def _transform_grid(cfg):
    spec = dict(cfg.transform)
    keys = transforms.TransformQuery.__dataclass_fields__
    axes = []
    for name in ("theta", "eta", "nu", "zeta", "upsilon", "gamma"):
        v = spec.get(name, keys[name].default)
        axes.append(v if isinstance(v, list) else [v])
    for combo in itertools.product(*axes):
        yield transforms.TransformQuery(*combo, horizon=cfg.horizon)


def cmd_transform_eval(cfg, args, out):
    tol = cfg.numeric.ode_tol
    rows = []
    for q in _transform_grid(cfg):
        res = transforms.evaluate(q, cfg.model, tol=tol)
        rows.append([_num(x) for x in (q.theta, q.eta, q.nu, q.zeta, q.upsilon, q.gamma, q.horizon,
                                       res.value, res.error_estimate)])
    target = os.path.join(out, "transform.csv")
    _write_rows(target, ("theta", "eta", "nu", "zeta", "upsilon", "gamma", "horizon", "value",
                         "error_estimate"), rows)
    return [target]


def quick_invariants(cfg):
    """Cheap consistency checks run by ``validate`` after the parameter checks."""
    model, t = cfg.model, cfg.horizon
    out = []

    def check(name, fn):
        try:
            ok, detail = fn()
        except BcdcpError as exc:
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        out.append((name, "ok" if ok else "FAIL", detail))

    stationary = model.is_stationary()

    def corr_range():
        r = moments.corr_losses(model, t)
        return -1.0 <= r <= 1.0, f"corr={r!r}"

    def premium_floor():
        q = pricing.premium_bivariate(model, t, cfg.loading)
        cov_floor = -(q.var1 + q.var2) / 2
        return (q.premium >= q.sum_mean) or q.cov < cov_floor, f"premium={q.premium!r}, mean={q.sum_mean!r}"

    def contagion_dominates():
        c = pricing.premium_bivariate(model, t, cfg.loading).premium
        s = pricing.premium_bivariate(model.shot_noise(), t, cfg.loading).premium
        return c >= s, f"contagion={c!r}, shot_noise={s!r}"

    def transform_unit():
        v = transforms.evaluate(transforms.TransformQuery(horizon=t), model).value
        return abs(v - 1.0) <= 1e-8, f"value={v!r}"

    def mean_intensity_positive():
        vals = [moments.mean_intensity(model, d, t, stationary=stationary) for d in (1, 2)]
        return all(v > 0 and math.isfinite(v) for v in vals), f"E lambda = {vals!r}"

    def sample_paths():
        burn = 0.0 if not stationary else None
        term, _ = simulator.simulate_terminal_states(model, t, 256, 0, burn_in=burn)
        ok = bool((term[:, 2:] >= 0).all() and (term[:, :2] >= min(model.line1.a, model.line2.a)).all())
        return ok, "256 terminal states: counts and losses nonnegative, intensities above floor"

    check("invariant.mean_intensity_positive", mean_intensity_positive)
    if stationary:
        check("invariant.corr_in_unit_interval", corr_range)
        check("invariant.premium_at_least_mean", premium_floor)
        check("invariant.contagion_premium_dominates", contagion_dominates)
    check("invariant.transform_at_zero_is_one", transform_unit)
    check("invariant.sample_paths_valid", sample_paths)
    return out


def cmd_validate(cfg, args, out):
    rep = validate_model(cfg.model)
    rows = rep.rows()
    if rep.ok:
        rows += quick_invariants(cfg)
    target = os.path.join(out, "validate.csv")
    _write_rows(target, ("check", "status", "detail"), rows)
    failed = [r for r in rows if r[1] != "ok"]
    for name, _, detail in failed:
        print(f"FAIL {name}: {detail}", file=sys.stderr)
    if failed:
        raise _ValidationFailed([target], f"{len(failed)} check(s) failed")
    return [target]


class _ValidationFailed(DomainError):
    def __init__(self, written, message):
        super().__init__(message)
        self.written = written


COMMANDS = {"simulate": cmd_simulate, "moments": cmd_moments, "premium-table": cmd_premium_table,
            "transform-eval": cmd_transform_eval, "validate": cmd_validate}


def write_manifest(out, args, cfg, written, started, elapsed, status, message=None):
    manifest = {
        "command": args.command,
        "argv": sys.argv[1:],
        "version": _version(),
        "backend": backend.NAME,
        "started_unix": started,
        "wall_clock_seconds": elapsed,
        "exit_code": status,
        "message": message,
        "config": config.to_dict(cfg) if cfg is not None else None,
        "outputs": {os.path.basename(p): sha256_of(p) for p in written},
    }
    target = os.path.join(out, "manifest.json")
    with open(target, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(manifest, fh, indent=2, default=str)
        fh.write("\n")
    return target


def main(argv=None):
    args = build_parser().parse_args(argv)
    started = time.time()
    t0 = time.perf_counter()
    cfg, written, status, message = None, [], 0, None
    try:
        os.makedirs(args.out, exist_ok=True)
    except OSError as exc:
        print(f"error: cannot create output directory {args.out}: {exc}", file=sys.stderr)
        return ConfigError.exit_code
    try:
        cfg = _load_config(args)
        written = COMMANDS[args.command](cfg, args, args.out)
    except _ValidationFailed as exc:
        written, status, message = exc.written, exc.exit_code, str(exc)
    except BcdcpError as exc:
        status, message = exc.exit_code, str(exc)
    except (FloatingPointError, OverflowError, ZeroDivisionError) as exc:
        status, message = NumericFailure.exit_code, f"numeric failure: {exc}"
    if message:
        print(f"error: {message}", file=sys.stderr)
    write_manifest(args.out, args, cfg, written, started, time.perf_counter() - t0, status, message)
    for p in written:
        print(p)
    return status


if __name__ == "__main__":
    sys.exit(main())
