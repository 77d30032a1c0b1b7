"""Command-line entry point: ``chainbreak <subcommand> ...``.

Exit codes: 0 pass, 1 threshold failure (or aborted run), 2 configuration error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys

import numpy as np

from . import oracle
from .errors import AssumptionViolation, ConfigError, DomainError, ParameterError, RegimeError
from .experiment import (
    SWEEP_AXES,
    EscapeAbort,
    check_regime,
    config_from_mapping,
    read_config_file,
    run_experiment,
    sweep,
    verify_law,
    verify_scaling,
)
from .model import ChainParams, certify, potential_from_name, t_star

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2

# flag name -> config key
_OVERRIDES = ("d", "eps", "sigma", "b_break", "potential", "system", "u", "horizon", "n_paths",
              "master_seed", "csv", "json", "workers", "batch_size", "coarse_dt", "fine_dt", "window",
              "backend")


def _add_config_args(p):
    p.add_argument("--config", help="TOML file with flat experiment keys")
    p.add_argument("--d", type=int)
    p.add_argument("--eps", type=float)
    p.add_argument("--sigma", type=float)
    p.add_argument("--b-break", dest="b_break", type=float)
    p.add_argument("--potential", help="'quadratic:u=<f>' or 'cosh'")
    p.add_argument("--system", choices=("nonlinear", "linear-constant", "linear-timevarying", "coupled"))
    p.add_argument("--u", type=float, help="stiffness of the linear-constant system")
    p.add_argument("--horizon", type=float)
    p.add_argument("--n-paths", dest="n_paths", type=int)
    p.add_argument("--master-seed", dest="master_seed", type=int)
    p.add_argument("--csv")
    p.add_argument("--json")
    p.add_argument("--workers", type=int)
    p.add_argument("--batch-size", dest="batch_size", type=int)
    p.add_argument("--coarse-dt", dest="coarse_dt", type=float)
    p.add_argument("--fine-dt", dest="fine_dt", type=float)
    p.add_argument("--window", type=float)
    p.add_argument("--backend", choices=("numba", "numpy"))
    p.add_argument("--no-track-links", dest="track_links", action="store_false", default=None)


def _config(args, defaults=None):
    """Defaults, then the TOML file, then command-line flags."""
    data = dict(defaults or {})
    if args.config:
        data.update(read_config_file(args.config))
    data.update({k: getattr(args, k) for k in _OVERRIDES if getattr(args, k, None) is not None})
    if getattr(args, "track_links", None) is not None:
        data["track_links"] = args.track_links
    return config_from_mapping(data)


def _print_json(obj):
    print(json.dumps(obj, indent=2, sort_keys=True, allow_nan=False))


def cmd_simulate(args):
    cfg = _config(args)
    try:
        report = run_experiment(cfg)
    except EscapeAbort as exc:
        print(f"aborted: {exc}", file=sys.stderr)
        return EXIT_FAIL
    s = report.summary
    out = {k: s[k] for k in ("n_paths", "n_censored", "n_escaped", "ks_total", "ks_links", "positions",
                             "regime", "digest")}
    _print_json(out)
    if args.ks_threshold is not None and (s["ks_total"] is None or s["ks_total"] > args.ks_threshold):
        return EXIT_FAIL
    return EXIT_PASS


def cmd_sweep(args):
    cfg = _config(args)
    values = [float(v) for v in args.values.split(",") if v.strip()]
    try:
        reports = sweep(cfg, args.axis, values)
    except EscapeAbort as exc:
        print(f"aborted: {exc}", file=sys.stderr)
        return EXIT_FAIL
    rows = []
    for v, r in zip(values, reports):
        s = r.summary
        rows.append({"value": v, "ks_total": s["ks_total"], "frequencies": s["positions"]["frequencies"],
                     "n_censored": s["n_censored"], "digest": s["digest"]})
    _print_json({"axis": args.axis, "runs": rows})
    return EXIT_PASS


_LAW_DEFAULTS = {"d": 3, "eps": 1e-3, "sigma": 0.05, "b_break": 2.0, "potential": "quadratic:u=1",
                 "system": "linear-constant", "n_paths": 2000, "master_seed": 20240601}


def cmd_verify_law(args):
    cfg = _config(args, _LAW_DEFAULTS)
    nonlinear = cfg.system in ("nonlinear", "coupled")
    ks_total = args.ks_total if args.ks_total is not None else (0.2 if nonlinear else 0.15)
    pos_tol = args.position_tol if args.position_tol is not None else (0.07 if nonlinear else 0.05)
    ks_link = None if nonlinear else args.ks_link
    try:
        verdict = verify_law(cfg, ks_total=ks_total, ks_link=ks_link, position_tol=pos_tol)
    except EscapeAbort as exc:
        print(f"aborted: {exc}", file=sys.stderr)
        return EXIT_FAIL
    for c in verdict.checks:
        print(c.line())
    return EXIT_PASS if verdict.passed else EXIT_FAIL


def cmd_verify_scaling(args):
    verdict = verify_scaling(u=args.u, b_break=args.b_break, eps=args.eps, sigma=args.sigma, d=args.d,
                             n_paths=args.n_paths, master_seed=args.master_seed, workers=args.workers,
                             threshold=args.threshold, backend=args.backend)
    for c in verdict.checks:
        print(c.line())
    _print_json(verdict.details)
    return EXIT_PASS if verdict.passed else EXIT_FAIL


def cmd_oracle(args):
    params = ChainParams(args.d, args.eps, args.sigma, args.b_break)
    p = certify(potential_from_name(args.potential), params.b_break)
    ts = t_star(params)
    t_max = args.t_max if args.t_max is not None else ts
    if args.times:
        times = [float(t) for t in args.times.split(",")]
    else:
        times = np.linspace(args.t_min, t_max, args.n_times).tolist()
    u = args.u if args.u is not None else float(p.u2(np.array(params.b_break)))
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "ou_variance", "z_variance", "yz_covariance", "yz_distance_sq",
                    "asymptotic_z_variance", "asymptotic_yz_covariance"])
        for t in times:
            w.writerow([repr(float(t)),
                        repr(oracle.ou_variance(abs(args.rate_scale) * u, params.sigma, t)),
                        repr(oracle.z_variance(p, params, t, args.rate_scale)),
                        repr(oracle.yz_covariance(p, params, u, t, args.rate_scale)),
                        repr(oracle.yz_distance_sq(p, params, u, t, args.rate_scale)),
                        repr(oracle.asymptotic_z_variance(p, params, t)),
                        repr(oracle.asymptotic_yz_covariance(p, params, u, t))])
    finally:
        if args.out:
            fh.close()
    return EXIT_PASS


def cmd_check_regime(args):
    params = ChainParams(args.d, args.eps, args.sigma, args.b_break)
    _print_json(check_regime(params).to_dict())
    return EXIT_PASS


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="chainbreak", description="Break times of a pulled Brownian particle chain")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one experiment and write CSV/JSON")
    _add_config_args(p)
    p.add_argument("--ks-threshold", type=float, help="exit 1 if the break-time KS distance exceeds this")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="one experiment per value of a parameter")
    _add_config_args(p)
    p.add_argument("--axis", required=True, choices=SWEEP_AXES)
    p.add_argument("--values", required=True, help="comma-separated values")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("verify-law", help="Gumbel break-time and position laws")
    _add_config_args(p)
    p.add_argument("--ks-total", type=float)
    p.add_argument("--ks-link", type=float, default=0.20)
    p.add_argument("--position-tol", type=float)
    p.set_defaults(func=cmd_verify_law)

    p = sub.add_parser("verify-scaling", help="equality in law of the standard reduction")
    p.add_argument("--u", type=float, default=4.0)
    p.add_argument("--b-break", dest="b_break", type=float, default=3.0)
    p.add_argument("--eps", type=float, default=0.02)
    p.add_argument("--sigma", type=float, default=0.2)
    p.add_argument("--d", type=int, default=3)
    p.add_argument("--n-paths", dest="n_paths", type=int, default=5000)
    p.add_argument("--master-seed", dest="master_seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--threshold", type=float, default=0.04)
    p.add_argument("--backend", choices=("numba", "numpy"))
    p.set_defaults(func=cmd_verify_scaling)

    p = sub.add_parser("oracle", help="CSV table of the Gaussian second moments")
    p.add_argument("--potential", default="cosh")
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--eps", type=float, default=1e-3)
    p.add_argument("--sigma", type=float, default=0.05)
    p.add_argument("--b-break", dest="b_break", type=float, default=2.0)
    p.add_argument("--u", type=float, help="rate of the comparison OU process (default U''(b))")
    p.add_argument("--rate-scale", dest="rate_scale", type=float, default=-1.0)
    p.add_argument("--times", help="comma-separated times")
    p.add_argument("--t-min", dest="t_min", type=float, default=0.0)
    p.add_argument("--t-max", dest="t_max", type=float)
    p.add_argument("--n-times", dest="n_times", type=int, default=11)
    p.add_argument("--out")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("check-regime", help="advisory regime diagnostics")
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--sigma", type=float, required=True)
    p.add_argument("--d", type=int, default=3)
    p.add_argument("--b-break", dest="b_break", type=float, default=2.0)
    p.set_defaults(func=cmd_check_regime)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ParameterError, DomainError, RegimeError, AssumptionViolation) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
