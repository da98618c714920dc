"""Command line entry point: ``hpmd {run,verify,weights,bound}``.

Exit codes: 0 success, 1 invalid config or arguments, 2 verification
failure, 3 runtime abort (non-finite iterates).
"""
import argparse
import csv
import json
import sys
import warnings

from .algorithms import NonFiniteIterateError
from .harness import (CHECKS, ConfigError, ExperimentConfig, auto_eta, run_check,
                      run_experiment, theoretical_bound)
from .schedules import (StepSchedule, check_weight_conditions, effective_sigma,
                        weights_asmd, weights_smd)
from .verify import WeightConditionError

EXIT_OK, EXIT_CONFIG, EXIT_VERIFY, EXIT_ABORT = 0, 1, 2, 3


def _dump(obj):
    print(json.dumps(obj, indent=2, sort_keys=True, default=float))


def _err(msg):
    print(f"hpmd: {msg}", file=sys.stderr)


def cmd_run(args):
    cfg = ExperimentConfig.load(args.config)
    try:
        summary = run_experiment(cfg, workers=args.workers, seed=args.seed,
                                 output_dir=args.output_dir)
    except ValueError as exc:
        if "aborted" in str(exc):
            _err(str(exc))
            return EXIT_ABORT
        raise ConfigError(str(exc)) from None
    _dump(summary.to_dict())
    if summary.bound_exceeded:
        _err("empirical quantile exceeds the theoretical bound (ratio > 1)")
    if summary.n_aborted:
        _err(f"{summary.n_aborted} of {summary.n_trials} trials aborted")
        return EXIT_ABORT
    return EXIT_OK


def cmd_verify(args):
    cfg = ExperimentConfig.load(args.config)
    try:
        report = run_check(cfg, args.check)
    except WeightConditionError as exc:
        _dump({"check": args.check, "passed": False, "error": str(exc)})
        return EXIT_VERIFY
    _dump(report)
    return EXIT_OK if report["passed"] else EXIT_VERIFY


def cmd_weights(args):
    sigma = args.sigma
    if sigma <= 0:
        sigma = effective_sigma(sigma)
    try:
        if args.algo == "asmd":
            sched = StepSchedule("accelerated", args.eta)
            ws = weights_asmd(args.eta, sigma, args.T)
        else:
            sched = StepSchedule("fixed" if args.algo == "smd-fixed" else "invsqrt", args.eta)
            ws = weights_smd(sched, sigma, args.T)
    except (ValueError, OverflowError) as exc:
        raise ConfigError(str(exc)) from None
    rep = check_weight_conditions(ws, sched, sigma, beta=args.beta)
    names = ["C1", "C2"] + (["C3"] if args.algo == "asmd" else [])
    margin = {n: dict(zip(rep.conditions[n].indices.tolist(),
                          rep.conditions[n].margins.tolist())) for n in names}
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["t", "w_t"] + [f"margin_{n}" for n in names])
    for t, val in zip(ws.indices.tolist(), ws.values.tolist()):
        w.writerow([t, repr(val)] + [repr(margin[n][t]) if t in margin[n] else ""
                                     for n in names])
    return EXIT_OK if rep.passed else EXIT_VERIFY


def _parse_params(items):
    params = {}
    for item in items:
        key, sep, val = item.partition("=")
        if not sep:
            raise ConfigError(f"parameter {item!r} is not key=value")
        if key == "D1" or key == "D0":
            key = "D"
        params[key] = val if val == "auto" else float(val)
    return params


def cmd_bound(args):
    try:
        params = _parse_params(args.params)
        if params.get("eta") == "auto":
            params["eta"] = auto_eta(args.algo, D=params["D"], G=params["G"],
                                     sigma=params["sigma"], T=params["T"],
                                     delta=params["delta"], beta=params.get("beta", 0.0))
        gap, div = theoretical_bound(args.algo, params)
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"bad bound parameters: {exc}") from None
    _dump({"algorithm": args.algo, "eta": params["eta"], "gap_bound": gap,
           "divergence_bound": div})
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="hpmd", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run an experiment and write its output files")
    r.add_argument("--config", required=True)
    r.add_argument("--workers", type=int, default=None)
    r.add_argument("--seed", type=int, default=None)
    r.add_argument("--output-dir", default=None)
    r.set_defaults(func=cmd_run)

    v = sub.add_parser("verify", help="run one verification and print a JSON report")
    v.add_argument("--config", required=True)
    v.add_argument("--check", required=True, choices=CHECKS)
    v.set_defaults(func=cmd_verify)

    w = sub.add_parser("weights", help="print a weight sequence and its condition margins")
    w.add_argument("--algo", required=True, choices=["smd-fixed", "smd-invsqrt", "asmd"])
    w.add_argument("--sigma", required=True, type=float)
    w.add_argument("--eta", required=True, type=float)
    w.add_argument("--T", required=True, type=int)
    w.add_argument("--beta", type=float, default=0.0)
    w.set_defaults(func=cmd_weights)

    b = sub.add_parser("bound", help="print the closed-form bounds")
    b.add_argument("--algo", required=True, choices=["smd-fixed", "smd-invsqrt", "asmd"])
    b.add_argument("--params", nargs="+", required=True, metavar="KEY=VALUE",
                   help="D (or D1/D0), G, sigma, eta (number or auto), T, delta, beta")
    b.set_defaults(func=cmd_bound)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            return args.func(args)
    except ConfigError as exc:
        _err(str(exc))
        return EXIT_CONFIG
    except NonFiniteIterateError as exc:
        _err(str(exc))
        return EXIT_ABORT
    except (FloatingPointError, OverflowError) as exc:
        _err(f"runtime abort: {exc}")
        return EXIT_ABORT


if __name__ == "__main__":
    sys.exit(main())
