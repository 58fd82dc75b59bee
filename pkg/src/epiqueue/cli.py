"""Command-line entry point: ``epiqueue {analytic,simulate,verify,behaviour-change}``.

Exit codes: 0 success / accepted, 1 rejected, 2 usage or config error,
3 numerical failure.
"""
import argparse
import json
import os
import sys

from . import analytic, config
from .analytic import NonConvergence
from .stats import InsufficientData, chi_square_gof, two_sample_chi_square

EXIT_OK, EXIT_REJECT, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3
ALPHA = 0.001


class UsageError(Exception):
    pass


def _dump(obj, path=None):
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    return text


def _model_from_args(args):
    if args.config:
        return config.load_config(args.config).model
    if args.lam is None or args.delta is None or args.lifetime is None:
        raise UsageError("give --config, or all of --lambda, --delta and --lifetime")
    try:
        life = json.loads(args.lifetime)
    except json.JSONDecodeError as exc:
        raise config.ConfigError("--lifetime", exc.msg) from None
    return config.parse_model({"lambda": args.lam, "delta": args.delta, "lifetime": life})


def cmd_analytic(args):
    model = _model_from_args(args)
    try:
        sol = analytic.solve_pi(model)
    except NonConvergence as exc:
        sys.stderr.write(f"error: {exc}\n")
        sys.stdout.write(_dump({"error": str(exc), "residual": exc.residual}))
        return EXIT_NUMERIC
    sys.stdout.write(_dump(sol.to_dict()))
    return EXIT_OK


def _load_with_overrides(path, args):
    cfg = config.load_config(path)
    return cfg.with_overrides(replications=args.replications, seed=args.seed,
                              workers=args.workers, max_events=args.max_events,
                              path=getattr(args, "output", None),
                              format=getattr(args, "format", None))


def _summary_path(path):
    root, _ = os.path.splitext(path)
    return root + ".summary.json"


def cmd_simulate(args):
    cfg = _load_with_overrides(args.config, args)
    result = config.run_experiment(cfg)
    summary = result.summary()
    path = cfg.output.path
    if path is None:
        sys.stdout.write(_dump(summary))
        return EXIT_OK
    if cfg.output.format == "csv":
        with open(path, "w", newline="") as fh:
            fh.write(result.csv())
        _dump(summary, _summary_path(path))
    else:
        summary["records"] = result.csv().splitlines()
        _dump(summary, path)
    sys.stdout.write(_dump({k: summary[k] for k in ("config_hash", "seed", "replications",
                                                    "status_counts", "hit_fraction", "p_hat")}))
    return EXIT_OK


def cmd_verify(args):
    cfg = _load_with_overrides(args.config, args)
    result = config.run_experiment(cfg)
    dist = result.conditioned_distribution()
    try:
        if args.reference == "analytic":
            sol = analytic.solve_pi(cfg.model)
            p = sol.p * args.p_scale
            if not 0 < p <= 1:
                raise UsageError(f"scaled p = {p} is outside (0, 1]")
            report = chi_square_gof(dist, analytic.geometric_pmf(p))
            extra = {"reference": "analytic", "p": p, "pi": sol.pi}
        else:
            if not args.against:
                raise UsageError("--reference two-sample needs --against CONFIG")
            other_cfg = _load_with_overrides(args.against, args)
            other = config.run_experiment(other_cfg)
            report = two_sample_chi_square(dist, other.conditioned_distribution())
            extra = {"reference": "two-sample", "against_config_hash": other_cfg.digest()}
    except InsufficientData as exc:
        sys.stderr.write(f"error: {exc}. Raise 'replications' and retry.\n")
        return EXIT_USAGE
    out = report.to_dict()
    out.update(extra)
    out.update({"config_hash": cfg.digest(), "alpha": args.alpha,
                "accepted": report.p_value > args.alpha, "samples": dist.total})
    text = _dump(out, args.report)
    if not args.report:
        sys.stdout.write(text)
    else:
        sys.stdout.write(_dump({k: out[k] for k in ("statistic", "degrees_of_freedom", "p_value",
                                                    "accepted")}))
    return EXIT_OK if out["accepted"] else EXIT_REJECT


def cmd_behaviour_change(args):
    if args.p1 is None:
        if args.lambda1 is None or args.delta1 is None:
            raise UsageError("give --p1, or --lambda1 and --delta1 to derive it")
        p1 = analytic.markov_p(args.lambda1, args.delta1, args.mu)
    else:
        p1 = args.p1
    if not 0 < p1 <= 1:
        raise UsageError("p1 must lie in (0, 1]")
    if args.lambda2 <= 0 or args.mu <= 0 or args.tau < 0 or args.k_max < 0:
        raise UsageError("need lambda2 > 0, mu > 0, tau >= 0, k_max >= 0")
    pmf = analytic.post_detection_pmf(p1, args.lambda2, args.mu, args.tau)
    probs = [pmf.prob(k) for k in range(args.k_max + 1)]
    out = {"p1": p1, "lambda2": args.lambda2, "mu": args.mu, "tau": args.tau,
           "q0": analytic.extinction_at(args.lambda2, args.mu, args.tau),
           "probabilities": probs, "mass_above_k_max": pmf.sf(args.k_max + 1)}
    sys.stdout.write(_dump(out))
    return EXIT_OK


def _add_overrides(p, output=True):
    p.add_argument("--replications", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--max-events", type=int, dest="max_events")
    if output:
        p.add_argument("--output", help="output path (overrides output.path)")
        p.add_argument("--format", choices=("csv", "json"))


def build_parser():
    parser = argparse.ArgumentParser(prog="epiqueue", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analytic", help="solve for pi and p")
    p.add_argument("--config")
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--lifetime", help='JSON, e.g. \'{"kind":"exponential","rate":1}\'')
    p.set_defaults(func=cmd_analytic)

    p = sub.add_parser("simulate", help="run a batch and write CSV/JSON")
    p.add_argument("--config", required=True)
    _add_overrides(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", help="test a batch against the geometric law or a second batch")
    p.add_argument("--config", required=True)
    p.add_argument("--reference", choices=("analytic", "two-sample"), default="analytic")
    p.add_argument("--against", help="second config for --reference two-sample")
    p.add_argument("--p-scale", type=float, default=1.0, dest="p_scale",
                   help="multiply the analytic p (power checks)")
    p.add_argument("--alpha", type=float, default=ALPHA)
    p.add_argument("--report", help="write the GOF report JSON here")
    _add_overrides(p, output=False)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("behaviour-change", help="law of the number infectious tau after detection")
    p.add_argument("--p1", type=float)
    p.add_argument("--lambda1", type=float)
    p.add_argument("--delta1", type=float)
    p.add_argument("--lambda2", type=float, required=True)
    p.add_argument("--mu", type=float, required=True)
    p.add_argument("--tau", type=float, required=True)
    p.add_argument("--k-max", type=int, default=10, dest="k_max")
    p.set_defaults(func=cmd_behaviour_change)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ValueError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE
    except NonConvergence as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_NUMERIC
    except OSError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
