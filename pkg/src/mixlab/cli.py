"""Command-line interface.

Subcommands: mix, dist, converge, parametric-mix.  JSON in, CSV/JSON (and
PNG figures) out.  Exit codes are a stable contract:

  0  success
  2  unreadable or malformed input, bad invocation
  3  domain invariant violated (also unexpected internal failures)
  4  equal-mass precondition violated for a w1/sinkhorn metric
  5  converge finished with an inconclusive verdict
  6  nonexpansive bound violated (solver bug surfaced by the certificate)
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .errors import (
    MassMismatchError,
    MixlabError,
    NonexpansiveViolationError,
    SchemaError,
)
from .harness import continuity_certificate, run_convergence
from .jsonio import (
    dump_json,
    load_converge_spec,
    load_measure,
    load_meta_measure,
    load_theta_measure,
    save_measure,
)
from .mixing import mix
from .parametric import mix_theta
from .transport import bl_distance, w1_exact, w1_sinkhorn


def _cmd_mix(args) -> int:
    nu = load_meta_measure(args.input)
    mixed = mix(nu)
    save_measure(mixed, args.output)
    print(repr(mixed.mass))
    return 0


def _cmd_dist(args) -> int:
    mu = load_measure(args.a)
    nu = load_measure(args.b)
    if args.plan and args.metric != "w1":
        raise SchemaError("--plan is only available with --metric w1")
    if args.metric == "w1":
        d, plan = w1_exact(mu, nu)
        if args.plan:
            plan.to_csv(args.plan)
    elif args.metric == "bl":
        d = bl_distance(mu, nu)
    else:
        d = w1_sinkhorn(mu, nu, epsilon=args.epsilon, max_iter=args.max_iter)
    print(f"{d:.12g}")
    return 0


def _cmd_converge(args) -> int:
    cfg = load_converge_spec(args.spec)
    metric = args.metric if args.metric else cfg["metric"]
    gap_tol = cfg["gap_tol"] if args.gap_tol is None else args.gap_tol
    cert_tol = cfg["cert_tol"] if args.cert_tol is None else args.cert_tol

    report = run_convergence(
        cfg["spec"],
        cfg["sets"],
        set_ids=cfg["set_ids"],
        metric=metric,
        gap_tol=gap_tol,
        workers=args.workers,
    )

    prefix = Path(args.out) if args.out else Path(args.spec).with_suffix("")
    csv_path = Path(args.csv) if args.csv else prefix.with_name(prefix.name + "_report.csv")
    json_path = Path(args.summary) if args.summary else prefix.with_name(prefix.name + "_summary.json")
    report.to_csv(csv_path)

    try:
        cert = continuity_certificate(report, cert_tol=cert_tol) if len(report.steps) >= 5 else None
    except NonexpansiveViolationError as e:
        summary = report.to_summary(None)
        summary["nonexpansive_violation"] = str(e)
        dump_json(summary, json_path)
        raise

    dump_json(report.to_summary(cert), json_path)

    if not args.no_plot:
        from .plots import render_report

        render_report(report, prefix, cert)

    for sid, verdict, bmass in zip(report.set_ids, report.verdicts, report.boundary_masses):
        print(f"{sid}: {verdict} (boundary mass {bmass!r})")
    if cert is not None:
        print(f"certificate: {'certified' if cert.certified else 'not certified'} "
              f"(final d_mixed {cert.final_d_mixed!r}, tol {cert.cert_tol!r})")
    return 5 if "inconclusive" in report.verdicts else 0


def _cmd_parametric_mix(args) -> int:
    lam = load_theta_measure(args.input)
    mixed = mix_theta(lam, n_quantiles=args.n_quantiles)
    save_measure(mixed, args.output)
    print(repr(mixed.mass))
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mixlab",
        description="Mixing operator on two-level discrete measure spaces, "
        "transport metrics, and convergence reports.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("mix", help="flatten a meta-measure file into its mixture measure")
    p.add_argument("input", help="meta-measure JSON file")
    p.add_argument("output", help="output measure JSON file")
    p.set_defaults(func=_cmd_mix)

    p = sub.add_parser("dist", help="distance between two measure files")
    p.add_argument("a", help="first measure JSON file")
    p.add_argument("b", help="second measure JSON file")
    p.add_argument("--metric", choices=("w1", "bl", "sinkhorn"), default="w1")
    p.add_argument("--epsilon", type=float, default=0.01, help="sinkhorn regularization")
    p.add_argument("--max-iter", type=int, default=10000, help="sinkhorn iteration budget")
    p.add_argument("--plan", default=None, help="export the optimal plan as CSV (w1 only)")
    p.set_defaults(func=_cmd_dist)

    p = sub.add_parser("converge", help="run a convergence spec and write reports")
    p.add_argument("spec", help="sequence spec JSON file")
    p.add_argument("--out", default=None, help="output prefix (default: spec path stem)")
    p.add_argument("--csv", default=None, help="report CSV path (default: <out>_report.csv)")
    p.add_argument("--summary", default=None, help="JSON summary path (default: <out>_summary.json)")
    p.add_argument("--metric", choices=("w1", "bl"), default=None, help="override spec metric")
    p.add_argument("--gap-tol", type=float, default=None, help="override spec gap tolerance")
    p.add_argument("--cert-tol", type=float, default=None, help="override certificate tolerance")
    p.add_argument("--workers", type=int, default=1, help="parallel step evaluation")
    p.add_argument("--no-plot", action="store_true", help="skip PNG figure rendering")
    p.set_defaults(func=_cmd_converge)

    p = sub.add_parser("parametric-mix", help="mix a parametric family given a theta-measure file")
    p.add_argument("input", help="theta-measure JSON file")
    p.add_argument("output", help="output measure JSON file")
    p.add_argument("--n-quantiles", type=int, default=64)
    p.set_defaults(func=_cmd_parametric_mix)

    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SchemaError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except MassMismatchError as e:
        print(f"error: {e}", file=sys.stderr)
        print("hint: the bounded-Lipschitz metric accepts unequal masses (--metric bl)", file=sys.stderr)
        return 4
    except NonexpansiveViolationError as e:
        print(f"error: {e}", file=sys.stderr)
        return 6
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except MixlabError as e:
        print(f"error: {e}", file=sys.stderr)
        return 3
    except Exception as e:  # keep the exit-code contract closed
        print(f"internal error: {type(e).__name__}: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
