"""Command line entry point: ``fheatlab <command> --config scenario.toml --out dir``.

Exit codes: 0 when every certificate passes, 2 when at least one fails,
3 on a hypothesis or configuration error.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import load_scenario
from .cutoff import cutoff_profile
from .errors import FHeatError
from .harness import (EXIT_ERROR, EXIT_FAIL, EXIT_OK, convergence_study, run_batch,
                      run_scenario)
from .io import dumps, write_json

CERT_GROUPS = {
    "lemma": {"lemma21", "lemma31", "lemma41"},
    "theorem": {"thm11", "thm12", "thm13"},
    "harnack": {"harnack"},
    "liouville": {"liouville"},
    "liyau": {"liyau"},
}


def _common(p, config=True):
    if config:
        p.add_argument("--config", required=True, help="scenario TOML file")
    p.add_argument("--out", help="output directory (default: no files)")
    p.add_argument("--refine", type=int, default=None,
                   help="refinement levels (converge) or 1 to add a refinement pair (certify)")
    p.add_argument("--no-figures", action="store_true", help="skip PNG figures")


def build_parser():
    parser = argparse.ArgumentParser(prog="fheatlab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    _common(sub.add_parser("solve", help="solve a scenario and write the trajectory"))
    p = sub.add_parser("certify", help="solve and compute certificates")
    _common(p)
    p.add_argument("--kind", action="append", choices=sorted(CERT_GROUPS),
                   help="restrict to a certificate group (repeatable)")
    _common(sub.add_parser("flow", help="scenario on a backward Ricci flow"))
    _common(sub.add_parser("boundary", help="scenario on a domain with boundary"))
    _common(sub.add_parser("converge", help="dyadic convergence study"))
    p = sub.add_parser("batch", help="run several scenarios")
    p.add_argument("--config", nargs="+", required=True, help="scenario files or directories")
    p.add_argument("--out", required=True)
    p.add_argument("--figures", action="store_true", help="render figures for every scenario")
    p = sub.add_parser("cutoff", help="build a cut-off profile and report its constants")
    p.add_argument("--R", type=float, required=True)
    p.add_argument("--window", type=float, nargs=2, metavar=("START", "T0"), default=(0.0, 1.0))
    p.add_argument("--tau", type=float, required=True)
    p.add_argument("--eps", type=float, default=0.5)
    _common(p, config=False)
    return parser


def _print_report(report):
    print(f"== {report.name} ({report.config_hash[:12]})")
    for c in report.certificates:
        value = c.get("residual_min") if c.get("residual_min") is not None else c.get("c_star")
        flag = {True: "PASS", False: "FAIL", None: "INFO"}[c.get("passed")]
        if c.get("status") not in (None, "ok"):
            flag = c["status"].upper()
        extra = c.get("error", "")
        print(f"{c['kind']:>18}  {flag:<18} value={value!r} {extra}".rstrip())
    print("== end")


def _scenario_command(args, require=None, kinds=None):
    sc = load_scenario(args.config)
    if require == "flow" and sc.flow is None:
        raise SystemExit(_fail(f"{args.config}: the flow command needs a [flow] table"))
    if require == "domain" and sc.domain is None:
        raise SystemExit(_fail(f"{args.config}: the boundary command needs a [domain] table"))
    if args.command == "solve":
        sc.certificates = []
    refine = None if args.refine is None else args.refine > 0
    report = run_scenario(sc, out_dir=args.out, figures=not args.no_figures, kinds=kinds,
                          refine=refine)
    _print_report(report)
    return report.exit_code()


def _fail(msg):
    print(f"error: {msg}", file=sys.stderr)
    return EXIT_ERROR


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command in ("solve", "certify"):
            kinds = None
            if getattr(args, "kind", None):
                kinds = set().union(*(CERT_GROUPS[k] for k in args.kind))
            return _scenario_command(args, kinds=kinds)
        if args.command == "flow":
            return _scenario_command(args, require="flow")
        if args.command == "boundary":
            return _scenario_command(args, require="domain")
        if args.command == "converge":
            sc = load_scenario(args.config)
            levels = args.refine or int(sc.study.get("levels", 3))
            res = convergence_study(sc, levels=levels, out_dir=args.out,
                                    figures=not args.no_figures)
            print("== convergence", res["name"], res["reference"])
            for row in res["levels"]:
                print(f"  N={row['nodes']:>5} dr={row['dr']:.4g} dt={row['dt']:.4g} "
                      f"error={row['error']:.6e} order={row['order']}")
            print("== end")
            return EXIT_OK
        if args.command == "batch":
            summary = run_batch(args.config, args.out, figures=args.figures)
            print(dumps(summary))
            codes = [v["exit"] for v in summary.values()]
            return max(codes) if codes else EXIT_OK
        if args.command == "cutoff":
            prof = cutoff_profile(args.R, tuple(args.window), args.tau, args.eps)
            print("== cutoff")
            print(dumps(prof.summary()))
            print("== end")
            if args.out:
                out = Path(args.out)
                out.mkdir(parents=True, exist_ok=True)
                write_json(out / "cutoff.json", prof.summary())
                if not args.no_figures:
                    from .plotting import plot_cutoff
                    plot_cutoff(prof, out / "cutoff.png")
            return EXIT_OK if all(prof.checks.values()) else EXIT_FAIL
    except FHeatError as exc:
        return _fail(f"{type(exc).__name__}: {exc}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
