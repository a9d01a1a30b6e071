"""Command-line front end.

Subcommands map onto the library modules; outputs are deterministic JSON
and CSV (same seed, same bytes, any worker count). Exit codes: 0 success,
1 a verified inequality or property was violated, 2 configuration errors.

A flat key=value config file can seed any subcommand's flags; explicit
flags win. FPPLAB_WORKERS caps the worker pool from the environment.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from ._version import __version__
from . import averaging, experiments, funcineq, neargamma, reporting
from .distributions import parse_spec, truncate
from .errors import FppLabError, ResourceGuardError

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_CONFIG = 2


def _add_common(sub: argparse.ArgumentParser):
    sub.add_argument("--config", help="flat key=value file supplying flag defaults")
    sub.add_argument("--out", help="output file or directory (default: stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fpplab",
        description="First passage percolation concentration laboratory",
    )
    parser.add_argument("--version", action="version", version=f"fpplab {__version__}")
    subs = parser.add_subparsers(dest="command", required=True)

    sim = subs.add_parser(
        "simulate", help="variance-scaling Monte Carlo run with model comparison"
    )
    sim.add_argument("--dist", required=True, help="edge-time law, e.g. exp:rate=1")
    sim.add_argument("--dim", type=int, default=2, help="lattice dimension (2 or 3)")
    sim.add_argument(
        "--n", default="25,50,100,200", help="comma-separated distances along e1"
    )
    sim.add_argument("--replicas", type=int, default=2000, help="replicas per n")
    sim.add_argument("--seed", type=int, default=0, help="master seed")
    sim.add_argument(
        "--m-policy",
        default="none",
        help="offset policy: none, auto (ceil(n^(1/4))), or an integer",
    )
    sim.add_argument(
        "--margin", type=float, default=0.5, help="box margin factor per side"
    )
    sim.add_argument("--workers", type=int, default=None, help="worker processes")
    sim.add_argument(
        "--format", default="csv,json", help="outputs to write: csv, json or both"
    )
    sim.add_argument("--svg", action="store_true", help="also render an SVG chart")
    sim.add_argument(
        "--timing-in-output",
        action="store_true",
        help="embed measured wall times (breaks byte-reproducibility)",
    )
    _add_common(sim)

    ver = subs.add_parser(
        "verify-ineq", help="exact product-space inequality suite on random tables"
    )
    ver.add_argument("--n", type=int, required=True, help="coordinate count (<= 20)")
    ver.add_argument(
        "--p", default="0.5", help="Bernoulli parameter(s), comma separated"
    )
    ver.add_argument("--tables", type=int, default=100, help="number of tables")
    ver.add_argument("--seed", type=int, default=0, help="master seed")
    _add_common(ver)

    cls = subs.add_parser("classify", help="nearly-gamma verdict for a law")
    cls.add_argument("--dist", required=True, help="edge-time law spec")
    _add_common(cls)

    gm = subs.add_parser("gm-check", help="exhaustive level-function property report")
    gm.add_argument("--m", type=int, required=True, help="side parameter (m <= 4)")
    _add_common(gm)

    tr = subs.add_parser(
        "truncate-check", help="verify the bounded-support modification of a law"
    )
    tr.add_argument("--dist", required=True, help="continuous base law spec")
    tr.add_argument("--k", type=int, required=True, help="truncation index (>= 2)")
    tr.add_argument("--c5", type=float, required=True, help="truncation scale constant")
    tr.add_argument("--grid", type=int, default=10000, help="CDF comparison grid size")
    _add_common(tr)

    rep = subs.add_parser(
        "report", help="re-run the config embedded in a JSON report"
    )
    rep.add_argument("--from", dest="source", required=True, help="existing report.json")
    rep.add_argument(
        "--check",
        action="store_true",
        help="exit 1 unless the regenerated report matches byte for byte",
    )
    _add_common(rep)
    return parser


def _apply_config_file(argv: list[str], parser: argparse.ArgumentParser) -> list[str]:
    """Prepend key=value pairs from --config as flags so real flags override."""
    if "--config" not in argv:
        return argv
    idx = argv.index("--config")
    if idx + 1 >= len(argv):
        return argv
    path = Path(argv[idx + 1])
    if not path.exists():
        raise FppLabError(f"config file not found: {path}")
    extra: list[str] = []
    for line in path.read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise FppLabError(f"malformed config line: {line!r}")
        key, val = line.split("=", 1)
        extra.extend([f"--{key.strip()}", val.strip()])
    # insert right after the subcommand so explicit flags still win
    return argv[:1] + extra + argv[1:]


def _emit(doc: dict, out: str | None, default_name: str) -> None:
    text = reporting.dumps(doc)
    if out is None:
        sys.stdout.write(text)
        return
    path = Path(out)
    if path.is_dir() or out.endswith("/"):
        path.mkdir(parents=True, exist_ok=True)
        path = path / default_name
    else:
        path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def _cmd_simulate(args) -> int:
    cfg = experiments.ExperimentConfig(
        dist_spec=args.dist,
        dim=args.dim,
        n_list=tuple(int(x) for x in str(args.n).split(",") if x),
        replicas=args.replicas,
        master_seed=args.seed,
        m_policy=args.m_policy,
        margin_factor=args.margin,
        workers=args.workers,
    )
    deterministic = not args.timing_in_output
    doc = experiments.full_report(cfg, deterministic=deterministic)
    formats = {f.strip() for f in args.format.split(",") if f.strip()}
    unknown = formats - {"csv", "json"}
    if unknown:
        raise FppLabError(f"unknown output format(s): {sorted(unknown)}")
    out_dir = Path(args.out) if args.out else Path(".")
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = doc["rows"]
    if "csv" in formats:
        reporting.write_csv(
            experiments.SCALING_CSV_HEADER,
            [[r[k] for k in experiments.SCALING_CSV_HEADER] for r in rows],
            out_dir / "scaling.csv",
        )
    if "json" in formats:
        reporting.write_json(doc, out_dir / "report.json")
    if args.svg:
        ns = [r["n"] for r in rows]
        reporting.write_svg_lines(
            out_dir / "scaling.svg",
            ns,
            {
                "var/n": [r["var"] / r["n"] for r in rows],
                "mean/n": [r["mean"] / r["n"] for r in rows],
            },
            title="passage time scaling",
            x_label="n",
            y_label="value",
        )
    return EXIT_OK


def _cmd_verify_ineq(args) -> int:
    ps = [float(x) for x in str(args.p).split(",") if x]
    report = funcineq.run_random_suite(
        n_tables=args.tables,
        ns=(args.n,),
        ps=ps,
        seed=args.seed,
    )
    doc = {
        "version": __version__,
        "config": {"n": args.n, "p": ps, "tables": args.tables, "seed": args.seed},
        "result": report.summary(),
    }
    _emit(doc, args.out, "verify-ineq.json")
    return EXIT_VIOLATION if report.violations else EXIT_OK


def _cmd_classify(args) -> int:
    verdict = neargamma.classify_nearly_gamma(parse_spec(args.dist))
    doc = {
        "version": __version__,
        "config": {"dist": args.dist},
        "verdict": {k: v for k, v in verdict.summary().items()},
    }
    # bound can be rendered infinite on failure; encode as null plus flag
    if not verdict.direct_pass:
        doc["verdict"]["bound_a"] = None
    _emit(doc, args.out, "classify.json")
    return EXIT_OK


def _cmd_gm_check(args) -> int:
    report = averaging.verify_averaging_properties(args.m)
    doc = {
        "version": __version__,
        "config": {"m": args.m},
        "report": report.summary(),
    }
    _emit(doc, args.out, "gm-check.json")
    ok = report.gradient_ok and report.level_bound_ok and report.bijection_ok
    return EXIT_OK if ok else EXIT_VIOLATION


def _cmd_truncate_check(args) -> int:
    base = parse_spec(args.dist)
    nu_k = truncate(base, args.k, args.c5)
    grid = np.linspace(0.0, nu_k.top * 1.05, args.grid)
    h_base = np.asarray(base.cdf(grid))
    h_k = np.asarray(nu_k.cdf(grid))
    max_defect = float((h_base - h_k).max())
    equal_below = float(np.abs(h_base[grid <= nu_k.cut] - h_k[grid <= nu_k.cut]).max())
    support_ok = bool(abs(float(nu_k.cdf(nu_k.top)) - 1.0) <= 1e-12)
    dominates = bool(max_defect <= 1e-12)
    doc = {
        "version": __version__,
        "config": {"dist": args.dist, "k": args.k, "c5": args.c5, "grid": args.grid},
        "report": {
            "cut": nu_k.cut,
            "top": nu_k.top,
            "tail_mass": nu_k.tail_mass,
            "dominates": dominates,
            "max_defect": max_defect,
            "equal_below_cut_max_error": equal_below,
            "support_ok": support_ok,
        },
    }
    _emit(doc, args.out, "truncate-check.json")
    ok = dominates and support_ok and equal_below <= 1e-12
    return EXIT_OK if ok else EXIT_VIOLATION


def _cmd_report(args) -> int:
    source = Path(args.source)
    if not source.exists():
        raise FppLabError(f"report not found: {source}")
    import json as _json

    original = source.read_text(encoding="utf-8")
    doc = _json.loads(original)
    if "config" not in doc:
        raise FppLabError("report carries no embedded config")
    c = doc["config"]
    cfg = experiments.ExperimentConfig(
        dist_spec=c["dist_spec"],
        dim=int(c["dim"]),
        n_list=tuple(int(x) for x in c["n_list"]),
        replicas=int(c["replicas"]),
        master_seed=int(c["master_seed"]),
        m_policy=str(c["m_policy"]),
        margin_factor=float(c["margin_factor"]),
    )
    regenerated = reporting.dumps(experiments.full_report(cfg, deterministic=True))
    if args.out:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "report.json").write_text(regenerated, encoding="utf-8")
    else:
        sys.stdout.write(regenerated)
    if args.check and regenerated != original:
        print("report mismatch: regenerated bytes differ", file=sys.stderr)
        return EXIT_VIOLATION
    return EXIT_OK


_HANDLERS = {
    "simulate": _cmd_simulate,
    "verify-ineq": _cmd_verify_ineq,
    "classify": _cmd_classify,
    "gm-check": _cmd_gm_check,
    "truncate-check": _cmd_truncate_check,
    "report": _cmd_report,
}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        argv = _apply_config_file(argv, parser)
        args = parser.parse_args(argv)
        return _HANDLERS[args.command](args)
    except ResourceGuardError as exc:
        print(f"fpplab: refusing oversized computation: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FppLabError as exc:
        print(f"fpplab: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    raise SystemExit(main())
