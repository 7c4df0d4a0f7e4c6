"""Command-line runner for the verification suites.

    stringphase list-suites
    stringphase verify <suite|all> --config cfg.json [--grid N] [--out DIR] [--format json,csv,svg]
    stringphase solve catenoid --config cfg.json [--out DIR]

The exit status is 0 exactly when every check that is not a negative control passes.
``STRINGPHASE_OUT`` sets the default output directory.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from . import __version__
from .report import VerificationReport, emit_report
from .suites import SUITES, ConfigError, SuiteConfig, catenoid_records, run_suite

ENV_OUT = "STRINGPHASE_OUT"
FORMATS = ("json", "csv", "svg")

log = logging.getLogger("stringphase")


def _formats(text: str) -> tuple[str, ...]:
    fmts = tuple(f.strip().lower() for f in text.split(",") if f.strip())
    bad = [f for f in fmts if f not in FORMATS]
    if bad or not fmts:
        raise argparse.ArgumentTypeError(f"formats must be drawn from {', '.join(FORMATS)}")
    return fmts


def _positive(text: str) -> int:
    n = int(text)
    if n < 4:
        raise argparse.ArgumentTypeError("--grid must be at least 4")
    return n


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="stringphase", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log per-check progress")
    sub = p.add_subparsers(dest="command", required=True)

    sub.add_parser("list-suites", help="list suite names with default grid levels")

    v = sub.add_parser("verify", help="run a suite and write its report")
    v.add_argument("suite", help="suite name, or 'all'")
    v.add_argument("--config", required=True, type=Path, help="JSON configuration file")
    v.add_argument("--grid", type=_positive, help="finest grid level; coarser levels keep their ratios")
    v.add_argument("--out", type=Path, help=f"output directory (default ${ENV_OUT} or ./reports)")
    v.add_argument("--format", type=_formats, default=("json", "csv"),
                   help="comma-separated subset of json,csv,svg (default json,csv)")

    s = sub.add_parser("solve", help="run a solver directly")
    s.add_argument("problem", choices=["catenoid"])
    s.add_argument("--config", required=True, type=Path)
    s.add_argument("--out", type=Path)
    s.add_argument("--format", type=_formats, default=("json", "csv"))
    return p


def _out_dir(arg: Path | None) -> Path:
    if arg is not None:
        return arg
    return Path(os.environ.get(ENV_OUT, "reports"))


def _print_report(rep: VerificationReport):
    for r in rep.records:
        tag = "PASS" if r.passed else "FAIL"
        if r.negative_control:
            tag += " (negative control)"
        order = "" if r.order is None else f" order={r.order:.2f}"
        worst = f" max={max(r.residuals):.3g}" if r.residuals else ""
        line = f"[{tag}] {rep.suite}: {r.name}{order}{worst}"
        if not r.passed:
            line += f"  <{r.paper_ref}>"
            if r.note:
                line += f"  {r.note}"
        print(line)


def cmd_list() -> int:
    width = max(map(len, SUITES))
    for name, s in SUITES.items():
        print(f"{name:<{width}}  levels={list(s.levels)}  {s.description}")
    return 0


def cmd_verify(args) -> int:
    names = list(SUITES) if args.suite == "all" else [args.suite]
    if args.suite != "all" and args.suite not in SUITES:
        raise ConfigError(f"unknown suite {args.suite!r}; try 'stringphase list-suites'")
    ok = True
    for name in names:
        cfg = SuiteConfig.load(args.config, name, args.grid)
        log.info("running %s at levels %s", name, cfg.lv())
        rep = run_suite(cfg)
        _print_report(rep)
        for path in emit_report(rep, _out_dir(args.out), args.format):
            log.info("wrote %s", path)
        ok &= rep.passed
    return 0 if ok else 1


def cmd_solve(args) -> int:
    from . import minimal

    cfg = SuiteConfig.load(args.config, "catenoid")
    p = cfg.params
    st = minimal.SolverState(half_separation=float(p.get("half_separation", 0.5)),
                             n_z=cfg.lv()[-1], n_u=int(p.get("n_u", 64)),
                             max_iter=int(p.get("max_iter", 5000)),
                             grad_tol=float(p.get("grad_tol", 1e-4)))
    rep = VerificationReport("solve-catenoid", config=cfg.to_dict())
    for rec in catenoid_records(st, cfg):
        rep.add(rec)
    print(f"status={st.status} iterations={len(st.history)} {st.message}")
    _print_report(rep)
    emit_report(rep, _out_dir(args.out), args.format)
    return 0 if rep.passed else 1


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        if args.command == "list-suites":
            return cmd_list()
        if args.command == "verify":
            return cmd_verify(args)
        return cmd_solve(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
