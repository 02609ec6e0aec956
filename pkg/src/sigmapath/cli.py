"""Command-line front end: run verification suites, emit reports.

Usage:

    sigmapath list-suites
    sigmapath verify ch4-exact ch1-g --seed 7 --paths 100000 \
        --lattice-n 10000 --t 1 --alpha 0.25,0.5,0.75 --out report.json

Exit codes: 0 all gating checks pass, 1 identity failure, 2 configuration
error, 3 resource/budget error.  Reports are byte-identical for a fixed
master seed no matter how the work is scheduled (--jobs only controls
parallelism); wall-clock timings therefore go to stdout, not the report,
unless --timing is given explicitly.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from . import __version__
from .errors import ConfigurationError, NumericalConsistencyError, ResourceBudgetError
from .identities import SUITES, CheckResult, SuiteConfig, run_suite


@dataclass
class RunConfig:
    suites: list[str]
    seed: int = 12345
    paths: int | None = None
    lattice_n: int | None = None
    ts: tuple | None = None
    alphas: tuple = (0.25, 0.5, 0.75)
    rel_tol: float = 0.02
    ks_tol: float = 0.08
    out: str | None = None
    fmt: str = "json"
    jobs: int = 1
    strict: bool = False
    timing: bool = False

    def validate(self) -> None:
        unknown = [s for s in self.suites if s not in SUITES]
        if unknown:
            raise ConfigurationError(
                f"unknown suite(s) {unknown}; available: {', '.join(sorted(SUITES))}")
        for label, value in (("seed", self.seed), ("jobs", self.jobs)):
            if value is not None and value <= 0:
                raise ConfigurationError(f"--{label} must be positive")
        for label, value in (("paths", self.paths), ("lattice-n", self.lattice_n)):
            if value is not None and value <= 0:
                raise ConfigurationError(f"--{label} must be positive")
        if self.ts is not None and any(t <= 0 for t in self.ts):
            raise ConfigurationError("--t values must be positive")
        if any(not 0 < a < 1 for a in self.alphas):
            raise ConfigurationError("--alpha values must lie in (0,1)")
        if self.fmt not in ("json", "csv"):
            raise ConfigurationError("--format must be json or csv")

    def suite_config(self) -> SuiteConfig:
        return SuiteConfig(seed=self.seed, paths=self.paths,
                           lattice_n=self.lattice_n, ts=self.ts,
                           alphas=tuple(self.alphas), rel_tol=self.rel_tol,
                           ks_tol=self.ks_tol)


def _check_dict(c: CheckResult) -> dict:
    return {
        "suite": c.suite,
        "name": c.name,
        "anchor": c.anchor,
        "lhs": c.lhs,
        "lhs_stderr": c.lhs_stderr,
        "rhs": c.rhs,
        "tolerance": c.tolerance,
        "pass": c.passed,
        "qualitative": c.qualitative,
    }


def build_report(cfg: RunConfig) -> tuple[dict, dict]:
    """Run the selected suites; returns (report, wall_clock_per_suite)."""
    scfg = cfg.suite_config()
    timings: dict[str, float] = {}

    def run_one(name: str) -> list[CheckResult]:
        start = time.perf_counter()
        checks = run_suite(name, scfg)
        timings[name] = time.perf_counter() - start
        return checks

    if cfg.jobs > 1 and len(cfg.suites) > 1:
        with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
            results = list(pool.map(run_one, cfg.suites))
    else:
        results = [run_one(name) for name in cfg.suites]
    checks = [c for suite_checks in results for c in suite_checks]
    gating = [c for c in checks if cfg.strict or not c.qualitative]
    verdict = "pass" if all(c.passed for c in gating) else "fail"
    report = {
        "version": __version__,
        "config": {
            "suites": list(cfg.suites),
            "seed": cfg.seed,
            "paths": cfg.paths,
            "lattice_n": cfg.lattice_n,
            "t": list(cfg.ts) if cfg.ts else None,
            "alpha": list(cfg.alphas),
            "rel_tol": cfg.rel_tol,
            "ks_tol": cfg.ks_tol,
            "strict": cfg.strict,
            "format": cfg.fmt,
        },
        "checks": [_check_dict(c) for c in checks],
        "verdict": verdict,
    }
    if cfg.timing:
        report["timing"] = {k: round(v, 3) for k, v in timings.items()}
    return report, timings


def render(report: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(report, indent=2) + "\n"
    buf = io.StringIO()
    writer = csv.writer(buf, quoting=csv.QUOTE_MINIMAL, lineterminator="\n")
    cols = ["suite", "name", "anchor", "lhs", "lhs_stderr", "rhs",
            "tolerance", "pass", "qualitative"]
    writer.writerow(cols)
    for check in report["checks"]:
        writer.writerow([check[c] for c in cols])
    return buf.getvalue()


def list_suites() -> str:
    lines = []
    for name in sorted(SUITES):
        spec = SUITES[name]
        tag = " (qualitative)" if spec.qualitative else ""
        lines.append(f"{name}{tag}: {spec.description} [{spec.anchor}]")
    return "\n".join(lines) + "\n"


def _parse_floats(text: str) -> tuple:
    try:
        return tuple(float(v) for v in text.split(","))
    except ValueError:
        raise ConfigurationError(f"expected comma-separated numbers, got {text!r}")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sigmapath",
        description="verification suites for sigma-finite path-measure identities")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("list-suites", help="print suite ids and descriptions")
    run = sub.add_parser("verify", help="run one or more suites")
    run.add_argument("suites", nargs="+", metavar="suite")
    run.add_argument("--seed", type=int, default=12345)
    run.add_argument("--paths", type=int, default=None)
    run.add_argument("--lattice-n", type=int, default=None)
    run.add_argument("--t", type=str, default=None)
    run.add_argument("--alpha", type=str, default="0.25,0.5,0.75")
    run.add_argument("--rel-tol", type=float, default=0.02)
    run.add_argument("--ks-tol", type=float, default=0.08)
    run.add_argument("--out", type=str, default=None)
    run.add_argument("--format", dest="fmt", choices=("json", "csv"),
                     default="json")
    run.add_argument("--jobs", type=int, default=1)
    run.add_argument("--strict", action="store_true",
                     help="qualitative checks gate the exit code too")
    run.add_argument("--timing", action="store_true",
                     help="embed wall-clock timings in the report "
                          "(breaks byte-for-byte reproducibility)")
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse errors are configuration errors
        return 0 if exc.code == 0 else 2
    if args.command == "list-suites":
        sys.stdout.write(list_suites())
        return 0
    cfg = RunConfig(
        suites=args.suites, seed=args.seed, paths=args.paths,
        lattice_n=args.lattice_n,
        ts=_parse_floats(args.t) if args.t else None,
        alphas=_parse_floats(args.alpha),
        rel_tol=args.rel_tol, ks_tol=args.ks_tol, out=args.out, fmt=args.fmt,
        jobs=args.jobs, strict=args.strict, timing=args.timing)
    try:
        cfg.validate()
        report, timings = build_report(cfg)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except ResourceBudgetError as exc:
        print(f"resource error: {exc}", file=sys.stderr)
        return 3
    except NumericalConsistencyError as exc:
        print(f"numerical-consistency error: {exc}", file=sys.stderr)
        return 1

    text = render(report, cfg.fmt)
    if cfg.out:
        with open(cfg.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    n_pass = sum(1 for c in report["checks"] if c["pass"])
    for name, wall in timings.items():
        print(f"# {name}: {wall:.2f}s", file=sys.stderr)
    print(f"# {n_pass}/{len(report['checks'])} checks passed; "
          f"verdict: {report['verdict']}", file=sys.stderr)
    return 0 if report["verdict"] == "pass" else 1


if __name__ == "__main__":
    raise SystemExit(main())
