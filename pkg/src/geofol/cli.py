"""Command-line scenario runner.

    geofol <scenario> [--config PATH] [--out DIR] [--seed N] [--tol X] [--jobs N]
    geofol --print-defaults

Writes ``report.json`` (and trajectory CSVs) into the output directory and
exits 0 when every check passes, 1 otherwise.
"""

from __future__ import annotations

import argparse
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import verify
from .config import ConfigError, ScenarioConfig, reference
from .integrate import write_trajectory_csv
from .report import build_report, dumps, sanitize

log = logging.getLogger("geofol")


def _typechange(cfg: ScenarioConfig) -> verify.SuiteResult:
    s = cfg["sampling"]
    return verify.suite_typechange(points=s["points"], seed=cfg["run"]["seed"], u_grid=s["u_grid"],
                                   overlap_points=s["overlap_points"], crosspath_points=s["crosspath_points"],
                                   **cfg.typechange_params())


def _sin(cfg: ScenarioConfig) -> verify.SuiteResult:
    s = cfg["sampling"]
    params = cfg.typechange_params()
    params.pop("mutation")
    return verify.suite_sin_variant(points=s["points"], seed=cfg["run"]["seed"], u_grid=s["u_grid"], **params)


SUITES = {
    "brackets": lambda c: verify.suite_brackets(c["sampling"]["bracket_points"], c["run"]["seed"],
                                                c["sampling"]["bracket_digits"]),
    "lightlike": lambda c: verify.suite_lightlike(c["sampling"]["points"], c["run"]["seed"]),
    "cross-path": lambda c: verify.suite_crosspath(c["sampling"]["crosspath_points"], c["run"]["seed"]),
    "typechange": _typechange,
    "typechange-sin": _sin,
    "exact-flow": lambda c: verify.suite_exact_flow(c["flow"]["starts"], c["run"]["seed"], c["flow"]["tol"]),
    "orbit-sweep": lambda c: verify.suite_orbits(tuple(c["orbits"]["u0"]), c["orbits"]["tol"],
                                                 c["orbits"]["integ_tol"], c["orbits"]["horizon"]),
    "sasaki": lambda c: verify.suite_sasaki(c["sasaki"]["geodesics"], c["run"]["seed"], c["sasaki"]["length"],
                                            c["sasaki"]["tol"], c["sasaki"]["samples"]),
    "surface-audit": lambda c: verify.suite_surfaces(c["surfaces"]["samples"], c["run"]["seed"],
                                                     c["surfaces"]["horizon"], c["surfaces"]["tol"],
                                                     c["surfaces"]["integ_tol"]),
    "riemannize": lambda c: verify.suite_riemannize(c["riemannize"]["points"], c["run"]["seed"],
                                                    c["riemannize"]["rapidity"]),
}

SCENARIOS = {
    "verify-lightlike": ["lightlike", "cross-path"],
    "verify-typechange": ["brackets", "typechange"],
    "verify-typechange-sin": ["typechange-sin"],
    "orbit-sweep": ["exact-flow", "orbit-sweep"],
    "sasaki-check": ["sasaki"],
    "surface-audit": ["surface-audit"],
    "riemannize-check": ["riemannize"],
}
SCENARIOS["all"] = [k for v in SCENARIOS.values() for k in v]


def run_suite(key: str, cfg_values: dict, out_dir: str | None) -> dict:
    """Run one suite and write its CSV artifacts; returns a JSON-ready dict."""
    cfg = ScenarioConfig({s: dict(v) for s, v in cfg_values.items()})
    result = SUITES[key](cfg)
    files = []
    if out_dir is not None and cfg["run"]["csv"]:
        for art in result.artifacts:
            path = Path(out_dir) / art.filename
            write_trajectory_csv(art.trajectory, path, art.coord_names, art.inner,
                                 cfg["run"]["csv_samples"], art.s_max)
            files.append(art.filename)
    return sanitize({
        "name": result.name,
        "pass": result.passed,
        "checks": [c.as_dict() for c in result.checks],
        "info": result.info,
        "artifacts": files,
    })


def run(scenario: str, cfg: ScenarioConfig, out_dir: str | Path | None = None) -> dict:
    if scenario not in SCENARIOS:
        raise ValueError(f"unknown scenario {scenario!r}")
    keys = SCENARIOS[scenario]
    out = str(out_dir) if out_dir is not None else None
    if out is not None:
        Path(out).mkdir(parents=True, exist_ok=True)
    jobs = min(cfg["run"]["jobs"], len(keys))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(run_suite, k, cfg.as_dict(), out) for k in keys]
            suites = [f.result() for f in futures]
    else:
        suites = []
        for k in keys:
            log.info("running suite %s", k)
            suites.append(run_suite(k, cfg.as_dict(), out))
    audits = {s["name"]: s["info"]["construction_audit"] for s in suites if "construction_audit" in s["info"]}
    params = cfg.as_dict()
    params["run"].pop("jobs")  # execution detail; results do not depend on it
    report = build_report(scenario, params, suites, audits)
    if out is not None:
        (Path(out) / "report.json").write_text(dumps(report))
    return report


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="geofol", description="Numerical certification of geodesic foliation models.")
    p.add_argument("scenario", nargs="?", choices=sorted(SCENARIOS))
    p.add_argument("--config", help="INI configuration file")
    p.add_argument("--out", default="geofol-out", help="output directory (default: geofol-out)")
    p.add_argument("--seed", type=int, help="override [run] seed")
    p.add_argument("--tol", type=float, help="override every integration tolerance")
    p.add_argument("--jobs", type=int, help="override [run] jobs")
    p.add_argument("--print-defaults", action="store_true", help="print the configuration reference and exit")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    if args.print_defaults:
        print(reference())
        return 0
    if args.scenario is None:
        print("geofol: a scenario is required (or --print-defaults)", file=sys.stderr)
        return 1
    try:
        cfg = ScenarioConfig.from_file(args.config) if args.config else ScenarioConfig()
        cfg = cfg.with_overrides(seed=args.seed, tol=args.tol)
        if args.jobs is not None:
            if args.jobs < 1:
                raise ConfigError("--jobs must be >= 1")
            cfg.values["run"]["jobs"] = args.jobs
    except ConfigError as exc:
        print(f"geofol: {exc}", file=sys.stderr)
        return 1
    report = run(args.scenario, cfg, args.out)
    for suite in report["suites"]:
        for c in suite["checks"]:
            if not c["pass"]:
                print(f"FAIL [{suite['name']}] {c['name']}: measured {c['measured']} {c['relation']} {c['threshold']}",
                      file=sys.stderr)
    n = report["summary"]["checks"]
    failed = len(report["summary"]["failed"])
    print(f"{args.scenario}: {n - failed}/{n} checks passed; report at {Path(args.out) / 'report.json'}")
    return 0 if report["overall_pass"] else 1


if __name__ == "__main__":
    sys.exit(main())
