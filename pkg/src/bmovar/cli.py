"""Command-line driver: ``bmovar <experiment> [options]``.

Exit codes: 0 when every check passed or was skipped, 1 when a check failed
(or warned under ``--strict``), 2 for an invalid configuration.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .config import ConfigError, ExperimentConfig
from .experiments import EXPERIMENTS, RunReport, run_experiment
from .plotdata import emit_plot_data
from .semigroup import CACHE_ENV


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="JSON config file (see `bmovar config`)")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", type=Path, help="output directory (overrides output_dir)")
    p.add_argument("--grid-P", dest="grid_P", type=int, help="points per axis")
    p.add_argument("--kernel", help="gaussian, poisson, bump or a tabulated profile file")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                   help="override any config field, e.g. --set lacunary.M=6 (repeatable)")
    p.add_argument("--strict", action="store_true", help="treat stability warnings as failures")
    p.add_argument("--quiet", action="store_true", help="only print the summary line")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bmovar", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in EXPERIMENTS:
        _common(sub.add_parser(name, help=f"run the {name} experiment"))
    p_all = sub.add_parser("all", help="run every experiment and merge the summaries")
    _common(p_all)
    p_all.add_argument("--jobs", type=int, default=1, help="experiments run in parallel processes")
    p_cfg = sub.add_parser("config", help="print (or check) a configuration")
    p_cfg.add_argument("--config", type=Path)
    p_cfg.add_argument("--check", action="store_true", help="validate and report violations")
    return parser


def load_config(args: argparse.Namespace) -> ExperimentConfig:
    cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    overrides = {}
    for item in args.overrides:
        if "=" not in item:
            raise ConfigError([f"--set expects KEY=VALUE, got {item!r}"])
        key, value = item.split("=", 1)
        overrides[key] = _parse_value(value)
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.out is not None:
        overrides["output_dir"] = str(args.out)
    if args.grid_P is not None:
        overrides["grid.P"] = args.grid_P
    if args.kernel is not None:
        overrides["kernel"] = args.kernel
    if overrides:
        cfg = cfg.replace(**overrides)
    return cfg.validate()


def write_outputs(report: RunReport, outdir: Path) -> Path:
    target = outdir / report.experiment
    report.save(target / "report.json")
    emit_plot_data(report, target)
    return target


def _run_one(cfg_text: str, which: str, outdir: str) -> dict:
    cfg = ExperimentConfig.loads(cfg_text)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        report = run_experiment(cfg, which)
    write_outputs(report, Path(outdir))
    return {"experiment": which, "summary": report.counts(),
            "failed": [c.name for c in report.checks if c.status == "fail"],
            "warned": [c.name for c in report.checks if c.status == "warn"]}


def _print_report(report: RunReport, quiet: bool) -> None:
    if not quiet:
        for c in report.checks:
            print(f"{c.status.upper():8s} {c.name}" + (f"  ({c.detail})" if c.detail and c.status != "pass" else ""))
    counts = report.counts()
    print(f"{report.experiment}: " + ", ".join(f"{k}={v}" for k, v in counts.items())
          + f"  config={report.config_hash}")


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "config":
            cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
            if args.check:
                cfg.validate()
                print("config OK")
            else:
                sys.stdout.write(cfg.dumps())
            return 0
        cfg = load_config(args)
    except ConfigError as exc:
        json.dump({"error": "invalid configuration", "violations": exc.violations}, sys.stderr, indent=2)
        sys.stderr.write("\n")
        return 2
    except (OSError, json.JSONDecodeError, TypeError) as exc:
        json.dump({"error": "cannot read configuration", "detail": str(exc)}, sys.stderr, indent=2)
        sys.stderr.write("\n")
        return 2

    outdir = Path(cfg.output_dir)
    if args.command == "all":
        jobs = max(1, args.jobs)
        text = cfg.dumps()
        if jobs == 1:
            results = [_run_one(text, w, str(outdir)) for w in EXPERIMENTS]
        else:
            with ProcessPoolExecutor(jobs) as pool:
                results = list(pool.map(_run_one, [text] * len(EXPERIMENTS), EXPERIMENTS,
                                        [str(outdir)] * len(EXPERIMENTS)))
        merged = {"config_hash": cfg.digest(), "experiments": results}
        outdir.mkdir(parents=True, exist_ok=True)
        (outdir / "summary.json").write_text(json.dumps(merged, indent=2, sort_keys=True) + "\n")
        bad = any(r["failed"] or (args.strict and r["warned"]) for r in results)
        for r in results:
            print(f"{r['experiment']}: " + ", ".join(f"{k}={v}" for k, v in r["summary"].items()))
        return 1 if bad else 0

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        report = run_experiment(cfg, args.command)
    target = write_outputs(report, outdir)
    _print_report(report, args.quiet)
    print(f"report written to {target / 'report.json'}"
          + (f" (field cache: ${CACHE_ENV})" if CACHE_ENV in os.environ else ""))
    return report.exit_code(args.strict)


if __name__ == "__main__":
    sys.exit(main())
