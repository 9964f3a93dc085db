"""``survnet`` command line: simulate, select, evaluate, report."""

from __future__ import annotations

import argparse
import json
import logging
import sys
import warnings
from dataclasses import fields
from pathlib import Path

from . import datasets as ds
from . import runs
from .config import RunConfig, build_config
from .errors import ConfigError, SurvNetError

log = logging.getLogger("survnet")


def _add_config_flags(parser):
    for f in fields(RunConfig):
        flag = "--" + f.name.replace("_", "-")
        parser.add_argument(flag, dest=f.name, default=None, metavar=f.name.upper(),
                            help=f"(default: {f.default})")


def cmd_simulate(args):
    spec = ds.SimSpec(args.scheme, n=args.n, p=args.p, p_prime=args.p_prime, seed=args.seed)
    data = ds.simulate(spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    ds.write_csv(data, out / "data.csv")
    sidecar = {"spec": vars(spec), "task": data.task,
               "truth": None if data.truth is None else data.truth.tolist(),
               "grid": list(data.grid) if data.grid else None}
    (out / "data.json").write_text(json.dumps(sidecar, indent=2, sort_keys=True))
    print(out / "data.csv")
    return 0


def cmd_select(args):
    overrides = {f.name: getattr(args, f.name) for f in fields(RunConfig)}
    cfg = build_config(args.config, overrides)
    for path in runs.execute(cfg):
        report = json.loads((path / "report.json").read_text())
        print(f"{path}: {report['n_selected']} selected, "
              f"eta_hat={report['eta_hat_final']:.4f}, steps={report['n_steps']}")
    return 0


def cmd_evaluate(args):
    for run_dir in args.run_dirs:
        print(json.dumps(runs.evaluate_run(run_dir)))
    return 0


def cmd_report(args):
    groups = runs.collect_runs(args.run_dirs)
    if not groups:
        raise ConfigError("no complete run directories found")
    runs.write_table(args.out if args.out else sys.stdout, groups)
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="survnet", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="write a simulated dataset as CSV + JSON sidecar")
    p.add_argument("--scheme", default="indep_mean_shift", choices=ds.SCHEMES)
    p.add_argument("--n", type=int, default=10000)
    p.add_argument("--p", type=int, default=784)
    p.add_argument("--p-prime", type=int, default=64)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="data")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("select", help="run variable selection replicates")
    p.add_argument("--config", help="flat key = value config file")
    _add_config_flags(p)
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("evaluate", help="re-evaluate saved final models on their test split")
    p.add_argument("run_dirs", nargs="+")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("report", help="aggregate replicate reports into a summary table")
    p.add_argument("run_dirs", nargs="+")
    p.add_argument("--out", help="CSV path (default: stdout)")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    warnings.simplefilter("default")
    try:
        return args.func(args)
    except SurvNetError as exc:
        print(f"survnet: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (FileNotFoundError, PermissionError) as exc:
        print(f"survnet: error: {exc}", file=sys.stderr)
        return ConfigError.exit_code


if __name__ == "__main__":
    sys.exit(main())
