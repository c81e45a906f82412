"""``kme-decon`` command line.

Exit codes: 0 success, 2 config error, 3 numerical failure, 4 a contract
check of the run failed.
"""

import argparse
import csv
import json
import logging
import os
import platform
import sys
import time
from pathlib import Path

import numpy as np
import scipy
from threadpoolctl import threadpool_limits

from . import _backend, __version__, config
from .errors import ConfigError, KmeError
from .experiments import RUNNERS

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_CHECK = 0, 2, 3, 4

log = logging.getLogger("kme_decon")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="kme-decon",
        description="Deconditional mean embedding and TTGP experiments.")
    parser.add_argument("experiment", choices=config.EXPERIMENTS)
    parser.add_argument("--config", help="JSON config; omitted keys take the shipped defaults")
    parser.add_argument("--seed", type=int, help="override the config seed")
    parser.add_argument("--out", default=None, help="output directory (default: kme_out/<experiment>)")
    parser.add_argument("--dry-run", action="store_true",
                        help="validate the config, print it resolved and exit")
    parser.add_argument("--perturb", type=float, default=None,
                        help="equivalence-suite only: scale DME weights by 1 + PERTURB")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return str(int(v))
    return str(v)


def write_table(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_cell(v) for v in row])


def write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, allow_nan=True)
        fh.write("\n")


def resolve_args(args):
    user = config.load(args.config) if args.config else {}
    if args.perturb is not None:
        if args.experiment != "equivalence-suite":
            raise ConfigError("--perturb applies to the equivalence suite only")
        user = dict(user, perturb=args.perturb)
    return config.resolve(args.experiment, user, args.seed)


def thread_cap():
    value = os.environ.get("KME_DECON_THREADS")
    if value is None:
        return None
    try:
        n = int(value)
    except ValueError:
        raise ConfigError(f"KME_DECON_THREADS must be an integer, got {value!r}") from None
    if n < 1:
        raise ConfigError("KME_DECON_THREADS must be positive")
    return n


def execute(cfg, out_dir, threads=None):
    """Run one experiment and write its outputs; returns the report."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    with threadpool_limits(limits=threads):
        report = RUNNERS[cfg["experiment"]](cfg)
    elapsed = time.perf_counter() - start
    for name, (header, rows) in report.tables.items():
        write_table(out / name, header, rows)
    for name, doc in report.documents.items():
        write_json(out / name, doc)
    write_json(out / "config.resolved.json", cfg)
    write_json(out / "checks.json", {k: bool(v) for k, v in report.checks.items()})
    # wall times live only in the manifest so every other file is reproducible
    write_json(out / "manifest.json", {
        "experiment": cfg["experiment"],
        "seed": cfg["seed"],
        "config_sha256": config.config_hash(cfg),
        "versions": {"kme_decon": __version__, "numpy": np.__version__,
                     "scipy": scipy.__version__, "python": platform.python_version()},
        "backend": _backend.BACKEND,
        "threads": threads,
        "wall_time_s": {"run": elapsed},
        "files": sorted([*report.tables, *report.documents, "config.resolved.json",
                         "checks.json"]),
    })
    return report


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_args(args)
        threads = thread_cap()
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.dry_run:
        print(json.dumps(cfg, indent=2, sort_keys=True))
        return EXIT_OK
    out_dir = args.out or os.path.join("kme_out", args.experiment)
    try:
        report = execute(cfg, out_dir, threads)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (KmeError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numerical failure in {type(exc).__module__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    failed = sorted(name for name, ok in report.checks.items() if not ok)
    if failed:
        print(f"checks failed: {', '.join(failed)}", file=sys.stderr)
        return EXIT_CHECK
    print(f"{args.experiment}: wrote results to {out_dir}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
