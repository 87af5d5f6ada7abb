"""Command-line harness.

Exit status: 0 when every check passes, 1 on a tolerance failure or an
untrustworthy solve, 2 on a configuration error.
"""

import argparse
import logging
import sys

from .config import EXPERIMENTS, ConfigError, load_config
from .experiments import ExperimentError, run
from .geometry import GeometryError
from .solver import SolverError

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nearcloak", description=__doc__.splitlines()[0])
    p.add_argument("--config", help="config file (default: the packaged default scene)")
    p.add_argument("--experiment", choices=EXPERIMENTS, help="overrides [run] experiment")
    p.add_argument("--out", help="output directory, overrides [run] out")
    p.add_argument("--omega", type=float, help="overrides [experiment] omega")
    p.add_argument("--h", type=float, help="overrides [experiment] h")
    p.add_argument("--rho", help="comma-separated list, overrides [experiment] rho")
    p.add_argument(
        "--set",
        action="append",
        default=[],
        metavar="SECTION.KEY=VALUE",
        help="override any config key; may be repeated",
    )
    p.add_argument("-v", "--verbose", action="count", default=0)
    return p


def _overrides(args) -> dict:
    out = {}
    for item in args.set:
        key, sep, value = item.partition("=")
        if not sep or "." not in key:
            raise ConfigError(f"--set expects SECTION.KEY=VALUE, got {item!r}")
        out[key.strip()] = value.strip()
    if args.experiment:
        out["run.experiment"] = args.experiment
    if args.out:
        out["run.out"] = args.out
    if args.omega is not None:
        out["experiment.omega"] = repr(args.omega)
    if args.h is not None:
        out["experiment.h"] = repr(args.h)
    if args.rho:
        out["experiment.rho"] = args.rho
    return out


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        cfg = load_config(args.config, _overrides(args))
        if cfg.experiment is None:
            raise ConfigError("no experiment specified")
        status = run(cfg, cfg.out, cfg.experiment)
    except (ConfigError, GeometryError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ExperimentError, SolverError) as exc:
        print(f"experiment failed: {exc}", file=sys.stderr)
        return EXIT_FAIL
    for name, ok in status.items():
        print(f"{name}: {'pass' if ok else 'FAIL'}")
    return EXIT_OK if all(status.values()) else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
