"""Command-line experiment runner: one subcommand per experiment.

Exit codes: 0 on success, 2 on configuration validation failure.
"""

from __future__ import annotations

import argparse
import math
import sys

from .experiments import ConfigError, ExperimentConfig, run_experiment
from .statevector import CapacityError

_HALF_PI = math.pi / 2.0


def _parse_atoms(text: str) -> int | tuple[int, ...]:
    try:
        parts = [int(p) for p in text.split(",") if p.strip() != ""]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad atom count list {text!r}")
    if not parts:
        raise argparse.ArgumentTypeError("empty atom count list")
    return parts[0] if len(parts) == 1 else tuple(parts)


def _add_common(sub: argparse.ArgumentParser, **defaults) -> None:
    sub.add_argument(
        "--atoms",
        type=_parse_atoms,
        default=defaults["atoms"],
        help="atom count (comma list for twist_scaling)",
    )
    sub.add_argument(
        "--filling",
        type=float,
        default=defaults.get("filling", 1.0),
        help="probability p that a site holds an atom",
    )
    sub.add_argument(
        "--range",
        dest="neighbor_range",
        type=int,
        default=defaults.get("range", 1),
        help="number of neighbors visited (displacements 1..r)",
    )
    sub.add_argument(
        "--coupling",
        choices=("zz", "heisenberg", "xx", "xxyy"),
        default=defaults.get("coupling", "xx"),
        help="coupling kind",
    )
    sub.add_argument("--chi", type=float, default=1.0, help="coupling strength (1/time)")
    sub.add_argument(
        "--dt",
        type=float,
        default=defaults.get("dt", 0.1),
        help="split-operator step (time-grid step for split couplings)",
    )
    sub.add_argument(
        "--tmax", type=float, default=defaults["tmax"], help="evolution time span"
    )
    sub.add_argument(
        "--stride", type=int, default=1, help="emit every stride-th snapshot"
    )
    sub.add_argument(
        "--realizations",
        type=int,
        default=defaults.get("realizations", 1),
        help="ensemble size for stochastic occupancy",
    )
    sub.add_argument("--seed", type=int, default=1, help="master RNG seed")
    sub.add_argument(
        "--out", default=defaults["out"], help="primary result file path"
    )
    sub.add_argument(
        "--format", choices=("csv", "json"), default="csv", help="output format"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spinlattice",
        description="Collisional spin-lattice simulation experiments.",
    )
    subs = parser.add_subparsers(dest="experiment", required=True)

    sw = subs.add_parser("spinwave", help="spin-wave propagation from a flipped atom")
    _add_common(sw, atoms=15, coupling="heisenberg", tmax=3.0, out="spinwave.csv")

    sf = subs.add_parser("squeeze_full", help="squeezing on a fully occupied chain")
    _add_common(
        sf, atoms=15, range=3, coupling="xx", tmax=_HALF_PI, out="squeeze_full.csv"
    )

    sp = subs.add_parser("squeeze_partial", help="squeezing on a dilute chain")
    _add_common(
        sp,
        atoms=15,
        filling=0.5,
        range=3,
        coupling="xx",
        tmax=_HALF_PI,
        realizations=20,
        out="squeeze_partial.csv",
    )

    ts = subs.add_parser("twist_scaling", help="all-to-all squeezing versus atom number")
    _add_common(
        ts,
        atoms=(2, 6, 7, 8, 9, 10, 11, 12, 13, 14),
        coupling="xx",
        dt=0.02,
        tmax=1.0,
        out="twist_scaling.csv",
    )
    return parser


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    return ExperimentConfig(
        experiment=args.experiment,
        n_atoms=args.atoms,
        filling=args.filling,
        neighbor_range=args.neighbor_range,
        coupling=args.coupling,
        chi=args.chi,
        dt=args.dt,
        t_max=args.tmax,
        stride=args.stride,
        realizations=args.realizations,
        master_seed=args.seed,
        out=args.out,
        fmt=args.format,
    )


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    config = config_from_args(args)
    try:
        result = run_experiment(config)
    except (ConfigError, CapacityError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for path in result.paths:
        print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
