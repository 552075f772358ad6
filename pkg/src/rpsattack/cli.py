"""Command-line entry point: ``rpsattack {sweep,simulate,compare}``."""

from __future__ import annotations

import argparse
import logging
import sys
from typing import List, Optional, Sequence, Tuple

from . import curvefile
from .exact_analysis import IidCurve, crossover_region, max_gap, sweep, uniform_grid
from .montecarlo import SimulationConfig, format_report, run_report, run_simulation

log = logging.getLogger("rpsattack")


class CliError(Exception):
    pass


def _write_text(path: str, text: str) -> None:
    if not path:
        raise CliError("output path must be non-empty")
    try:
        with open(path, "w", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise CliError(f"cannot write {path}: {exc.strerror or exc}") from exc


def cmd_sweep(p0: float, p_min: float, p_max: float, steps: int, out: str) -> None:
    if not (0.0 <= p_min <= 1.0 and 0.0 <= p_max <= 1.0):
        raise CliError(f"p range [{p_min}, {p_max}] must lie inside [0, 1]")
    if not 0.0 <= p0 <= 1.0:
        raise CliError(f"p0 must lie in [0, 1], got {p0}")
    try:
        grid = uniform_grid(p_min, p_max, steps)
    except ValueError as exc:
        raise CliError(str(exc)) from exc
    points = sweep(p0, grid)
    _write_text(out, curvefile.dumps_curve((pt.p, pt.entropy_per_round) for pt in points))
    log.info("wrote %d points to %s", len(points), out)


def cmd_simulate(
    seed: int,
    pairs: int,
    p0: Optional[float],
    p: float,
    test_fraction: float,
    out: str,
) -> List[Tuple[str, str]]:
    try:
        config = SimulationConfig(
            seed=seed, num_pairs=pairs, p=p, p0_override=p0, test_round_fraction=test_fraction
        )
    except ValueError as exc:
        raise CliError(str(exc)) from exc
    rows = run_report(config, run_simulation(config))
    _write_text(out, format_report(rows))
    return rows


def compare_rows(attack_points, iid: IidCurve, resolution: int = 201) -> List[Tuple[str, str]]:
    intervals = crossover_region(attack_points, iid, resolution)
    gap, where = max_gap(attack_points, iid, resolution)
    rows = [("interval_count", str(len(intervals)))]
    for i, (lo, hi) in enumerate(intervals, start=1):
        rows.append((f"interval_{i}_p_low", repr(lo)))
        rows.append((f"interval_{i}_p_high", repr(hi)))
    rows.append(("max_gap", repr(gap)))
    rows.append(("max_gap_p", repr(where)))
    return rows


def cmd_compare(attack: str, iid: str, out: str, resolution: int = 201) -> List[Tuple[str, str]]:
    try:
        attack_points = curvefile.read_curve(attack)
        iid_curve = curvefile.read_iid_curve(iid)
        rows = compare_rows(attack_points, iid_curve, resolution)
    except OSError as exc:
        raise CliError(f"cannot read input: {exc}") from exc
    except ValueError as exc:
        raise CliError(str(exc)) from exc
    _write_text(out, format_report(rows))
    return rows


def _u64(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError(f"{text} is not an unsigned 64-bit integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rpsattack", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("sweep", help="attack entropy per round along the keep probability")
    sp.add_argument("--p0", type=float, default=0.5)
    sp.add_argument("--p-min", type=float, default=0.0)
    sp.add_argument("--p-max", type=float, default=1.0)
    sp.add_argument("--steps", type=int, default=201)
    sp.add_argument("--out", required=True)

    sm = sub.add_parser("simulate", help="Monte Carlo run checked against the exact distribution")
    sm.add_argument("--seed", type=_u64, default=0)
    sm.add_argument("--pairs", type=int, default=1_000_000)
    sm.add_argument("--p0", type=float, default=None, help="override Alice's key-round P(a=0)")
    sm.add_argument("--p", type=float, required=True)
    sm.add_argument("--test-fraction", type=float, default=1 / 3)
    sm.add_argument("--out", required=True)

    cp = sub.add_parser("compare", help="find where the attack curve lies below an iid curve")
    cp.add_argument("--attack", required=True)
    cp.add_argument("--iid", required=True)
    cp.add_argument("--out", required=True)
    cp.add_argument("--resolution", type=int, default=201)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        if args.command == "sweep":
            cmd_sweep(args.p0, args.p_min, args.p_max, args.steps, args.out)
        elif args.command == "simulate":
            rows = cmd_simulate(args.seed, args.pairs, args.p0, args.p, args.test_fraction, args.out)
            failed = [k for k, v in rows if k.startswith("flag_") and v == "fail"]
            if failed:
                log.warning("checks failed: %s", ", ".join(failed))
        else:
            cmd_compare(args.attack, args.iid, args.out, args.resolution)
    except CliError as exc:
        print(f"rpsattack {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
