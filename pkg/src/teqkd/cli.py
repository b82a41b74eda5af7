"""Command-line scenario runner.

    teqkd run scenarios/baseline.cfg --out results/ [--omniscient] [--quiet]
    teqkd sweep scenarios/sweep_p_wide.cfg --out results/ [--jobs N]
    teqkd replay results/events.log

``run`` exits 0 for a clean verdict, 2 when the run is flagged as
compromised, 3 when there were no test rounds, and 1 on any configuration
or runtime error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import config as config_mod
from .config import ConfigError
from .simulation import encode_events, event_records, replay, run_trial, sweep
from .stats import Decision, table_csv

EXIT_CLEAN = 0
EXIT_ERROR = 1
EXIT_COMPROMISED = 2
EXIT_INCONCLUSIVE = 3

_EXIT = {
    Decision.CLEAN: EXIT_CLEAN,
    Decision.COMPROMISED: EXIT_COMPROMISED,
    Decision.INCONCLUSIVE: EXIT_INCONCLUSIVE,
}


def _bits_hex(bits: Sequence[int]) -> str:
    if not bits:
        return ""
    padded = list(bits) + [0] * (-len(bits) % 4)
    return "".join(
        "0123456789abcdef"[int("".join(map(str, padded[i:i + 4])), 2)]
        for i in range(0, len(padded), 4)
    )


def cmd_run(args: argparse.Namespace) -> int:
    cfg = config_mod.load(args.config)
    result = run_trial(cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    events = encode_events(event_records(result, omniscient=args.omniscient))
    (out / "events.log").write_text(events)
    (out / "transcript.log").write_text(result.transcript.encode())
    # every reported figure is recomputed from the log just written
    rebuilt = replay(events.splitlines())
    summary = rebuilt.summary
    (out / "summary.txt").write_text(summary.to_text())
    (out / "summary.csv").write_text(summary.to_csv())
    (out / "histogram.csv").write_text(summary.histogram_csv())
    if args.omniscient:
        (out / "key_A.hex").write_text(_bits_hex(rebuilt.key.bits_A) + "\n")
        (out / "key_B.hex").write_text(_bits_hex(rebuilt.key.bits_B) + "\n")
    if not args.quiet:
        sys.stdout.write(summary.to_text())
    return _EXIT[rebuilt.verdict.decision]


def cmd_sweep(args: argparse.Namespace) -> int:
    cfg = config_mod.load(args.config)
    if cfg.sweep is None:
        raise ConfigError([f"{args.config}: sweep.parameter and sweep.values are required"])
    rows = sweep(cfg, n_jobs=args.jobs)
    table = table_csv([r.as_dict() for r in rows])
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "summary.csv").write_text(table)
    if not args.quiet:
        sys.stdout.write(f"# sweep over {cfg.sweep.parameter}\n")
        sys.stdout.write(table)
    return EXIT_CLEAN


def cmd_replay(args: argparse.Namespace) -> int:
    rebuilt = replay(Path(args.events).read_text().splitlines())
    if not args.quiet:
        sys.stdout.write(rebuilt.summary.to_text())
    return _EXIT[rebuilt.verdict.decision]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="teqkd",
        description="Simulate time-energy uncertainty key distribution scenarios. "
        "Frequencies are angular frequencies in s^-1 (scientific notation), times in seconds.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--out", default="teqkd-out", help="output directory (default: %(default)s)")
        p.add_argument("--quiet", action="store_true", help="do not echo the summary")

    p_run = sub.add_parser("run", help="run one end-to-end scenario")
    p_run.add_argument("config")
    p_run.add_argument("--omniscient", action="store_true",
                       help="log Eve's internals and write both parties' keys")
    common(p_run)
    p_run.set_defaults(func=cmd_run)

    p_sweep = sub.add_parser("sweep", help="sweep one parameter, write a CSV table")
    p_sweep.add_argument("config")
    p_sweep.add_argument("--jobs", type=int, default=1, help="worker processes (results do not depend on it)")
    common(p_sweep)
    p_sweep.set_defaults(func=cmd_sweep)

    p_replay = sub.add_parser("replay", help="recompute a summary from an events.log")
    p_replay.add_argument("events")
    p_replay.add_argument("--quiet", action="store_true")
    p_replay.set_defaults(func=cmd_replay)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        for problem in exc.problems:
            print(f"error: {problem}", file=sys.stderr)
        return EXIT_ERROR
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
