"""Command line entry point: ``npc run``, ``npc stats``, ``npc grades``."""

import argparse
import logging
import os
import sys
from importlib import resources
from pathlib import Path

from . import __version__
from .dataset import DatasetError
from .evaluation import friedman_holm, read_score_table
from .experiment import FORMATS, ExperimentConfig, run, write_report
from .grading import ImbalanceStats, write_grade_curve

log = logging.getLogger("npc")

# config keys that may repeat or hold comma-separated lists
_LIST_KEYS = {"data", "algo", "format"}


def read_config(path):
    """Parse flat ``key = value`` lines; ``#`` starts a comment."""
    values = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}: line {lineno}: expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.replace("-", "_")
        if key in _LIST_KEYS:
            values.setdefault(key, []).extend(v.strip() for v in value.split(",") if v.strip())
        else:
            values[key] = value
    return values


def bundled_path(name):
    return resources.files("npc") / "data" / name


def _build_config(args):
    file_cfg = read_config(args.config) if args.config else {}
    seed = args.seed
    if seed is None:
        seed = file_cfg.get("seed", os.environ.get("NPC_SEED", 0))

    def pick(flag, key, default):
        return flag if flag is not None else file_cfg.get(key, default)

    return ExperimentConfig(
        data=args.data or file_cfg.get("data", []),
        folds=int(pick(args.folds, "folds", 5)),
        seed=int(seed),
        normalize=pick(args.normalize, "normalize", "minmax"),
        algorithms=args.algo or file_cfg.get("algo", ["npc"]),
        out=pick(args.out, "out", None),
        formats=args.format or file_cfg.get("format", ["json-lines"]),
        jobs=int(pick(args.jobs, "jobs", 1)),
    )


def cmd_run(args):
    config = _build_config(args)
    report = run(config)
    if config.out:
        for path in write_report(report, config.out, config.formats):
            log.info("wrote %s", path)
    else:
        sys.stdout.write(report.format_table())
    return 0


def cmd_stats(args):
    source = args.scores or bundled_path("table3_gm.csv")
    table = read_score_table(Path(source).read_text(encoding="utf-8"))
    result = friedman_holm(table, alpha=args.alpha)
    text = result.to_csv() if args.format == "csv" else result.format_table()
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def cmd_grades(args):
    stats = ImbalanceStats.from_ratio(args.n, args.ir)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            write_grade_curve(stats, fh)
    else:
        write_grade_curve(stats, sys.stdout)
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="npc", description="Neighbors Progressive Competition experiments"
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="cross-validate classifiers on datasets")
    p.add_argument("--config", help="flat key = value file mirroring the flags")
    p.add_argument("--data", action="append", help="KEEL .dat / .csv file or directory (repeatable)")
    p.add_argument("--folds", type=int)
    p.add_argument("--seed", type=int, help="split seed (fallback: $NPC_SEED, then 0)")
    p.add_argument("--normalize", choices=["minmax", "none"])
    p.add_argument("--algo", action="append", help="'npc' or 'knn:<k>' (repeatable)")
    p.add_argument("--out", help="output directory; prints a summary table when omitted")
    p.add_argument("--format", action="append", choices=FORMATS)
    p.add_argument("--jobs", type=int, help="worker threads")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("stats", help="Friedman test with Holm post hoc on a score table")
    p.add_argument("--scores", help="CSV: dataset,<alg>,... (default: bundled GM table)")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--format", choices=["table", "csv"], default="table")
    p.add_argument("--out")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("grades", help="write the rank/grade curves for n samples and an IR")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--ir", type=float, required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_grades)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except (DatasetError, ValueError, OSError) as exc:
        print(f"npc: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
