"""Cross-validated experiments: load, split, fit, predict, score, report."""

import json
import logging
import re
import statistics
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import __version__
from .classifier import NpcModel, _knn_vote, classify_batch
from .dataset import (
    DatasetError,
    apply_minmax,
    find_keel_partitions,
    fit_minmax,
    load_dataset,
    load_partition,
    stratified_folds,
)
from .evaluation import MetricReport, confusion, geometric_mean, summarize

log = logging.getLogger(__name__)

FORMATS = ("json-lines", "csv", "pretty-table")
TIMING_FIELDS = ("mean_query_time",)


@dataclass(frozen=True)
class ExperimentConfig:
    data: tuple
    folds: int = 5
    seed: int = 0
    normalize: str = "minmax"
    algorithms: tuple = ("npc",)
    out: str | None = None
    formats: tuple = ("json-lines",)
    jobs: int = 1

    def __post_init__(self):
        object.__setattr__(self, "data", tuple(str(p) for p in self.data))
        object.__setattr__(self, "algorithms", tuple(self.algorithms))
        object.__setattr__(self, "formats", tuple(self.formats))
        if not self.data:
            raise ValueError("no datasets given")
        if not self.algorithms:
            raise ValueError("no algorithms given")
        for alg in self.algorithms:
            parse_algorithm(alg)
        if self.folds < 2:
            raise ValueError(f"folds must be >= 2, got {self.folds}")
        if self.normalize not in ("minmax", "none"):
            raise ValueError(f"normalize must be 'minmax' or 'none', got {self.normalize!r}")
        for fmt in self.formats:
            if fmt not in FORMATS:
                raise ValueError(f"unknown format {fmt!r}; choose from {', '.join(FORMATS)}")


def parse_algorithm(spec):
    """``"npc"`` -> ``("npc", None)``; ``"knn:3"`` -> ``("knn", 3)``."""
    if spec == "npc":
        return "npc", None
    if spec.startswith("knn:"):
        try:
            k = int(spec[4:])
        except ValueError:
            k = 0
        if k >= 1:
            return "knn", k
    raise ValueError(f"unknown algorithm {spec!r}; use 'npc' or 'knn:<k>'")


@dataclass(frozen=True)
class CellResult:
    """One (dataset, algorithm, fold) outcome."""

    dataset: str
    algorithm: str
    fold: int
    n_train: int
    n_test: int
    tp: int
    fn: int
    fp: int
    tn: int
    tp_rate: float | None
    tn_rate: float | None
    gm: float | None
    mean_query_time: float | None = None
    stop_rank_min: int | None = None
    stop_rank_median: float | None = None
    stop_rank_max: int | None = None
    fallback_count: int | None = None


@dataclass(frozen=True)
class RunReport:
    config: dict
    version: str
    cells: tuple = field(default=())

    def summaries(self):
        """Mean metrics per (dataset, algorithm), in canonical order."""
        groups = {}
        for cell in self.cells:
            groups.setdefault((cell.dataset, cell.algorithm), []).append(cell)
        out = []
        for (name, alg), cells in sorted(groups.items()):
            report = summarize(_metric_report(c) for c in cells)
            out.append({
                "dataset": name,
                "algorithm": alg,
                "folds": len(cells),
                "gm": report.gm,
                "tp_rate": report.tp_rate,
                "tn_rate": report.tn_rate,
                "mean_query_time": report.mean_query_time,
            })
        return out

    def to_jsonl(self) -> str:
        lines = [json.dumps({"type": "run", "version": self.version, "config": self.config}, sort_keys=True)]
        for cell in self.cells:
            lines.append(json.dumps({"type": "cell", **asdict(cell)}, sort_keys=True))
        for summary in self.summaries():
            lines.append(json.dumps({"type": "summary", **summary}, sort_keys=True))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_jsonl(cls, text) -> "RunReport":
        header, cells = None, []
        names = {f.name for f in fields(CellResult)}
        for line in text.splitlines():
            if not line.strip():
                continue
            doc = json.loads(line)
            kind = doc.pop("type")
            if kind == "run":
                header = doc
            elif kind == "cell":
                unknown = set(doc) - names
                if unknown:
                    raise ValueError(f"unknown cell fields {sorted(unknown)}")
                cells.append(CellResult(**doc))
        if header is None:
            raise ValueError("report has no run header line")
        return cls(config=header["config"], version=header["version"], cells=tuple(cells))

    def to_csv(self) -> str:
        names = [f.name for f in fields(CellResult)]
        lines = [",".join(names)]
        for cell in self.cells:
            lines.append(",".join("" if v is None else str(v) for v in astuple_ordered(cell, names)))
        return "\n".join(lines) + "\n"

    def format_table(self) -> str:
        lines = [f"{'dataset':<28}{'algorithm':<10}{'folds':>6}{'GM':>9}{'TPrate':>9}{'TNrate':>9}{'ms/query':>10}"]
        for s in self.summaries():
            def num(v, scale=1.0, digits=4):
                return "undef" if v is None else f"{v * scale:.{digits}f}"
            lines.append(
                f"{s['dataset']:<28}{s['algorithm']:<10}{s['folds']:>6}"
                f"{num(s['gm']):>9}{num(s['tp_rate']):>9}{num(s['tn_rate']):>9}"
                f"{num(s['mean_query_time'], 1e3, 3):>10}"
            )
        return "\n".join(lines) + "\n"


def astuple_ordered(cell, names):
    return [getattr(cell, n) for n in names]


def _metric_report(cell):
    return MetricReport(cell.tp_rate, cell.tn_rate, cell.gm, cell.mean_query_time)


def strip_timing(report_text: str) -> str:
    """Drop wall-clock fields so two runs can be compared byte for byte."""
    out = []
    for line in report_text.splitlines():
        doc = json.loads(line)
        for key in TIMING_FIELDS:
            doc.pop(key, None)
        out.append(json.dumps(doc, sort_keys=True))
    return "\n".join(out) + "\n"


# --- data collection ---------------------------------------------------


def collect_folds(paths, k, seed):
    """Map dataset name -> list of (train, test) Dataset pairs.

    KEEL partition files (``name-K-Itra.dat``/``name-K-Itst.dat``) take
    precedence over internal splitting of a full file with the same name.
    """
    full, partitions = {}, {}
    for raw in paths:
        path = Path(raw)
        if path.is_dir():
            partitions.update(find_keel_partitions(path))
            for child in sorted(path.iterdir()):
                if child.suffix.lower() in (".dat", ".csv") and not _is_partition(child):
                    full.setdefault(child.stem, child)
        elif path.is_file():
            siblings = find_keel_partitions(path.parent)
            if path.stem in siblings:
                partitions[path.stem] = siblings[path.stem]
            else:
                full[path.stem] = path
        else:
            raise DatasetError("no such file or directory", None, str(path))
    plans = {}
    for stem, pairs in partitions.items():
        loaded = [load_partition(tra, tst) for tra, tst in pairs]
        plans[stem] = [(tra, tst) for tra, tst in loaded]
        log.info("%s: using %d pre-made partitions", stem, len(pairs))
    for stem, path in full.items():
        if stem in plans:
            continue
        dataset = load_dataset(path)
        dataset.check_trainable()
        plan = stratified_folds(dataset, k, seed)
        plans[stem] = [(train, test) for _, train, test in plan.split(dataset)]
    if not plans:
        raise DatasetError("no datasets found", None, ", ".join(str(p) for p in paths))
    return dict(sorted(plans.items()))


def _is_partition(path):
    return re.search(r"-\d+-\d+(tra|tst)\.dat$", path.name) is not None


# --- execution ---------------------------------------------------------


def _evaluate(name, fold, train, test, algorithm, normalize):
    kind, k = parse_algorithm(algorithm)
    train.check_trainable()
    norm = None if normalize == "none" else normalize
    stops, fallbacks = None, None
    start = time.perf_counter()
    if kind == "npc":
        model = NpcModel.train(train.features, train.labels, normalize=norm)
        preds = classify_batch(model, test.features)
        predicted = [p.label for p in preds]
        stops = [p.stop_rank for p in preds]
        fallbacks = sum(p.decided_by == "fallback" for p in preds)
    else:
        feats, queries = train.features, test.features
        if norm == "minmax":
            params = fit_minmax(feats)
            feats, queries = apply_minmax(params, feats), apply_minmax(params, queries)
        predicted = [_knn_vote(feats, train.labels, q, k) for q in queries]
    elapsed = time.perf_counter() - start
    cm = confusion(np.asarray(predicted, dtype=np.int64), test.labels)
    metrics = geometric_mean(cm)
    if metrics.gm is None:
        log.warning("%s fold %d: a class is absent from the test part; GM undefined", name, fold)
    return CellResult(
        dataset=name,
        algorithm=algorithm,
        fold=fold,
        n_train=len(train),
        n_test=len(test),
        tp=cm.tp, fn=cm.fn, fp=cm.fp, tn=cm.tn,
        tp_rate=metrics.tp_rate,
        tn_rate=metrics.tn_rate,
        gm=metrics.gm,
        mean_query_time=elapsed / len(test) if len(test) else None,
        stop_rank_min=min(stops) if stops else None,
        stop_rank_median=float(statistics.median(stops)) if stops else None,
        stop_rank_max=max(stops) if stops else None,
        fallback_count=fallbacks,
    )


def run(config: ExperimentConfig) -> RunReport:
    plans = collect_folds(config.data, config.folds, config.seed)
    tasks = [
        (name, fold, train, test, alg)
        for name, pairs in plans.items()
        for fold, (train, test) in enumerate(pairs)
        for alg in config.algorithms
    ]
    if config.jobs > 1:
        with ThreadPoolExecutor(config.jobs) as pool:
            cells = list(pool.map(lambda t: _evaluate(*t, config.normalize), tasks))
    else:
        cells = [_evaluate(*t, config.normalize) for t in tasks]
    cells.sort(key=lambda c: (c.dataset, c.algorithm, c.fold))
    echo = {
        "data": list(config.data),
        "folds": config.folds,
        "seed": config.seed,
        "normalize": config.normalize,
        "algorithms": list(config.algorithms),
    }
    return RunReport(config=echo, version=__version__, cells=tuple(cells))


def write_report(report: RunReport, out_dir, formats):
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for fmt in formats:
        if fmt == "json-lines":
            path, text = out_dir / "report.jsonl", report.to_jsonl()
        elif fmt == "csv":
            path, text = out_dir / "report.csv", report.to_csv()
        else:
            path, text = out_dir / "report.txt", report.format_table()
        path.write_text(text, encoding="utf-8")
        written.append(path)
    return written
