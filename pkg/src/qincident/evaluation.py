"""Confusion counting, the incident-detection metric set (accuracy,
precision, recall, F2), and the repeated-run comparison harness.

Metrics of an averaged confusion table and averages of per-run metrics are
both reported: counts are averaged as plain means (possibly fractional),
while each metric mean is taken over the runs where it is defined, with the
defined-run count recorded.  An undefined metric (zero denominator) is kept
as ``None`` in reports and rendered as ``NaN`` in text tables.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace as dc_replace

import numpy as np

from . import data, model as model_mod, nn

METRIC_NAMES = ("accuracy", "precision", "recall", "f2")


@dataclass(frozen=True)
class ConfusionCounts:
    """2x2 confusion table; fractional values appear in run averages."""

    tp: float
    fp: float
    fn: float
    tn: float

    def __post_init__(self):
        for name, value in (("tp", self.tp), ("fp", self.fp), ("fn", self.fn), ("tn", self.tn)):
            if value < 0:
                raise ValueError(f"{name} must be >= 0, got {value}")

    @property
    def total(self) -> float:
        return self.tp + self.fp + self.fn + self.tn


@dataclass(frozen=True)
class MetricsReport:
    counts: ConfusionCounts
    accuracy: float | None
    precision: float | None
    recall: float | None
    f2: float | None

    def metric(self, name: str) -> float | None:
        return getattr(self, name)


def confusion(predictions, labels) -> ConfusionCounts:
    """Standard 2x2 counts from parallel 0/1 sequences."""
    preds = np.asarray(predictions, dtype=int)
    labs = np.asarray(labels, dtype=int)
    if preds.shape != labs.shape:
        raise ValueError(f"length mismatch: {preds.shape} predictions vs {labs.shape} labels")
    tp = int(np.sum((preds == 1) & (labs == 1)))
    fp = int(np.sum((preds == 1) & (labs == 0)))
    fn = int(np.sum((preds == 0) & (labs == 1)))
    tn = int(np.sum((preds == 0) & (labs == 0)))
    return ConfusionCounts(tp=tp, fp=fp, fn=fn, tn=tn)


def metrics(counts: ConfusionCounts) -> MetricsReport:
    """accuracy, precision, recall and F2 = 5PR/(4P+R); undefined -> None."""
    accuracy = (counts.tp + counts.tn) / counts.total if counts.total > 0 else None
    precision = counts.tp / (counts.tp + counts.fp) if counts.tp + counts.fp > 0 else None
    recall = counts.tp / (counts.tp + counts.fn) if counts.tp + counts.fn > 0 else None
    f2 = None
    if precision is not None and recall is not None and 4 * precision + recall > 0:
        f2 = 5 * precision * recall / (4 * precision + recall)
    return MetricsReport(counts, accuracy, precision, recall, f2)


@dataclass
class RunAggregate:
    """Per-run reports plus both averaging views for one (model, split)."""

    model_label: str
    split_name: str
    train_size: int
    test_size: int
    n_runs: int
    base_seed: int
    per_run: list[MetricsReport]
    mean_counts: ConfusionCounts
    mean_metrics: dict[str, float | None]
    defined_runs: dict[str, int]


def aggregate_runs(
    reports: list[MetricsReport],
    model_label: str,
    split_name: str,
    train_size: int,
    test_size: int,
    base_seed: int,
) -> RunAggregate:
    if not reports:
        raise ValueError("need at least one run")
    mean_counts = ConfusionCounts(
        tp=float(np.mean([r.counts.tp for r in reports])),
        fp=float(np.mean([r.counts.fp for r in reports])),
        fn=float(np.mean([r.counts.fn for r in reports])),
        tn=float(np.mean([r.counts.tn for r in reports])),
    )
    mean_metrics: dict[str, float | None] = {}
    defined_runs: dict[str, int] = {}
    for name in METRIC_NAMES:
        values = [r.metric(name) for r in reports if r.metric(name) is not None]
        defined_runs[name] = len(values)
        mean_metrics[name] = float(np.mean(values)) if values else None
    return RunAggregate(
        model_label=model_label,
        split_name=split_name,
        train_size=train_size,
        test_size=test_size,
        n_runs=len(reports),
        base_seed=base_seed,
        per_run=reports,
        mean_counts=mean_counts,
        mean_metrics=mean_metrics,
        defined_runs=defined_runs,
    )


def _single_run(args) -> MetricsReport:
    model_config, train_x, train_y, test_x, test_y, train_config, seed = args
    net = model_mod.build_model(model_config, seed=seed)
    model_mod.train(net, (train_x, train_y), dc_replace(train_config, seed=seed))
    preds = model_mod.predict(net, test_x)
    return metrics(confusion(preds, test_y))


def run_experiment(
    model_config: model_mod.HybridModelConfig,
    split: data.DatasetSplit,
    train_config: nn.TrainConfig,
    n_runs: int = 30,
    base_seed: int = 0,
    jobs: int = 1,
) -> RunAggregate:
    """Train/evaluate ``n_runs`` fresh models, seeds base_seed .. base_seed+n-1.

    The split must already be normalized.  Runs are independent, so with
    ``jobs`` > 1 they execute in a process pool; aggregation order is the
    run order either way, keeping results bit-reproducible.
    """
    if n_runs < 1:
        raise ValueError(f"n_runs must be >= 1, got {n_runs}")
    if split.normalization is None:
        raise ValueError("split must be normalized before running experiments")
    train_x = np.array([r.features() for r in split.train_rows])
    train_y = np.array([r.label for r in split.train_rows], dtype=float)
    test_x = np.array([r.features() for r in split.test_rows])
    test_y = np.array([r.label for r in split.test_rows], dtype=int)
    tasks = [
        (model_config, train_x, train_y, test_x, test_y, train_config, base_seed + i)
        for i in range(n_runs)
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            reports = list(pool.map(_single_run, tasks))
    else:
        reports = [_single_run(task) for task in tasks]
    return aggregate_runs(
        reports,
        model_label=model_config.label,
        split_name=split.name,
        train_size=len(split.train_rows),
        test_size=len(split.test_rows),
        base_seed=base_seed,
    )


# -- comparison output -----------------------------------------------------------

TABLE_COLUMNS = ("TP", "FP", "FN", "Accuracy", "Precision", "Recall", "F2-score")


def _format_count(value: float) -> str:
    return f"{value:g}" if float(value) == int(value) else f"{value:.1f}"


def _format_metric(value: float | None) -> str:
    return "NaN" if value is None else f"{value:.3f}"


def compare(aggregates: list[RunAggregate]) -> tuple[dict, str]:
    """Comparison of all models on one split: (JSON document, aligned table)."""
    if not aggregates:
        raise ValueError("nothing to compare")
    first = aggregates[0]
    for agg in aggregates[1:]:
        if (
            agg.split_name != first.split_name
            or agg.train_size != first.train_size
            or agg.test_size != first.test_size
        ):
            raise ValueError(
                f"aggregates evaluated on different splits: {agg.split_name} vs {first.split_name}"
            )
        if agg.n_runs != first.n_runs or agg.base_seed != first.base_seed:
            raise ValueError("aggregates ran under different n_runs or base_seed")

    doc = {
        "split": first.split_name,
        "n_runs": first.n_runs,
        "base_seed": first.base_seed,
        "train_rows": first.train_size,
        "test_rows": first.test_size,
        "models": [
            {
                "kind": agg.model_label,
                "mean_counts": {
                    "tp": agg.mean_counts.tp,
                    "fp": agg.mean_counts.fp,
                    "fn": agg.mean_counts.fn,
                    "tn": agg.mean_counts.tn,
                },
                "mean_metrics": agg.mean_metrics,
                "defined_runs": agg.defined_runs,
                "per_run": [
                    {
                        "counts": {
                            "tp": r.counts.tp,
                            "fp": r.counts.fp,
                            "fn": r.counts.fn,
                            "tn": r.counts.tn,
                        },
                        "metrics": {name: r.metric(name) for name in METRIC_NAMES},
                    }
                    for r in agg.per_run
                ],
            }
            for agg in aggregates
        ],
    }

    rows = [("Incident Detection Model",) + TABLE_COLUMNS]
    for agg in aggregates:
        rows.append(
            (
                agg.model_label,
                _format_count(agg.mean_counts.tp),
                _format_count(agg.mean_counts.fp),
                _format_count(agg.mean_counts.fn),
                _format_metric(agg.mean_metrics["accuracy"]),
                _format_metric(agg.mean_metrics["precision"]),
                _format_metric(agg.mean_metrics["recall"]),
                _format_metric(agg.mean_metrics["f2"]),
            )
        )
    widths = [max(len(row[col]) for row in rows) for col in range(len(rows[0]))]
    lines = [f"Comparison of Model Performance for {first.split_name}"]
    for row in rows:
        lines.append(
            "  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip()
        )
    return doc, "\n".join(lines) + "\n"
