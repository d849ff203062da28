"""Top-k metrics, confusion matrices, report rendering and the sweep harness."""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from .errors import BadK, LengthMismatch
from .nn import ModelSpec, TrainConfig, TrainHistory, predict_topk, train


def topk_accuracy(ranked, labels, k: int) -> float:
    """Fraction of samples whose true label is among the first k candidates."""
    if len(ranked) != len(labels):
        raise LengthMismatch("one label per ranked candidate list required")
    if len(ranked) == 0:
        raise LengthMismatch("no samples")
    if any(k > len(r) for r in ranked):
        raise BadK(f"k={k} exceeds a candidate list length")
    hits = sum(
        1 for cands, y in zip(ranked, labels) if y in [c for c, _ in cands[:k]]
    )
    return hits / len(ranked)


def confusion(ranked, labels, k: int, num_classes: int) -> np.ndarray:
    """Top-k confusion counts. Cell (i, j): samples of true class i having j
    among their first k candidates; k=1 is the classic confusion matrix."""
    if len(ranked) != len(labels):
        raise LengthMismatch("one label per ranked candidate list required")
    if any(k > len(r) for r in ranked):
        raise BadK(f"k={k} exceeds a candidate list length")
    mat = np.zeros((num_classes, num_classes), dtype=np.int64)
    for cands, y in zip(ranked, labels):
        for c, _ in cands[:k]:
            mat[y, c] += 1
    return mat


@dataclass
class EvalReport:
    num_classes: int
    accuracy_by_k: dict[int, float]
    confusion_top1: np.ndarray
    confusion_topk: np.ndarray
    topk: int
    class_counts: np.ndarray


def evaluate(weights, samples, labels, topk: int = 5) -> EvalReport:
    """Rank every sample with the model and assemble the standard report."""
    k_max = min(topk, weights.spec.num_classes)
    ranked = [predict_topk(weights, s, weights.spec.num_classes) for s in samples]
    labels = list(labels)
    acc = {k: topk_accuracy(ranked, labels, k) for k in range(1, k_max + 1)}
    counts = np.bincount(labels, minlength=weights.spec.num_classes)
    return EvalReport(
        num_classes=weights.spec.num_classes,
        accuracy_by_k=acc,
        confusion_top1=confusion(ranked, labels, 1, weights.spec.num_classes),
        confusion_topk=confusion(ranked, labels, k_max, weights.spec.num_classes),
        topk=k_max,
        class_counts=counts,
    )


def _matrix_csv(mat: np.ndarray) -> str:
    k = mat.shape[0]
    lines = ["class," + ",".join(str(j) for j in range(k))]
    for i in range(k):
        lines.append(f"{i}," + ",".join(str(v) for v in mat[i]))
    return "\n".join(lines) + "\n"


def summary_line(report: EvalReport) -> str:
    top1 = report.accuracy_by_k.get(1, 0.0)
    top5 = report.accuracy_by_k.get(5, report.accuracy_by_k[max(report.accuracy_by_k)])
    return f"top1={top1:.4f} top5={top5:.4f}"


def render_report(report: EvalReport, out_dir: str) -> dict[str, str]:
    """Write confusion CSVs and the accuracy summary; returns path -> name map.
    Deterministic: re-rendering the same report is byte-identical."""
    os.makedirs(out_dir, exist_ok=True)
    files = {
        "confusion_top1.csv": _matrix_csv(report.confusion_top1),
        f"confusion_top{report.topk}.csv": _matrix_csv(report.confusion_topk),
        "summary.txt": summary_line(report)
        + "\n"
        + "".join(
            f"top{k}={report.accuracy_by_k[k]:.4f}\n"
            for k in sorted(report.accuracy_by_k)
        ),
    }
    paths = {}
    for name, content in files.items():
        path = os.path.join(out_dir, name)
        with open(path, "w") as fh:
            fh.write(content)
        paths[name] = path
    return paths


@dataclass
class SweepEntry:
    model_spec: ModelSpec
    train_config: TrainConfig
    val_top1: float | None
    history: TrainHistory | None
    error: str | None = None


@dataclass
class SweepResult:
    entries: list[SweepEntry] = field(default_factory=list)


def run_sweep(grid, train_x, train_y, val_x, val_y) -> SweepResult:
    """Train every (ModelSpec, TrainConfig) grid point independently; failed
    points are recorded with an error tag instead of aborting the sweep.
    Entries come back sorted by validation top-1 accuracy, best first."""
    entries = []
    for spec, config in grid:
        try:
            weights, history = train(spec, train_x, train_y, val_x, val_y, config)
            best_top1 = history.val_top1[history.best_epoch]
            entries.append(SweepEntry(spec, config, best_top1, history))
        except Exception as exc:  # isolation: one bad cell must not kill the batch
            entries.append(SweepEntry(spec, config, None, None, error=str(exc)))
    entries.sort(key=lambda e: -1.0 if e.val_top1 is None else e.val_top1, reverse=True)
    return SweepResult(entries=entries)
