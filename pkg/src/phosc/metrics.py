"""Evaluation metrics: top-1 accuracies, GZSL harmonic mean, CER, and the
lengthwise confusion matrix."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import EmptyInput, EmptyTruth, OutOfRange


def top1_accuracy(predictions: Sequence[str], truths: Sequence[str]) -> float:
    """Fraction of exact matches."""
    if len(predictions) != len(truths):
        raise ValueError("predictions and truths must have equal length")
    if not truths:
        raise EmptyInput("no samples")
    hits = sum(1 for p, t in zip(predictions, truths) if p == t)
    return hits / len(truths)


def harmonic_mean(a_u: float, a_s: float) -> float:
    """GZSL summary 2*A_u*A_s/(A_u+A_s); 0 when either accuracy is 0."""
    for v in (a_u, a_s):
        if not 0.0 <= v <= 1.0:
            raise OutOfRange(f"accuracy {v} outside [0, 1]")
    if a_u * a_s == 0.0:
        return 0.0
    return 2.0 * a_u * a_s / (a_u + a_s)


def edit_distance(a: str, b: str) -> int:
    """Levenshtein distance (insertions, deletions, substitutions)."""
    if a == b:
        return 0
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        cur = [i]
        for j, cb in enumerate(b, start=1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def cer(predicted: Sequence[str], truth: Sequence[str]) -> float:
    """Mean over samples of edit_distance/|truth|."""
    return cer_sum(predicted, truth) / len(truth)


def cer_sum(predicted: Sequence[str], truth: Sequence[str]) -> float:
    """Raw sum over samples of edit_distance/|truth| (unnormalized form)."""
    if len(predicted) != len(truth):
        raise ValueError("predicted and truth must have equal length")
    if not truth:
        raise EmptyInput("no samples")
    total = 0.0
    for p, t in zip(predicted, truth):
        if not t:
            raise EmptyTruth("truth strings must be non-empty")
        total += edit_distance(p, t) / len(t)
    return total


@dataclass
class LengthConfusion:
    """Counts of (predicted length, true length) pairs.

    matrix[p, t] counts samples with predicted length p and true length t.
    normalized (when requested) divides each true-length column by its
    total, the per-true-length reading of the confusion plot. Marginals
    carry sample counts per length on both axes plus the number of
    distinct true word classes per length.
    """

    matrix: np.ndarray
    normalized: np.ndarray | None
    pred_samples_per_length: np.ndarray
    true_samples_per_length: np.ndarray
    true_classes_per_length: np.ndarray


def length_confusion(
    predictions: Sequence[str], truths: Sequence[str], normalize: bool = False
) -> LengthConfusion:
    if len(predictions) != len(truths):
        raise ValueError("predictions and truths must have equal length")
    if not truths:
        raise EmptyInput("no samples")
    max_len = max(max(len(p) for p in predictions), max(len(t) for t in truths))
    mat = np.zeros((max_len + 1, max_len + 1), dtype=np.int64)
    for p, t in zip(predictions, truths):
        mat[len(p), len(t)] += 1
    norm = None
    if normalize:
        col_totals = mat.sum(axis=0, keepdims=True)
        with np.errstate(invalid="ignore", divide="ignore"):
            norm = np.where(col_totals > 0, mat / col_totals, 0.0)
    classes = np.zeros(max_len + 1, dtype=np.int64)
    for length in range(max_len + 1):
        classes[length] = len({t for t in truths if len(t) == length})
    return LengthConfusion(
        matrix=mat,
        normalized=norm,
        pred_samples_per_length=mat.sum(axis=1),
        true_samples_per_length=mat.sum(axis=0),
        true_classes_per_length=classes,
    )


@dataclass
class EvalReport:
    """Aggregated evaluation results for one model under one protocol."""

    protocol: str
    variant: str
    a_u: float | None = None
    a_s: float | None = None
    h: float | None = None
    cer: float | None = None
    cer_sum: float | None = None
    per_class: dict[str, tuple[int, int]] = field(default_factory=dict)
    length_confusion: LengthConfusion | None = None

    def to_json_dict(self) -> dict:
        out = {
            "protocol": self.protocol,
            "variant": self.variant,
            "a_u": self.a_u,
            "a_s": self.a_s,
            "h": self.h,
            "cer": self.cer,
            "cer_sum": self.cer_sum,
            "per_class": {w: [c, n] for w, (c, n) in sorted(self.per_class.items())},
        }
        lc = self.length_confusion
        if lc is not None:
            out["length_confusion"] = {
                "matrix": lc.matrix.tolist(),
                "normalized": None if lc.normalized is None else lc.normalized.tolist(),
                "pred_samples_per_length": lc.pred_samples_per_length.tolist(),
                "true_samples_per_length": lc.true_samples_per_length.tolist(),
                "true_classes_per_length": lc.true_classes_per_length.tolist(),
            }
        else:
            out["length_confusion"] = None
        return out


def format_table(reports: Sequence[EvalReport]) -> str:
    """TSV comparison table: one row per model with A_u, A_s, h (and CER)."""
    lines = ["model\ta_u\ta_s\th\tcer"]
    for r in reports:
        cells = [r.variant]
        for v in (r.a_u, r.a_s, r.h, r.cer):
            cells.append("" if v is None else format(v, ".4f"))
        lines.append("\t".join(cells))
    return "\n".join(lines) + "\n"
