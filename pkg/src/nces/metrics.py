"""Syntactic (soft/hard accuracy) and semantic (F1/accuracy) quality measures."""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from .expressions import ConceptExpr, expression_atoms, render_expression
from .reasoner import reasoner_for


def strip_pad(ids: Sequence[int], pad_id: int) -> list[int]:
    ids = list(ids)
    return ids[:ids.index(pad_id)] if pad_id in ids else ids


def soft_accuracy_tokens(target: Sequence, predicted: Sequence) -> float:
    """Jaccard overlap of the atom sets."""
    t, p = set(target), set(predicted)
    union = t | p
    return len(t & p) / len(union) if union else 1.0


def hard_accuracy_tokens(target: Sequence, predicted: Sequence) -> float:
    """Position-wise agreement over the longer of the two atom lists."""
    longest = max(len(target), len(predicted))
    if longest == 0:
        return 1.0
    return sum(a == b for a, b in zip(target, predicted)) / longest


def soft_accuracy(target: ConceptExpr, predicted: ConceptExpr) -> float:
    return soft_accuracy_tokens(expression_atoms(target), expression_atoms(predicted))


def hard_accuracy(target: ConceptExpr, predicted: ConceptExpr) -> float:
    return hard_accuracy_tokens(expression_atoms(target), expression_atoms(predicted))


@dataclass(frozen=True)
class Quality:
    f1: float
    accuracy: float
    ok: bool = True  # False when the prediction could not be parsed


def semantic_quality(kb, problem, predicted: Optional[ConceptExpr]) -> Quality:
    """F1 and accuracy of ``predicted`` against the problem's example sets."""
    if predicted is None:
        return Quality(0.0, 0.0, ok=False)
    reasoner = reasoner_for(kb)
    retrieved = reasoner.members(reasoner.mask(predicted))
    pos, neg = set(problem.positives), set(problem.negatives)
    tp = len(retrieved & pos)
    fp = len(retrieved & neg)
    fn = len(pos) - tp
    tn = len(neg) - fp
    denom = 2 * tp + fp + fn
    f1 = 2 * tp / denom if denom else 0.0
    total = len(pos) + len(neg)
    return Quality(f1, (tp + tn) / total if total else 0.0)


# ---------------------------------------------------------------------------
# evaluation report


@dataclass
class EvalRecord:
    target: str
    predicted: str
    f1: float
    accuracy: float
    runtime_seconds: float = 0.0
    parse_ok: bool = True


def summarize(records: Sequence[EvalRecord]) -> dict[str, tuple[float, float]]:
    """Mean and (population) standard deviation of each numeric column."""
    out = {}
    for column in ("f1", "accuracy", "runtime_seconds"):
        values = np.array([getattr(r, column) for r in records], dtype=np.float64)
        out[column] = (float(values.mean()), float(values.std())) if len(values) else (math.nan, math.nan)
    return out


def _csv_field(text: str) -> str:
    if any(ch in text for ch in ',"\n'):
        return '"' + text.replace('"', '""') + '"'
    return text


def format_report(records: Sequence[EvalRecord]) -> str:
    lines = ["target,predicted,f1,accuracy,runtime_seconds"]
    for r in records:
        lines.append(",".join([_csv_field(r.target), _csv_field(r.predicted),
                               f"{r.f1:.6f}", f"{r.accuracy:.6f}", f"{r.runtime_seconds:.6f}"]))
    stats = summarize(records)
    lines.append("# aggregate: mean ± std over %d problems" % len(records))
    lines.append("mean,," + ",".join(f"{stats[c][0]:.6f}" for c in ("f1", "accuracy", "runtime_seconds")))
    lines.append("std,," + ",".join(f"{stats[c][1]:.6f}" for c in ("f1", "accuracy", "runtime_seconds")))
    return "\n".join(lines) + "\n"


def write_report(records: Sequence[EvalRecord], path: Union[str, Path]) -> None:
    Path(path).write_text(format_report(records), encoding="utf-8")


def describe(expr: Optional[ConceptExpr]) -> str:
    return render_expression(expr) if expr is not None else ""
