"""From score matrices to class expressions, and score-level ensembling."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import NCESError, ShapeError, VocabularyError
from .expressions import ConceptExpr, parse_atoms
from .kb import Vocabulary


@dataclass(frozen=True)
class SynthesisResult:
    token_ids: tuple[int, ...]
    expression_text: str
    parse_ok: bool
    expression: Optional[ConceptExpr] = None


def decode(scores: np.ndarray, vocab: Vocabulary) -> SynthesisResult:
    """Argmax per position (ties to the smallest id), cut at the first PAD, then parse."""
    scores = np.asarray(scores)
    if scores.ndim != 2 or scores.shape[0] != vocab.num_classes:
        raise ShapeError(f"expected scores of shape ({vocab.num_classes}, L), got {scores.shape}")
    ids = scores.argmax(axis=0).tolist()
    if vocab.pad_id in ids:
        ids = ids[:ids.index(vocab.pad_id)]
    atoms = vocab.decode_ids(ids)
    text = "".join(atoms)
    try:
        expr = parse_atoms(atoms, vocab.class_names, vocab.role_names)
    except NCESError:
        return SynthesisResult(tuple(ids), text, False)
    return SynthesisResult(tuple(ids), text, True, expr)


def decode_batch(scores: np.ndarray, vocab: Vocabulary) -> list[SynthesisResult]:
    return [decode(s, vocab) for s in scores]


def ensemble(scores_list: Sequence[np.ndarray], fingerprints: Optional[Sequence[str]] = None) -> np.ndarray:
    """Element-wise mean of at least two score tensors of identical shape."""
    if len(scores_list) < 2:
        raise ValueError("an ensemble needs at least two score tensors")
    shapes = {np.shape(s) for s in scores_list}
    if len(shapes) != 1:
        raise ShapeError(f"score tensors differ in shape: {sorted(shapes)}")
    if fingerprints is not None and len(set(fingerprints)) != 1:
        raise VocabularyError("ensemble members were trained on different vocabularies")
    return sum(np.asarray(s, dtype=np.float64) for s in scores_list) / len(scores_list)
