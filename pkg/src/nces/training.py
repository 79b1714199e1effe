"""Loss, minibatch training loop and model checkpoints."""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence, Union

import numpy as np

from . import autodiff as ad
from .autodiff import Adam, Tensor
from .datagen import LearningProblem
from .embeddings import EmbeddingTable, lookup_examples
from .errors import DataError, NumericError, ShapeError
from .kb import Vocabulary, tokenize_expression
from .metrics import hard_accuracy_tokens, soft_accuracy_tokens, strip_pad
from .nn import ModelConfig, Synthesizer, build_model, make_batch

log = logging.getLogger(__name__)


def cross_entropy(scores: Tensor, targets: np.ndarray) -> Tensor:
    """Mean negative log-softmax of the target class over all N·L positions.

    ``scores`` is (N, C, L); ``targets`` is (N, L) integer class ids.  PAD is
    an ordinary class here.
    """
    targets = np.asarray(targets)
    if scores.ndim != 3 or targets.shape != (scores.shape[0], scores.shape[2]):
        raise ShapeError(f"scores {scores.shape} and targets {targets.shape} do not align")
    if targets.min() < 0 or targets.max() >= scores.shape[1]:
        raise ValueError(f"target ids must lie in [0, {scores.shape[1]})")
    logp = ad.log_softmax(scores, axis=1)
    picked = ad.take_along(logp, targets[:, None, :], axis=1)
    return -ad.mean(picked)


@dataclass
class Example:
    pos: np.ndarray
    neg: np.ndarray
    target: np.ndarray  # (L,) ids, padded with PAD


def encode_target(problem: LearningProblem, vocab: Vocabulary, max_len: int) -> np.ndarray:
    ids = tokenize_expression(problem.target, vocab)
    if len(ids) > max_len:
        raise DataError(f"target {problem.target} has {len(ids)} tokens, more than L={max_len}")
    return np.array(ids + [vocab.pad_id] * (max_len - len(ids)), dtype=np.int64)


def prepare_examples(problems: Sequence[LearningProblem], table: EmbeddingTable,
                     vocab: Vocabulary, max_len: int) -> list[Example]:
    examples = []
    for p in problems:
        if p.target is None:
            raise DataError("training problems need a target expression")
        pos, neg = lookup_examples(table, p)
        examples.append(Example(pos, neg, encode_target(p, vocab, max_len)))
    return examples


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 500
    batch_size: int = 256
    lr: float = 3e-4
    gc: float = 5.0
    seed: int = 0


@dataclass
class EpochMetrics:
    epoch: int
    loss: float
    soft_acc: float
    hard_acc: float


@dataclass
class TrainResult:
    model: Synthesizer
    history: list[EpochMetrics] = field(default_factory=list)


def _batches(order: np.ndarray, size: int) -> list[np.ndarray]:
    chunks = [order[i:i + size] for i in range(0, len(order), size)]
    # a trailing singleton breaks batch statistics; fold it into its neighbour
    if len(chunks) > 1 and len(chunks[-1]) == 1:
        last = chunks.pop()
        chunks[-1] = np.concatenate([chunks[-1], last])
    return chunks


def batch_accuracies(scores: np.ndarray, targets: np.ndarray, pad_id: int) -> tuple[list[float], list[float]]:
    predicted = scores.argmax(axis=1)
    soft, hard = [], []
    for pred, tgt in zip(predicted, targets):
        p, t = strip_pad(pred.tolist(), pad_id), strip_pad(tgt.tolist(), pad_id)
        soft.append(soft_accuracy_tokens(t, p))
        hard.append(hard_accuracy_tokens(t, p))
    return soft, hard


def train(model: Synthesizer, examples: Sequence[Example], config: TrainConfig = TrainConfig(),
          pad_id: Optional[int] = None,
          on_epoch: Optional[Callable[[EpochMetrics], None]] = None) -> TrainResult:
    """Minibatch Adam with global-norm gradient clipping; deterministic per seed."""
    if not examples:
        raise DataError("empty training set")
    if pad_id is None:
        pad_id = model.config.num_classes - 1
    rng = np.random.default_rng(config.seed)
    optimizer = Adam(model.parameters(), lr=config.lr)
    model.train()
    result = TrainResult(model)
    for epoch in range(1, config.epochs + 1):
        total_loss, soft, hard = 0.0, [], []
        for b, idx in enumerate(_batches(rng.permutation(len(examples)), config.batch_size)):
            chosen = [examples[i] for i in idx]
            batch = make_batch([(e.pos, e.neg) for e in chosen])
            targets = np.stack([e.target for e in chosen])
            scores = model(batch)
            loss = cross_entropy(scores, targets)
            value = loss.item()
            if not np.isfinite(value):
                raise NumericError(f"non-finite loss at epoch {epoch}, batch {b}")
            optimizer.zero_grad()
            loss.backward()
            ad.clip_gradients(optimizer.params, config.gc)
            optimizer.step()
            total_loss += value * len(chosen)
            s, h = batch_accuracies(scores.data, targets, pad_id)
            soft += s
            hard += h
        metrics = EpochMetrics(epoch, total_loss / len(examples), float(np.mean(soft)), float(np.mean(hard)))
        result.history.append(metrics)
        log.info("epoch %d loss %.5f soft %.4f hard %.4f", epoch, metrics.loss, metrics.soft_acc, metrics.hard_acc)
        if on_epoch is not None:
            on_epoch(metrics)
    model.eval()
    return result


def predict_scores(model: Synthesizer, examples: Sequence, batch_size: int = 256) -> np.ndarray:
    """Inference scores for objects with ``pos``/``neg`` matrices, shape (N, C, L)."""
    out = []
    for start in range(0, len(examples), batch_size):
        chunk = examples[start:start + batch_size]
        out.append(model.predict([(e.pos, e.neg) for e in chunk]))
    return np.concatenate(out, axis=0)


def write_metrics_csv(history: Sequence[EpochMetrics], path: Union[str, Path]) -> None:
    lines = ["epoch,loss,soft_acc,hard_acc"]
    lines += [f"{m.epoch},{m.loss:.17g},{m.soft_acc:.17g},{m.hard_acc:.17g}" for m in history]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# checkpoints: JSON with named float64 tensors and the vocabulary fingerprint

CHECKPOINT_FORMAT = "nces-checkpoint/1"


def save_checkpoint(model: Synthesizer, path: Union[str, Path], vocab: Vocabulary) -> None:
    tensors = {}
    for name, p in model.named_parameters():
        tensors[name] = {"shape": list(p.shape), "data": p.data.reshape(-1).tolist()}
    for name, buf in model.named_buffers():
        tensors[name] = {"shape": list(buf.shape), "data": buf.reshape(-1).tolist()}
    payload = {
        "format": CHECKPOINT_FORMAT,
        "config": model.config.to_dict(),
        "vocab_fingerprint": vocab.fingerprint(),
        "tensors": tensors,
    }
    Path(path).write_text(json.dumps(payload, indent=1) + "\n", encoding="utf-8")


def load_checkpoint(path: Union[str, Path], vocab: Optional[Vocabulary] = None) -> tuple[Synthesizer, str]:
    """Rebuild a model from disk; return it with its vocabulary fingerprint."""
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    if payload.get("format") != CHECKPOINT_FORMAT:
        raise DataError(f"{path}: not a synthesizer checkpoint")
    fingerprint = payload["vocab_fingerprint"]
    if vocab is not None and vocab.fingerprint() != fingerprint:
        raise DataError(f"{path}: checkpoint was trained with a different vocabulary")
    model = build_model(ModelConfig(**payload["config"]))
    tensors = payload["tensors"]
    targets = dict(model.named_parameters())
    buffers = dict(model.named_buffers())
    if set(tensors) != set(targets) | set(buffers):
        raise DataError(f"{path}: tensor names do not match the architecture")
    for name, entry in tensors.items():
        value = np.array(entry["data"], dtype=np.float64).reshape(entry["shape"])
        if name in targets:
            targets[name].data = value
        else:
            buffers[name][...] = value
    model.eval()
    return model, fingerprint
