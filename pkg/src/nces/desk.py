"""Desk-scale end-to-end experiment: synthetic KB, data, TransE, training, evaluation.

Everything runs in-process so tests and scripts share one definition of the
scaled-down setting.
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .datagen import LearningProblem, filter_redundant, generate_expressions, make_learning_problems, split_train_test
from .decode import SynthesisResult, decode_batch
from .embeddings import EmbeddingTable, kb_to_triples, train_transe
from .kb import KnowledgeBase, Vocabulary, build_vocabulary
from .metrics import hard_accuracy_tokens, semantic_quality, strip_pad
from .nn import ModelConfig, Synthesizer, build_model
from .synthetic import random_kb
from .training import EpochMetrics, Example, TrainConfig, predict_scores, prepare_examples, train

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class DeskConfig:
    n_individuals: int = 50
    n_classes: int = 8
    n_roles: int = 2
    kb_seed: int = 1
    max_len: int = 10  # generator length bound, in atoms
    budget: int = 240
    n: Optional[int] = None
    ratio: float = 0.9
    d: int = 40
    transe_epochs: int = 200
    transe_batch: int = 32
    arch: str = "st"
    L: int = 16
    heads: int = 4
    m: int = 32
    hidden: int = 64
    epochs: int = 500
    batch_size: int = 16
    lr: float = 3e-3
    gc: float = 5.0
    seed: int = 0


@dataclass
class DeskData:
    kb: KnowledgeBase
    vocab: Vocabulary
    table: EmbeddingTable
    train_problems: list[LearningProblem]
    test_problems: list[LearningProblem]
    train_examples: list[Example]
    test_examples: list[Example]


@dataclass
class SplitScores:
    mean_f1: float
    mean_hard: float
    parse_rate: float
    results: list[SynthesisResult] = field(default_factory=list)


@dataclass
class DeskResult:
    config: DeskConfig
    data: DeskData
    model: Synthesizer
    history: list[EpochMetrics]
    train: SplitScores
    test: SplitScores
    seconds: float

    def first_epoch_reaching(self, hard: float) -> Optional[int]:
        return next((m.epoch for m in self.history if m.hard_acc >= hard), None)


def prepare_desk_data(cfg: DeskConfig) -> DeskData:
    kb = random_kb(cfg.n_individuals, cfg.n_classes, cfg.n_roles, seed=cfg.kb_seed)
    vocab = build_vocabulary(kb)
    exprs = filter_redundant(kb, generate_expressions(kb, max_len=cfg.max_len, budget=cfg.budget, seed=cfg.seed))
    problems = make_learning_problems(kb, exprs, n=cfg.n, seed=cfg.seed)
    train_p, test_p = split_train_test(problems, cfg.ratio, seed=cfg.seed)
    table = train_transe(kb_to_triples(kb), d=cfg.d, epochs=cfg.transe_epochs, seed=cfg.seed,
                         batch_size=cfg.transe_batch)
    return DeskData(kb, vocab, table, train_p, test_p,
                    prepare_examples(train_p, table, vocab, cfg.L), prepare_examples(test_p, table, vocab, cfg.L))


def desk_model(cfg: DeskConfig, vocab: Vocabulary) -> Synthesizer:
    return build_model(ModelConfig(cfg.arch, cfg.d, vocab.num_classes, cfg.L, heads=cfg.heads,
                                   inducing_points=cfg.m, hidden=cfg.hidden), seed=cfg.seed)


def score_split(model: Synthesizer, data: DeskData, examples, problems) -> SplitScores:
    results = decode_batch(predict_scores(model, examples), data.vocab)
    f1 = [semantic_quality(data.kb, p, r.expression).f1 for p, r in zip(problems, results)]
    hard = [hard_accuracy_tokens(strip_pad(e.target.tolist(), data.vocab.pad_id), list(r.token_ids))
            for e, r in zip(examples, results)]
    return SplitScores(float(np.mean(f1)), float(np.mean(hard)), float(np.mean([r.parse_ok for r in results])),
                       results)


def run_desk(cfg: DeskConfig = DeskConfig(), data: Optional[DeskData] = None,
             on_epoch: Optional[Callable[[EpochMetrics], None]] = None) -> DeskResult:
    start = time.perf_counter()
    if data is None:
        data = prepare_desk_data(cfg)
    log.info("desk data: %d train, %d test problems", len(data.train_problems), len(data.test_problems))
    model = desk_model(cfg, data.vocab)
    tc = TrainConfig(epochs=cfg.epochs, batch_size=cfg.batch_size, lr=cfg.lr, gc=cfg.gc, seed=cfg.seed)
    history = train(model, data.train_examples, tc, pad_id=data.vocab.pad_id, on_epoch=on_epoch).history
    return DeskResult(cfg, data, model, history,
                      score_split(model, data, data.train_examples, data.train_problems),
                      score_split(model, data, data.test_examples, data.test_problems),
                      time.perf_counter() - start)
