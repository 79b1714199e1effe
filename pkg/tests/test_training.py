import math

import numpy as np
import pytest

from nces.autodiff import Tensor
from nces.datagen import LearningProblem
from nces.embeddings import EmbeddingTable
from nces.errors import DataError, NumericError, ShapeError
from nces.expressions import parse_expression
from nces.kb import build_vocabulary
from nces.nn import ModelConfig, build_model
from nces.training import (
    Example,
    TrainConfig,
    _batches,
    cross_entropy,
    encode_target,
    load_checkpoint,
    predict_scores,
    prepare_examples,
    save_checkpoint,
    train,
    write_metrics_csv,
)


class TestLoss:
    @pytest.mark.parametrize("C", [2, 5, 17])
    def test_uniform_scores_give_log_c(self, C):
        scores = Tensor(np.zeros((3, C, 4)))
        targets = np.zeros((3, 4), dtype=int)
        assert abs(cross_entropy(scores, targets).item() - math.log(C)) < 1e-12

    def test_two_class_fixture(self):
        loss = cross_entropy(Tensor(np.array([[[0.7], [0.7]]])), np.array([[1]]))
        assert abs(loss.item() - math.log(2)) < 1e-12

    def test_confident_and_correct_is_small(self):
        scores = np.full((1, 3, 2), -20.0)
        scores[0, 2, :] = 20.0
        assert cross_entropy(Tensor(scores), np.array([[2, 2]])).item() < 1e-15

    def test_shape_checks(self):
        with pytest.raises(ShapeError):
            cross_entropy(Tensor(np.zeros((2, 3, 4))), np.zeros((2, 5), dtype=int))
        with pytest.raises(ValueError):
            cross_entropy(Tensor(np.zeros((1, 3, 1))), np.array([[3]]))


def toy_examples(vocab, L=6, d=4, seed=0, count=6):
    rng = np.random.default_rng(seed)
    targets = ["Male", "Female", "¬Male", "∃ hasChild.Male", "Parent", "Male ⊓ Parent"]
    out = []
    for i in range(count):
        p = LearningProblem(["a"], ["b"], parse_expression(targets[i % len(targets)]))
        out.append(Example(rng.standard_normal((3, d)), rng.standard_normal((2 + i % 3, d)),
                           encode_target(p, vocab, L)))
    return out


class TestTargets:
    def test_padding(self, toy_kb):
        vocab = build_vocabulary(toy_kb)
        ids = encode_target(LearningProblem(["a"], ["b"], parse_expression("¬Male")), vocab, 4)
        assert ids.tolist() == [vocab.index["¬"], vocab.index["Male"], vocab.pad_id, vocab.pad_id]

    def test_too_long(self, toy_kb):
        vocab = build_vocabulary(toy_kb)
        with pytest.raises(DataError):
            encode_target(LearningProblem(["a"], ["b"], parse_expression("Male ⊓ Female")), vocab, 4)

    def test_prepare_uses_embeddings(self, toy_kb):
        vocab = build_vocabulary(toy_kb)
        table = EmbeddingTable(toy_kb.individuals, (), np.eye(4), np.zeros((0, 4)))
        (ex,) = prepare_examples([LearningProblem(["carl"], ["anna", "dora"], parse_expression("Male"))],
                                 table, vocab, 3)
        assert np.array_equal(ex.pos, np.eye(4)[[2]]) and np.array_equal(ex.neg, np.eye(4)[[0, 3]])

    def test_batches_avoid_singletons(self):
        chunks = _batches(np.arange(9), 4)
        assert [len(c) for c in chunks] == [4, 5]
        assert np.array_equal(np.concatenate(chunks), np.arange(9))


class TestTrain:
    @pytest.mark.parametrize("arch", ["st", "gru", "lstm"])
    def test_overfits_tiny_set(self, arch, toy_kb):
        vocab = build_vocabulary(toy_kb)
        examples = toy_examples(vocab)
        model = build_model(ModelConfig(arch, 4, vocab.num_classes, 6, heads=2, inducing_points=4, hidden=16), seed=0)
        result = train(model, examples, TrainConfig(epochs=150, batch_size=6, lr=1e-2))
        assert result.history[-1].loss < 0.2 * result.history[0].loss
        assert result.history[-1].hard_acc == 1.0

    def test_deterministic(self, toy_kb):
        vocab = build_vocabulary(toy_kb)
        examples = toy_examples(vocab)
        runs = []
        for _ in range(2):
            model = build_model(ModelConfig("st", 4, vocab.num_classes, 6, heads=2, inducing_points=4), seed=1)
            train(model, examples, TrainConfig(epochs=3, batch_size=4, lr=1e-2, seed=5))
            runs.append(predict_scores(model, examples))
        assert np.array_equal(*runs)

    def test_non_finite_loss(self, toy_kb):
        vocab = build_vocabulary(toy_kb)
        examples = toy_examples(vocab)
        examples[0].pos[0, 0] = np.nan
        model = build_model(ModelConfig("st", 4, vocab.num_classes, 6, heads=2, inducing_points=4), seed=1)
        with pytest.raises(NumericError, match="epoch 1"):
            train(model, examples, TrainConfig(epochs=2, batch_size=6))

    def test_empty(self, toy_kb):
        model = build_model(ModelConfig("st", 4, 17, 6, heads=2), seed=1)
        with pytest.raises(DataError):
            train(model, [], TrainConfig(epochs=1))

    def test_metrics_csv(self, tmp_path, toy_kb):
        vocab = build_vocabulary(toy_kb)
        model = build_model(ModelConfig("gru", 4, vocab.num_classes, 6, hidden=8), seed=0)
        result = train(model, toy_examples(vocab), TrainConfig(epochs=2, batch_size=3))
        path = tmp_path / "m.csv"
        write_metrics_csv(result.history, path)
        lines = path.read_text(encoding="utf-8").splitlines()
        assert lines[0] == "epoch,loss,soft_acc,hard_acc"
        assert len(lines) == 3 and lines[1].startswith("1,")


class TestCheckpoint:
    @pytest.mark.parametrize("arch", ["st", "lstm"])
    def test_round_trip(self, arch, tmp_path, toy_kb):
        vocab = build_vocabulary(toy_kb)
        examples = toy_examples(vocab)
        model = build_model(ModelConfig(arch, 4, vocab.num_classes, 6, heads=2, inducing_points=4, hidden=8), seed=0)
        train(model, examples, TrainConfig(epochs=2, batch_size=3))
        path = tmp_path / "model.json"
        save_checkpoint(model, path, vocab)
        again, fingerprint = load_checkpoint(path, vocab)
        assert fingerprint == vocab.fingerprint()
        assert np.array_equal(predict_scores(again, examples), predict_scores(model, examples))

    def test_vocabulary_mismatch(self, tmp_path, toy_kb):
        from nces.kb import KnowledgeBase

        vocab = build_vocabulary(toy_kb)
        model = build_model(ModelConfig("st", 4, vocab.num_classes, 6, heads=2), seed=0)
        save_checkpoint(model, tmp_path / "m.json", vocab)
        other = build_vocabulary(KnowledgeBase(classes=("X",)))
        with pytest.raises(DataError):
            load_checkpoint(tmp_path / "m.json", other)

    def test_not_a_checkpoint(self, tmp_path):
        (tmp_path / "x.json").write_text('{"format": "other"}', encoding="utf-8")
        with pytest.raises(DataError):
            load_checkpoint(tmp_path / "x.json")
