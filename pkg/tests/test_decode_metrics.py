from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nces.datagen import LearningProblem
from nces.decode import decode, decode_batch, ensemble
from nces.errors import ShapeError, VocabularyError
from nces.expressions import Bottom, Top, parse_expression
from nces.kb import build_vocabulary
from nces.metrics import (
    EvalRecord,
    format_report,
    hard_accuracy,
    hard_accuracy_tokens,
    semantic_quality,
    soft_accuracy,
    soft_accuracy_tokens,
    summarize,
)

from conftest import expressions


def forcing(vocab, atoms, L=8):
    """Scores whose argmax spells ``atoms`` followed by PAD."""
    scores = np.zeros((vocab.num_classes, L))
    ids = [vocab.index[a] for a in atoms] + [vocab.pad_id] * (L - len(atoms))
    scores[ids, np.arange(L)] = 1.0
    return scores


@pytest.fixture
def vocab(toy_kb):
    return build_vocabulary(toy_kb)


class TestDecode:
    def test_top(self, vocab):
        r = decode(forcing(vocab, ["⊤"]), vocab)
        assert r.expression_text == "⊤" and r.parse_ok and r.expression == Top()

    def test_conjunction(self, vocab):
        r = decode(forcing(vocab, ["Male", " ", "⊓", " ", "Parent"]), vocab)
        assert r.expression_text == "Male ⊓ Parent"
        assert r.expression == parse_expression("Male ⊓ Parent")

    def test_ungrammatical(self, vocab):
        r = decode(forcing(vocab, ["⊓"]), vocab)
        assert r.expression_text == "⊓" and not r.parse_ok and r.expression is None

    def test_role_in_class_position(self, vocab):
        assert not decode(forcing(vocab, ["hasChild"]), vocab).parse_ok

    def test_truncates_at_first_pad(self, vocab):
        scores = forcing(vocab, ["Male"])
        scores[vocab.index["Female"], 3] = 5.0  # after the PAD, ignored
        r = decode(scores, vocab)
        assert r.token_ids == (vocab.index["Male"],)
        assert vocab.pad_id not in r.token_ids

    def test_ties_go_to_smallest_id(self, vocab):
        r = decode(np.zeros((vocab.num_classes, 2)), vocab)
        assert r.token_ids == (0, 0) and r.expression_text == "PersonPerson"

    def test_shape(self, vocab):
        with pytest.raises(ShapeError):
            decode(np.zeros((3, 4)), vocab)

    def test_batch(self, vocab):
        batch = np.stack([forcing(vocab, ["⊥"]), forcing(vocab, ["¬", "Male"])])
        assert [r.expression for r in decode_batch(batch, vocab)] == [Bottom(), parse_expression("¬Male")]


class TestEnsemble:
    def test_identity(self, vocab):
        s = np.random.default_rng(0).standard_normal((vocab.num_classes, 6))
        assert np.array_equal(ensemble([s, s]), s)
        for k in (2, 3, 5):
            assert decode(ensemble([s] * k), vocab) == decode(s, vocab)

    def test_mean(self):
        assert ensemble([np.array([[2.0]]), np.array([[0.0]])])[0, 0] == 1.0

    def test_margin_fixture(self):
        # A prefers x by 1, B prefers y by 3; the mean prefers y by 1
        a = np.array([[1.0], [0.0]])  # rows: x, y
        b = np.array([[0.0], [3.0]])
        avg = ensemble([a, b])
        assert np.array_equal(avg, [[0.5], [1.5]])
        assert avg.argmax(axis=0)[0] == 1

    def test_errors(self):
        with pytest.raises(ValueError):
            ensemble([np.zeros((2, 2))])
        with pytest.raises(ShapeError):
            ensemble([np.zeros((2, 2)), np.zeros((2, 3))])
        with pytest.raises(VocabularyError):
            ensemble([np.zeros((2, 2))] * 2, fingerprints=["a", "b"])


class TestSyntacticAccuracy:
    def test_hand_fixtures(self):
        t, p = parse_expression("A ⊓ B"), parse_expression("B ⊓ A")
        assert soft_accuracy(t, p) == 1.0
        assert Fraction(hard_accuracy(t, p)).limit_denominator(100) == Fraction(3, 5)
        assert hard_accuracy(t, t) == soft_accuracy(t, t) == 1.0
        assert soft_accuracy(parse_expression("A"), parse_expression("B")) == 0.0

    def test_prefix(self):
        target = ["∃", " ", "r", ".", "A"]
        assert Fraction(hard_accuracy_tokens(target, target[:2])).limit_denominator(100) == Fraction(2, 5)

    def test_exact_rationals(self):
        # |{A,⊓,B,' '} ∩ {A,⊔,B,' '}| / |union| = 3/5
        t, p = parse_expression("A ⊓ B"), parse_expression("A ⊔ B")
        assert Fraction(soft_accuracy(t, p)).limit_denominator(100) == Fraction(3, 5)
        assert Fraction(hard_accuracy(t, p)).limit_denominator(100) == Fraction(4, 5)

    @settings(max_examples=200)
    @given(expressions(["A", "B"], ["r"]), expressions(["A", "B"], ["r"]))
    def test_properties(self, t, p):
        for fn in (soft_accuracy, hard_accuracy):
            v = fn(t, p)
            assert 0.0 <= v <= 1.0
            assert v == fn(p, t)
        assert (hard_accuracy(t, p) == 1.0) == (str(t) == str(p))
        assert soft_accuracy(t, p) >= 0.0

    @given(st.lists(st.sampled_from("abc"), max_size=6), st.lists(st.sampled_from("abc"), max_size=6))
    def test_token_level(self, t, p):
        assert (soft_accuracy_tokens(t, p) == 1.0) == (set(t) == set(p))
        assert (hard_accuracy_tokens(t, p) == 1.0) == (t == p)


class TestSemanticQuality:
    def problem(self):
        return LearningProblem(["bob", "carl"], ["anna", "dora"], parse_expression("Male"))

    def test_target_scores_one(self, toy_kb):
        q = semantic_quality(toy_kb, self.problem(), parse_expression("Male"))
        assert (q.f1, q.accuracy, q.ok) == (1.0, 1.0, True)

    def test_top(self, toy_kb):
        q = semantic_quality(toy_kb, self.problem(), Top())
        # recall 1, precision 2/4
        assert q.f1 == pytest.approx(2 * 0.5 * 1 / 1.5)
        assert q.accuracy == 0.5

    def test_bottom(self, toy_kb):
        assert semantic_quality(toy_kb, self.problem(), Bottom()).f1 == 0.0

    def test_unparsed(self, toy_kb):
        q = semantic_quality(toy_kb, self.problem(), None)
        assert (q.f1, q.accuracy, q.ok) == (0.0, 0.0, False)

    def test_invariant_under_equivalent_prediction(self, toy_kb):
        a = semantic_quality(toy_kb, self.problem(), parse_expression("Male"))
        b = semantic_quality(toy_kb, self.problem(), parse_expression("Male ⊓ Person ⊔ Male ⊓ Male"))
        assert a == b


class TestReport:
    def records(self):
        return [EvalRecord("A", "A", 1.0, 1.0, 0.5), EvalRecord("B", "C", 0.5, 0.75, 0.25),
                EvalRecord("C", "", 0.0, 0.5, 0.0, parse_ok=False)]

    def test_aggregate_by_hand(self):
        stats = summarize(self.records())
        assert stats["f1"][0] == pytest.approx(0.5)
        assert stats["f1"][1] == pytest.approx(np.sqrt(((0.5) ** 2 + 0 + 0.5 ** 2) / 3))
        assert stats["accuracy"][0] == pytest.approx(0.75)
        assert stats["runtime_seconds"][0] == pytest.approx(0.25)

    def test_format(self):
        text = format_report(self.records())
        lines = text.splitlines()
        assert lines[0] == "target,predicted,f1,accuracy,runtime_seconds"
        assert lines[1] == "A,A,1.000000,1.000000,0.500000"
        assert lines[-2] == "mean,,0.500000,0.750000,0.250000"
        assert lines[-1].startswith("std,,")

    def test_quoting(self):
        text = format_report([EvalRecord('x,"y"', "z", 1.0, 1.0)])
        assert text.splitlines()[1].startswith('"x,""y""",z,')
