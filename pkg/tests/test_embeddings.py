import numpy as np
import pytest

from nces.datagen import LearningProblem
from nces.embeddings import (
    EmbeddingTable,
    corrupt,
    kb_to_triples,
    load_embeddings,
    lookup_examples,
    margin_loss,
    save_embeddings,
    train_transe,
    transe_distances,
)
from nces.errors import DataError, ParseError
from nces.kb import KnowledgeBase
from nces.synthetic import random_kb


class TestTriples:
    def test_toy(self, toy_kb):
        store = kb_to_triples(toy_kb)
        named = set(store.named())
        assert ("anna", "hasChild", "carl") in named
        assert ("bob", "type", "Male") in named
        assert ("Parent", "subclassof", "Person") in named
        assert len(store) == 9 + 3
        assert store.entities[:4] == toy_kb.individuals
        assert store.predicates == ("hasChild", "type", "subclassof")

    def test_empty_store_rejected(self):
        store = kb_to_triples(KnowledgeBase(individuals=("a",), classes=("A",)))
        with pytest.raises(DataError):
            train_transe(store)


class TestTransE:
    def test_zero_epochs_gives_unit_init(self, toy_kb):
        table = train_transe(kb_to_triples(toy_kb), d=8, epochs=0, seed=3)
        assert table.history == []
        assert np.allclose(np.linalg.norm(table.entity_vectors, axis=1), 1.0)

    def test_unit_norm_and_finite(self, toy_kb):
        table = train_transe(kb_to_triples(toy_kb), d=8, epochs=5, seed=3)
        assert np.all(np.isfinite(table.entity_vectors)) and np.all(np.isfinite(table.relation_vectors))
        assert np.allclose(np.linalg.norm(table.entity_vectors, axis=1), 1.0)

    def test_deterministic(self, toy_kb):
        a = train_transe(kb_to_triples(toy_kb), d=8, epochs=5, seed=3)
        b = train_transe(kb_to_triples(toy_kb), d=8, epochs=5, seed=3)
        assert np.array_equal(a.entity_vectors, b.entity_vectors)

    def test_loss_decreases(self):
        kb = random_kb(n_individuals=30, seed=1)
        store = kb_to_triples(kb)
        table = train_transe(store, d=20, epochs=60, seed=0, batch_size=32)
        assert np.mean(table.history[-5:]) < 0.6 * np.mean(table.history[:3])
        # true triples end up closer than random ones on average
        rng = np.random.default_rng(0)
        known = {tuple(t) for t in store.triples.tolist()}
        neg = corrupt(store.triples, len(store.entities), rng, known)
        assert margin_loss(table.entity_vectors, table.relation_vectors, store.triples, neg, 0.0) < 0.2

    def test_distance_formula(self):
        ent = np.array([[0.0, 0.0], [3.0, 4.0]])
        rel = np.array([[0.0, 0.0]])
        assert transe_distances(ent, rel, np.array([[0, 0, 1]])) == pytest.approx([5.0])


class TestCorrupt:
    def test_filtered_and_one_sided(self, toy_kb):
        store = kb_to_triples(toy_kb)
        known = {tuple(t) for t in store.triples.tolist()}
        rng = np.random.default_rng(0)
        for _ in range(20):
            neg = corrupt(store.triples, len(store.entities), rng, known, max_tries=50)
            same = neg == store.triples
            assert np.all(same[:, 1])
            assert np.all(same[:, 0] | same[:, 2])
            assert not any(tuple(t) in known for t in neg.tolist())


class TestFiles:
    def test_lossless_round_trip(self, tmp_path, toy_kb):
        table = train_transe(kb_to_triples(toy_kb), d=6, epochs=3, seed=1)
        path = tmp_path / "emb.txt"
        save_embeddings(table, path)
        again = load_embeddings(path)
        assert again.entities == table.entities and again.relations == table.relations
        assert np.array_equal(again.entity_vectors, table.entity_vectors)
        assert np.array_equal(again.relation_vectors, table.relation_vectors)
        assert path.read_text(encoding="utf-8").splitlines()[0] == f"d 6 {len(table.entities)}"

    def test_header_without_count(self, tmp_path):
        path = tmp_path / "emb.txt"
        path.write_text("d 2\na 0.5 1\nb -1 2e-3\n", encoding="utf-8")
        table = load_embeddings(path)
        assert table.entities == ("a", "b") and table.relations == ()
        assert table.vector("b")[1] == 0.002

    def test_malformed(self, tmp_path):
        path = tmp_path / "emb.txt"
        path.write_text("d 2\na 0.5\n", encoding="utf-8")
        with pytest.raises(ParseError, match="line 2"):
            load_embeddings(path)


class TestLookup:
    def test_rows_follow_example_order(self):
        ent = np.arange(6, dtype=float).reshape(3, 2)
        table = EmbeddingTable(("a", "b", "c"), (), ent, np.zeros((0, 2)))
        pos, neg = lookup_examples(table, LearningProblem(["c", "a"], ["b"]))
        assert np.array_equal(pos, ent[[2, 0]]) and np.array_equal(neg, ent[[1]])

    def test_unknown_and_empty(self):
        table = EmbeddingTable(("a", "b"), (), np.eye(2), np.zeros((0, 2)))
        with pytest.raises(DataError):
            lookup_examples(table, LearningProblem(["zz"], ["a"]))
        with pytest.raises(DataError):
            lookup_examples(table, LearningProblem([], ["a"]))
