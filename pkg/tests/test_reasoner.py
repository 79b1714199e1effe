import pytest
from hypothesis import given, settings

from nces.errors import UnknownNameError
from nces.expressions import And, Atomic, Bottom, Exists, Forall, Not, Or, Top, parse_expression
from nces.reasoner import atomic_extension, reasoner_for, retrieve_instances

from conftest import kb_and_expression, naive_retrieve


def names(kb, text):
    return set(retrieve_instances(kb, parse_expression(text, kb)).members)


class TestToyKB:
    def test_atomic_closed_under_subclass(self, toy_kb):
        assert set(atomic_extension(toy_kb, "Person").members) == {"anna", "bob", "carl", "dora"}
        assert names(toy_kb, "Male") == {"bob", "carl"}

    def test_exists(self, toy_kb):
        assert names(toy_kb, "∃ hasChild.Female") == {"bob"}
        assert names(toy_kb, "∃ hasChild.⊤") == {"anna", "bob"}

    def test_forall_is_vacuous_without_successors(self, toy_kb):
        # carl and dora have no children
        assert names(toy_kb, "∀ hasChild.Male") == {"anna", "carl", "dora"}
        assert names(toy_kb, "∀ hasChild.⊥") == {"carl", "dora"}

    def test_closed_world_negation(self, toy_kb):
        assert names(toy_kb, "¬Parent") == {"carl", "dora"}
        assert names(toy_kb, "¬Male ⊓ ¬Female") == set()

    def test_top_bottom(self, toy_kb):
        inst = retrieve_instances(toy_kb, Top())
        assert len(inst) == inst.universe_size == 4
        assert len(retrieve_instances(toy_kb, Bottom())) == 0

    def test_unknown_names(self, toy_kb):
        with pytest.raises(UnknownNameError):
            retrieve_instances(toy_kb, Atomic("Robot"))
        with pytest.raises(UnknownNameError):
            retrieve_instances(toy_kb, Exists("likes", Top()))

    def test_member_list_follows_kb_order(self, toy_kb):
        r = reasoner_for(toy_kb)
        assert r.member_list(r.mask(Atomic("Person"))) == ["anna", "bob", "carl", "dora"]

    def test_reasoner_is_shared(self, toy_kb):
        assert reasoner_for(toy_kb) is reasoner_for(toy_kb)


class TestOracle:
    @settings(max_examples=300, deadline=None)
    @given(kb_and_expression())
    def test_matches_per_individual_evaluation(self, case):
        kb, expr = case
        assert set(retrieve_instances(kb, expr).members) == naive_retrieve(kb, expr)


class TestAlgebra:
    @settings(max_examples=200, deadline=None)
    @given(kb_and_expression())
    def test_identities(self, case):
        kb, c = case
        r = reasoner_for(kb)
        m = r.mask(c)
        assert r.mask(Not(Not(c))) == m
        assert r.mask(And(c, Not(c))) == 0
        assert r.mask(Or(c, Not(c))) == r.full
        assert r.mask(And(c, Top())) == m
        assert r.mask(Or(c, Bottom())) == m

    @settings(max_examples=200, deadline=None)
    @given(kb_and_expression(max_roles=2))
    def test_quantifier_duality(self, case):
        kb, c = case
        r = reasoner_for(kb)
        for role in kb.roles:
            assert r.mask(Not(Exists(role, c))) == r.mask(Forall(role, Not(c)))
