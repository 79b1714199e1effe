import numpy as np
import pytest
from hypothesis import strategies as st

from nces.expressions import And, Atomic, Bottom, Exists, Forall, Not, Or, Top
from nces.kb import KnowledgeBase, parse_kb

TOY_KB = """\
# a tiny family KB
class Person
class Male
class Female
class Parent
role hasChild
type anna Female
type anna Parent
type bob Male
type bob Parent
type carl Male
type dora Female
role_assert anna hasChild carl
role_assert bob hasChild carl
role_assert bob hasChild dora
sub Parent Person
sub Male Person
sub Female Person
"""


@pytest.fixture
def toy_kb():
    return parse_kb(TOY_KB, name="toy")


# ---------------------------------------------------------------------------
# independent oracle: evaluate an expression one individual at a time


def naive_extension(kb: KnowledgeBase, name: str) -> set:
    """Individuals typed ``name`` directly or via a chain of atomic subclass axioms."""
    subs = {name}
    changed = True
    while changed:
        changed = False
        for sub, sup in kb.tbox:
            if isinstance(sub, Atomic) and isinstance(sup, Atomic) and sup.name in subs and sub.name not in subs:
                subs.add(sub.name)
                changed = True
    return {a for a, c in kb.abox_types if c in subs}


def naive_holds(kb: KnowledgeBase, expr, a: str) -> bool:
    if isinstance(expr, Top):
        return True
    if isinstance(expr, Bottom):
        return False
    if isinstance(expr, Atomic):
        return a in naive_extension(kb, expr.name)
    if isinstance(expr, Not):
        return not naive_holds(kb, expr.child, a)
    if isinstance(expr, And):
        return naive_holds(kb, expr.left, a) and naive_holds(kb, expr.right, a)
    if isinstance(expr, Or):
        return naive_holds(kb, expr.left, a) or naive_holds(kb, expr.right, a)
    succ = [b for s, r, b in kb.abox_roles if s == a and r == expr.role]
    if isinstance(expr, Exists):
        return any(naive_holds(kb, expr.child, b) for b in succ)
    if isinstance(expr, Forall):
        return all(naive_holds(kb, expr.child, b) for b in succ)
    raise TypeError(expr)


def naive_retrieve(kb: KnowledgeBase, expr) -> set:
    return {a for a in kb.individuals if naive_holds(kb, expr, a)}


# ---------------------------------------------------------------------------
# hypothesis strategies


def expressions(classes, roles, max_leaves=6):
    leaves = st.one_of(st.just(Top()), st.just(Bottom()), st.sampled_from(list(classes)).map(Atomic))

    def extend(children):
        options = [
            children.map(Not),
            st.tuples(children, children).map(lambda t: And(*t)),
            st.tuples(children, children).map(lambda t: Or(*t)),
        ]
        if roles:
            options += [
                st.tuples(st.sampled_from(list(roles)), children).map(lambda t: Exists(*t)),
                st.tuples(st.sampled_from(list(roles)), children).map(lambda t: Forall(*t)),
            ]
        return st.one_of(*options)

    return st.recursive(leaves, extend, max_leaves=max_leaves)


@st.composite
def small_kbs(draw, max_individuals=12, max_classes=4, max_roles=2):
    n_ind = draw(st.integers(1, max_individuals))
    n_cls = draw(st.integers(1, max_classes))
    n_rol = draw(st.integers(0, max_roles))
    inds = [f"a{i}" for i in range(n_ind)]
    classes = [f"K{i}" for i in range(n_cls)]
    roles = [f"p{i}" for i in range(n_rol)]
    types = draw(st.frozensets(st.tuples(st.sampled_from(inds), st.sampled_from(classes)), max_size=2 * n_ind))
    edges = frozenset()
    if roles:
        edges = draw(st.frozensets(st.tuples(st.sampled_from(inds), st.sampled_from(roles), st.sampled_from(inds)),
                                   max_size=2 * n_ind))
    pairs = draw(st.lists(st.tuples(st.sampled_from(classes), st.sampled_from(classes)), max_size=3))
    tbox = tuple((Atomic(a), Atomic(b)) for a, b in pairs if a != b)
    return KnowledgeBase(tbox, types, edges, tuple(inds), tuple(classes), tuple(roles))


@st.composite
def kb_and_expression(draw, **kw):
    kb = draw(small_kbs(**kw))
    expr = draw(expressions(kb.classes, kb.roles))
    return kb, expr


def random_matrix(rng, *shape):
    return rng.standard_normal(shape)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
