"""Random small knowledge bases for tests and desk-scale experiments."""
from __future__ import annotations

import numpy as np

from .expressions import Atomic
from .kb import KnowledgeBase


def random_kb(n_individuals: int = 50, n_classes: int = 8, n_roles: int = 2, seed: int = 0,
              n_axioms: int = None, types_per_individual: tuple[int, int] = (1, 2),
              successors_per_role: tuple[int, int] = (0, 2)) -> KnowledgeBase:
    """A KB with a shallow random atomic hierarchy and random ABox.

    Subclass axioms only point from later classes to earlier ones, so the
    hierarchy is acyclic.  Every individual gets at least one type.
    """
    rng = np.random.default_rng(seed)
    individuals = [f"i{k:03d}" for k in range(n_individuals)]
    classes = [f"C{k}" for k in range(n_classes)]
    roles = [f"r{k}" for k in range(n_roles)]
    if n_axioms is None:
        n_axioms = n_classes // 2

    axioms = set()
    for _ in range(n_axioms * 4):
        if len(axioms) >= n_axioms or n_classes < 2:
            break
        sub = int(rng.integers(1, n_classes))
        sup = int(rng.integers(0, sub))
        axioms.add((sub, sup))
    tbox = tuple((Atomic(classes[a]), Atomic(classes[b])) for a, b in sorted(axioms))

    types = set()
    lo, hi = types_per_individual
    for ind in individuals:
        k = int(rng.integers(lo, hi + 1)) if n_classes else 0
        for c in rng.choice(n_classes, size=min(k, n_classes), replace=False):
            types.add((ind, classes[int(c)]))

    edges = set()
    lo, hi = successors_per_role
    for ind in individuals:
        for r in roles:
            for _ in range(int(rng.integers(lo, hi + 1))):
                edges.add((ind, r, individuals[int(rng.integers(n_individuals))]))

    return KnowledgeBase(
        tbox=tbox,
        abox_types=frozenset(types),
        abox_roles=frozenset(edges),
        individuals=tuple(individuals),
        classes=tuple(classes),
        roles=tuple(roles),
        name=f"synthetic-{seed}",
    )


def hierarchy_kb(n_individuals: int = 50, n_roots: int = 2, leaves_per_root: int = 3, n_roles: int = 2,
                 seed: int = 0, successors_per_role: tuple[int, int] = (0, 2),
                 role_noise: float = 0.2) -> KnowledgeBase:
    """A KB whose classes form a two-level tree over disjoint leaves.

    Every individual is asserted into exactly one leaf and reaches its
    parent through the subclass axioms.  Role ``r<k>`` links an individual of
    leaf ``j`` mostly to individuals of leaf ``(j + k + 1) mod #leaves``; a
    fraction ``role_noise`` of the edges goes to a uniform individual
    instead.
    """
    rng = np.random.default_rng(seed)
    n_leaves = n_roots * leaves_per_root
    individuals = [f"i{k:03d}" for k in range(n_individuals)]
    classes = [f"C{k}" for k in range(n_roots + n_leaves)]
    roles = [f"r{k}" for k in range(n_roles)]
    tbox = tuple((Atomic(classes[n_roots + j]), Atomic(classes[j // leaves_per_root]))
                 for j in range(n_leaves))

    leaf_of = np.arange(n_individuals) % n_leaves
    rng.shuffle(leaf_of)
    members = [np.flatnonzero(leaf_of == j) for j in range(n_leaves)]
    types = {(ind, classes[n_roots + int(leaf_of[i])]) for i, ind in enumerate(individuals)}

    edges = set()
    lo, hi = successors_per_role
    for i, ind in enumerate(individuals):
        for k, r in enumerate(roles):
            pool = members[(int(leaf_of[i]) + k + 1) % n_leaves]
            for _ in range(int(rng.integers(lo, hi + 1))):
                if rng.random() < role_noise or len(pool) == 0:
                    j = int(rng.integers(n_individuals))
                else:
                    j = int(pool[rng.integers(len(pool))])
                edges.add((ind, r, individuals[j]))

    return KnowledgeBase(
        tbox=tbox,
        abox_types=frozenset(types),
        abox_roles=frozenset(edges),
        individuals=tuple(individuals),
        classes=tuple(classes),
        roles=tuple(roles),
        name=f"hierarchy-{seed}",
    )
