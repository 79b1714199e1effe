"""Closed-world instance retrieval by set operations.

Instance sets are held as Python integers used as bitsets over the KB's
individual ordering (bit ``i`` set iff ``kb.individuals[i]`` is a member).
Atomic extensions are closed under atomic-to-atomic subclass axioms only;
other axioms are ignored.
"""
from __future__ import annotations

import threading
import weakref
from dataclasses import dataclass

from .errors import UnknownNameError
from .expressions import And, Atomic, Bottom, ConceptExpr, Exists, Forall, Not, Or, Top
from .kb import KnowledgeBase


@dataclass(frozen=True)
class InstanceSet:
    members: frozenset[str]
    universe_size: int

    def __len__(self):
        return len(self.members)

    def __contains__(self, item):
        return item in self.members


class Reasoner:
    def __init__(self, kb: KnowledgeBase):
        self.kb = kb
        self.n = len(kb.individuals)
        self.full = (1 << self.n) - 1
        index = kb.individual_index

        direct = {c: 0 for c in kb.classes}
        for a, c in kb.abox_types:
            direct[c] |= 1 << index[a]

        # subclass graph restricted to atomic-to-atomic axioms: sup -> [subs]
        subs: dict[str, list[str]] = {c: [] for c in kb.classes}
        for sub, sup in kb.tbox:
            if isinstance(sub, Atomic) and isinstance(sup, Atomic):
                subs[sup.name].append(sub.name)

        # all extensions are precomputed so retrieval never mutates state
        self._extensions: dict[str, int] = {}
        for c in kb.classes:
            mask, seen, stack = 0, {c}, [c]
            while stack:
                cur = stack.pop()
                mask |= direct[cur]
                for s in subs[cur]:
                    if s not in seen:
                        seen.add(s)
                        stack.append(s)
            self._extensions[c] = mask

        # role -> list of (subject index, successor bitmask)
        succ: dict[str, dict[int, int]] = {r: {} for r in kb.roles}
        for a, r, b in kb.abox_roles:
            ia = index[a]
            succ[r][ia] = succ[r].get(ia, 0) | (1 << index[b])
        self._successors = {r: sorted(d.items()) for r, d in succ.items()}

    def atomic_mask(self, name: str) -> int:
        try:
            return self._extensions[name]
        except KeyError:
            raise UnknownNameError(f"unknown class {name!r}") from None

    def _role(self, role: str):
        try:
            return self._successors[role]
        except KeyError:
            raise UnknownNameError(f"unknown role {role!r}") from None

    def mask(self, expr: ConceptExpr) -> int:
        if isinstance(expr, Atomic):
            return self.atomic_mask(expr.name)
        if isinstance(expr, Top):
            return self.full
        if isinstance(expr, Bottom):
            return 0
        if isinstance(expr, Not):
            return self.full & ~self.mask(expr.child)
        if isinstance(expr, And):
            return self.mask(expr.left) & self.mask(expr.right)
        if isinstance(expr, Or):
            return self.mask(expr.left) | self.mask(expr.right)
        if isinstance(expr, Exists):
            pairs = self._role(expr.role)
            filler = self.mask(expr.child)
            out = 0
            for i, successors in pairs:
                if successors & filler:
                    out |= 1 << i
            return out
        if isinstance(expr, Forall):
            pairs = self._role(expr.role)
            filler = self.mask(expr.child)
            # individuals without successors satisfy ∀ vacuously
            out = self.full
            for i, successors in pairs:
                if successors & ~filler:
                    out &= ~(1 << i)
            return out
        raise TypeError(f"not a class expression: {expr!r}")

    def members(self, mask: int) -> frozenset[str]:
        inds = self.kb.individuals
        return frozenset(inds[i] for i in range(self.n) if mask >> i & 1)

    def member_list(self, mask: int) -> list[str]:
        """Members in KB individual order."""
        inds = self.kb.individuals
        return [inds[i] for i in range(self.n) if mask >> i & 1]

    def retrieve(self, expr: ConceptExpr) -> InstanceSet:
        return InstanceSet(self.members(self.mask(expr)), self.n)


_reasoners: "weakref.WeakKeyDictionary[KnowledgeBase, Reasoner]" = weakref.WeakKeyDictionary()
_lock = threading.Lock()


def reasoner_for(kb: KnowledgeBase) -> Reasoner:
    """Shared, lazily built reasoner for ``kb``."""
    with _lock:
        reasoner = _reasoners.get(kb)
        if reasoner is None:
            reasoner = _reasoners[kb] = Reasoner(kb)
        return reasoner


def retrieve_instances(kb: KnowledgeBase, expr: ConceptExpr) -> InstanceSet:
    return reasoner_for(kb).retrieve(expr)


def atomic_extension(kb: KnowledgeBase, class_name: str) -> InstanceSet:
    r = reasoner_for(kb)
    return InstanceSet(r.members(r.atomic_mask(class_name)), r.n)
