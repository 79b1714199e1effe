"""Knowledge bases in a small line-based text format.

One statement per line::

    class <Name>                   declare an atomic class
    role <Name>                    declare a role
    type <ind> <Class>             class assertion C(a)
    role_assert <ind> <role> <ind> role assertion R(a,b)  (also: role <ind> <role> <ind>)
    sub <expr> <expr>              TBox axiom C ⊑ D, canonical syntax

Lines starting with ``#`` and blank lines are ignored.  Class and role
assertions implicitly declare the names they mention; axioms may only use
declared names.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

from .errors import ParseError, UnknownNameError, VocabularyError
from .expressions import (
    NAME_RE,
    SPECIAL_ATOMS,
    ConceptExpr,
    class_names,
    expression_atoms,
    parse_atoms,
    parse_prefix,
    render_expression,
    role_names,
    split_atoms,
)


@dataclass(frozen=True, eq=False)
class KnowledgeBase:
    tbox: tuple[tuple[ConceptExpr, ConceptExpr], ...] = ()
    abox_types: frozenset[tuple[str, str]] = frozenset()
    abox_roles: frozenset[tuple[str, str, str]] = frozenset()
    individuals: tuple[str, ...] = ()
    classes: tuple[str, ...] = ()
    roles: tuple[str, ...] = ()
    name: str = field(default="kb", compare=False)

    def __post_init__(self):
        for label, names in (("individual", self.individuals), ("class", self.classes), ("role", self.roles)):
            if len(set(names)) != len(names):
                raise VocabularyError(f"duplicate {label} names")
        inds, classes, roles = set(self.individuals), set(self.classes), set(self.roles)
        for a, c in self.abox_types:
            if a not in inds:
                raise UnknownNameError(f"unknown individual {a!r}")
            if c not in classes:
                raise UnknownNameError(f"unknown class {c!r}")
        for a, r, b in self.abox_roles:
            if a not in inds or b not in inds:
                raise UnknownNameError(f"unknown individual in ({a}, {r}, {b})")
            if r not in roles:
                raise UnknownNameError(f"unknown role {r!r}")
        for sub, sup in self.tbox:
            for expr in (sub, sup):
                missing = (class_names(expr) - classes) | (role_names(expr) - roles)
                if missing:
                    raise UnknownNameError(f"undeclared name(s) in axiom: {sorted(missing)}")

    @cached_property
    def class_set(self) -> frozenset[str]:
        return frozenset(self.classes)

    @cached_property
    def role_set(self) -> frozenset[str]:
        return frozenset(self.roles)

    @cached_property
    def individual_index(self) -> dict[str, int]:
        return {name: i for i, name in enumerate(self.individuals)}

    def counts(self) -> dict[str, int]:
        return {
            "individuals": len(self.individuals),
            "classes": len(self.classes),
            "roles": len(self.roles),
            "tbox": len(self.tbox),
            "abox": len(self.abox_types) + len(self.abox_roles),
        }

    def to_text(self) -> str:
        """Serialise in the text format accepted by :func:`load_kb`."""
        lines = [f"class {c}" for c in self.classes]
        lines += [f"role {r}" for r in self.roles]
        order = self.individual_index
        for a, c in sorted(self.abox_types, key=lambda t: (order[t[0]], self.classes.index(t[1]))):
            lines.append(f"type {a} {c}")
        for a, r, b in sorted(self.abox_roles, key=lambda t: (order[t[0]], self.roles.index(t[1]), order[t[2]])):
            lines.append(f"role_assert {a} {r} {b}")
        for sub, sup in self.tbox:
            lines.append(f"sub {render_expression(sub)} {render_expression(sup)}")
        return "\n".join(lines) + "\n"


def _ordered_unique(items: Iterable[str]) -> list[str]:
    return list(dict.fromkeys(items))


def parse_kb(text: str, name: str = "kb") -> KnowledgeBase:
    individuals: list[str] = []
    classes: list[str] = []
    roles: list[str] = []
    types, role_asserts, axiom_lines = [], [], []

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        keyword, _, rest = line.partition(" ")
        args = rest.split()
        for arg in args if keyword != "sub" else ():
            if not NAME_RE.fullmatch(arg):
                raise ParseError(f"invalid name {arg!r}", line=lineno)
        if keyword == "class" and len(args) == 1:
            classes.append(args[0])
        elif keyword == "role" and len(args) == 1:
            roles.append(args[0])
        elif keyword == "type" and len(args) == 2:
            individuals.append(args[0])
            classes.append(args[1])
            types.append((args[0], args[1]))
        elif keyword in ("role", "role_assert") and len(args) == 3:
            a, r, b = args
            individuals += [a, b]
            roles.append(r)
            role_asserts.append((a, r, b))
        elif keyword == "sub" and rest.strip():
            axiom_lines.append((lineno, rest))
        else:
            raise ParseError(f"malformed statement {line!r}", line=lineno)

    classes, roles = _ordered_unique(classes), _ordered_unique(roles)
    overlap = set(classes) & set(roles)
    if overlap:
        raise VocabularyError(f"names used both as class and role: {sorted(overlap)}")
    class_set, role_set = set(classes), set(roles)

    tbox = []
    for lineno, rest in axiom_lines:
        try:
            atoms = split_atoms(rest, keep_spaces=False)
            sub, remaining = parse_prefix(atoms, class_set, role_set)
            sup = parse_atoms(remaining, class_set, role_set)
        except UnknownNameError as exc:
            raise UnknownNameError(f"line {lineno}: {exc}") from None
        except ParseError as exc:
            raise ParseError(str(exc), line=lineno) from None
        tbox.append((sub, sup))

    return KnowledgeBase(
        tbox=tuple(tbox),
        abox_types=frozenset(types),
        abox_roles=frozenset(role_asserts),
        individuals=tuple(_ordered_unique(individuals)),
        classes=tuple(classes),
        roles=tuple(roles),
        name=name,
    )


def load_kb(path: Union[str, Path]) -> KnowledgeBase:
    path = Path(path)
    return parse_kb(path.read_text(encoding="utf-8"), name=path.stem)


# ---------------------------------------------------------------------------
# vocabulary


@dataclass(frozen=True)
class Vocabulary:
    """Ordered atom inventory; token id ``i`` is ``atoms[i]``, ``pad_id`` is one past the end."""

    atoms: tuple[str, ...]
    n_classes: Optional[int] = None
    n_roles: Optional[int] = None

    def __post_init__(self):
        if len(set(self.atoms)) != len(self.atoms):
            raise VocabularyError("vocabulary atoms must be unique")

    @cached_property
    def class_names(self) -> Optional[frozenset[str]]:
        return None if self.n_classes is None else frozenset(self.atoms[:self.n_classes])

    @cached_property
    def role_names(self) -> Optional[frozenset[str]]:
        if self.n_classes is None or self.n_roles is None:
            return None
        return frozenset(self.atoms[self.n_classes:self.n_classes + self.n_roles])

    @cached_property
    def index(self) -> dict[str, int]:
        return {atom: i for i, atom in enumerate(self.atoms)}

    @property
    def pad_id(self) -> int:
        return len(self.atoms)

    @property
    def num_classes(self) -> int:
        """Size of the output class space, atoms plus PAD."""
        return len(self.atoms) + 1

    def __len__(self):
        return len(self.atoms)

    def fingerprint(self) -> str:
        return hashlib.sha256("\n".join(self.atoms).encode("utf-8")).hexdigest()

    def encode_atoms(self, atoms: Sequence[str]) -> list[int]:
        try:
            return [self.index[a] for a in atoms]
        except KeyError as exc:
            raise VocabularyError(f"atom {exc.args[0]!r} is not in the vocabulary") from None

    def decode_ids(self, ids: Sequence[int]) -> list[str]:
        return [self.atoms[i] for i in ids]


def build_vocabulary(kb: KnowledgeBase) -> Vocabulary:
    names = list(kb.classes) + list(kb.roles)
    if len(set(names)) != len(names):
        raise VocabularyError("duplicate class/role names")
    return Vocabulary(tuple(names) + SPECIAL_ATOMS, len(kb.classes), len(kb.roles))


def tokenize_expression(expr: ConceptExpr, vocab: Vocabulary) -> list[int]:
    return vocab.encode_atoms(expression_atoms(expr))


def detokenize(ids: Sequence[int], vocab: Vocabulary) -> str:
    return "".join(vocab.decode_ids(ids))
