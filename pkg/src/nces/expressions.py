"""ALC class expressions: syntax tree, canonical rendering and parsing.

Canonical rendering puts single spaces around ``⊓``/``⊔`` and between a
quantifier and its role, and no spaces anywhere else, e.g.
``A ⊓ ∃ r.(B ⊔ ¬C)``.  ``¬`` and the quantifiers bind tightest, then ``⊓``,
then ``⊔``; binary operators associate to the left.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Collection, Iterator, Optional, Sequence

from .errors import ParseError, UnknownNameError

TOP = "⊤"
BOTTOM = "⊥"
NOT = "¬"
AND = "⊓"
OR = "⊔"
EXISTS = "∃"
FORALL = "∀"
DOT = "."
LPAREN = "("
RPAREN = ")"
SPACE = " "

# Fixed order used by the vocabulary.
SPECIAL_ATOMS = (SPACE, DOT, OR, AND, EXISTS, FORALL, NOT, LPAREN, RPAREN, TOP, BOTTOM)

NAME_RE = re.compile(r"[A-Za-z0-9_-]+")
_SYMBOLS = frozenset(SPECIAL_ATOMS) - {SPACE}


class ConceptExpr:
    """Base class of the expression tree; instances are immutable."""

    __slots__ = ()

    def __str__(self):
        return render_expression(self)

    def __and__(self, other):
        return And(self, other)

    def __or__(self, other):
        return Or(self, other)

    def __invert__(self):
        return Not(self)


@dataclass(frozen=True)
class Top(ConceptExpr):
    pass


@dataclass(frozen=True)
class Bottom(ConceptExpr):
    pass


@dataclass(frozen=True)
class Atomic(ConceptExpr):
    name: str


@dataclass(frozen=True)
class Not(ConceptExpr):
    child: ConceptExpr


@dataclass(frozen=True)
class And(ConceptExpr):
    left: ConceptExpr
    right: ConceptExpr


@dataclass(frozen=True)
class Or(ConceptExpr):
    left: ConceptExpr
    right: ConceptExpr


@dataclass(frozen=True)
class Exists(ConceptExpr):
    role: str
    child: ConceptExpr


@dataclass(frozen=True)
class Forall(ConceptExpr):
    role: str
    child: ConceptExpr


# ---------------------------------------------------------------------------
# rendering


def _operand(expr: ConceptExpr) -> str:
    # operand of ¬ / ∃ / ∀
    if isinstance(expr, (And, Or)):
        return LPAREN + render_expression(expr) + RPAREN
    return render_expression(expr)


def render_expression(expr: ConceptExpr) -> str:
    if isinstance(expr, Top):
        return TOP
    if isinstance(expr, Bottom):
        return BOTTOM
    if isinstance(expr, Atomic):
        return expr.name
    if isinstance(expr, Not):
        return NOT + _operand(expr.child)
    if isinstance(expr, (Exists, Forall)):
        symbol = EXISTS if isinstance(expr, Exists) else FORALL
        return f"{symbol} {expr.role}{DOT}{_operand(expr.child)}"
    if isinstance(expr, And):
        left = render_expression(expr.left)
        if isinstance(expr.left, Or):
            left = LPAREN + left + RPAREN
        right = render_expression(expr.right)
        if isinstance(expr.right, (And, Or)):
            right = LPAREN + right + RPAREN
        return f"{left} {AND} {right}"
    if isinstance(expr, Or):
        right = render_expression(expr.right)
        if isinstance(expr.right, Or):
            right = LPAREN + right + RPAREN
        return f"{render_expression(expr.left)} {OR} {right}"
    raise TypeError(f"not a class expression: {expr!r}")


# ---------------------------------------------------------------------------
# atoms


def split_atoms(text: str, keep_spaces: bool = True) -> list[str]:
    """Split text into vocabulary atoms (names and single symbols).

    Runs of whitespace collapse to one space atom when ``keep_spaces`` is
    set; canonical strings never contain runs, so splitting is lossless.
    """
    atoms: list[str] = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch.isspace():
            j = i
            while j < len(text) and text[j].isspace():
                j += 1
            if keep_spaces:
                atoms.append(SPACE)
            i = j
            continue
        m = NAME_RE.match(text, i)
        if m:
            atoms.append(m.group())
            i = m.end()
        elif ch in _SYMBOLS:
            atoms.append(ch)
            i += 1
        else:
            raise ParseError(f"unexpected character {ch!r} at offset {i}")
    return atoms


def expression_atoms(expr: ConceptExpr) -> list[str]:
    """Atom list of the canonical rendering, spaces included."""
    return split_atoms(render_expression(expr))


def expression_length(expr: ConceptExpr) -> int:
    return len(expression_atoms(expr))


def iter_subexpressions(expr: ConceptExpr) -> Iterator[ConceptExpr]:
    yield expr
    if isinstance(expr, (Not, Exists, Forall)):
        yield from iter_subexpressions(expr.child)
    elif isinstance(expr, (And, Or)):
        yield from iter_subexpressions(expr.left)
        yield from iter_subexpressions(expr.right)


def class_names(expr: ConceptExpr) -> set[str]:
    return {e.name for e in iter_subexpressions(expr) if isinstance(e, Atomic)}


def role_names(expr: ConceptExpr) -> set[str]:
    return {e.role for e in iter_subexpressions(expr) if isinstance(e, (Exists, Forall))}


# ---------------------------------------------------------------------------
# parsing


class _Parser:
    def __init__(self, atoms: Sequence[str], classes, roles):
        self.atoms = [a for a in atoms if not a.isspace()]
        self.pos = 0
        self.classes = classes
        self.roles = roles

    def peek(self) -> Optional[str]:
        return self.atoms[self.pos] if self.pos < len(self.atoms) else None

    def take(self) -> str:
        tok = self.peek()
        if tok is None:
            raise ParseError("unexpected end of expression (empty operand)")
        self.pos += 1
        return tok

    def expect(self, tok: str):
        got = self.take()
        if got != tok:
            raise ParseError(f"expected {tok!r}, found {got!r}")

    def disjunction(self) -> ConceptExpr:
        expr = self.conjunction()
        while self.peek() == OR:
            self.pos += 1
            expr = Or(expr, self.conjunction())
        return expr

    def conjunction(self) -> ConceptExpr:
        expr = self.unary()
        while self.peek() == AND:
            self.pos += 1
            expr = And(expr, self.unary())
        return expr

    def unary(self) -> ConceptExpr:
        tok = self.take()
        if tok == NOT:
            return Not(self.unary())
        if tok in (EXISTS, FORALL):
            role = self.take()
            if not NAME_RE.fullmatch(role):
                raise ParseError(f"expected a role name after {tok}, found {role!r}")
            if self.roles is not None and role not in self.roles:
                raise UnknownNameError(f"unknown role {role!r}")
            self.expect(DOT)
            child = self.unary()
            return Exists(role, child) if tok == EXISTS else Forall(role, child)
        if tok == TOP:
            return Top()
        if tok == BOTTOM:
            return Bottom()
        if tok == LPAREN:
            expr = self.disjunction()
            if self.peek() != RPAREN:
                raise ParseError("unbalanced parentheses: missing ')'")
            self.pos += 1
            return expr
        if NAME_RE.fullmatch(tok):
            if self.classes is not None and tok not in self.classes:
                raise UnknownNameError(f"unknown class {tok!r}")
            return Atomic(tok)
        raise ParseError(f"unexpected token {tok!r}")


def parse_atoms(
    atoms: Sequence[str],
    classes: Optional[Collection[str]] = None,
    roles: Optional[Collection[str]] = None,
) -> ConceptExpr:
    """Parse an atom sequence (spaces ignored).

    With ``classes``/``roles`` given, names are checked against them.
    """
    parser = _Parser(atoms, classes, roles)
    if not parser.atoms:
        raise ParseError("empty expression")
    expr = parser.disjunction()
    if parser.peek() is not None:
        if parser.peek() == RPAREN:
            raise ParseError("unbalanced parentheses: unexpected ')'")
        raise ParseError(f"trailing input starting at {parser.peek()!r}")
    return expr


def parse_prefix(atoms, classes=None, roles=None) -> tuple[ConceptExpr, list[str]]:
    """Parse the longest leading expression; return it with the remaining atoms."""
    parser = _Parser(atoms, classes, roles)
    expr = parser.disjunction()
    return expr, parser.atoms[parser.pos:]


def parse_expression(text: str, kb=None) -> ConceptExpr:
    """Parse ``text``; with a knowledge base, names must be declared in it."""
    if not text or not text.strip():
        raise ParseError("empty expression")
    classes = roles = None
    if kb is not None:
        classes, roles = kb.class_set, kb.role_set
    return parse_atoms(split_atoms(text, keep_spaces=False), classes, roles)
