"""Learning-problem generation: candidate expressions, redundancy filtering,
example sampling and train/test splitting."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from .errors import DataError, ParseError
from .expressions import (
    And,
    Atomic,
    ConceptExpr,
    Exists,
    Forall,
    Not,
    Or,
    expression_length,
    parse_expression,
    render_expression,
)
from .kb import KnowledgeBase
from .reasoner import reasoner_for

log = logging.getLogger(__name__)


@dataclass
class LearningProblem:
    positives: list[str]
    negatives: list[str]
    target: Optional[ConceptExpr] = None

    def __post_init__(self):
        if set(self.positives) & set(self.negatives):
            raise DataError("positive and negative examples overlap")


def default_num_examples(kb: KnowledgeBase) -> int:
    """Per-problem example budget ``min(|individuals| / 2, 1000)``."""
    return min(len(kb.individuals) // 2, 1000)


def generate_expressions(kb: KnowledgeBase, max_len: int = 32, budget: int = 1000,
                         seed: int = 0, max_attempts: Optional[int] = None) -> list[ConceptExpr]:
    """Length-bounded random construction of ALC expressions with instances.

    Atomic classes and their negations come first; then random ``⊓``/``⊔``
    combinations and ``∃``/``∀`` wraps of already accepted expressions are
    added until ``budget`` expressions exist or attempts run out.
    """
    if max_len < 1 or budget < 1:
        raise ValueError("max_len and budget must be >= 1")
    if not kb.classes:
        raise DataError("knowledge base has no classes to build expressions from")
    reasoner = reasoner_for(kb)
    rng = np.random.default_rng(seed)

    accepted: list[ConceptExpr] = []
    seen: set[str] = set()

    def offer(expr: ConceptExpr) -> None:
        text = render_expression(expr)
        if text in seen or expression_length(expr) > max_len:
            return
        seen.add(text)
        if reasoner.mask(expr):
            accepted.append(expr)

    for name in kb.classes:
        offer(Atomic(name))
    for name in kb.classes:
        offer(Not(Atomic(name)))
    accepted = accepted[:budget]
    if not accepted:
        return []

    ops = ["and", "or"] + (["exists", "forall"] if kb.roles else [])
    attempts = max_attempts if max_attempts is not None else 50 * budget
    for _ in range(attempts):
        if len(accepted) >= budget:
            break
        op = ops[rng.integers(len(ops))]
        left = accepted[rng.integers(len(accepted))]
        if op in ("and", "or"):
            right = accepted[rng.integers(len(accepted))]
            offer(And(left, right) if op == "and" else Or(left, right))
        else:
            role = kb.roles[rng.integers(len(kb.roles))]
            offer(Exists(role, left) if op == "exists" else Forall(role, left))
    return accepted


def filter_redundant(kb: KnowledgeBase, exprs: Iterable[ConceptExpr]) -> list[ConceptExpr]:
    """Keep one shortest expression per distinct instance set.

    Ties on length go to the lexicographically smallest canonical string.
    Expressions with no instances or with every individual as instance are
    dropped.  Output follows the first appearance of each instance set.
    """
    reasoner = reasoner_for(kb)
    best: dict[int, tuple[int, str, ConceptExpr]] = {}
    for expr in exprs:
        mask = reasoner.mask(expr)
        if mask == 0 or mask == reasoner.full:
            continue
        key = (expression_length(expr), render_expression(expr), expr)
        current = best.get(mask)
        if current is None or key[:2] < current[:2]:
            best[mask] = key
    return [entry[2] for entry in best.values()]


def example_counts(n_pos_pool: int, n_neg_pool: int, n: int) -> tuple[int, int]:
    """Split budget ``n`` evenly, handing a scarce side's leftover to the other."""
    n1 = min(n_pos_pool, n // 2)
    n2 = min(n_neg_pool, n - n1)
    n1 = min(n_pos_pool, n - n2)
    return n1, n2


def make_learning_problems(kb: KnowledgeBase, exprs: Sequence[ConceptExpr],
                           n: Optional[int] = None, seed: int = 0) -> list[LearningProblem]:
    if n is None:
        n = default_num_examples(kb)
    if n < 2:
        raise ValueError("n must be at least 2")
    reasoner = reasoner_for(kb)
    rng = np.random.default_rng(seed)
    problems = []
    for expr in exprs:
        mask = reasoner.mask(expr)
        pos_pool = reasoner.member_list(mask)
        neg_pool = reasoner.member_list(reasoner.full & ~mask)
        if not pos_pool or not neg_pool:
            log.warning("skipping %s: empty %s set", render_expression(expr),
                        "instance" if not pos_pool else "complement")
            continue
        n1, n2 = example_counts(len(pos_pool), len(neg_pool), n)
        pos = [pos_pool[i] for i in rng.choice(len(pos_pool), size=n1, replace=False)]
        neg = [neg_pool[i] for i in rng.choice(len(neg_pool), size=n2, replace=False)]
        problems.append(LearningProblem(pos, neg, expr))
    return problems


def split_train_test(problems: Sequence, ratio: float = 0.9, seed: int = 0) -> tuple[list, list]:
    if not 0 < ratio < 1:
        raise ValueError("ratio must lie strictly between 0 and 1")
    if len(problems) < 2:
        raise DataError("need at least two problems to split")
    total = len(problems)
    n_test = min(max(round((1 - ratio) * total), 1), total - 1)
    perm = np.random.default_rng(seed).permutation(total)
    test_idx = set(perm[:n_test].tolist())
    train = [p for i, p in enumerate(problems) if i not in test_idx]
    test = [p for i, p in enumerate(problems) if i in test_idx]
    return train, test


# ---------------------------------------------------------------------------
# dataset files: target<TAB>pos:a,b,...<TAB>neg:c,d,...


def format_problem(problem: LearningProblem) -> str:
    target = render_expression(problem.target) if problem.target is not None else ""
    return f"{target}\tpos:{','.join(problem.positives)}\tneg:{','.join(problem.negatives)}"


def parse_problem(line: str, kb: Optional[KnowledgeBase] = None, lineno: Optional[int] = None) -> LearningProblem:
    fields = line.rstrip("\n").split("\t")
    if len(fields) != 3 or not fields[1].startswith("pos:") or not fields[2].startswith("neg:"):
        raise ParseError("expected 'target<TAB>pos:...<TAB>neg:...'", line=lineno)
    target = parse_expression(fields[0], kb) if fields[0].strip() else None
    pos = [x for x in fields[1][4:].split(",") if x]
    neg = [x for x in fields[2][4:].split(",") if x]
    if kb is not None:
        unknown = [x for x in pos + neg if x not in kb.individual_index]
        if unknown:
            raise DataError(f"line {lineno}: unknown individuals {unknown[:5]}")
    return LearningProblem(pos, neg, target)


def write_problems(path: Union[str, Path], problems: Iterable[LearningProblem]) -> None:
    text = "".join(format_problem(p) + "\n" for p in problems)
    Path(path).write_text(text, encoding="utf-8")


def read_problems(path: Union[str, Path], kb: Optional[KnowledgeBase] = None) -> list[LearningProblem]:
    problems = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if line.strip():
            problems.append(parse_problem(line, kb, lineno))
    return problems
