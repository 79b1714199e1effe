"""Knowledge-graph view of a KB and TransE embeddings of its entities."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Union

import numpy as np

from .errors import DataError, NumericError, ParseError
from .expressions import Atomic
from .kb import KnowledgeBase

log = logging.getLogger(__name__)

TYPE = "type"
SUBCLASSOF = "subclassof"


@dataclass(frozen=True)
class TripleStore:
    triples: np.ndarray  # (T, 3) int: subject, predicate, object
    entities: tuple[str, ...]
    predicates: tuple[str, ...]

    def __len__(self):
        return len(self.triples)

    @cached_property
    def entity_index(self) -> dict[str, int]:
        return {e: i for i, e in enumerate(self.entities)}

    @cached_property
    def predicate_index(self) -> dict[str, int]:
        return {p: i for i, p in enumerate(self.predicates)}

    def named(self) -> list[tuple[str, str, str]]:
        return [(self.entities[s], self.predicates[p], self.entities[o]) for s, p, o in self.triples]


def kb_to_triples(kb: KnowledgeBase) -> TripleStore:
    """Role assertions, class assertions (``type``) and atomic subclass axioms (``subclassof``)."""
    entities = list(dict.fromkeys(list(kb.individuals) + list(kb.classes)))
    predicates = list(kb.roles) + [p for p in (TYPE, SUBCLASSOF) if p not in kb.role_set]
    e_idx = {e: i for i, e in enumerate(entities)}
    p_idx = {p: i for i, p in enumerate(predicates)}

    order = kb.individual_index
    rows = []
    for a, c in sorted(kb.abox_types, key=lambda t: (order[t[0]], kb.classes.index(t[1]))):
        rows.append((e_idx[a], p_idx[TYPE], e_idx[c]))
    for a, r, b in sorted(kb.abox_roles, key=lambda t: (order[t[0]], kb.roles.index(t[1]), order[t[2]])):
        rows.append((e_idx[a], p_idx[r], e_idx[b]))
    for sub, sup in kb.tbox:
        if isinstance(sub, Atomic) and isinstance(sup, Atomic):
            rows.append((e_idx[sub.name], p_idx[SUBCLASSOF], e_idx[sup.name]))
    triples = np.array(rows, dtype=np.int64).reshape(-1, 3)
    return TripleStore(triples, tuple(entities), tuple(predicates))


@dataclass
class EmbeddingTable:
    entities: tuple[str, ...]
    relations: tuple[str, ...]
    entity_vectors: np.ndarray
    relation_vectors: np.ndarray
    history: list[float] = field(default_factory=list, compare=False)

    @property
    def d(self) -> int:
        return self.entity_vectors.shape[1]

    @cached_property
    def entity_index(self) -> dict[str, int]:
        return {e: i for i, e in enumerate(self.entities)}

    def vector(self, name: str) -> np.ndarray:
        try:
            return self.entity_vectors[self.entity_index[name]]
        except KeyError:
            raise DataError(f"no embedding for {name!r}") from None

    def rows(self, names) -> np.ndarray:
        try:
            idx = [self.entity_index[n] for n in names]
        except KeyError as exc:
            raise DataError(f"no embedding for {exc.args[0]!r}") from None
        return self.entity_vectors[idx].reshape(len(idx), self.d)


def _normalize_rows(x: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(x, axis=1, keepdims=True)
    return x / np.maximum(norms, 1e-12)


def transe_distances(table_e: np.ndarray, table_r: np.ndarray, triples: np.ndarray) -> np.ndarray:
    diff = table_e[triples[:, 0]] + table_r[triples[:, 1]] - table_e[triples[:, 2]]
    return np.linalg.norm(diff, axis=1)


def corrupt(triples: np.ndarray, n_entities: int, rng: np.random.Generator,
            known: set, max_tries: int = 10) -> np.ndarray:
    """Replace head or tail (probability 1/2 each) by a uniform entity, avoiding true triples."""
    out = triples.copy()
    head_side = rng.random(len(triples)) < 0.5
    todo = np.arange(len(triples))
    for _ in range(max_tries):
        if len(todo) == 0:
            break
        ents = rng.integers(n_entities, size=len(todo))
        cols = np.where(head_side[todo], 0, 2)
        out[todo] = triples[todo]
        out[todo, cols] = ents
        todo = np.array([i for i in todo if tuple(out[i]) in known], dtype=np.int64)
    return out


def margin_loss(entity_vectors, relation_vectors, pos, neg, margin) -> float:
    d_pos = transe_distances(entity_vectors, relation_vectors, pos)
    d_neg = transe_distances(entity_vectors, relation_vectors, neg)
    return float(np.mean(np.maximum(0.0, margin + d_pos - d_neg)))


def train_transe(store: TripleStore, d: int = 40, epochs: int = 100, margin: float = 1.0,
                 lr: float = 0.01, seed: int = 0, batch_size: int = 128) -> EmbeddingTable:
    """Margin-ranking TransE with filtered head/tail corruption and SGD.

    Entity vectors are renormalised to unit length after every epoch.
    """
    if len(store) == 0:
        raise DataError("cannot train embeddings on an empty triple store")
    if d < 1:
        raise ValueError("d must be >= 1")
    rng = np.random.default_rng(seed)
    n_e, n_r = len(store.entities), len(store.predicates)
    bound = 6.0 / np.sqrt(d)
    ent = _normalize_rows(rng.uniform(-bound, bound, size=(n_e, d)))
    rel = _normalize_rows(rng.uniform(-bound, bound, size=(n_r, d)))
    known = {tuple(t) for t in store.triples.tolist()}
    triples = store.triples
    history = []

    for epoch in range(epochs):
        perm = rng.permutation(len(triples))
        total = 0.0
        for start in range(0, len(perm), batch_size):
            pos = triples[perm[start:start + batch_size]]
            neg = corrupt(pos, n_e, rng, known)
            diff_p = ent[pos[:, 0]] + rel[pos[:, 1]] - ent[pos[:, 2]]
            diff_n = ent[neg[:, 0]] + rel[neg[:, 1]] - ent[neg[:, 2]]
            dist_p = np.linalg.norm(diff_p, axis=1)
            dist_n = np.linalg.norm(diff_n, axis=1)
            losses = np.maximum(0.0, margin + dist_p - dist_n)
            total += float(losses.sum())
            if not np.isfinite(total):
                raise NumericError(f"non-finite TransE loss at epoch {epoch}, batch starting {start}")
            active = (losses > 0).astype(np.float64)[:, None]
            g_p = active * diff_p / np.maximum(dist_p, 1e-12)[:, None]
            g_n = -active * diff_n / np.maximum(dist_n, 1e-12)[:, None]
            grad_e = np.zeros_like(ent)
            grad_r = np.zeros_like(rel)
            np.add.at(grad_e, pos[:, 0], g_p)
            np.add.at(grad_e, pos[:, 2], -g_p)
            np.add.at(grad_e, neg[:, 0], g_n)
            np.add.at(grad_e, neg[:, 2], -g_n)
            np.add.at(grad_r, pos[:, 1], g_p + g_n)
            ent -= lr * grad_e
            rel -= lr * grad_r
        ent = _normalize_rows(ent)
        history.append(total / len(triples))
        log.debug("transe epoch %d loss %.6f", epoch, history[-1])

    return EmbeddingTable(store.entities, store.predicates, ent, rel, history)


def lookup_examples(table: EmbeddingTable, problem) -> tuple[np.ndarray, np.ndarray]:
    """Embedding matrices of a problem's positives and negatives, in list order."""
    if not problem.positives or not problem.negatives:
        raise DataError("learning problem needs at least one positive and one negative example")
    return table.rows(problem.positives), table.rows(problem.negatives)


# ---------------------------------------------------------------------------
# file format: "d <dim> <n_entities>" then "<name> v1 ... vd" per entity, then per relation


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def save_embeddings(table: EmbeddingTable, path: Union[str, Path]) -> None:
    lines = [f"d {table.d} {len(table.entities)}"]
    for names, vectors in ((table.entities, table.entity_vectors), (table.relations, table.relation_vectors)):
        for name, vec in zip(names, vectors):
            lines.append(name + " " + " ".join(_fmt(v) for v in vec))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_embeddings(path: Union[str, Path]) -> EmbeddingTable:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines:
        raise ParseError("empty embedding file")
    header = lines[0].split()
    if len(header) not in (2, 3) or header[0] != "d":
        raise ParseError("expected header 'd <dim> [<n_entities>]'", line=1)
    d = int(header[1])
    body = [ln.split() for ln in lines[1:] if ln.strip()]
    n_ent = int(header[2]) if len(header) == 3 else len(body)
    for i, parts in enumerate(body, start=2):
        if len(parts) != d + 1:
            raise ParseError(f"expected a name and {d} values", line=i)
    names = [p[0] for p in body]
    vecs = np.array([[float(v) for v in p[1:]] for p in body], dtype=np.float64).reshape(len(body), d)
    return EmbeddingTable(tuple(names[:n_ent]), tuple(names[n_ent:]), vecs[:n_ent], vecs[n_ent:])
