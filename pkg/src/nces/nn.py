"""Layers and the three synthesizer architectures (Set Transformer, LSTM, GRU).

Attention follows ``softmax(Q Kᵀ) V`` without scaling; MAB has no layer
normalisation.  Inputs are batched: example sets arrive as zero-padded
``(B, n, d)`` arrays with boolean ``(B, n)`` masks marking real rows.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Iterator, Optional, Sequence

import numpy as np

from . import autodiff as ad
from .autodiff import Parameter, Tensor
from .errors import ShapeError


class Module:
    training = True

    def named_parameters(self, prefix: str = "") -> Iterator[tuple[str, Parameter]]:
        for name, value in vars(self).items():
            if isinstance(value, Parameter):
                yield prefix + name, value
            elif isinstance(value, Module):
                yield from value.named_parameters(f"{prefix}{name}.")
            elif isinstance(value, (list, tuple)):
                for i, item in enumerate(value):
                    if isinstance(item, Module):
                        yield from item.named_parameters(f"{prefix}{name}.{i}.")

    def parameters(self) -> list[Parameter]:
        return [p for _, p in self.named_parameters()]

    def named_buffers(self, prefix: str = "") -> Iterator[tuple[str, np.ndarray]]:
        for name, value in vars(self).items():
            if isinstance(value, Module):
                yield from value.named_buffers(f"{prefix}{name}.")
            elif isinstance(value, (list, tuple)):
                for i, item in enumerate(value):
                    if isinstance(item, Module):
                        yield from item.named_buffers(f"{prefix}{name}.{i}.")
        for name in getattr(self, "_buffers", ()):
            yield prefix + name, getattr(self, name)

    def modules(self) -> Iterator["Module"]:
        yield self
        for value in vars(self).values():
            if isinstance(value, Module):
                yield from value.modules()
            elif isinstance(value, (list, tuple)):
                for item in value:
                    if isinstance(item, Module):
                        yield from item.modules()

    def train(self, mode: bool = True):
        for m in self.modules():
            m.training = mode
        return self

    def eval(self):
        return self.train(False)

    def zero_grad(self):
        for p in self.parameters():
            p.grad = None

    def num_parameters(self) -> int:
        return sum(p.data.size for p in self.parameters())


def _uniform(rng: np.random.Generator, fan_in: int, shape) -> np.ndarray:
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


class Linear(Module):
    def __init__(self, d_in: int, d_out: int, rng: np.random.Generator, bias: bool = True):
        self.weight = Parameter(_uniform(rng, d_in, (d_in, d_out)), name="weight")
        self.bias = Parameter(_uniform(rng, d_in, (d_out,)), name="bias") if bias else None

    def __call__(self, x) -> Tensor:
        if x.shape[-1] != self.weight.shape[0]:
            raise ShapeError(f"linear layer expects width {self.weight.shape[0]}, got shape {x.shape}")
        return ad.linear(x, self.weight, self.bias)


class BatchNorm(Module):
    def __init__(self, features: int, momentum: float = 0.1, eps: float = 1e-5):
        self.gamma = Parameter(np.ones(features), name="gamma")
        self.beta = Parameter(np.zeros(features), name="beta")
        self.running_mean = np.zeros(features)
        self.running_var = np.ones(features)
        self._buffers = ("running_mean", "running_var")
        self.momentum = momentum
        self.eps = eps

    def __call__(self, x: Tensor) -> Tensor:
        return ad.batchnorm_features(x, self.gamma, self.beta, self.running_mean, self.running_var,
                                     self.training, self.momentum, self.eps)


# ---------------------------------------------------------------------------
# attention


def _key_bias_mask(key_mask: Optional[np.ndarray]) -> Optional[np.ndarray]:
    # (B, nk) validity -> (B, 1, 1, nk) "masked out" flags for (B, h, nq, nk) logits
    if key_mask is None:
        return None
    return ~np.asarray(key_mask, dtype=bool)[:, None, None, :]


def attention(q, k, v, key_mask: Optional[np.ndarray] = None) -> Tensor:
    """``softmax(q kᵀ) v`` over the last two axes; masked keys get zero weight."""
    q, k, v = ad.as_tensor(q), ad.as_tensor(k), ad.as_tensor(v)
    if q.shape[-1] != k.shape[-1] or k.shape[-2] != v.shape[-2]:
        raise ShapeError(f"attention shape mismatch: Q {q.shape}, K {k.shape}, V {v.shape}")
    logits = ad.matmul(q, ad.swapaxes(k, -1, -2))
    if key_mask is not None:
        logits = ad.masked_fill(logits, key_mask, -np.inf)
    return ad.matmul(ad.softmax(logits, axis=-1), v)


class MultiheadAttention(Module):
    def __init__(self, d: int, heads: int, rng: np.random.Generator):
        if d % heads:
            raise ShapeError(f"model width {d} is not divisible by {heads} heads")
        self.d, self.heads = d, heads
        self.q_proj = Linear(d, d, rng)
        self.k_proj = Linear(d, d, rng)
        self.v_proj = Linear(d, d, rng)
        self.out_proj = Linear(d, d, rng)

    def _split(self, x: Tensor) -> Tensor:
        # (..., n, d) -> (..., h, n, d/h)
        x = x.reshape(x.shape[:-1] + (self.heads, self.d // self.heads))
        return ad.swapaxes(x, -2, -3)

    def __call__(self, q, k, v, key_mask: Optional[np.ndarray] = None) -> Tensor:
        for name, x in (("Q", q), ("K", k), ("V", v)):
            if x.shape[-1] != self.d:
                raise ShapeError(f"{name} has width {x.shape[-1]}, expected {self.d}")
        heads = attention(self._split(self.q_proj(q)), self._split(self.k_proj(k)),
                          self._split(self.v_proj(v)), _key_bias_mask(key_mask))
        merged = ad.swapaxes(heads, -2, -3)
        merged = merged.reshape(merged.shape[:-2] + (self.d,))
        return self.out_proj(merged)


class MAB(Module):
    """``H = X + Multihead(X, Y, Y)``; ``MAB(X, Y) = H + relu(H W + b)``."""

    def __init__(self, d: int, heads: int, rng: np.random.Generator):
        self.attn = MultiheadAttention(d, heads, rng)
        self.ff = Linear(d, d, rng)

    def __call__(self, x, y, key_mask: Optional[np.ndarray] = None) -> Tensor:
        h = ad.add(x, self.attn(x, y, y, key_mask))
        return h + ad.relu(self.ff(h))


class SAB(Module):
    def __init__(self, d: int, heads: int, rng: np.random.Generator):
        self.mab = MAB(d, heads, rng)

    def __call__(self, x, mask: Optional[np.ndarray] = None) -> Tensor:
        return self.mab(x, x, mask)


class ISAB(Module):
    def __init__(self, d: int, heads: int, m: int, rng: np.random.Generator):
        self.inducing = Parameter(_uniform(rng, d, (m, d)), name="inducing")
        self.mab_in = MAB(d, heads, rng)
        self.mab_out = MAB(d, heads, rng)

    def __call__(self, x, mask: Optional[np.ndarray] = None) -> Tensor:
        h = self.mab_in(self.inducing, x, mask)
        if h.ndim == 2 and x.ndim == 3:
            h = ad.add(h, np.zeros((x.shape[0],) + h.shape))
        return self.mab_out(x, h)


class PMA(Module):
    def __init__(self, d: int, heads: int, k: int, rng: np.random.Generator):
        self.seeds = Parameter(_uniform(rng, d, (k, d)), name="seeds")
        self.mab = MAB(d, heads, rng)

    def __call__(self, x, mask: Optional[np.ndarray] = None) -> Tensor:
        out = self.mab(self.seeds, x, mask)
        if out.ndim == 2 and x.ndim == 3:
            out = ad.add(out, np.zeros((x.shape[0],) + out.shape))
        return out


# ---------------------------------------------------------------------------
# recurrent cells


class LSTMCell(Module):
    def __init__(self, d_in: int, hidden: int, rng: np.random.Generator):
        self.hidden = hidden
        self.w_x = Parameter(_uniform(rng, hidden, (d_in, 4 * hidden)), name="w_x")
        self.w_h = Parameter(_uniform(rng, hidden, (hidden, 4 * hidden)), name="w_h")
        self.b = Parameter(_uniform(rng, hidden, (4 * hidden,)), name="b")

    def initial_state(self, batch: int):
        zeros = Tensor(np.zeros((batch, self.hidden)))
        return zeros, zeros

    def __call__(self, x, state):
        h, c = state
        H = self.hidden
        gates = ad.matmul(x, self.w_x) + ad.matmul(h, self.w_h) + self.b
        i = ad.sigmoid(gates[:, 0:H])
        f = ad.sigmoid(gates[:, H:2 * H])
        g = ad.tanh(gates[:, 2 * H:3 * H])
        o = ad.sigmoid(gates[:, 3 * H:4 * H])
        c = f * c + i * g
        h = o * ad.tanh(c)
        return h, (h, c)


class GRUCell(Module):
    def __init__(self, d_in: int, hidden: int, rng: np.random.Generator):
        self.hidden = hidden
        self.w_x = Parameter(_uniform(rng, hidden, (d_in, 3 * hidden)), name="w_x")
        self.w_h = Parameter(_uniform(rng, hidden, (hidden, 3 * hidden)), name="w_h")
        self.b_x = Parameter(_uniform(rng, hidden, (3 * hidden,)), name="b_x")
        self.b_h = Parameter(_uniform(rng, hidden, (3 * hidden,)), name="b_h")

    def initial_state(self, batch: int):
        return Tensor(np.zeros((batch, self.hidden)))

    def __call__(self, x, h):
        H = self.hidden
        gx = ad.matmul(x, self.w_x) + self.b_x
        gh = ad.matmul(h, self.w_h) + self.b_h
        r = ad.sigmoid(gx[:, 0:H] + gh[:, 0:H])
        z = ad.sigmoid(gx[:, H:2 * H] + gh[:, H:2 * H])
        n = ad.tanh(gx[:, 2 * H:] + r * gh[:, 2 * H:])
        h = (1.0 - z) * n + z * h
        return h, h


# ---------------------------------------------------------------------------
# synthesizers


@dataclass(frozen=True)
class ModelConfig:
    arch: str  # "st", "lstm" or "gru"
    d: int
    num_classes: int  # C = 1 + |Vocab|
    max_len: int  # L
    heads: int = 4
    inducing_points: int = 32
    seeds: int = 1
    hidden: int = 256
    head_width: Optional[int] = None

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class Batch:
    pos: np.ndarray  # (B, n1, d), zero padded
    pos_mask: np.ndarray  # (B, n1) bool
    neg: np.ndarray
    neg_mask: np.ndarray

    def __len__(self):
        return self.pos.shape[0]


def _pad(mats: Sequence[np.ndarray]) -> tuple[np.ndarray, np.ndarray]:
    width = mats[0].shape[1]
    longest = max(m.shape[0] for m in mats)
    out = np.zeros((len(mats), longest, width))
    mask = np.zeros((len(mats), longest), dtype=bool)
    for i, m in enumerate(mats):
        if m.ndim != 2 or m.shape[1] != width:
            raise ShapeError(f"example matrices must share width {width}, got {m.shape}")
        out[i, :len(m)] = m
        mask[i, :len(m)] = True
    return out, mask


def make_batch(pairs: Sequence[tuple[np.ndarray, np.ndarray]]) -> Batch:
    """Pad (positives, negatives) matrices of varying row counts into one batch."""
    if not pairs:
        raise ShapeError("empty batch")
    for pos, neg in pairs:
        if len(pos) == 0 or len(neg) == 0:
            raise ShapeError("every problem needs at least one positive and one negative example")
    pos, pos_mask = _pad([np.asarray(p, dtype=np.float64) for p, _ in pairs])
    neg, neg_mask = _pad([np.asarray(n, dtype=np.float64) for _, n in pairs])
    return Batch(pos, pos_mask, neg, neg_mask)


def canonical_order(x: np.ndarray, mask: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Sort the real rows of each set lexicographically, keeping padding last.

    Reductions over a set then run in an order fixed by the set's contents,
    so permuting the input rows cannot change a single bit of the output.
    """
    out = x.copy()
    for b in range(x.shape[0]):
        n = int(mask[b].sum())
        rows = x[b, :n]
        order = np.lexsort(rows.T[::-1])
        out[b, :n] = rows[order]
    return out, mask


class Synthesizer(Module):
    config: ModelConfig

    def _check_width(self, batch: Batch):
        if batch.pos.shape[-1] != self.config.d or batch.neg.shape[-1] != self.config.d:
            raise ShapeError(f"embedding width {batch.pos.shape[-1]} does not match model width {self.config.d}")

    def predict(self, pairs: Sequence[tuple[np.ndarray, np.ndarray]]) -> np.ndarray:
        """Inference-mode scores, shape (B, C, L)."""
        was_training = self.training
        self.eval()
        try:
            return self(make_batch(pairs)).data
        finally:
            self.train(was_training)


class SetTransformerSynthesizer(Synthesizer):
    """Two ISAB encoder layers shared by both example sets, PMA decoder, linear output."""

    def __init__(self, config: ModelConfig, rng: np.random.Generator, canonicalize: bool = True):
        self.config = config
        d, h = config.d, config.heads
        self.encoder = [ISAB(d, h, config.inducing_points, rng), ISAB(d, h, config.inducing_points, rng)]
        self.pool = PMA(d, h, config.seeds, rng)
        self.out = Linear(config.seeds * d, config.num_classes * config.max_len, rng)
        self.canonicalize = canonicalize

    def encode(self, x: np.ndarray, mask: np.ndarray) -> Tensor:
        if self.canonicalize:
            x, mask = canonical_order(x, mask)
        h = Tensor(x)
        for layer in self.encoder:
            h = layer(h, mask)
        return h

    def __call__(self, batch: Batch) -> Tensor:
        self._check_width(batch)
        cfg = self.config
        o_pos = self.encode(batch.pos, batch.pos_mask)
        o_neg = self.encode(batch.neg, batch.neg_mask)
        joined = ad.concat_rows([o_pos, o_neg])
        mask = np.concatenate([batch.pos_mask, batch.neg_mask], axis=1)
        pooled = self.pool(joined, mask).reshape(len(batch), cfg.seeds * cfg.d)
        return self.out(pooled).reshape(len(batch), cfg.num_classes, cfg.max_len)


class RecurrentSynthesizer(Synthesizer):
    """Two stacked LSTM/GRU layers; hidden states summed per set, concatenated,
    then ``W3(bn(W2 relu(W1 h + b1) + b2)) + b3``."""

    def __init__(self, config: ModelConfig, rng: np.random.Generator):
        if config.arch not in ("lstm", "gru"):
            raise ValueError(f"unknown recurrent cell {config.arch!r}")
        self.config = config
        cell = LSTMCell if config.arch == "lstm" else GRUCell
        H = config.hidden
        width = config.head_width or H
        self.cells = [cell(config.d, H, rng), cell(H, H, rng)]
        self.fc1 = Linear(2 * H, width, rng)
        self.fc2 = Linear(width, width, rng)
        self.bn = BatchNorm(width)
        self.fc3 = Linear(width, config.num_classes * config.max_len, rng)

    def encode(self, x: np.ndarray, mask: np.ndarray) -> Tensor:
        """Sum of top-layer hidden states over the real time steps."""
        batch, steps = mask.shape
        states = [cell.initial_state(batch) for cell in self.cells]
        total = None
        for t in range(steps):
            inp = Tensor(x[:, t, :])
            for i, cell in enumerate(self.cells):
                inp, states[i] = cell(inp, states[i])
            step = inp * mask[:, t:t + 1].astype(np.float64)
            total = step if total is None else total + step
        return total

    def __call__(self, batch: Batch) -> Tensor:
        self._check_width(batch)
        cfg = self.config
        h = ad.concat([self.encode(batch.pos, batch.pos_mask), self.encode(batch.neg, batch.neg_mask)], axis=-1)
        z = self.fc2(ad.relu(self.fc1(h)))
        out = self.fc3(self.bn(z))
        return out.reshape(len(batch), cfg.num_classes, cfg.max_len)


ARCHITECTURES = ("st", "lstm", "gru")


def build_model(config: ModelConfig, seed: int = 0) -> Synthesizer:
    rng = np.random.default_rng(seed)
    if config.arch == "st":
        return SetTransformerSynthesizer(config, rng)
    return RecurrentSynthesizer(config, rng)
