"""Multi-head pairwise cross-modal attention.

In every layer each modality attends from the other modalities: the other
modalities' states are the queries and the modality's own state provides
keys and values. The cross-attentions are summed, passed through dropout,
added back residually, normalized, and followed by a feedforward sublayer::

    T_av  = LayerNorm(T + Dropout(MA(A, T, T) + MA(V, T, T)))
    T'    = LayerNorm(T_av + FF(T_av))

All modalities are updated from the same input state, so the order in which
they're computed never matters.

"""

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..data.records import MODALITIES
from ..errors import ContractError, ShapeError
from ..tensor import Tensor, concat, dropout, layer_norm, relu, scaled, softmax_rows
from .params import Linear, ParamStore

ModalState = dict[str, Tensor]
"""``m x D`` state of every modality, keyed by ``t``, ``a``, ``v``."""


@dataclass(frozen=True)
class Attention:
    """Multi-head attention parameters."""

    #: Per-head ``D x d_k`` query projections.
    w_q: tuple[Tensor, ...]

    #: Per-head ``D x d_k`` key projections.
    w_k: tuple[Tensor, ...]

    #: Per-head ``D x d_k`` value projections.
    w_v: tuple[Tensor, ...]

    #: ``D x D`` head-merge weight.
    w_ma: Tensor

    @classmethod
    def init(
        cls, store: ParamStore, name: str, d_model: int, heads: int, /
    ) -> "Attention":
        d_k = d_model // heads
        w_q, w_k, w_v = [], [], []
        for h in range(heads):
            w_q.append(store.weight(f"{name}.w_q{h}", d_model, d_k))
            w_k.append(store.weight(f"{name}.w_k{h}", d_model, d_k))
            w_v.append(store.weight(f"{name}.w_v{h}", d_model, d_k))
        return cls(
            w_q=tuple(w_q),
            w_k=tuple(w_k),
            w_v=tuple(w_v),
            w_ma=store.weight(f"{name}.w_ma", d_k * heads, d_model),
        )


@dataclass(frozen=True)
class MpcatBlock:
    """Parameters updating one modality in one cross-modal layer."""

    #: One attention per other modality, in canonical modality order.
    branches: tuple[Attention, ...]

    #: Post-attention layer normalization gain and bias.
    ln1_gain: Tensor
    ln1_bias: Tensor

    #: Feedforward ``D -> F`` and ``F -> D`` layers.
    ff0: Linear
    ff1: Linear

    #: Post-feedforward layer normalization gain and bias.
    ln2_gain: Tensor
    ln2_bias: Tensor

    @classmethod
    def init(
        cls,
        store: ParamStore,
        name: str,
        others: Sequence[str],
        d_model: int,
        heads: int,
        ff_dim: int,
        /,
    ) -> "MpcatBlock":
        return cls(
            branches=tuple(
                Attention.init(store, f"{name}.from_{o}", d_model, heads)
                for o in others
            ),
            ln1_gain=store.gain(f"{name}.ln1.gain", d_model),
            ln1_bias=store.bias(f"{name}.ln1.bias", d_model),
            ff0=Linear.init(store, f"{name}.ff0", d_model, ff_dim),
            ff1=Linear.init(store, f"{name}.ff1", ff_dim, d_model),
            ln2_gain=store.gain(f"{name}.ln2.gain", d_model),
            ln2_bias=store.bias(f"{name}.ln2.bias", d_model),
        )


def attention_weights(q: Tensor, k: Tensor, params: Attention, /) -> list[Tensor]:
    """Per-head ``m x m`` attention matrices ``softmax(Q K^T / sqrt(d_k))``."""
    if q.shape != k.shape:
        raise ShapeError(f"queries {q.shape} and keys {k.shape} must have equal shapes")
    out = []
    for w_q, w_k in zip(params.w_q, params.w_k):
        d_k = w_q.shape[1]
        scores = scaled((q @ w_q) @ (k @ w_k).T, 1.0 / math.sqrt(d_k))
        out.append(softmax_rows(scores))
    return out


def multihead_attention(
    q: Tensor, k: Tensor, v: Tensor, params: Attention, /
) -> Tensor:
    """Scaled dot-product attention in every head, heads concatenated and
    merged by ``W_ma``.

    Args:
        q: ``m x D`` queries.
        k: ``m x D`` keys.
        v: ``m x D`` values.
        params: Projections.

    Returns:
        ``m x D`` attended values.

    Raises:
        `ShapeError`: If the inputs' shapes differ.

    """
    if v.shape != k.shape:
        raise ShapeError(f"keys {k.shape} and values {v.shape} must have equal shapes")
    heads = [
        att @ (v @ w_v) for att, w_v in zip(attention_weights(q, k, params), params.w_v)
    ]
    return concat(heads, axis=1) @ params.w_ma


def mpa(
    others: Sequence[Tensor],
    own: Tensor,
    branches: Sequence[Attention],
    /,
    *,
    rate: float,
    train: bool,
    rng: np.random.Generator,
) -> Tensor:
    """Sum of cross-attentions from every other modality into ``own``,
    followed by dropout.

    Args:
        others: Query states of the other modalities (one or two).
        own: The updated modality's state, used as keys and values.
        branches: Attention parameters matching ``others`` one to one.
        rate: Dropout rate.
        train: Whether dropout is active.
        rng: Dropout generator.

    """
    if len(others) != len(branches) or not others:
        raise ShapeError(f"{len(others)} query states for {len(branches)} branches")
    total = multihead_attention(others[0], own, own, branches[0])
    for other, branch in zip(others[1:], branches[1:]):
        total = total + multihead_attention(other, own, own, branch)
    return dropout(total, rate, train=train, rng=rng)


def feedforward(
    x: Tensor,
    block: MpcatBlock,
    /,
    *,
    rate: float,
    train: bool,
    rng: np.random.Generator,
) -> Tensor:
    """``Dropout(ff1(Dropout(ReLU(ff0(x)))))``."""
    hidden = dropout(relu(block.ff0(x)), rate, train=train, rng=rng)
    return dropout(block.ff1(hidden), rate, train=train, rng=rng)


def mpcat_block(
    state: ModalState,
    layer: dict[str, MpcatBlock],
    /,
    *,
    rate: float = 0.0,
    train: bool = False,
    rng: None | np.random.Generator = None,
) -> ModalState:
    """Update every modality from the same input state.

    Args:
        state: Layer input by modality.
        layer: Block parameters by modality.
        rate: Dropout rate.
        train: Whether dropout is active.
        rng: Dropout generator (required in training mode with ``rate > 0``).

    Returns:
        The next state, with the same modalities and shapes.

    """
    if rng is None:
        if train and rate > 0:
            raise ContractError("training-mode dropout needs a generator")
        rng = np.random.default_rng(0)
    shapes = {x.shape for x in state.values()}
    if len(shapes) != 1:
        raise ShapeError(f"modal states must share one shape but got {sorted(shapes)}")
    out: ModalState = {}
    for modality, block in layer.items():
        own = state[modality]
        others = [state[m] for m in MODALITIES if m in state and m != modality]
        attended = mpa(others, own, block.branches, rate=rate, train=train, rng=rng)
        x_av = layer_norm(own + attended, block.ln1_gain, block.ln1_bias)
        ff = feedforward(x_av, block, rate=rate, train=train, rng=rng)
        out[modality] = layer_norm(x_av + ff, block.ln2_gain, block.ln2_bias)
    return out


def mpcat_forward(
    state: ModalState,
    layers: Sequence[dict[str, MpcatBlock]],
    /,
    *,
    rate: float = 0.0,
    train: bool = False,
    rng: None | np.random.Generator = None,
) -> ModalState:
    """Run a stack of cross-modal layers. An empty stack returns ``state``."""
    for layer in layers:
        state = mpcat_block(state, layer, rate=rate, train=train, rng=rng)
    return state
