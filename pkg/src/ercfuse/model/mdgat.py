"""Multi-head directed graph attention over one modality's conversation graph.

Each layer re-scores every edge from the current node states (GATv2
scoring: the nonlinearity comes before the projection onto the attention
vector), aggregates weighted neighbor messages into each node, combines the
message with the node's previous state through an updating function, merges
the heads, and closes with a residual connection and layer normalization::

    X[l+1] = LayerNorm(X[l] + W_mg [head_0 || ... || head_h-1])

"""

from dataclasses import dataclass
from typing import Sequence

from ..config import UpdateRule
from ..errors import ConfigError
from ..graph import ConvGraph
from ..tensor import (
    Tensor,
    concat,
    layer_norm,
    leaky_relu,
    segment_softmax,
    segment_sum,
    take_rows,
)
from .params import ParamStore

LEAKY_SLOPE = 0.2
"""Negative slope of the edge-scoring nonlinearity."""


@dataclass(frozen=True)
class GraphHead:
    """Parameters of one graph-attention head."""

    #: ``2D x D_h`` edge-scoring weight applied to ``[x_dst || x_src]``.
    w_ew: Tensor

    #: ``D_h x 1`` attention vector.
    att: Tensor

    #: ``D x D_m`` message weight.
    w_ps: Tensor

    #: Updating function weights: ``(W0, W1)`` for Sum, ``(W,)`` otherwise.
    update: tuple[Tensor, ...]

    @classmethod
    def init(
        cls,
        store: ParamStore,
        name: str,
        rule: UpdateRule,
        d_model: int,
        head_dim: int,
        message_dim: int,
        /,
    ) -> "GraphHead":
        w_ew = store.weight(f"{name}.w_ew", 2 * d_model, head_dim)
        att = store.weight(f"{name}.att", head_dim, 1)
        w_ps = store.weight(f"{name}.w_ps", d_model, message_dim)
        match rule:
            case UpdateRule.SUM:
                update = (
                    store.weight(f"{name}.w_sum0", message_dim, head_dim),
                    store.weight(f"{name}.w_sum1", d_model, head_dim),
                )
            case UpdateRule.CONCAT:
                update = (
                    store.weight(f"{name}.w_cat", message_dim + d_model, head_dim),
                )
            case UpdateRule.SUM_PRODUCT:
                if message_dim != d_model:
                    raise ConfigError(
                        f"the SumProduct update needs message width {message_dim} "
                        f"to equal the model width {d_model}"
                    )
                update = (store.weight(f"{name}.w_sump", 2 * d_model, head_dim),)
        return cls(w_ew=w_ew, att=att, w_ps=w_ps, update=update)


@dataclass(frozen=True)
class MdgatLayer:
    """Parameters of one graph-attention layer."""

    #: Attention heads.
    heads: tuple[GraphHead, ...]

    #: ``D x D`` head-merge weight.
    w_mg: Tensor

    #: Layer normalization gain.
    ln_gain: Tensor

    #: Layer normalization bias.
    ln_bias: Tensor

    @classmethod
    def init(
        cls,
        store: ParamStore,
        name: str,
        rule: UpdateRule,
        d_model: int,
        heads: int,
        message_dim: int,
        /,
    ) -> "MdgatLayer":
        head_dim = d_model // heads
        return cls(
            heads=tuple(
                GraphHead.init(
                    store, f"{name}.head{h}", rule, d_model, head_dim, message_dim
                )
                for h in range(heads)
            ),
            w_mg=store.weight(f"{name}.w_mg", head_dim * heads, d_model),
            ln_gain=store.gain(f"{name}.ln.gain", d_model),
            ln_bias=store.bias(f"{name}.ln.bias", d_model),
        )


def edge_weights(x: Tensor, g: ConvGraph, head: GraphHead, /) -> Tensor:
    """Attention weight of every edge of ``g``.

    The score of edge ``(j, i)`` is ``att . LeakyReLU([x_i || x_j] @ W_ew)``,
    normalized with a softmax over the edges pointing into ``i``.

    Args:
        x: ``m x D`` node states.
        g: Conversation graph with ``m`` nodes.
        head: Head parameters.

    Returns:
        ``E x 1`` weights in edge order. Nodes with no incoming edges have no
        weights.

    Raises:
        `ConfigError`: If ``x`` and ``g`` disagree on ``m``.

    """
    if x.shape[0] != g.num_nodes:
        raise ConfigError(
            f"{x.shape[0]} node states for a graph of {g.num_nodes} nodes"
        )
    pairs = concat([take_rows(x, g.dst), take_rows(x, g.src)], axis=1)
    scores = leaky_relu(pairs @ head.w_ew, LEAKY_SLOPE) @ head.att
    return segment_softmax(scores, g.dst, g.num_nodes)


def message_pass(x: Tensor, g: ConvGraph, mu: Tensor, w_ps: Tensor, /) -> Tensor:
    """Aggregate ``sum_j mu_ij (x_j @ W_ps)`` over the neighbors of every node.

    Nodes with no incoming edges receive the zero vector.

    Returns:
        ``m x D_m`` messages.

    """
    sent = take_rows(x, g.src) @ w_ps
    return segment_sum(mu * sent, g.dst, g.num_nodes)


def update_state(
    x_ps: Tensor, x_prev: Tensor, rule: UpdateRule, weights: Sequence[Tensor], /
) -> Tensor:
    """Combine messages with previous node states.

    * Sum: ``x_ps @ W0 + x_prev @ W1``
    * Concat: ``[x_ps || x_prev] @ W``
    * SumProduct: ``[(x_ps + x_prev) || (x_ps * x_prev)] @ W``

    Returns:
        ``m x D_h`` head outputs.

    """
    match rule:
        case UpdateRule.SUM:
            w0, w1 = weights
            return x_ps @ w0 + x_prev @ w1
        case UpdateRule.CONCAT:
            (w,) = weights
            return concat([x_ps, x_prev], axis=1) @ w
        case UpdateRule.SUM_PRODUCT:
            (w,) = weights
            return concat([x_ps + x_prev, x_ps * x_prev], axis=1) @ w
    raise ConfigError(f"unknown update rule {rule!r}")


def mdgat_layer(
    x: Tensor, g: ConvGraph, layer: MdgatLayer, rule: UpdateRule, /
) -> Tensor:
    """Run one graph-attention layer (all heads, merge, residual, norm)."""
    heads = []
    for head in layer.heads:
        mu = edge_weights(x, g, head)
        x_ps = message_pass(x, g, mu, head.w_ps)
        heads.append(update_state(x_ps, x, rule, head.update))
    merged = concat(heads, axis=1) @ layer.w_mg
    return layer_norm(x + merged, layer.ln_gain, layer.ln_bias)


def mdgat_forward(
    x: Tensor, g: ConvGraph, layers: Sequence[MdgatLayer], rule: UpdateRule, /
) -> Tensor:
    """Run a stack of graph-attention layers. An empty stack returns ``x``."""
    for layer in layers:
        x = mdgat_layer(x, g, layer, rule)
    return x
