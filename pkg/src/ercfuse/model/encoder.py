"""Unimodal pre-encoding and speaker embedding injection.

Audio and visual features go through one affine layer each; text goes
through a bidirectional gated recurrent pass so every utterance sees the
whole conversation before the graph stage. A speaker embedding, scaled by
``lambda``, is then added to every modality's encoding.

"""

from dataclasses import dataclass

import numpy as np

from .. import backend
from ..errors import ShapeError, ValidationError
from ..tensor import Tensor, concat, sigmoid, take_rows, tanh
from .params import Linear, ParamStore


def preencode_av(features: Tensor, layer: Linear, /) -> Tensor:
    """Encode audio or visual features with an affine map.

    Args:
        features: ``m x d`` features.
        layer: ``d -> D`` affine layer.

    Returns:
        ``m x D`` encodings.

    Raises:
        `ShapeError`: If ``d`` doesn't match the layer's input width.

    """
    if features.ndim != 2 or features.shape[1] != layer.weight.shape[0]:
        raise ShapeError(
            f"features of shape {features.shape} don't fit an encoder expecting "
            f"width {layer.weight.shape[0]}"
        )
    return layer(features)


@dataclass(frozen=True)
class GruCell:
    """Parameters of one direction of the gated recurrent text encoder."""

    #: Input-to-hidden weights of the update, reset, and candidate gates.
    w_z: Tensor
    w_r: Tensor
    w_n: Tensor

    #: Hidden-to-hidden weights of the update, reset, and candidate gates.
    u_z: Tensor
    u_r: Tensor
    u_n: Tensor

    #: Gate biases.
    b_z: Tensor
    b_r: Tensor
    b_n: Tensor

    @property
    def hidden(self) -> int:
        """Hidden state width."""
        return self.u_z.shape[0]

    def __call__(self, x: Tensor, h: Tensor, /) -> Tensor:
        z = sigmoid(x @ self.w_z + h @ self.u_z + self.b_z)
        r = sigmoid(x @ self.w_r + h @ self.u_r + self.b_r)
        n = tanh(x @ self.w_n + self.b_n + r * (h @ self.u_n))
        return (1.0 - z) * n + z * h

    @classmethod
    def init(cls, store: ParamStore, name: str, d: int, hidden: int, /) -> "GruCell":
        return cls(
            w_z=store.weight(f"{name}.w_z", d, hidden),
            w_r=store.weight(f"{name}.w_r", d, hidden),
            w_n=store.weight(f"{name}.w_n", d, hidden),
            u_z=store.weight(f"{name}.u_z", hidden, hidden),
            u_r=store.weight(f"{name}.u_r", hidden, hidden),
            u_n=store.weight(f"{name}.u_n", hidden, hidden),
            b_z=store.bias(f"{name}.b_z", hidden),
            b_r=store.bias(f"{name}.b_r", hidden),
            b_n=store.bias(f"{name}.b_n", hidden),
        )


@dataclass(frozen=True)
class TextEncoder:
    """Bidirectional recurrent text encoder parameters."""

    #: Cell run from the first utterance to the last.
    forward: GruCell

    #: Cell run from the last utterance to the first.
    backward: GruCell

    #: ``2H -> D`` projection of the concatenated states.
    proj: Linear

    @classmethod
    def init(
        cls, store: ParamStore, name: str, d: int, hidden: int, d_model: int, /
    ) -> "TextEncoder":
        return cls(
            forward=GruCell.init(store, f"{name}.fw", d, hidden),
            backward=GruCell.init(store, f"{name}.bw", d, hidden),
            proj=Linear.init(store, f"{name}.proj", 2 * hidden, d_model),
        )


def _run(cell: GruCell, features: Tensor, order: range) -> list[Tensor]:
    h = Tensor(np.zeros((1, cell.hidden), dtype=backend.dtype))
    states: dict[int, Tensor] = {}
    for i in order:
        h = cell(take_rows(features, [i]), h)
        states[i] = h
    return [states[i] for i in range(features.shape[0])]


def preencode_text(features: Tensor, encoder: TextEncoder, /) -> Tensor:
    """Encode text features with a bidirectional gated recurrent pass.

    Both directions start from a zero state. Row ``i`` of the output
    projects ``[h_fw(i) || h_bw(i)]``, where ``h_fw(i)`` has read
    utterances ``0..i`` and ``h_bw(i)`` has read utterances ``i..m-1``.

    Args:
        features: ``m x d_t`` text features, ``m >= 1``.
        encoder: Encoder parameters.

    Returns:
        ``m x D`` encodings.

    Raises:
        `ShapeError`: If ``d_t`` doesn't match the encoder.

    """
    if features.ndim != 2 or features.shape[1] != encoder.forward.w_z.shape[0]:
        raise ShapeError(
            f"features of shape {features.shape} don't fit a text encoder expecting "
            f"width {encoder.forward.w_z.shape[0]}"
        )
    m = features.shape[0]
    fw = _run(encoder.forward, features, range(m))
    bw = _run(encoder.backward, features, range(m - 1, -1, -1))
    states = concat([concat(fw, axis=0), concat(bw, axis=0)], axis=1)
    return encoder.proj(states)


def inject_speaker(
    encodings: dict[str, Tensor],
    speakers: np.ndarray,
    table: Tensor,
    weight: float,
    /,
) -> dict[str, Tensor]:
    """Add ``weight * table[speaker(i)]`` to row ``i`` of every modality.

    The same embedding row feeds every modality. With ``weight == 0`` the
    encodings are returned unchanged.

    Args:
        encodings: ``m x D`` encodings by modality.
        speakers: Speaker id of every utterance.
        table: ``n x D`` speaker embeddings.
        weight: Trade-off ``lambda >= 0``.

    Raises:
        `ValidationError`: If a speaker id isn't a row of ``table``.

    """
    speakers = np.asarray(speakers, dtype=np.int64)
    bad = speakers[(speakers < 0) | (speakers >= table.shape[0])]
    if bad.size:
        raise ValidationError(
            f"speaker id {int(bad[0])} has no embedding ({table.shape[0]} speakers)"
        )
    if weight == 0.0:
        return dict(encodings)
    emb = take_rows(table, speakers) * weight
    return {modality: x + emb for modality, x in encodings.items()}
