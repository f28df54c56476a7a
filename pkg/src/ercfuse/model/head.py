"""Multimodal fusion, emotion classification, and the training objective."""

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import ShapeError
from ..tensor import Tensor, concat, log, pick, relu, softmax_rows, sum_all
from .params import Linear, ParamStore

LOG_FLOOR = 1e-12
"""Probabilities are clamped to this value before taking logs."""


def fuse(states: Sequence[Tensor], w_u: Tensor, /) -> Tensor:
    """Concatenate modality states along features and merge them linearly.

    Args:
        states: Final ``m x D`` state of every modality, in canonical order.
        w_u: ``(len(states) * D) x D`` merge weight.

    Returns:
        ``m x D`` fused features ``Z``.

    Raises:
        `ShapeError`: If the states' shapes differ.

    """
    if len({s.shape for s in states}) != 1:
        raise ShapeError(
            f"fused states must share one shape but got {[s.shape for s in states]}"
        )
    return concat(list(states), axis=1) @ w_u


@dataclass(frozen=True)
class Classifier:
    """Two-layer emotion classifier parameters."""

    #: ``D -> H`` hidden layer.
    hidden: Linear

    #: ``H -> C`` output layer.
    out: Linear

    @classmethod
    def init(
        cls,
        store: ParamStore,
        name: str,
        d_model: int,
        hidden: int,
        num_classes: int,
        /,
    ) -> "Classifier":
        return cls(
            hidden=Linear.init(store, f"{name}.hidden", d_model, hidden),
            out=Linear.init(store, f"{name}.out", hidden, num_classes),
        )


def predict(probs: np.ndarray, /) -> np.ndarray:
    """Most probable class of every row; ties go to the lowest class index."""
    return np.argmax(probs, axis=1)


def classify(z: Tensor, params: Classifier, /) -> tuple[Tensor, np.ndarray]:
    """Class probabilities ``softmax(out(ReLU(hidden(z))))`` and predictions.

    Returns:
        ``m x C`` probabilities and ``m`` predicted classes.

    Examples:
        >>> import numpy as np
        >>> from ercfuse.model.head import Classifier, classify
        >>> from ercfuse.model.params import Linear
        >>> from ercfuse.tensor import Tensor
        >>> zeros = Classifier(
        ...     Linear(Tensor(np.zeros((2, 2))), Tensor(np.zeros(2))),
        ...     Linear(Tensor(np.zeros((2, 3))), Tensor(np.zeros(3))),
        ... )
        >>> probs, preds = classify(Tensor(np.ones((1, 2))), zeros)
        >>> preds
        array([0])

    """
    probs = softmax_rows(params.out(relu(params.hidden(z))))
    return probs, predict(probs.data)


def nll_sum(probs: Tensor, labels: np.ndarray, /) -> Tensor:
    """``-sum_i log p[i, y_i]`` with probabilities clamped at
    :data:`LOG_FLOOR`.

    """
    labels = np.asarray(labels, dtype=np.int64)
    if labels.shape != (probs.shape[0],):
        raise ShapeError(
            f"{labels.shape} labels for probabilities of shape {probs.shape}"
        )
    return -sum_all(log(pick(probs, np.arange(labels.size), labels), floor=LOG_FLOOR))


def loss(probs: Sequence[Tensor], labels: Sequence[np.ndarray], /) -> Tensor:
    """Cross-entropy summed over every utterance of every conversation and
    divided by the total number of utterances.

    Args:
        probs: ``m_k x C`` probabilities of every conversation ``k``.
        labels: Labels of every conversation ``k``.

    Examples:
        >>> import math
        >>> import numpy as np
        >>> from ercfuse.model.head import loss
        >>> from ercfuse.tensor import Tensor
        >>> uniform = Tensor(np.full((2, 6), 1 / 6))
        >>> math.isclose(loss([uniform], [np.array([0, 5])]).item(), math.log(6))
        True

    """
    if len(probs) != len(labels) or not probs:
        raise ShapeError(
            f"{len(probs)} probability matrices for {len(labels)} label sets"
        )
    total = nll_sum(probs[0], labels[0])
    for p, y in zip(probs[1:], labels[1:]):
        total = total + nll_sum(p, y)
    return total * (1.0 / sum(p.shape[0] for p in probs))
