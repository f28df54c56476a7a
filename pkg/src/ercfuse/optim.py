"""AdamW with decoupled weight decay and global-norm gradient clipping."""

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ConfigError, StateError
from .tensor import Tensor


@dataclass
class AdamWState:
    """Per-parameter moments and hyperparameters of an AdamW optimizer.

    Moments are created lazily (zeros) on the first step so a state can be
    built before the parameter list is known.

    """

    #: Learning rate.
    lr: float = 1e-3

    #: Exponential decay rate of the first moment.
    beta1: float = 0.9

    #: Exponential decay rate of the second moment.
    beta2: float = 0.999

    #: Denominator fuzz.
    eps: float = 1e-8

    #: Decoupled weight decay factor.
    weight_decay: float = 1e-5

    #: First moments, one per parameter.
    m: list[np.ndarray] = field(default_factory=list)

    #: Second moments, one per parameter.
    v: list[np.ndarray] = field(default_factory=list)

    #: Number of steps taken.
    t: int = 0

    def __post_init__(self) -> None:
        if self.lr < 0:
            raise ConfigError(f"learning rate must be >= 0 but got {self.lr}")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ConfigError(
                f"betas must be in [0, 1) but got ({self.beta1}, {self.beta2})"
            )
        if self.weight_decay < 0:
            raise ConfigError(f"weight decay must be >= 0 but got {self.weight_decay}")


def adamw_step(
    params: Sequence[np.ndarray], grads: Sequence[np.ndarray], state: AdamWState, /
) -> None:
    """Apply one AdamW update to ``params`` in place.

    The update is

        m <- b1 m + (1 - b1) g
        v <- b2 v + (1 - b2) g^2
        p <- p - lr (m_hat / (sqrt(v_hat) + eps) + weight_decay p)

    where ``m_hat`` and ``v_hat`` are the bias-corrected moments.

    Args:
        params: Parameter arrays, updated in place.
        grads: Gradients matching ``params`` one to one.
        state: Optimizer state; its step counter is incremented.

    Raises:
        `StateError`: If the number or shapes of ``params``, ``grads``, and
            the stored moments disagree.

    Examples:
        >>> import numpy as np
        >>> from ercfuse.optim import AdamWState, adamw_step
        >>> p = np.array([1.0])
        >>> adamw_step([p], [np.array([0.0])], AdamWState(lr=0.1, weight_decay=0.5))
        >>> p
        array([0.95])

    """
    if len(params) != len(grads):
        raise StateError(f"got {len(params)} parameters but {len(grads)} gradients")
    if not state.m:
        state.m = [np.zeros_like(p) for p in params]
        state.v = [np.zeros_like(p) for p in params]
    if len(state.m) != len(params):
        raise StateError(
            f"optimizer state holds {len(state.m)} moments for {len(params)} parameters"
        )
    for i, (p, g, m) in enumerate(zip(params, grads, state.m)):
        if p.shape != g.shape or p.shape != m.shape:
            raise StateError(
                f"parameter {i} has shape {p.shape} but its gradient has shape "
                f"{g.shape} and its moments have shape {m.shape}"
            )

    state.t += 1
    c1 = 1.0 - state.beta1**state.t
    c2 = 1.0 - state.beta2**state.t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        step = (m / c1) / (np.sqrt(v / c2) + state.eps) + state.weight_decay * p
        p -= state.lr * step


def clip_grad_norm(params: Sequence[Tensor], max_norm: float, /) -> float:
    """Scale gradients in place so their global L2 norm is at most ``max_norm``.

    Returns:
        The global norm before clipping.

    """
    total = math.sqrt(
        sum(float((p.grad * p.grad).sum()) for p in params if p.grad is not None)
    )
    if total > max_norm > 0:
        scale = max_norm / (total + 1e-12)
        for p in params:
            if p.grad is not None:
                p.grad *= scale
    return total


class AdamW:
    """AdamW over a fixed list of parameter tensors.

    :meth:`zero_grad` resets every gradient to zeros, so parameters the loss
    doesn't depend on get a zero gradient (and weight decay still applies to
    them).

    Args:
        params: Trainable tensors.
        lr: Learning rate.
        betas: First and second moment decay rates.
        eps: Denominator fuzz.
        weight_decay: Decoupled weight decay factor.

    """

    #: Tensors updated by :meth:`step`.
    params: list[Tensor]

    #: Moments and hyperparameters.
    state: AdamWState

    def __init__(
        self,
        params: Sequence[Tensor],
        /,
        *,
        lr: float = 1e-3,
        betas: tuple[float, float] = (0.9, 0.999),
        eps: float = 1e-8,
        weight_decay: float = 1e-5,
    ) -> None:
        self.params = list(params)
        self.state = AdamWState(
            lr=lr, beta1=betas[0], beta2=betas[1], eps=eps, weight_decay=weight_decay
        )

    def step(self) -> None:
        """Update every parameter from its accumulated gradient."""
        grads = [
            np.zeros_like(p.data) if p.grad is None else p.grad for p in self.params
        ]
        adamw_step([p.data for p in self.params], grads, self.state)

    def zero_grad(self) -> None:
        """Reset every parameter's accumulated gradient to zeros."""
        for p in self.params:
            p.grad = np.zeros_like(p.data)
