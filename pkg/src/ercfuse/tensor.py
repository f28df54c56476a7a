"""Dense tensors with reverse-mode automatic differentiation.

Tensors are thin wrappers around numpy arrays with at most two dimensions
(scalars and 1-D vectors are allowed for losses, biases, and normalization
gains). Differentiable operations record themselves on the :class:`Tape`
that's active in the current thread; a forward pass run outside of a tape
records nothing, which is how evaluation runs.

Examples:
    Recording a forward pass and getting gradients.

    >>> import numpy as np
    >>> from ercfuse.tensor import Tape, Tensor
    >>> x = Tensor([1.0, 2.0], requires_grad=True)
    >>> with Tape() as tape:
    ...     loss = (x * x).sum()
    >>> tape.backward(loss)
    >>> x.grad
    array([2., 4.])

"""

import math
import threading
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import backend
from .errors import (
    ConfigError,
    ContractError,
    DegenerateRowError,
    NumericalError,
    ShapeError,
)

_BackwardFn = Callable[[np.ndarray], tuple[None | np.ndarray, ...]]

ArrayLike = np.ndarray | float | int | Sequence[float] | Sequence[Sequence[float]]


class Tensor:
    """A dense 0-D, 1-D, or 2-D real array that optionally participates in
    gradient recording.

    Args:
        data: Array-like values. Arrays that already have the target dtype
            are used without copying.
        requires_grad: Whether gradients should be accumulated into
            :attr:`grad` when a recorded loss is backpropagated.
        dtype: Floating point type. Defaults to :data:`ercfuse.backend.dtype`.
        name: Optional name used in error messages and gradient reports.

    Raises:
        `ShapeError`: If ``data`` has more than two dimensions.

    """

    #: Underlying values.
    data: np.ndarray

    #: Accumulated gradient with the same shape as :attr:`data`, or ``None``
    #: if no gradient has been accumulated since the last :meth:`zero_grad`.
    grad: None | np.ndarray

    #: Optional human-readable name (parameters are always named).
    name: None | str

    #: Whether backward passes should compute gradients for this tensor.
    requires_grad: bool

    # Tape that recorded the operation producing this tensor (if any).
    _tape: "None | Tape"

    def __init__(
        self,
        data: ArrayLike,
        /,
        *,
        requires_grad: bool = False,
        dtype: None | np.dtype = None,  # type: ignore[type-arg]
        name: None | str = None,
    ) -> None:
        self.data = np.asarray(data, dtype=dtype or backend.dtype)
        if self.data.ndim > 2:
            raise ShapeError(
                f"tensors have at most 2 dimensions but got shape {self.data.shape}"
            )
        self.requires_grad = requires_grad
        self.grad = None
        self.name = name
        self._tape = None

    def __repr__(self) -> str:
        label = f" {self.name!r}" if self.name else ""
        return f"Tensor{label}(shape={self.shape}, requires_grad={self.requires_grad})"

    def __add__(self, other: "Tensor | float") -> "Tensor":
        return add(self, other)

    def __radd__(self, other: float) -> "Tensor":
        return add(other, self)

    def __sub__(self, other: "Tensor | float") -> "Tensor":
        return sub(self, other)

    def __rsub__(self, other: float) -> "Tensor":
        return sub(other, self)

    def __mul__(self, other: "Tensor | float") -> "Tensor":
        return mul(self, other)

    def __rmul__(self, other: float) -> "Tensor":
        return mul(other, self)

    def __truediv__(self, other: float) -> "Tensor":
        return mul(self, 1.0 / other)

    def __neg__(self) -> "Tensor":
        return mul(self, -1.0)

    def __matmul__(self, other: "Tensor") -> "Tensor":
        return matmul(self, other)

    @property
    def T(self) -> "Tensor":
        """Transpose of a 2-D tensor."""
        return transpose(self)

    @property
    def ndim(self) -> int:
        """Number of dimensions (0, 1, or 2)."""
        return int(self.data.ndim)

    @property
    def shape(self) -> tuple[int, ...]:
        """Shape of the underlying array."""
        return tuple(self.data.shape)

    @property
    def size(self) -> int:
        """Total number of elements."""
        return int(self.data.size)

    def backward(self) -> None:
        """Backpropagate from this scalar through the tape that recorded it.

        Raises:
            `ContractError`: If this tensor isn't a scalar or wasn't
                recorded on a tape.

        """
        if self._tape is None:
            raise ContractError(f"{self!r} was not recorded on a tape")
        self._tape.backward(self)

    def item(self) -> float:
        """Return the value of a single-element tensor as a float."""
        return float(self.data.reshape(-1)[0]) if self.size == 1 else _not_scalar(self)

    def mean(self) -> "Tensor":
        """Mean over all elements as a scalar tensor."""
        return mean(self)

    def numpy(self) -> np.ndarray:
        """Return a copy of the underlying values."""
        return self.data.copy()

    def sum(self) -> "Tensor":
        """Sum over all elements as a scalar tensor."""
        return sum_all(self)

    def zero_grad(self) -> None:
        """Drop the accumulated gradient."""
        self.grad = None


def _not_scalar(t: Tensor) -> float:
    raise ContractError(f"expected a single-element tensor but got shape {t.shape}")


@dataclass
class _Node:
    """One recorded operation."""

    out: Tensor

    parents: tuple[Tensor, ...]

    backward: _BackwardFn


_local = threading.local()


def _active() -> "None | Tape":
    stack: list[Tape] = getattr(_local, "stack", [])
    return stack[-1] if stack else None


class Tape:
    """An ordered record of differentiable operations.

    Operations are appended in execution order, so each node's parents were
    recorded before it (or are leaves), and :meth:`backward` visits nodes in
    exact reverse recording order. Tapes are activated per thread with a
    ``with`` block; independent threads never share a tape.

    Examples:
        >>> from ercfuse.tensor import Tape, Tensor
        >>> w = Tensor([[2.0]], requires_grad=True)
        >>> with Tape() as tape:
        ...     y = (w @ w).sum()
        >>> len(tape)
        2

    """

    #: Recorded operations in execution order.
    nodes: list[_Node]

    def __init__(self) -> None:
        self.nodes = []

    def __enter__(self) -> "Tape":
        if not hasattr(_local, "stack"):
            _local.stack = []
        _local.stack.append(self)
        return self

    def __exit__(self, *args: object) -> None:
        _local.stack.pop()

    def __len__(self) -> int:
        return len(self.nodes)

    def backward(self, loss: Tensor, /) -> None:
        """Accumulate d(loss)/d(leaf) into every leaf tensor with
        ``requires_grad`` that the loss depends on.

        Gradients accumulate into :attr:`Tensor.grad`; calling this twice
        without zeroing gradients doubles them.

        Args:
            loss: Scalar tensor recorded on this tape.

        Raises:
            `ContractError`: If ``loss`` isn't a scalar or wasn't recorded
                on this tape.

        """
        if loss.size != 1:
            raise ContractError(
                f"backward needs a scalar loss but got shape {loss.shape}"
            )
        if loss._tape is not self:
            raise ContractError("loss was not recorded on this tape")

        grads: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
        produced: set[int] = set()
        for node in reversed(self.nodes):
            produced.add(id(node.out))
            g = grads.pop(id(node.out), None)
            if g is None:
                continue
            for parent, pg in zip(node.parents, node.backward(g)):
                if pg is None or not parent.requires_grad:
                    continue
                key = id(parent)
                grads[key] = grads[key] + pg if key in grads else pg

        leaves: dict[int, Tensor] = {}
        for node in self.nodes:
            for parent in node.parents:
                if id(parent) not in produced:
                    leaves[id(parent)] = parent
        for key, g in grads.items():
            leaf = leaves.get(key)
            if leaf is None or not leaf.requires_grad:
                continue
            g = g.astype(leaf.data.dtype, copy=False)
            leaf.grad = g.copy() if leaf.grad is None else leaf.grad + g


def _as_tensor(x: Tensor | float) -> Tensor:
    if isinstance(x, Tensor):
        return x
    return Tensor(np.asarray(x, dtype=backend.dtype))


def _result(
    data: np.ndarray, parents: tuple[Tensor, ...], backward: _BackwardFn, op: str
) -> Tensor:
    """Wrap an op's output, check it's finite, and record it if needed."""
    if not np.isfinite(data).all():
        raise NumericalError(f"non-finite values produced by `{op}`")
    out = Tensor(data, dtype=data.dtype)
    out.requires_grad = any(p.requires_grad for p in parents)
    tape = _active()
    if tape is not None and out.requires_grad:
        tape.nodes.append(_Node(out, parents, backward))
        out._tape = tape
    return out


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum out dimensions of ``g`` that were broadcast to reach its shape."""
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, n in enumerate(shape):
        if n == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


def _broadcast_shape(a: Tensor, b: Tensor, op: str) -> None:
    try:
        np.broadcast_shapes(a.shape, b.shape)
    except ValueError as e:
        raise ShapeError(
            f"`{op}` can't broadcast shapes {a.shape} and {b.shape}"
        ) from e


def add(a: Tensor | float, b: Tensor | float, /) -> Tensor:
    """Elementwise sum with numpy broadcasting (e.g., adding a bias row)."""
    a, b = _as_tensor(a), _as_tensor(b)
    _broadcast_shape(a, b, "add")

    def backward(g: np.ndarray) -> tuple[None | np.ndarray, ...]:
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return _result(a.data + b.data, (a, b), backward, "add")


def sub(a: Tensor | float, b: Tensor | float, /) -> Tensor:
    """Elementwise difference with numpy broadcasting."""
    a, b = _as_tensor(a), _as_tensor(b)
    _broadcast_shape(a, b, "sub")

    def backward(g: np.ndarray) -> tuple[None | np.ndarray, ...]:
        return _unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)

    return _result(a.data - b.data, (a, b), backward, "sub")


def mul(a: Tensor | float, b: Tensor | float, /) -> Tensor:
    """Elementwise (Hadamard) product with numpy broadcasting."""
    a, b = _as_tensor(a), _as_tensor(b)
    _broadcast_shape(a, b, "mul")

    def backward(g: np.ndarray) -> tuple[None | np.ndarray, ...]:
        return _unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)

    return _result(a.data * b.data, (a, b), backward, "mul")


def matmul(a: Tensor, b: Tensor, /) -> Tensor:
    """Matrix product of an ``m x k`` and a ``k x n`` tensor.

    Raises:
        `ShapeError`: If either tensor isn't 2-D or the inner dimensions
            differ.

    Examples:
        >>> from ercfuse.tensor import Tensor, matmul
        >>> matmul(Tensor([[1.0, 0.0]]), Tensor([[0.0], [5.0]])).data
        array([[0.]])

    """
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"`matmul` can't multiply shapes {a.shape} and {b.shape}")

    def backward(g: np.ndarray) -> tuple[None | np.ndarray, ...]:
        return g @ b.data.T, a.data.T @ g

    return _result(a.data @ b.data, (a, b), backward, "matmul")


def transpose(a: Tensor, /) -> Tensor:
    """Transpose of a 2-D tensor."""
    if a.ndim != 2:
        raise ShapeError(f"`transpose` needs a 2-D tensor but got shape {a.shape}")

    def backward(g: np.ndarray) -> tuple[None | np.ndarray, ...]:
        return (g.T,)

    return _result(a.data.T.copy(), (a,), backward, "transpose")


def concat(tensors: Sequence[Tensor], /, *, axis: int = 1) -> Tensor:
    """Concatenate 2-D tensors along columns (``axis=1``) or rows (``axis=0``).

    Raises:
        `ShapeError`: If the tensors disagree on the other dimension.

    """
    if not tensors:
        raise ShapeError("`concat` needs at least one tensor")
    if any(t.ndim != 2 for t in tensors):
        raise ShapeError(
            f"`concat` needs 2-D tensors but got shapes {[t.shape for t in tensors]}"
        )
    other = 1 - axis
    if len({t.shape[other] for t in tensors}) != 1:
        raise ShapeError(
            f"`concat` along axis {axis} got shapes {[t.shape for t in tensors]}"
        )
    bounds = np.cumsum([0] + [t.shape[axis] for t in tensors])

    def backward(g: np.ndarray) -> tuple[None | np.ndarray, ...]:
        if axis == 1:
            return tuple(g[:, lo:hi] for lo, hi in zip(bounds[:-1], bounds[1:]))
        return tuple(g[lo:hi] for lo, hi in zip(bounds[:-1], bounds[1:]))

    data = np.concatenate([t.data for t in tensors], axis=axis)
    return _result(data, tuple(tensors), backward, "concat")


def slice_cols(a: Tensor, start: int, stop: int, /) -> Tensor:
    """Columns ``start:stop`` of a 2-D tensor."""
    if a.ndim != 2 or not 0 <= start < stop <= a.shape[1]:
        raise ShapeError(f"`slice_cols` can't take [{start}:{stop}] of shape {a.shape}")

    def backward(g: np.ndarray) -> tuple[None | np.ndarray, ...]:
        out = np.zeros_like(a.data)
        out[:, start:stop] = g
        return (out,)

    return _result(a.data[:, start:stop].copy(), (a,), backward, "slice_cols")


def take_rows(a: Tensor, index: Sequence[int] | np.ndarray, /) -> Tensor:
    """Gather rows of a 2-D tensor. Rows may repeat (e.g., one per edge)."""
    idx = np.asarray(index, dtype=np.int64)
    if a.ndim != 2:
        raise ShapeError(f"`take_rows` needs a 2-D tensor but got shape {a.shape}")
    if idx.size and (idx.min() < 0 or idx.max() >= a.shape[0]):
        raise ShapeError(f"`take_rows` index out of range for shape {a.shape}")

    def backward(g: np.ndarray) -> tuple[None | np.ndarray, ...]:
        out = np.zeros_like(a.data)
        np.add.at(out, idx, g)
        return (out,)

    return _result(a.data[idx], (a,), backward, "take_rows")


def segment_sum(a: Tensor, segments: Sequence[int] | np.ndarray, n: int, /) -> Tensor:
    """Sum rows of ``a`` into ``n`` output rows according to ``segments``.

    Output rows with no contributing input rows are zero.

    """
    seg = np.asarray(segments, dtype=np.int64)
    if a.ndim != 2 or seg.shape != (a.shape[0],):
        raise ShapeError(
            f"`segment_sum` got {seg.shape} segment ids for shape {a.shape}"
        )
    out = np.zeros((n, a.shape[1]), dtype=a.data.dtype)
    np.add.at(out, seg, a.data)

    def backward(g: np.ndarray) -> tuple[None | np.ndarray, ...]:
        return (g[seg],)

    return _result(out, (a,), backward, "segment_sum")


def pick(
    a: Tensor, rows: Sequence[int] | np.ndarray, cols: Sequence[int] | np.ndarray, /
) -> Tensor:
    """Gather the elements ``a[rows[i], cols[i]]`` into a 1-D tensor."""
    r = np.asarray(rows, dtype=np.int64)
    c = np.asarray(cols, dtype=np.int64)
    if a.ndim != 2 or r.shape != c.shape:
        raise ShapeError(f"`pick` got {r.shape} rows and {c.shape} cols for {a.shape}")

    def backward(g: np.ndarray) -> tuple[None | np.ndarray, ...]:
        out = np.zeros_like(a.data)
        np.add.at(out, (r, c), g)
        return (out,)

    return _result(a.data[r, c], (a,), backward, "pick")


def sum_all(a: Tensor, /) -> Tensor:
    """Sum of every element as a 0-D tensor."""

    def backward(g: np.ndarray) -> tuple[None | np.ndarray, ...]:
        return (np.broadcast_to(g, a.shape).copy(),)

    return _result(np.asarray(a.data.sum()), (a,), backward, "sum")


def mean(a: Tensor, /) -> Tensor:
    """Mean of every element as a 0-D tensor."""
    return mul(sum_all(a), 1.0 / a.size)


def leaky_relu(x: Tensor, slope: float = 0.2, /) -> Tensor:
    """Elementwise ``max(x, slope * x)``.

    The derivative at exactly zero is taken to be 1.

    Raises:
        `ConfigError`: If ``slope`` is outside ``[0, 1)``.

    Examples:
        >>> from ercfuse.tensor import Tensor, leaky_relu
        >>> leaky_relu(Tensor([-1.0, 0.0, 2.0]), 0.2).data
        array([-0.2,  0. ,  2. ])

    """
    if not 0.0 <= slope < 1.0:
        raise ConfigError(f"leaky_relu slope must be in [0, 1) but got {slope}")
    positive = x.data >= 0

    def backward(g: np.ndarray) -> tuple[None | np.ndarray, ...]:
        return (np.where(positive, g, slope * g),)

    out = np.where(positive, x.data, slope * x.data)
    return _result(out, (x,), backward, "leaky_relu")


def relu(x: Tensor, /) -> Tensor:
    """Elementwise ``max(x, 0)``."""
    return leaky_relu(x, 0.0)


def sigmoid(x: Tensor, /) -> Tensor:
    """Elementwise logistic function."""
    y = np.empty_like(x.data)
    pos = x.data >= 0
    y[pos] = 1.0 / (1.0 + np.exp(-x.data[pos]))
    ex = np.exp(x.data[~pos])
    y[~pos] = ex / (1.0 + ex)

    def backward(g: np.ndarray) -> tuple[None | np.ndarray, ...]:
        return (g * y * (1.0 - y),)

    return _result(y, (x,), backward, "sigmoid")


def tanh(x: Tensor, /) -> Tensor:
    """Elementwise hyperbolic tangent."""
    y = np.tanh(x.data)

    def backward(g: np.ndarray) -> tuple[None | np.ndarray, ...]:
        return (g * (1.0 - y * y),)

    return _result(y, (x,), backward, "tanh")


def log(x: Tensor, /, *, floor: float = 1e-12) -> Tensor:
    """Elementwise natural log of ``max(x, floor)``.

    Entries clamped to ``floor`` receive zero gradient.

    """
    clamped = x.data < floor
    safe = np.where(clamped, floor, x.data)

    def backward(g: np.ndarray) -> tuple[None | np.ndarray, ...]:
        return (np.where(clamped, 0.0, g / safe),)

    return _result(np.log(safe), (x,), backward, "log")


def softmax_rows(x: Tensor, /, *, mask: None | np.ndarray = None) -> Tensor:
    """Row-wise softmax, optionally restricted to unmasked entries.

    Rows are shifted by their max (over unmasked entries) before
    exponentiation, so large logits don't overflow.

    Args:
        x: ``m x n`` logits.
        mask: Optional ``m x n`` boolean array where ``True`` marks entries
            that take part in the softmax. Masked entries are exactly 0.

    Returns:
        ``m x n`` probabilities whose rows sum to 1 over unmasked entries.

    Raises:
        `ShapeError`: If ``mask`` doesn't match ``x``.
        `DegenerateRowError`: If a row has every entry masked.

    Examples:
        >>> from ercfuse.tensor import Tensor, softmax_rows
        >>> softmax_rows(Tensor([[0.0, 0.0]])).data
        array([[0.5, 0.5]])

    """
    if x.ndim != 2:
        raise ShapeError(f"`softmax_rows` needs a 2-D tensor but got shape {x.shape}")
    keep = (
        np.ones(x.shape, dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
    )
    if keep.shape != x.shape:
        raise ShapeError(
            f"`softmax_rows` mask shape {keep.shape} doesn't match {x.shape}"
        )
    empty = ~keep.any(axis=1)
    if empty.any():
        raise DegenerateRowError(
            f"softmax rows {np.flatnonzero(empty).tolist()} are fully masked"
        )
    shifted = np.where(keep, x.data, -np.inf)
    shifted = shifted - shifted.max(axis=1, keepdims=True)
    e = np.where(keep, np.exp(shifted), 0.0)
    y = e / e.sum(axis=1, keepdims=True)

    def backward(g: np.ndarray) -> tuple[None | np.ndarray, ...]:
        return (y * (g - (g * y).sum(axis=1, keepdims=True)),)

    return _result(y, (x,), backward, "softmax_rows")


def segment_softmax(
    scores: Tensor, segments: Sequence[int] | np.ndarray, n: int, /
) -> Tensor:
    """Softmax of a column of scores within each segment.

    This is the edge-list form of a masked softmax: ``scores`` holds one
    score per edge and ``segments`` names the node each edge points into.
    Every segment's weights sum to 1; segments with no entries produce
    nothing.

    Args:
        scores: ``E x 1`` scores.
        segments: ``E`` segment ids in ``[0, n)``.
        n: Number of segments.

    Returns:
        ``E x 1`` weights.

    """
    seg = np.asarray(segments, dtype=np.int64)
    if scores.ndim != 2 or scores.shape[1] != 1 or seg.shape != (scores.shape[0],):
        raise ShapeError(
            f"`segment_softmax` got {seg.shape} segment ids for shape {scores.shape}"
        )
    s = scores.data[:, 0]
    top = np.full(n, -np.inf, dtype=s.dtype)
    np.maximum.at(top, seg, s)
    e = np.exp(s - top[seg])
    total = np.zeros(n, dtype=s.dtype)
    np.add.at(total, seg, e)
    y = (e / total[seg])[:, None]

    def backward(g: np.ndarray) -> tuple[None | np.ndarray, ...]:
        dots = np.zeros(n, dtype=g.dtype)
        np.add.at(dots, seg, (g * y)[:, 0])
        return (y * (g - dots[seg][:, None]),)

    return _result(y, (scores,), backward, "segment_softmax")


def layer_norm(
    x: Tensor, gain: Tensor, bias: Tensor, /, *, eps: float = 1e-5
) -> Tensor:
    """Normalize each row to zero mean and unit variance, then scale and shift.

    Args:
        x: ``m x n`` input.
        gain: Length-``n`` scale.
        bias: Length-``n`` shift.
        eps: Added to the variance so constant rows stay finite.

    Raises:
        `ShapeError`: If ``gain`` or ``bias`` don't have length ``n``.

    """
    if x.ndim != 2 or gain.shape != (x.shape[1],) or bias.shape != (x.shape[1],):
        raise ShapeError(
            f"`layer_norm` got input {x.shape}, gain {gain.shape}, bias {bias.shape}"
        )
    n = x.shape[1]
    mu = x.data.mean(axis=1, keepdims=True)
    centered = x.data - mu
    inv = 1.0 / np.sqrt((centered * centered).mean(axis=1, keepdims=True) + eps)
    xhat = centered * inv

    def backward(g: np.ndarray) -> tuple[None | np.ndarray, ...]:
        dxhat = g * gain.data
        dx = (
            inv
            / n
            * (
                n * dxhat
                - dxhat.sum(axis=1, keepdims=True)
                - xhat * (dxhat * xhat).sum(axis=1, keepdims=True)
            )
        )
        return dx, (g * xhat).sum(axis=0), g.sum(axis=0)

    out = xhat * gain.data + bias.data
    return _result(out, (x, gain, bias), backward, "layer_norm")


def dropout(
    x: Tensor, rate: float, /, *, train: bool, rng: np.random.Generator
) -> Tensor:
    """Inverted dropout.

    In training mode each entry is zeroed with probability ``rate`` and
    survivors are scaled by ``1 / (1 - rate)``; evaluation mode (and
    ``rate == 0``) returns ``x`` itself.

    Raises:
        `ConfigError`: If ``rate`` is outside ``[0, 1)``.

    """
    if not 0.0 <= rate < 1.0:
        raise ConfigError(f"dropout rate must be in [0, 1) but got {rate}")
    if not train or rate == 0.0:
        return x
    keep = (rng.random(x.shape) >= rate) / (1.0 - rate)
    keep = keep.astype(x.data.dtype)

    def backward(g: np.ndarray) -> tuple[None | np.ndarray, ...]:
        return (g * keep,)

    return _result(x.data * keep, (x,), backward, "dropout")


def scaled(x: Tensor, factor: float, /) -> Tensor:
    """Multiply by a constant (``1 / sqrt(d)`` attention scaling and the like)."""
    if not math.isfinite(factor):
        raise NumericalError(f"non-finite scale factor {factor}")
    return mul(x, factor)
