"""Testing utils used for ``ercfuse``'s own unit tests and the ``gradcheck``
command.

"""

import logging
import pathlib
from dataclasses import dataclass, field
from typing import Any, Callable, Generator, Sequence

import numpy as np

from . import backend
from .config import ModelConfig
from .data.jsonl import save_jsonl
from .data.synth import synth_dataset
from .errors import ConfigError
from .model import head
from .model.network import Model
from .tensor import Tape, Tensor

logging.basicConfig(
    format="%(asctime)s | %(levelname)s | %(message)s", level=logging.INFO
)
logger = logging.getLogger(__name__)

GRAD_TOLERANCE = 1e-3
"""Largest relative error a full-model gradient check accepts."""

REL_FLOOR = 1e-5
"""Denominator floor of the relative error so that near-zero gradients are
compared absolutely.

"""


def numerical_grad(
    fn: Callable[[], float], x: Tensor, /, *, h: float = 1e-6
) -> np.ndarray:
    """Central finite-difference gradient of ``fn`` with respect to ``x``.

    ``x`` is perturbed in place one coordinate at a time and restored.

    Args:
        fn: Zero-argument function returning a scalar that depends on ``x``.
        x: Tensor to differentiate with respect to.
        h: Step size.

    Returns:
        An array shaped like ``x``.

    """
    grad = np.zeros_like(x.data, dtype=np.float64)
    flat = x.data.reshape(-1)
    out = grad.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        plus = fn()
        flat[i] = orig - h
        minus = fn()
        flat[i] = orig
        out[i] = (plus - minus) / (2 * h)
    return grad


def relative_error(analytic: np.ndarray, numeric: np.ndarray, /) -> float:
    """Largest coordinate-wise ``|a - n| / max(|a|, |n|, floor)``."""
    if analytic.size == 0:
        return 0.0
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), REL_FLOOR)
    return float((np.abs(analytic - numeric) / denom).max())


def check_gradients(
    loss_fn: Callable[[], Tensor],
    params: Sequence[Tensor],
    /,
    *,
    h: float = 1e-6,
    corrupt: None | str = None,
) -> dict[str, float]:
    """Compare backpropagated gradients against central finite differences.

    Args:
        loss_fn: Zero-argument function computing a scalar loss from
            ``params``. It's called once under a tape and then repeatedly
            without one.
        params: Tensors to check. Their gradients are reset.
        h: Finite-difference step.
        corrupt: Name of a parameter whose analytic gradient is perturbed
            before comparison (fault injection for testing the checker).

    Returns:
        The worst relative error of every parameter, by name.

    Examples:
        >>> import numpy as np
        >>> from ercfuse.tensor import Tensor
        >>> from ercfuse.testing import check_gradients
        >>> x = Tensor(np.array([1.0, 2.0]), requires_grad=True, name="x")
        >>> errors = check_gradients(lambda: (x * x).sum(), [x])
        >>> errors["x"] < 1e-6
        True

    """
    for p in params:
        p.zero_grad()
    with Tape() as tape:
        loss = loss_fn()
    tape.backward(loss)

    errors = {}
    for i, p in enumerate(params):
        name = p.name or str(i)
        analytic = np.zeros_like(p.data) if p.grad is None else p.grad.copy()
        if name == corrupt:
            analytic.reshape(-1)[0] += 1.0
        numeric = numerical_grad(lambda: loss_fn().item(), p, h=h)
        errors[name] = relative_error(analytic, numeric)
    return errors


@dataclass
class GradcheckReport:
    """Result of a full-model gradient check."""

    #: Worst relative error of every parameter.
    errors: dict[str, float]

    #: Acceptance threshold.
    tolerance: float = GRAD_TOLERANCE

    #: Extra context (config, conversation size).
    context: dict[str, Any] = field(default_factory=dict)

    @property
    def failures(self) -> list[str]:
        """Parameters whose error reaches the tolerance."""
        return [name for name, err in self.errors.items() if not err < self.tolerance]

    @property
    def passed(self) -> bool:
        """Whether every parameter is within tolerance."""
        return not self.failures

    def by_module(self) -> dict[str, float]:
        """Worst error per top-level module (``encoder``, ``mdgat``, ...)."""
        out: dict[str, float] = {}
        for name, err in self.errors.items():
            module = name.split(".", 1)[0]
            out[module] = max(out.get(module, 0.0), err)
        return out

    def to_dict(self) -> dict[str, Any]:
        """JSON-serializable summary."""
        return {
            "status": "PASS" if self.passed else "FAIL",
            "worst": max(self.errors.values(), default=0.0),
            "tolerance": self.tolerance,
            "modules": self.by_module(),
            "failures": self.failures,
            **self.context,
        }


def gradcheck_model(
    config: ModelConfig,
    /,
    *,
    m: int = 4,
    num_classes: int = 3,
    num_speakers: int = 2,
    dims: tuple[int, int, int] = (4, 3, 3),
    corrupt: None | str = None,
) -> GradcheckReport:
    """Gradient-check every parameter of a full model on one synthetic
    conversation in evaluation mode.

    Raises:
        `ConfigError`: If tensors aren't 64-bit.

    """
    if backend.dtype != np.float64:
        raise ConfigError("gradient checks need ERCFUSE_PRECISION=float64")
    meta, (conv,) = synth_dataset(
        config.seed, 1, (m, m), num_classes, num_speakers, dims, 2.0
    )
    model = Model(config, meta)

    def loss_fn() -> Tensor:
        return head.loss([model.forward(conv)], [conv.labels])

    errors = check_gradients(loss_fn, model.parameters(), corrupt=corrupt)
    return GradcheckReport(
        errors=errors, context={"m": m, "parameters": model.num_parameters()}
    )


def jsonl_dataset(
    path: str | pathlib.Path,
    /,
    *,
    seed: int = 0,
    num_convs: int = 5,
    m_range: tuple[int, int] = (2, 5),
    num_classes: int = 3,
    num_speakers: int = 2,
    dims: tuple[int, int, int] = (6, 4, 4),
    separation: float = 4.0,
) -> Generator[pathlib.Path, None, None]:
    """Yield the path of a synthetic dataset file that's deleted after use.

    Examples:
        Using the testing util as a pytest fixture.

        >>> import pathlib
        >>> import pytest
        >>> @pytest.fixture
        ... def dataset(tmp_path: pathlib.Path) -> pathlib.Path:
        ...     yield from ercfuse.testing.jsonl_dataset(tmp_path / "data.jsonl")

    """
    path = pathlib.Path(path)
    meta, convs = synth_dataset(
        seed, num_convs, m_range, num_classes, num_speakers, dims, separation
    )
    save_jsonl(path, meta, convs)
    yield path
    path.unlink(missing_ok=True)
