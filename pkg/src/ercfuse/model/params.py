"""Named parameter storage and seeded initialization."""

from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .. import backend
from ..errors import ConfigError
from ..tensor import Tensor


class ParamStore:
    """Ordered collection of named, trainable tensors.

    Parameters are drawn from one generator in creation order, so building
    the same model twice with the same seed gives identical parameters.

    Args:
        rng: Generator used for every random initialization.

    """

    #: Parameters by name, in creation order.
    params: dict[str, Tensor]

    def __init__(self, rng: np.random.Generator, /) -> None:
        self.params = {}
        self._rng = rng

    def __contains__(self, name: object) -> bool:
        return name in self.params

    def __getitem__(self, name: str) -> Tensor:
        return self.params[name]

    def __iter__(self) -> Iterator[Tensor]:
        return iter(self.params.values())

    def __len__(self) -> int:
        return len(self.params)

    def _add(self, name: str, data: np.ndarray) -> Tensor:
        if name in self.params:
            raise ConfigError(f"parameter `{name}` is defined twice")
        t = Tensor(data.astype(backend.dtype), requires_grad=True, name=name)
        self.params[name] = t
        return t

    def bias(self, name: str, n: int, /) -> Tensor:
        """Zero-initialized vector."""
        return self._add(name, np.zeros(n))

    def gain(self, name: str, n: int, /) -> Tensor:
        """One-initialized vector (layer normalization gains)."""
        return self._add(name, np.ones(n))

    def load_state_dict(self, state: dict[str, np.ndarray], /) -> None:
        """Copy values into existing parameters.

        Raises:
            `ConfigError`: If names or shapes don't match exactly.

        """
        missing = set(self.params) - set(state)
        extra = set(state) - set(self.params)
        if missing or extra:
            raise ConfigError(
                f"parameter names don't match (missing {sorted(missing)}, "
                f"unexpected {sorted(extra)})"
            )
        for name, value in state.items():
            p = self.params[name]
            if value.shape != p.shape:
                raise ConfigError(
                    f"parameter `{name}` has shape {p.shape} but the stored value "
                    f"has shape {value.shape}"
                )
            p.data[...] = value

    def normal(self, name: str, shape: tuple[int, int], /, *, std: float) -> Tensor:
        """Gaussian-initialized matrix."""
        return self._add(name, self._rng.normal(0.0, std, size=shape))

    def state_dict(self) -> dict[str, np.ndarray]:
        """Copies of every parameter's values by name."""
        return {name: p.data.copy() for name, p in self.params.items()}

    def weight(self, name: str, fan_in: int, fan_out: int, /) -> Tensor:
        """``fan_in x fan_out`` matrix drawn from ``U(-s, s)`` with
        ``s = 1 / sqrt(fan_in)``.

        """
        s = 1.0 / np.sqrt(fan_in)
        return self._add(name, self._rng.uniform(-s, s, size=(fan_in, fan_out)))


@dataclass(frozen=True)
class Linear:
    """Affine map ``x @ weight + bias`` over rows."""

    #: ``in x out`` weight.
    weight: Tensor

    #: Length-``out`` bias, or ``None`` for a purely linear map.
    bias: None | Tensor = None

    def __call__(self, x: Tensor, /) -> Tensor:
        out = x @ self.weight
        return out if self.bias is None else out + self.bias

    @classmethod
    def init(
        cls,
        store: ParamStore,
        name: str,
        fan_in: int,
        fan_out: int,
        /,
        *,
        bias: bool = True,
    ) -> "Linear":
        """Create the layer's parameters as ``<name>.weight`` and ``<name>.bias``."""
        return cls(
            store.weight(f"{name}.weight", fan_in, fan_out),
            store.bias(f"{name}.bias", fan_out) if bias else None,
        )
