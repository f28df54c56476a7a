"""Versioned binary checkpoints.

Layout (all integers little-endian)::

    b"ERCF" | uint32 version | uint32 header length | header (UTF-8 JSON)
    uint32 parameter count
    per parameter:
        uint16 name length | name (UTF-8) | uint8 ndim | uint32 dims[ndim]
        float64 values (little-endian, C order)

The JSON header holds the model config, the dataset dimensions, the
training RNG states, and the best validation metric.

"""

import json
import pathlib
import struct
from dataclasses import dataclass, field
from typing import Any, BinaryIO

import numpy as np

from ..config import ModelConfig
from ..data.records import DatasetMeta
from ..errors import ConfigError, ParseError
from ..model.network import Model

MAGIC = b"ERCF"
"""File signature."""

VERSION = 1
"""Current checkpoint format version."""


@dataclass
class Checkpoint:
    """Everything needed to rebuild a trained model exactly."""

    #: Hyperparameters.
    config: ModelConfig

    #: Dataset dimensions the model was built for.
    meta: DatasetMeta

    #: Parameter values by name.
    params: dict[str, np.ndarray]

    #: Best validation weighted F1 seen during training.
    best_metric: float = float("nan")

    #: Epoch at which :attr:`best_metric` was reached (0 if untrained).
    best_epoch: int = 0

    #: Bit generator states of the training generators.
    rng_state: dict[str, Any] = field(default_factory=dict)

    #: Format version.
    version: int = VERSION

    @classmethod
    def from_model(cls, model: Model, /, **kwargs: Any) -> "Checkpoint":
        """Snapshot a model's current parameters."""
        return cls(
            config=model.config,
            meta=model.meta,
            params=model.store.state_dict(),
            **kwargs,
        )

    def to_model(self) -> Model:
        """Build a model and load the stored parameters into it.

        Raises:
            `ConfigError`: If the stored parameters don't match the
                architecture described by the stored config.

        """
        model = Model(self.config, self.meta)
        model.store.load_state_dict(self.params)
        return model


def _meta_to_dict(meta: DatasetMeta) -> dict[str, Any]:
    return {
        "c": meta.num_classes,
        "n": meta.num_speakers,
        "dims": list(meta.dims),
        "classes": list(meta.classes),
    }


def _meta_from_dict(data: dict[str, Any]) -> DatasetMeta:
    return DatasetMeta(
        num_classes=int(data["c"]),
        num_speakers=int(data["n"]),
        dims=tuple(int(d) for d in data["dims"]),  # type: ignore[arg-type]
        classes=tuple(data.get("classes", ())),
    )


def _read(f: BinaryIO, n: int, path: pathlib.Path) -> bytes:
    data = f.read(n)
    if len(data) != n:
        raise ParseError(f"{path} is truncated")
    return data


def save_checkpoint(path: str | pathlib.Path, ckpt: Checkpoint, /) -> pathlib.Path:
    """Write a checkpoint file.

    Returns:
        The written path.

    """
    path = pathlib.Path(path)
    header = json.dumps(
        {
            "config": ckpt.config.to_dict(),
            "meta": _meta_to_dict(ckpt.meta),
            "best_metric": None if np.isnan(ckpt.best_metric) else ckpt.best_metric,
            "best_epoch": ckpt.best_epoch,
            "rng_state": ckpt.rng_state,
        }
    ).encode("utf-8")
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<II", VERSION, len(header)))
        f.write(header)
        f.write(struct.pack("<I", len(ckpt.params)))
        for name, value in ckpt.params.items():
            encoded = name.encode("utf-8")
            f.write(struct.pack("<H", len(encoded)))
            f.write(encoded)
            f.write(struct.pack("<B", value.ndim))
            f.write(struct.pack(f"<{value.ndim}I", *value.shape))
            f.write(np.ascontiguousarray(value, dtype="<f8").tobytes())
    return path


def load_checkpoint(path: str | pathlib.Path, /) -> Checkpoint:
    """Read a checkpoint file.

    Raises:
        `OSError`: If the file can't be read.
        `ParseError`: If the file isn't a checkpoint or is truncated.
        `ConfigError`: If the format version is unsupported.

    """
    path = pathlib.Path(path)
    with open(path, "rb") as f:
        if _read(f, 4, path) != MAGIC:
            raise ParseError(f"{path} is not an ercfuse checkpoint")
        version, header_len = struct.unpack("<II", _read(f, 8, path))
        if version != VERSION:
            raise ConfigError(
                f"{path} has checkpoint version {version}; only {VERSION} is supported"
            )
        try:
            header = json.loads(_read(f, header_len, path).decode("utf-8"))
        except ValueError as e:
            raise ParseError(f"{path} has a corrupt header: {e}") from e
        (count,) = struct.unpack("<I", _read(f, 4, path))
        params: dict[str, np.ndarray] = {}
        for _ in range(count):
            (name_len,) = struct.unpack("<H", _read(f, 2, path))
            name = _read(f, name_len, path).decode("utf-8")
            (ndim,) = struct.unpack("<B", _read(f, 1, path))
            shape = struct.unpack(f"<{ndim}I", _read(f, 4 * ndim, path))
            size = int(np.prod(shape, dtype=np.int64))
            values = np.frombuffer(_read(f, 8 * size, path), dtype="<f8")
            params[name] = values.reshape(shape).astype(np.float64)
    best = header.get("best_metric")
    return Checkpoint(
        config=ModelConfig.from_dict(header["config"]),
        meta=_meta_from_dict(header["meta"]),
        params=params,
        best_metric=float("nan") if best is None else float(best),
        best_epoch=int(header.get("best_epoch", 0)),
        rng_state=header.get("rng_state", {}),
        version=version,
    )
