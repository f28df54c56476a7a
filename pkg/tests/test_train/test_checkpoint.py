import math
import pathlib

import numpy as np
import numpy.testing as npt
import pytest

import ercfuse
from ercfuse.config import ModelConfig
from ercfuse.model import Model
from ercfuse.train import Checkpoint, load_checkpoint, save_checkpoint


@pytest.fixture
def model() -> Model:
    meta, _ = ercfuse.data.synth_dataset(0, 1, (3, 3), 3, 2, (6, 4, 4), 4.0)
    config = ModelConfig(
        d_model=8, heads=2, mdgat_layers=1, mpcat_layers=1, window=(1, 1), ff_dim=16
    )
    return Model(config, meta)


def test_save_load_restores_model(model: Model, tmp_path: pathlib.Path) -> None:
    ckpt = Checkpoint.from_model(model, best_metric=0.5, best_epoch=3)
    path = save_checkpoint(tmp_path / "model.ercf", ckpt)
    loaded = load_checkpoint(path)
    assert loaded.config == model.config
    assert loaded.meta == model.meta
    assert loaded.best_metric == 0.5
    assert loaded.best_epoch == 3
    assert list(loaded.params) == list(ckpt.params)
    restored = loaded.to_model()
    for a, b in zip(model.parameters(), restored.parameters()):
        npt.assert_array_equal(a.data, b.data)


def test_save_load_untrained_metric(model: Model, tmp_path: pathlib.Path) -> None:
    path = save_checkpoint(tmp_path / "model.ercf", Checkpoint.from_model(model))
    assert math.isnan(load_checkpoint(path).best_metric)


def test_load_bad_magic(tmp_path: pathlib.Path) -> None:
    path = tmp_path / "bad.ercf"
    path.write_bytes(b"NOPE" + b"\x00" * 16)
    with pytest.raises(ercfuse.errors.ParseError):
        load_checkpoint(path)


def test_load_truncated(model: Model, tmp_path: pathlib.Path) -> None:
    path = save_checkpoint(tmp_path / "model.ercf", Checkpoint.from_model(model))
    data = path.read_bytes()
    path.write_bytes(data[: len(data) - 10])
    with pytest.raises(ercfuse.errors.ParseError, match="truncated"):
        load_checkpoint(path)


def test_load_wrong_version(model: Model, tmp_path: pathlib.Path) -> None:
    path = save_checkpoint(tmp_path / "model.ercf", Checkpoint.from_model(model))
    data = bytearray(path.read_bytes())
    data[4:8] = (99).to_bytes(4, "little")
    path.write_bytes(bytes(data))
    with pytest.raises(ercfuse.errors.ConfigError):
        load_checkpoint(path)


def test_to_model_shape_mismatch(model: Model) -> None:
    ckpt = Checkpoint.from_model(model)
    ckpt.params["fusion.w_u"] = np.zeros((2, 2))
    with pytest.raises(ercfuse.errors.ConfigError):
        ckpt.to_model()


def test_save_load_predictions_bit_identical(
    model: Model, tmp_path: pathlib.Path
) -> None:
    _, convs = ercfuse.data.synth_dataset(1, 4, (1, 6), 3, 2, (6, 4, 4), 4.0)
    path = save_checkpoint(tmp_path / "model.ercf", Checkpoint.from_model(model))
    restored = load_checkpoint(path).to_model()
    for conv in convs:
        npt.assert_array_equal(restored.forward(conv).data, model.forward(conv).data)
        npt.assert_array_equal(restored.predict(conv), model.predict(conv))
