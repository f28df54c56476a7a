import pytest

import ercfuse
from ercfuse.config import ModelConfig, UpdateRule
from ercfuse.train.sweep import SWEEP_COLUMNS, ablation_sweep, axis_overrides


@pytest.mark.parametrize(
    "axis,value,expected",
    [
        ("windows", "2:3", {"window": (2, 3)}),
        ("layers", "0:4", {"mdgat_layers": 0, "mpcat_layers": 4}),
        ("lambda", "0.5", {"speaker_weight": 0.5}),
        ("update_rule", "Concat", {"update_rule": UpdateRule.CONCAT}),
        ("modalities", "va", {"modalities": ("a", "v")}),
    ],
)
def test_axis_overrides(axis: str, value: str, expected: dict[str, object]) -> None:
    assert axis_overrides(axis, value) == expected


@pytest.mark.parametrize(
    "axis,value", [("depth", "3"), ("windows", "3"), ("modalities", "t")]
)
def test_axis_overrides_invalid(axis: str, value: str) -> None:
    with pytest.raises(ercfuse.errors.ConfigError):
        axis_overrides(axis, value)


def test_ablation_sweep_rows() -> None:
    meta, convs = ercfuse.data.synth_dataset(0, 5, (2, 4), 3, 2, (6, 4, 4), 4.0)
    base = ModelConfig(
        d_model=8,
        heads=2,
        mdgat_layers=1,
        mpcat_layers=1,
        window=(1, 1),
        ff_dim=16,
        text_hidden=4,
        lr=1e-3,
        max_epochs=1,
    )
    table = ablation_sweep(
        base, "windows", ["0:0", "2:2"], meta, convs[:3], convs[3:], workers=2
    )
    assert list(table.columns) == SWEEP_COLUMNS
    assert table["value"].tolist() == ["0:0", "2:2"]
    assert (table["axis"] == "windows").all()
    assert table["epochs"].tolist() == [1, 1]
    assert table["wa_f1"].between(0.0, 1.0).all()


def test_ablation_sweep_checks_values_first() -> None:
    meta, convs = ercfuse.data.synth_dataset(0, 3, (2, 3), 3, 2, (6, 4, 4), 4.0)
    base = ModelConfig(d_model=8, heads=2, window=(1, 1), max_epochs=1)
    with pytest.raises(ercfuse.errors.ConfigError):
        ablation_sweep(base, "update_rule", ["Sum", "Product"], meta, convs, convs)
