from typing import Callable

import numpy as np
import numpy.testing as npt
import pytest

import ercfuse
from ercfuse.config import ModelConfig
from ercfuse.data import Conversation, DatasetMeta
from ercfuse.train import evaluate_checkpoint, train


def _config(**kwargs: object) -> ModelConfig:
    defaults: dict[str, object] = {
        "d_model": 8,
        "heads": 2,
        "mdgat_layers": 1,
        "mpcat_layers": 1,
        "window": (2, 2),
        "ff_dim": 16,
        "text_hidden": 4,
        "lr": 1e-3,
        "dropout": 0.0,
        "batch_size": 2,
        "max_epochs": 3,
        "patience": 5,
    }
    return ModelConfig(**{**defaults, **kwargs})  # type: ignore[arg-type]


@pytest.fixture
def dataset() -> tuple[DatasetMeta, list[Conversation]]:
    return ercfuse.data.synth_dataset(0, 6, (3, 5), 3, 2, (6, 4, 4), 4.0)


def test_train_history(dataset: tuple[DatasetMeta, list[Conversation]]) -> None:
    meta, convs = dataset
    ckpt, history = train(_config(), meta, convs[:4], convs[4:], progress=False)
    assert list(history.columns) == ercfuse.train.trainer.HISTORY_COLUMNS
    assert history["epoch"].tolist() == [1, 2, 3]
    assert 1 <= ckpt.best_epoch <= 3
    assert ckpt.best_metric == history["valid_wa_f1"].max()
    assert np.isfinite(history["train_loss"]).all()


def test_train_reproducible(dataset: tuple[DatasetMeta, list[Conversation]]) -> None:
    meta, convs = dataset
    config = _config(dropout=0.2)
    a, hist_a = train(config, meta, convs[:4], convs[4:], progress=False)
    b, hist_b = train(config, meta, convs[:4], convs[4:], progress=False)
    npt.assert_array_equal(hist_a["train_loss"], hist_b["train_loss"])
    for name in a.params:
        npt.assert_array_equal(a.params[name], b.params[name])


def test_train_changes_parameters(
    dataset: tuple[DatasetMeta, list[Conversation]]
) -> None:
    meta, convs = dataset
    config = _config(max_epochs=1)
    initial = ercfuse.model.Model(config, meta).store.state_dict()
    ckpt, _ = train(config, meta, convs, progress=False)
    assert any(not np.array_equal(initial[k], ckpt.params[k]) for k in initial)


def test_train_early_stopping(dataset: tuple[DatasetMeta, list[Conversation]]) -> None:
    meta, convs = dataset
    config = _config(lr=0.0, weight_decay=0.0, max_epochs=10, patience=2)
    ckpt, history = train(config, meta, convs[:4], convs[4:], progress=False)
    # Nothing changes with a zero learning rate, so only the first epoch improves.
    assert len(history) == 3
    assert ckpt.best_epoch == 1


def test_train_rejects_invalid_dataset(
    dataset: tuple[DatasetMeta, list[Conversation]]
) -> None:
    meta, convs = dataset
    other = DatasetMeta(num_classes=1, num_speakers=2, dims=meta.dims)
    with pytest.raises(ercfuse.errors.ValidationError):
        train(_config(), other, convs, progress=False)


def test_train_numerical_error(
    dataset: tuple[DatasetMeta, list[Conversation]], monkeypatch: pytest.MonkeyPatch
) -> None:
    meta, convs = dataset

    def diverge(*args: object) -> None:
        raise ercfuse.errors.NumericalError("non-finite values produced by `log`")

    monkeypatch.setattr(ercfuse.model.head, "loss", diverge)
    with pytest.raises(ercfuse.errors.NumericalError) as e:
        train(_config(), meta, convs, progress=False)
    assert e.value.diagnostics["epoch"] == 1
    assert e.value.diagnostics["batch"] == 0


def test_evaluate_checkpoint(dataset: tuple[DatasetMeta, list[Conversation]]) -> None:
    meta, convs = dataset
    ckpt, _ = train(_config(max_epochs=1), meta, convs[:4], convs[4:], progress=False)
    report = evaluate_checkpoint(ckpt, meta, convs)
    assert report.confusion.sum() == sum(len(c) for c in convs)
    with pytest.raises(ercfuse.errors.ConfigError):
        evaluate_checkpoint(ckpt, DatasetMeta(3, 2, (5, 4, 4)), convs)


@pytest.mark.slow
def test_learns_separable_data() -> None:
    meta, convs = ercfuse.data.synth_dataset(0, 40, (6, 10), 4, 2, (16, 8, 8), 6.0)
    train_set, valid_set, test_set = ercfuse.data.split_conversations(convs, seed=0)
    config = _config(
        d_model=16, heads=2, max_epochs=30, patience=10, batch_size=4, dropout=0.1
    )
    ckpt, _ = train(config, meta, train_set, valid_set, progress=False)
    report = evaluate_checkpoint(ckpt, meta, test_set)
    assert report.weighted_f1 > 0.9


@pytest.mark.slow
def test_reaches_high_training_accuracy() -> None:
    meta, convs = ercfuse.data.synth_dataset(
        0, 50, (6, 10), 4, 2, (16, 8, 8), 6.0, persistence=0.6
    )
    config = _config(
        d_model=64,
        heads=4,
        ff_dim=128,
        text_hidden=16,
        lr=1e-3,
        max_epochs=60,
        patience=60,
        batch_size=4,
    )
    ckpt, history = train(config, meta, convs, progress=False)
    assert len(history) <= 60
    assert evaluate_checkpoint(ckpt, meta, convs).accuracy >= 0.95


_ABLATION: dict[str, object] = {
    "d_model": 16,
    "mdgat_layers": 2,
    "mpcat_layers": 1,
    "window": (4, 4),
    "max_epochs": 30,
    "patience": 10,
    "batch_size": 4,
}


def _wins_majority(
    make_data: Callable[[int], tuple[DatasetMeta, list[Conversation]]],
    better: dict[str, object],
    worse: dict[str, object],
) -> bool:
    wins = 0
    for seed in range(3):
        meta, convs = make_data(seed)
        train_set, valid_set, test_set = ercfuse.data.split_conversations(
            convs, fractions=(0.6, 0.2, 0.2), seed=seed
        )
        scores = []
        for overrides in (better, worse):
            config = _config(**{**_ABLATION, "seed": seed, **overrides})
            ckpt, _ = train(config, meta, train_set, valid_set, progress=False)
            scores.append(evaluate_checkpoint(ckpt, meta, test_set).weighted_f1)
        wins += scores[0] >= scores[1]
    return wins >= 2


def _noisy_context(seed: int) -> tuple[DatasetMeta, list[Conversation]]:
    return ercfuse.data.synth_dataset(
        seed, 40, (8, 12), 3, 2, (12, 6, 6), 6.0, persistence=0.9, noise_rate=0.4
    )


def _weak_modalities(seed: int) -> tuple[DatasetMeta, list[Conversation]]:
    return ercfuse.data.synth_dataset(
        seed, 40, (6, 10), 3, 2, (12, 6, 6), 6.0, modal_signal=(0.3, 0.3, 0.3)
    )


def _speaker_driven(seed: int) -> tuple[DatasetMeta, list[Conversation]]:
    return ercfuse.data.synth_dataset(
        seed, 40, (6, 10), 4, 4, (12, 6, 6), 1.0, speaker_bias=0.8
    )


@pytest.mark.slow
def test_context_window_not_worse_than_none() -> None:
    assert _wins_majority(_noisy_context, {"window": (4, 4)}, {"window": (0, 0)})


@pytest.mark.slow
def test_three_modalities_not_worse_than_two() -> None:
    assert _wins_majority(
        _weak_modalities,
        {"modalities": ("t", "a", "v")},
        {"modalities": ("t", "a")},
    )


@pytest.mark.slow
def test_graph_and_cross_modal_layers_not_worse_than_none() -> None:
    assert _wins_majority(
        _noisy_context,
        {"mdgat_layers": 2, "mpcat_layers": 1},
        {"mdgat_layers": 0, "mpcat_layers": 0},
    )


@pytest.mark.slow
def test_speaker_embeddings_not_worse_than_none() -> None:
    assert _wins_majority(
        _speaker_driven, {"speaker_weight": 1.6}, {"speaker_weight": 0.0}
    )
