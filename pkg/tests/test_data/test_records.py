import numpy as np
import pytest

import ercfuse
from ercfuse.data import Conversation, DatasetMeta, UtteranceRecord


def _utt(
    speaker: int = 0, label: int = 0, dims: tuple[int, int, int] = (3, 2, 2)
) -> UtteranceRecord:
    return UtteranceRecord(
        speaker=speaker,
        label=label,
        text=np.zeros(dims[0]),
        audio=np.zeros(dims[1]),
        visual=np.zeros(dims[2]),
    )


@pytest.fixture
def meta() -> DatasetMeta:
    return DatasetMeta(num_classes=3, num_speakers=2, dims=(3, 2, 2))


def test_conversation_accessors() -> None:
    conv = Conversation(id="c0", utterances=[_utt(0, 1), _utt(1, 2)])
    assert len(conv) == 2
    assert conv.labels.tolist() == [1, 2]
    assert conv.speakers.tolist() == [0, 1]
    assert conv.features("t").shape == (2, 3)
    assert conv.features("v").shape == (2, 2)


def test_meta_class_names() -> None:
    assert DatasetMeta(2, 1, (1, 1, 1)).class_names == ("0", "1")
    assert DatasetMeta(2, 1, (1, 1, 1), ("a", "b")).class_names == ("a", "b")


@pytest.mark.parametrize(
    "args",
    [
        (0, 1, (1, 1, 1)),
        (2, 0, (1, 1, 1)),
        (2, 1, (1, 0, 1)),
        (2, 1, (1, 1, 1), ("a",)),
    ],
)
def test_meta_invalid(args: tuple[object, ...]) -> None:
    with pytest.raises(ercfuse.errors.ValidationError):
        DatasetMeta(*args)  # type: ignore[arg-type]


def test_validate_ok(meta: DatasetMeta) -> None:
    ercfuse.data.validate_dataset(meta, [Conversation(id="c0", utterances=[_utt()])])


@pytest.mark.parametrize(
    "convs,match",
    [
        ([Conversation(id="c0")], "no utterances"),
        (
            [
                Conversation(id="c0", utterances=[_utt()]),
                Conversation(id="c0", utterances=[_utt()]),
            ],
            "more than once",
        ),
        ([Conversation(id="c0", utterances=[_utt(label=3)])], "label"),
        ([Conversation(id="c0", utterances=[_utt(speaker=2)])], "speaker"),
        ([Conversation(id="c0", utterances=[_utt(dims=(4, 2, 2))])], "shape"),
    ],
)
def test_validate_names_conversation(
    meta: DatasetMeta, convs: list[Conversation], match: str
) -> None:
    with pytest.raises(ercfuse.errors.ValidationError, match=match) as e:
        ercfuse.data.validate_dataset(meta, convs)
    assert "c0" in str(e.value)


def test_validate_non_finite(meta: DatasetMeta) -> None:
    utt = _utt()
    utt.audio[0] = np.nan
    with pytest.raises(ercfuse.errors.ValidationError, match="non-finite"):
        ercfuse.data.validate_dataset(meta, [Conversation(id="c0", utterances=[utt])])
