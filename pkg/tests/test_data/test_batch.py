import pytest

import ercfuse
from ercfuse.data import Conversation


@pytest.fixture
def convs() -> list[Conversation]:
    _, convs = ercfuse.data.synth_dataset(0, 10, (2, 4), 3, 2, (4, 3, 3), 2.0)
    return convs


def test_batch_conversations(convs: list[Conversation]) -> None:
    batches = ercfuse.data.batch_conversations(convs, 4)
    assert [len(b) for b in batches] == [4, 4, 2]
    assert [c.id for b in batches for c in b.conversations] == [c.id for c in convs]
    assert sum(b.num_utterances for b in batches) == sum(len(c) for c in convs)


def test_batch_size_invalid(convs: list[Conversation]) -> None:
    with pytest.raises(ercfuse.errors.ConfigError):
        ercfuse.data.batch_conversations(convs, 0)


def test_split_conversations(convs: list[Conversation]) -> None:
    train, valid, test = ercfuse.data.split_conversations(convs, seed=3)
    assert (len(train), len(valid), len(test)) == (8, 1, 1)
    ids = [c.id for c in train + valid + test]
    assert sorted(ids) == sorted(c.id for c in convs)
    again = ercfuse.data.split_conversations(convs, seed=3)
    assert [c.id for c in again[0]] == [c.id for c in train]


def test_split_small(convs: list[Conversation]) -> None:
    train, valid, test = ercfuse.data.split_conversations(convs[:3])
    assert (len(train), len(valid), len(test)) == (1, 1, 1)


def test_split_invalid_fractions(convs: list[Conversation]) -> None:
    with pytest.raises(ercfuse.errors.ConfigError):
        ercfuse.data.split_conversations(convs, fractions=(0.5, 0.5, 0.5))
