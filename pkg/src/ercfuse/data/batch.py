"""Grouping conversations into training batches and dataset splits."""

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import ConfigError
from .records import Conversation


@dataclass(frozen=True)
class Batch:
    """Whole conversations trained together in one optimizer step.

    There's no padding; each conversation keeps its own graph and the batch
    loss is normalized by the total number of utterances.

    """

    #: Conversations in their original order.
    conversations: tuple[Conversation, ...]

    def __len__(self) -> int:
        return len(self.conversations)

    @property
    def num_utterances(self) -> int:
        """Total number of utterances across the batch."""
        return sum(len(c) for c in self.conversations)


def batch_conversations(
    convs: Sequence[Conversation], batch_size: int, /
) -> list[Batch]:
    """Split ``convs`` into consecutive batches of ``batch_size`` conversations.

    The last batch holds the remainder. Conversations are never split or
    reordered.

    Raises:
        `ConfigError`: If ``batch_size < 1``.

    Examples:
        >>> from ercfuse.data import Conversation, batch_conversations
        >>> convs = [Conversation(id=str(i)) for i in range(10)]
        >>> [len(b) for b in batch_conversations(convs, 4)]
        [4, 4, 2]

    """
    if batch_size < 1:
        raise ConfigError(f"batch size must be >= 1 but got {batch_size}")
    return [
        Batch(tuple(convs[i : i + batch_size]))
        for i in range(0, len(convs), batch_size)
    ]


def split_conversations(
    convs: Sequence[Conversation],
    /,
    *,
    fractions: tuple[float, float, float] = (0.8, 0.1, 0.1),
    seed: int = 0,
) -> tuple[list[Conversation], list[Conversation], list[Conversation]]:
    """Shuffle conversations (seeded) and split them into train, validation,
    and test sets by conversation.

    Returns:
        Train, validation, and test conversations. Validation and test each
        get at least one conversation when there are at least three.

    """
    if not np.isclose(sum(fractions), 1.0) or min(fractions) < 0:
        raise ConfigError(
            f"split fractions must be >= 0 and sum to 1 but got {fractions}"
        )
    order = np.random.default_rng(seed).permutation(len(convs))
    n = len(convs)
    n_valid = int(round(fractions[1] * n))
    n_test = int(round(fractions[2] * n))
    if n >= 3:
        n_valid = max(n_valid, 1 if fractions[1] > 0 else 0)
        n_test = max(n_test, 1 if fractions[2] > 0 else 0)
    n_train = n - n_valid - n_test
    shuffled = [convs[i] for i in order]
    return (
        shuffled[:n_train],
        shuffled[n_train : n_train + n_valid],
        shuffled[n_train + n_valid :],
    )
