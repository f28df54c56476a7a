"""Seeded synthetic conversation corpora.

Every class gets one Gaussian prototype per modality; an utterance's
features are its class prototype plus unit Gaussian noise. Labels follow a
Markov chain within each conversation (an emotion tends to persist across
adjacent utterances), so a model that looks at context can beat one that
doesn't.

"""

import logging
from typing import Sequence

import numpy as np

from .. import backend
from ..errors import ConfigError
from .records import Conversation, DatasetMeta, UtteranceRecord

logging.basicConfig(
    format="%(asctime)s | %(levelname)s | %(message)s", level=logging.INFO
)
logger = logging.getLogger(__name__)


def class_prototypes(
    rng: np.random.Generator, num_classes: int, dim: int, separation: float, /
) -> np.ndarray:
    """Draw ``num_classes`` prototypes in ``dim`` dimensions whose pairwise
    distances are ``separation``.

    Prototypes are scaled orthonormal directions when ``dim >= num_classes``.
    With fewer dimensions than classes they're scaled random unit vectors,
    so pairwise distances are only approximately ``separation``.

    Returns:
        A ``num_classes x dim`` array.

    """
    if dim >= num_classes:
        q, _ = np.linalg.qr(rng.standard_normal((dim, num_classes)))
        directions = q.T
    else:
        directions = rng.standard_normal((num_classes, dim))
        directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    return directions * (separation / np.sqrt(2.0))


def markov_labels(
    rng: np.random.Generator, m: int, num_classes: int, persistence: float, /
) -> list[int]:
    """Draw ``m`` labels from a symmetric persistence chain.

    The first label is uniform; every following label repeats the previous
    one with probability ``persistence`` and otherwise moves uniformly to
    one of the other classes. The chain's stationary distribution is
    uniform.

    """
    labels = [int(rng.integers(num_classes))]
    for _ in range(m - 1):
        prev = labels[-1]
        if num_classes == 1 or rng.random() < persistence:
            labels.append(prev)
        else:
            step = int(rng.integers(1, num_classes))
            labels.append((prev + step) % num_classes)
    return labels


def synth_dataset(
    seed: int,
    num_convs: int,
    m_range: tuple[int, int],
    num_classes: int,
    num_speakers: int,
    dims: tuple[int, int, int],
    separation: float,
    /,
    *,
    persistence: float = 0.6,
    noise_rate: float = 0.0,
    speaker_bias: float = 0.0,
    modal_signal: Sequence[float] = (1.0, 1.0, 1.0),
) -> tuple[DatasetMeta, list[Conversation]]:
    """Generate a learnable tri-modal dataset.

    Args:
        seed: Seed for every random draw; the same arguments always give the
            same dataset.
        num_convs: Number of conversations.
        m_range: Inclusive ``(min, max)`` conversation length.
        num_classes: Number of emotion classes ``C``.
        num_speakers: Number of speaker ids ``n``. Each conversation draws
            two participants (one if ``n == 1``).
        dims: Feature widths ``(d_t, d_a, d_v)``.
        separation: Distance between class prototypes. Zero means features
            carry no class signal.
        persistence: Probability that a label repeats the previous one.
        noise_rate: Fraction of utterances whose features are pure noise,
            so only context can recover their label.
        speaker_bias: Probability that an utterance takes its speaker's
            characteristic class (``speaker % C``) instead of following the
            chain, so speaker identity carries signal.
        modal_signal: Per-modality scale applied to prototypes; zero removes
            a modality's class signal.

    Returns:
        The dataset header and conversations ``synth-0``, ``synth-1``, ...

    Raises:
        `ConfigError`: If an argument is out of range.

    Examples:
        >>> from ercfuse.data import synth_dataset
        >>> meta, convs = synth_dataset(0, 2, (3, 5), 4, 2, (8, 6, 4), 6.0)
        >>> meta.num_classes, len(convs)
        (4, 2)

    """
    if separation < 0:
        raise ConfigError(f"separation must be >= 0 but got {separation}")
    if num_convs < 1 or not 1 <= m_range[0] <= m_range[1]:
        raise ConfigError(
            f"need num_convs >= 1 and 1 <= min <= max lengths but got "
            f"{num_convs} and {m_range}"
        )
    for name, p in (
        ("persistence", persistence),
        ("noise_rate", noise_rate),
        ("speaker_bias", speaker_bias),
    ):
        if not 0.0 <= p <= 1.0:
            raise ConfigError(f"{name} must be in [0, 1] but got {p}")
    if len(modal_signal) != 3:
        raise ConfigError(f"modal_signal needs 3 scales but got {len(modal_signal)}")

    meta = DatasetMeta(
        num_classes=num_classes,
        num_speakers=num_speakers,
        dims=tuple(dims),  # type: ignore[arg-type]
    )
    rng = np.random.default_rng(seed)
    protos = [
        class_prototypes(rng, num_classes, d, separation) * s
        for d, s in zip(dims, modal_signal)
    ]
    convs = []
    for k in range(num_convs):
        m = int(rng.integers(m_range[0], m_range[1] + 1))
        participants = rng.choice(
            num_speakers, size=min(2, num_speakers), replace=False
        )
        speakers = [
            int(participants[rng.integers(len(participants))]) for _ in range(m)
        ]
        labels = markov_labels(rng, m, num_classes, persistence)
        utterances = []
        for spk, y in zip(speakers, labels):
            if rng.random() < speaker_bias:
                y = spk % num_classes
            silent = rng.random() < noise_rate
            feats = [
                rng.standard_normal(d) + (0.0 if silent else proto[y])
                for d, proto in zip(dims, protos)
            ]
            utterances.append(
                UtteranceRecord(
                    speaker=spk,
                    label=y,
                    text=feats[0].astype(backend.dtype),
                    audio=feats[1].astype(backend.dtype),
                    visual=feats[2].astype(backend.dtype),
                )
            )
        convs.append(Conversation(id=f"synth-{k}", utterances=utterances))
    logger.debug(
        f"Generated {num_convs} conversations with "
        f"{sum(len(c) for c in convs)} utterances"
    )
    return meta, convs
