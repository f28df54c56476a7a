"""In-memory dataset types and their invariants."""

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..errors import ValidationError

MODALITIES = ("t", "a", "v")
"""Modality keys in their canonical order: text, audio, visual."""


@dataclass
class UtteranceRecord:
    """One utterance with its speaker, emotion label, and modal features."""

    #: Speaker id in ``[0, num_speakers)``.
    speaker: int

    #: Emotion class index in ``[0, num_classes)``.
    label: int

    #: Text features.
    text: np.ndarray

    #: Audio features.
    audio: np.ndarray

    #: Visual features.
    visual: np.ndarray

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, UtteranceRecord):
            return NotImplemented
        return (
            self.speaker == other.speaker
            and self.label == other.label
            and np.array_equal(self.text, other.text)
            and np.array_equal(self.audio, other.audio)
            and np.array_equal(self.visual, other.visual)
        )

    def feature(self, modality: str, /) -> np.ndarray:
        """Features of one modality (``"t"``, ``"a"``, or ``"v"``)."""
        match modality:
            case "t":
                return self.text
            case "a":
                return self.audio
            case "v":
                return self.visual
            case _:
                raise ValueError(f"unknown modality `{modality}`")


@dataclass
class Conversation:
    """A dialogue: utterances in temporal order."""

    #: Unique conversation id.
    id: str

    #: Utterances in the order they were spoken.
    utterances: list[UtteranceRecord] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.utterances)

    def features(self, modality: str, /) -> np.ndarray:
        """Stack one modality's features into an ``m x d`` matrix."""
        return np.stack([u.feature(modality) for u in self.utterances])

    @property
    def labels(self) -> np.ndarray:
        """Label of every utterance."""
        return np.asarray([u.label for u in self.utterances], dtype=np.int64)

    @property
    def speakers(self) -> np.ndarray:
        """Speaker id of every utterance."""
        return np.asarray([u.speaker for u in self.utterances], dtype=np.int64)


@dataclass(frozen=True)
class DatasetMeta:
    """Dataset-wide dimensions carried in the dataset file header."""

    #: Number of emotion classes ``C``.
    num_classes: int

    #: Number of distinct speaker ids ``n``.
    num_speakers: int

    #: Feature widths ``(d_t, d_a, d_v)``.
    dims: tuple[int, int, int]

    #: Class names, one per class.
    classes: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.num_classes < 1 or self.num_speakers < 1:
            raise ValidationError(
                f"a dataset needs at least one class and speaker but got "
                f"C={self.num_classes}, n={self.num_speakers}"
            )
        if len(self.dims) != 3 or min(self.dims) < 1:
            raise ValidationError(
                f"dims must be three positive widths but got {self.dims}"
            )
        if self.classes and len(self.classes) != self.num_classes:
            raise ValidationError(
                f"got {len(self.classes)} class names for {self.num_classes} classes"
            )

    @property
    def class_names(self) -> tuple[str, ...]:
        """Class names, defaulting to ``"0"``, ``"1"``, ... when unnamed."""
        return self.classes or tuple(str(c) for c in range(self.num_classes))

    def dim(self, modality: str, /) -> int:
        """Feature width of one modality."""
        return self.dims[MODALITIES.index(modality)]


def validate_dataset(meta: DatasetMeta, convs: Sequence[Conversation], /) -> None:
    """Check every conversation against ``meta``.

    Raises:
        `ValidationError`: Naming the first conversation that's empty, has
            a duplicate id, has a speaker or label out of range, has
            features of the wrong width, or has non-finite features.

    """
    seen: set[str] = set()
    for conv in convs:
        if conv.id in seen:
            raise ValidationError(f"conversation `{conv.id}` appears more than once")
        seen.add(conv.id)
        if not conv.utterances:
            raise ValidationError(f"conversation `{conv.id}` has no utterances")
        for i, u in enumerate(conv.utterances):
            if not 0 <= u.label < meta.num_classes:
                raise ValidationError(
                    f"conversation `{conv.id}` utterance {i} has label {u.label} "
                    f"but C={meta.num_classes}"
                )
            if not 0 <= u.speaker < meta.num_speakers:
                raise ValidationError(
                    f"conversation `{conv.id}` utterance {i} has speaker {u.speaker} "
                    f"but n={meta.num_speakers}"
                )
            for modality in MODALITIES:
                x = u.feature(modality)
                if x.shape != (meta.dim(modality),):
                    raise ValidationError(
                        f"conversation `{conv.id}` utterance {i} has `{modality}` "
                        f"features of shape {x.shape} but the dataset declares "
                        f"{meta.dim(modality)}"
                    )
                if not np.isfinite(x).all():
                    raise ValidationError(
                        f"conversation `{conv.id}` utterance {i} has non-finite "
                        f"`{modality}` features"
                    )
