"""Reading and writing datasets as JSON lines.

The first line is a header object describing the dataset::

    {"c": 6, "n": 2, "dims": [100, 100, 100], "classes": ["happy", ...]}

Every following line is one conversation::

    {"id": "conv0", "utts": [{"spk": 0, "y": 3, "t": [...], "a": [...], "v": [...]}]}

"""

import json
import logging
import pathlib
from typing import Any, Sequence

import numpy as np

from .. import backend
from ..errors import ParseError, ValidationError
from .records import Conversation, DatasetMeta, UtteranceRecord, validate_dataset

logging.basicConfig(
    format="%(asctime)s | %(levelname)s | %(message)s", level=logging.INFO
)
logger = logging.getLogger(__name__)


def _reject_constant(name: str) -> float:
    raise ValueError(f"non-finite value `{name}`")


def _as_int(value: Any, name: str, /) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise TypeError(f"`{name}` must be an integer but got {value!r}")
    return value


def _parse_line(raw: bytes, lineno: int, /) -> dict[str, Any]:
    try:
        line = raw.decode("utf-8")
        obj = json.loads(line, parse_constant=_reject_constant)
    except ValueError as e:
        raise ParseError(f"line {lineno}: {e}") from e
    if not isinstance(obj, dict):
        raise ParseError(f"line {lineno}: expected a JSON object")
    return obj


def _parse_meta(obj: dict[str, Any], /) -> DatasetMeta:
    try:
        return DatasetMeta(
            num_classes=_as_int(obj["c"], "c"),
            num_speakers=_as_int(obj["n"], "n"),
            dims=tuple(  # type: ignore[arg-type]
                _as_int(d, "dims") for d in obj["dims"]
            ),
            classes=tuple(str(c) for c in obj.get("classes", ())),
        )
    except ValidationError:
        raise
    except (KeyError, TypeError, ValueError) as e:
        raise ParseError(f"line 1: malformed dataset header ({e!r})") from e


def _parse_conversation(obj: dict[str, Any], lineno: int, /) -> Conversation:
    try:
        return Conversation(
            id=str(obj["id"]),
            utterances=[
                UtteranceRecord(
                    speaker=_as_int(u["spk"], "spk"),
                    label=_as_int(u["y"], "y"),
                    text=np.asarray(u["t"], dtype=backend.dtype),
                    audio=np.asarray(u["a"], dtype=backend.dtype),
                    visual=np.asarray(u["v"], dtype=backend.dtype),
                )
                for u in obj["utts"]
            ],
        )
    except (KeyError, TypeError, ValueError) as e:
        raise ParseError(f"line {lineno}: malformed conversation ({e!r})") from e


def load_jsonl(path: str | pathlib.Path, /) -> tuple[DatasetMeta, list[Conversation]]:
    """Load and validate a dataset file.

    Args:
        path: Path to a JSONL dataset file.

    Returns:
        The dataset header and its conversations in file order.

    Raises:
        `OSError`: If the file can't be read.
        `ParseError`: If a line isn't valid JSON, holds a non-finite number
            literal, is not UTF-8, misses required fields, or holds a
            non-integer speaker or label (the message names the line).
        `ValidationError`: If the dataset violates an invariant (the message
            names the conversation).

    Examples:
        >>> import ercfuse
        >>> meta, convs = ercfuse.data.load_jsonl(ercfuse.data.sample_path)
        >>> len(convs)
        5

    """
    path = pathlib.Path(path)
    meta: None | DatasetMeta = None
    convs: list[Conversation] = []
    with open(path, "rb") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            obj = _parse_line(line, lineno)
            if meta is None:
                meta = _parse_meta(obj)
            else:
                convs.append(_parse_conversation(obj, lineno))
    if meta is None:
        raise ParseError(f"{path} is empty; expected a dataset header on line 1")
    validate_dataset(meta, convs)
    logger.debug(f"Loaded {len(convs)} conversations from {path}")
    return meta, convs


def save_jsonl(
    path: str | pathlib.Path, meta: DatasetMeta, convs: Sequence[Conversation], /
) -> pathlib.Path:
    """Validate and write a dataset file.

    Floats are written with ``repr`` precision so loading the file gives
    back bit-identical 64-bit features.

    Returns:
        The written path.

    Raises:
        `ValidationError`: If the dataset violates an invariant.
        `OSError`: If the file can't be written.

    """
    validate_dataset(meta, convs)
    path = pathlib.Path(path)
    header: dict[str, Any] = {
        "c": meta.num_classes,
        "n": meta.num_speakers,
        "dims": list(meta.dims),
    }
    if meta.classes:
        header["classes"] = list(meta.classes)
    with open(path, "w", encoding="utf-8") as f:
        f.write(json.dumps(header) + "\n")
        for conv in convs:
            line = {
                "id": conv.id,
                "utts": [
                    {
                        "spk": u.speaker,
                        "y": u.label,
                        "t": u.text.tolist(),
                        "a": u.audio.tolist(),
                        "v": u.visual.tolist(),
                    }
                    for u in conv.utterances
                ],
            }
            f.write(json.dumps(line, allow_nan=False) + "\n")
    return path

