"""Ablation sweeps: one training run per value of one config axis."""

import logging
from multiprocessing.pool import ThreadPool
from typing import Any, Sequence

import pandas as pd
from tqdm import tqdm

from .. import backend
from ..config import ModelConfig, UpdateRule, parse_field, parse_modalities
from ..data.records import Conversation, DatasetMeta
from ..errors import ConfigError
from .trainer import evaluate_checkpoint, train

logging.basicConfig(
    format="%(asctime)s | %(levelname)s | %(message)s", level=logging.INFO
)
logger = logging.getLogger(__name__)

AXES = ("windows", "layers", "lambda", "update_rule", "modalities")
"""Config axes a sweep can vary."""

SWEEP_COLUMNS = ["axis", "value", "acc", "wa_f1", "epochs"]
"""Columns of a sweep's results table."""


def axis_overrides(axis: str, value: Any, /) -> dict[str, Any]:
    """Config overrides for one value of an axis.

    Values may be given as text, as on the command line:

    * ``windows``: past and future window sizes, ``"J:K"``
    * ``layers``: graph-attention and cross-modal layer counts, ``"L:K"``
    * ``lambda``: speaker embedding weight, ``"1.6"``
    * ``update_rule``: ``"Sum"``, ``"Concat"``, or ``"SumProduct"``
    * ``modalities``: ``"tav"``, ``"ta"``, ...

    Raises:
        `ConfigError`: If the axis is unknown or the value doesn't parse.

    Examples:
        >>> from ercfuse.train.sweep import axis_overrides
        >>> axis_overrides("layers", "0:4")
        {'mdgat_layers': 0, 'mpcat_layers': 4}

    """
    match axis:
        case "windows":
            window = parse_field("window", value) if isinstance(value, str) else value
            return {"window": tuple(window)}
        case "layers":
            pair = parse_field("window", value) if isinstance(value, str) else value
            return {"mdgat_layers": int(pair[0]), "mpcat_layers": int(pair[1])}
        case "lambda":
            return {"speaker_weight": float(value)}
        case "update_rule":
            return {"update_rule": UpdateRule.parse(value)}
        case "modalities":
            return {"modalities": parse_modalities(value)}
    raise ConfigError(f"unknown sweep axis `{axis}`; expected one of {', '.join(AXES)}")


def _label(axis: str, overrides: dict[str, Any]) -> str:
    match axis:
        case "windows":
            return "{}:{}".format(*overrides["window"])
        case "layers":
            return f"{overrides['mdgat_layers']}:{overrides['mpcat_layers']}"
        case "lambda":
            return str(overrides["speaker_weight"])
        case "update_rule":
            return str(overrides["update_rule"].value)
        case _:
            return "".join(overrides["modalities"])


def ablation_sweep(
    base: ModelConfig,
    axis: str,
    values: Sequence[Any],
    meta: DatasetMeta,
    train_set: Sequence[Conversation],
    valid_set: Sequence[Conversation],
    /,
    *,
    test_set: None | Sequence[Conversation] = None,
    workers: None | int = None,
) -> pd.DataFrame:
    """Train one model per axis value, all with the base config's seed.

    Each run is independent and owns its model, so runs execute in a pool
    of ``workers`` threads (default :data:`ercfuse.backend.sweep_workers`).
    Rows come back in the order of ``values`` regardless of completion
    order.

    Args:
        base: Config shared by every run.
        axis: One of :data:`AXES`.
        values: Axis values.
        meta: Dataset dimensions.
        train_set: Training conversations.
        valid_set: Validation conversations (used for model selection).
        test_set: Conversations to report metrics on. Defaults to
            ``valid_set``.
        workers: Number of worker threads.

    Returns:
        A table with columns ``axis``, ``value``, ``acc``, ``wa_f1``, and
        ``epochs`` (epochs actually run).

    Raises:
        `ConfigError`: If a value produces an invalid config. Every value is
            checked before any training starts.

    """
    configs = []
    for value in values:
        overrides = axis_overrides(axis, value)
        configs.append((_label(axis, overrides), base.replace(**overrides)))
    eval_set = valid_set if test_set is None else test_set

    def run(item: tuple[str, ModelConfig]) -> tuple[str, str, float, float, int]:
        label, config = item
        ckpt, history = train(config, meta, train_set, valid_set, progress=False)
        report = evaluate_checkpoint(ckpt, meta, eval_set)
        logger.debug(f"{axis}={label}: wa-F1 {report.weighted_f1:.4f}")
        return axis, label, report.accuracy, report.weighted_f1, len(history)

    rows = []
    with (
        ThreadPool(workers or backend.sweep_workers) as pool,
        tqdm(total=len(configs), desc=f"Sweeping {axis}", position=0, leave=True) as pb,
    ):
        for row in pool.imap(run, configs):
            rows.append(row)
            pb.update()
    return pd.DataFrame(rows, columns=SWEEP_COLUMNS)
