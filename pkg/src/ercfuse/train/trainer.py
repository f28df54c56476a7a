"""Training and evaluation loops."""

import logging
import math
from typing import Sequence

import numpy as np
import pandas as pd
from tqdm import tqdm

from .. import utils
from ..config import ModelConfig
from ..data.batch import batch_conversations
from ..data.records import Conversation, DatasetMeta, validate_dataset
from ..errors import NumericalError
from ..metrics import EvalReport, evaluate
from ..model import head
from ..model.network import Model
from ..optim import AdamW, clip_grad_norm
from ..tensor import Tape
from .checkpoint import Checkpoint

logging.basicConfig(
    format="%(asctime)s | %(levelname)s | %(message)s", level=logging.INFO
)
logger = logging.getLogger(__name__)

HISTORY_COLUMNS = ["epoch", "train_loss", "valid_acc", "valid_wa_f1"]
"""Columns of the per-epoch training history."""


def evaluate_model(
    model: Model, convs: Sequence[Conversation], /, *, class_names: Sequence[str] = ()
) -> EvalReport:
    """Evaluation-mode (no dropout) metrics of ``model`` over ``convs``."""
    preds = np.concatenate([model.predict(c) for c in convs])
    labels = np.concatenate([c.labels for c in convs])
    names = class_names or model.meta.class_names
    return evaluate(preds, labels, model.meta.num_classes, class_names=names)


def evaluate_checkpoint(
    ckpt: Checkpoint, meta: DatasetMeta, convs: Sequence[Conversation], /
) -> EvalReport:
    """Rebuild a checkpoint's model and evaluate it on a dataset.

    Raises:
        `ConfigError`: If the dataset's dimensions don't match the
            checkpoint's.

    """
    model = ckpt.to_model()
    model.check_meta(meta)
    return evaluate_model(model, convs, class_names=meta.class_names)


def _grad_norms(model: Model) -> dict[str, float | str]:
    norms = {
        p.name or str(i): float(np.linalg.norm(p.grad))
        for i, p in enumerate(model.parameters())
        if p.grad is not None
    }
    if not norms:
        return {}
    worst = max(norms, key=lambda k: norms[k] if math.isfinite(norms[k]) else math.inf)
    return {
        "grad_norm": math.sqrt(sum(n * n for n in norms.values())),
        "largest_grad": worst,
        "largest_grad_norm": norms[worst],
    }


def train(
    config: ModelConfig,
    meta: DatasetMeta,
    train_set: Sequence[Conversation],
    valid_set: None | Sequence[Conversation] = None,
    /,
    *,
    progress: bool = True,
) -> tuple[Checkpoint, pd.DataFrame]:
    """Train a model and return its best checkpoint.

    Every epoch shuffles the training conversations (seeded), groups them
    into batches of whole conversations, and takes one AdamW step per batch
    on the cross-entropy summed over the batch's utterances and divided by
    their number. After every epoch the model is evaluated on
    ``valid_set``; the parameters with the best validation weighted F1 are
    kept, and training stops after ``config.patience`` epochs without
    improvement.

    Args:
        config: Hyperparameters.
        meta: Dataset dimensions.
        train_set: Training conversations.
        valid_set: Validation conversations. Defaults to ``train_set``.
        progress: Whether to show a progress bar.

    Returns:
        The best checkpoint and the history of every epoch actually run
        (columns ``epoch``, ``train_loss``, ``valid_acc``, ``valid_wa_f1``).

    Raises:
        `ValidationError`: If a dataset doesn't match ``meta``.
        `NumericalError`: If the loss or gradients become non-finite. The
            error's diagnostics name the epoch, batch, and gradient norms.

    """
    validate_dataset(meta, train_set)
    if valid_set is None or not len(valid_set):
        logger.warning("No validation conversations; selecting on the training set")
        valid_set = train_set
    validate_dataset(meta, valid_set)

    model = Model(config, meta)
    params = model.parameters()
    opt = AdamW(params, lr=config.lr, weight_decay=config.weight_decay)
    _, shuffle_rng, dropout_rng = utils.seeded_rngs(config.seed, 3)

    rows = []
    best_f1 = -math.inf
    best = Checkpoint.from_model(model)
    stale = 0
    norms: dict[str, float | str] = {}
    with tqdm(
        range(1, config.max_epochs + 1),
        desc="Training",
        position=0,
        leave=True,
        disable=not progress,
    ) as epochs:
        for epoch in epochs:
            order = shuffle_rng.permutation(len(train_set))
            shuffled = [train_set[i] for i in order]
            batches = batch_conversations(shuffled, config.batch_size)
            loss_sum = 0.0
            for b, batch in enumerate(batches):
                opt.zero_grad()
                try:
                    with Tape() as tape:
                        probs = [
                            model.forward(c, train=True, rng=dropout_rng)
                            for c in batch.conversations
                        ]
                        labels = [c.labels for c in batch.conversations]
                        loss = head.loss(probs, labels)
                except NumericalError as e:
                    raise NumericalError(
                        "training diverged",
                        diagnostics={"epoch": epoch, "batch": b, **norms},
                    ) from e
                tape.backward(loss)
                norms = _grad_norms(model)
                if not math.isfinite(float(norms.get("grad_norm", 0.0))):
                    raise NumericalError(
                        "non-finite gradients",
                        diagnostics={"epoch": epoch, "batch": b, **norms},
                    )
                if config.clip_norm is not None:
                    clip_grad_norm(params, config.clip_norm)
                opt.step()
                loss_sum += loss.item() * batch.num_utterances
                logger.debug(f"Epoch {epoch} batch {b} loss {loss.item():.6f}")

            train_loss = loss_sum / sum(len(c) for c in train_set)
            report = evaluate_model(model, valid_set)
            rows.append((epoch, train_loss, report.accuracy, report.weighted_f1))
            epochs.set_postfix(
                loss=f"{train_loss:.4f}", wa_f1=f"{report.weighted_f1:.4f}"
            )
            if report.weighted_f1 > best_f1:
                best_f1 = report.weighted_f1
                best = Checkpoint.from_model(
                    model, best_metric=best_f1, best_epoch=epoch
                )
                stale = 0
            else:
                stale += 1
                if stale >= config.patience:
                    logger.info(
                        f"Stopping early after epoch {epoch} "
                        f"(best epoch {best.best_epoch})"
                    )
                    break

    best.rng_state = {
        "seed": config.seed,
        "shuffle": shuffle_rng.bit_generator.state,
        "dropout": dropout_rng.bit_generator.state,
    }
    history = pd.DataFrame(rows, columns=HISTORY_COLUMNS)
    return best, history
