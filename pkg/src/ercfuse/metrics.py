"""Classification metrics: accuracy, weighted-average F1, and confusion."""

import json
import pathlib
from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np
import pandas as pd

from .errors import ContractError


@dataclass(frozen=True)
class EvalReport:
    """Metrics of one set of predictions.

    Rows of :attr:`confusion` are true classes and columns predicted
    classes, so row sums are class supports and the trace is the number of
    correct predictions.

    """

    #: Fraction of correct predictions.
    accuracy: float

    #: Support-weighted mean of per-class F1.
    weighted_f1: float

    #: F1 of every class (0 when precision and recall are both 0).
    per_class_f1: np.ndarray

    #: ``C x C`` counts.
    confusion: np.ndarray

    #: Class names used in exports.
    class_names: tuple[str, ...] = ()

    @property
    def confusion_rates(self) -> np.ndarray:
        """Row-normalized confusion: the probability that a true class is
        predicted as each class. Rows of unseen classes are zero.

        """
        support = self.confusion.sum(axis=1, keepdims=True)
        return np.divide(
            self.confusion,
            support,
            out=np.zeros(self.confusion.shape, dtype=float),
            where=support > 0,
        )

    @property
    def names(self) -> list[str]:
        """Class names, defaulting to class indices."""
        return list(self.class_names) or [str(c) for c in range(len(self.per_class_f1))]

    def confusion_frame(self, *, normalize: bool = False) -> pd.DataFrame:
        """Confusion matrix as a dataframe indexed by true class with one
        column per predicted class.

        """
        values = self.confusion_rates if normalize else self.confusion
        df = pd.DataFrame(values, index=self.names, columns=self.names)
        df.index.name = "true"
        return df

    def to_csv(
        self, path: str | pathlib.Path, /, *, normalize: bool = False
    ) -> pathlib.Path:
        """Write the confusion matrix as CSV."""
        path = pathlib.Path(path)
        self.confusion_frame(normalize=normalize).to_csv(path)
        return path

    def to_dict(self) -> dict[str, Any]:
        """JSON-serializable form."""
        return {
            "accuracy": self.accuracy,
            "weighted_f1": self.weighted_f1,
            "per_class_f1": dict(zip(self.names, self.per_class_f1.tolist())),
            "confusion": self.confusion.tolist(),
        }

    def to_json(self) -> str:
        """One-line JSON form."""
        return json.dumps(self.to_dict())


def confusion_matrix(
    preds: Sequence[int] | np.ndarray,
    labels: Sequence[int] | np.ndarray,
    num_classes: int,
    /,
) -> np.ndarray:
    """``C x C`` counts of (true, predicted) pairs."""
    out = np.zeros((num_classes, num_classes), dtype=np.int64)
    rows = np.asarray(labels, dtype=np.int64)
    cols = np.asarray(preds, dtype=np.int64)
    np.add.at(out, (rows, cols), 1)
    return out


def evaluate(
    preds: Sequence[int] | np.ndarray,
    labels: Sequence[int] | np.ndarray,
    num_classes: int,
    /,
    *,
    class_names: Sequence[str] = (),
) -> EvalReport:
    """Compute accuracy, per-class F1, weighted-average F1, and confusion.

    Args:
        preds: Predicted classes.
        labels: True classes.
        num_classes: Number of classes ``C``.
        class_names: Optional names carried into the report.

    Returns:
        The metrics report.

    Raises:
        `ContractError`: If the inputs are empty, have different lengths, or
            contain classes outside ``[0, C)``.

    Examples:
        >>> from ercfuse.metrics import evaluate
        >>> report = evaluate([0, 1, 1, 1], [0, 0, 1, 1], 2)
        >>> report.accuracy
        0.75
        >>> round(report.weighted_f1, 4)
        0.7333

    """
    p = np.asarray(preds, dtype=np.int64)
    y = np.asarray(labels, dtype=np.int64)
    if p.size == 0 or p.shape != y.shape:
        raise ContractError(
            f"evaluate needs equal, nonzero numbers of predictions and labels but got "
            f"{p.size} and {y.size}"
        )
    if min(p.min(), y.min()) < 0 or max(p.max(), y.max()) >= num_classes:
        raise ContractError(f"classes must be in [0, {num_classes})")
    confusion = confusion_matrix(p, y, num_classes)
    tp = np.diag(confusion).astype(float)
    support = confusion.sum(axis=1).astype(float)
    predicted = confusion.sum(axis=0).astype(float)
    precision = np.divide(tp, predicted, out=np.zeros_like(tp), where=predicted > 0)
    recall = np.divide(tp, support, out=np.zeros_like(tp), where=support > 0)
    denom = precision + recall
    f1 = np.divide(
        2 * precision * recall, denom, out=np.zeros_like(tp), where=denom > 0
    )
    n = float(y.size)
    return EvalReport(
        accuracy=float(tp.sum() / n),
        weighted_f1=float((support / n * f1).sum()),
        per_class_f1=f1,
        confusion=confusion,
        class_names=tuple(class_names),
    )
