import math

import numpy as np
import numpy.testing as npt
import pytest

import ercfuse
from ercfuse.model.head import Classifier, classify, fuse, loss, nll_sum, predict
from ercfuse.model.params import ParamStore
from ercfuse.tensor import Tape, Tensor


def test_fuse_shape() -> None:
    store = ParamStore(np.random.default_rng(0))
    w_u = store.weight("w_u", 3 * 4, 4)
    z = fuse([Tensor(np.ones((2, 4)))] * 3, w_u)
    assert z.shape == (2, 4)


def test_fuse_shape_mismatch() -> None:
    with pytest.raises(ercfuse.errors.ShapeError):
        fuse(
            [Tensor(np.ones((2, 4))), Tensor(np.ones((3, 4)))],
            Tensor(np.ones((8, 4))),
        )


def test_classify_probabilities() -> None:
    store = ParamStore(np.random.default_rng(0))
    params = Classifier.init(store, "cls", 4, 4, 5)
    x = Tensor(np.random.default_rng(1).standard_normal((3, 4)))
    probs, preds = classify(x, params)
    assert probs.shape == (3, 5)
    npt.assert_allclose(probs.data.sum(axis=1), np.ones(3))
    npt.assert_array_equal(preds, probs.data.argmax(axis=1))


def test_predict_ties_lowest_index() -> None:
    assert predict(np.array([[0.4, 0.4, 0.2]])).tolist() == [0]


def test_loss_uniform() -> None:
    uniform = Tensor(np.full((3, 6), 1 / 6))
    assert loss([uniform], [np.array([0, 1, 5])]).item() == pytest.approx(math.log(6))


def test_loss_normalizes_by_total_utterances() -> None:
    a = Tensor(np.array([[0.5, 0.5]]))
    b = Tensor(np.array([[0.25, 0.75], [0.25, 0.75], [0.25, 0.75]]))
    value = loss([a, b], [np.array([0]), np.array([1, 1, 0])]).item()
    expected = -(math.log(0.5) + 2 * math.log(0.75) + math.log(0.25)) / 4
    assert value == pytest.approx(expected)


def test_nll_floor() -> None:
    probs = Tensor(np.array([[1.0, 0.0]]))
    assert nll_sum(probs, np.array([1])).item() == pytest.approx(-math.log(1e-12))


def test_nll_label_mismatch() -> None:
    with pytest.raises(ercfuse.errors.ShapeError):
        nll_sum(Tensor(np.full((2, 2), 0.5)), np.array([0]))


def test_loss_gradient_reaches_logits() -> None:
    logits = Tensor(np.zeros((2, 3)), requires_grad=True)
    with Tape() as tape:
        probs = ercfuse.tensor.softmax_rows(logits)
        value = loss([probs], [np.array([0, 2])])
    tape.backward(value)
    # d(CE)/d(logits) = (p - onehot) / m
    expected = (np.full((2, 3), 1 / 3) - np.eye(3)[[0, 2]]) / 2
    npt.assert_allclose(logits.grad, expected)
