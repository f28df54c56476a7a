import numpy as np
import numpy.testing as npt
import pytest

import ercfuse
from ercfuse.optim import AdamW, AdamWState, adamw_step
from ercfuse.tensor import Tape, Tensor


def test_adamw_first_step_moves_by_lr() -> None:
    p = np.array([1.0, -1.0])
    adamw_step([p], [np.array([0.5, -2.0])], AdamWState(lr=0.1, weight_decay=0.0))
    # The first bias-corrected step is lr * sign(g) up to eps.
    npt.assert_allclose(p, [0.9, -0.9], atol=1e-6)


def test_adamw_weight_decay_is_decoupled() -> None:
    p = np.array([2.0])
    adamw_step([p], [np.array([0.0])], AdamWState(lr=0.1, weight_decay=0.5))
    npt.assert_allclose(p, [1.9])


def test_adamw_counts_steps() -> None:
    state = AdamWState()
    p = np.zeros(3)
    for _ in range(3):
        adamw_step([p], [np.ones(3)], state)
    assert state.t == 3
    assert len(state.m) == len(state.v) == 1


def test_adamw_count_mismatch() -> None:
    with pytest.raises(ercfuse.errors.StateError):
        adamw_step([np.zeros(2)], [], AdamWState())


def test_adamw_shape_mismatch() -> None:
    state = AdamWState()
    adamw_step([np.zeros(2)], [np.zeros(2)], state)
    with pytest.raises(ercfuse.errors.StateError):
        adamw_step([np.zeros(3)], [np.zeros(3)], state)


@pytest.mark.parametrize(
    "kwargs", [{"lr": -1.0}, {"beta1": 1.0}, {"beta2": -0.1}, {"weight_decay": -1.0}]
)
def test_adamw_state_validation(kwargs: dict[str, float]) -> None:
    with pytest.raises(ercfuse.errors.ConfigError):
        AdamWState(**kwargs)


def test_clip_grad_norm() -> None:
    a = Tensor([0.0], requires_grad=True)
    b = Tensor([0.0], requires_grad=True)
    a.grad = np.array([3.0])
    b.grad = np.array([4.0])
    total = ercfuse.optim.clip_grad_norm([a, b], 1.0)
    assert total == pytest.approx(5.0)
    npt.assert_allclose(np.hypot(a.grad, b.grad), [1.0], rtol=1e-9)


def test_adamw_minimizes_quadratic() -> None:
    x = Tensor([5.0, -3.0], requires_grad=True, name="x")
    opt = AdamW([x], lr=0.1, weight_decay=0.0)
    for _ in range(300):
        opt.zero_grad()
        with Tape() as tape:
            loss = (x * x).sum()
        tape.backward(loss)
        opt.step()
    npt.assert_allclose(x.data, [0.0, 0.0], atol=0.1)


def test_adamw_zero_grad_fills_unused_parameters() -> None:
    used = Tensor([1.0, 2.0], requires_grad=True)
    unused = Tensor([[3.0]], requires_grad=True)
    opt = AdamW([used, unused], lr=0.1, weight_decay=0.5)
    opt.zero_grad()
    with Tape() as tape:
        loss = (used * used).sum()
    tape.backward(loss)
    assert unused.grad is not None
    npt.assert_array_equal(unused.grad, np.zeros((1, 1)))
    npt.assert_allclose(used.grad, [2.0, 4.0])
    opt.step()
    npt.assert_allclose(unused.data, [[3.0 - 0.1 * 0.5 * 3.0]])
