import numpy as np
import numpy.testing as npt
import pytest

import ercfuse
from ercfuse.config import UpdateRule
from ercfuse.graph import build_graph
from ercfuse.model.mdgat import (
    GraphHead,
    MdgatLayer,
    edge_weights,
    mdgat_forward,
    mdgat_layer,
    message_pass,
    update_state,
)
from ercfuse.model.params import ParamStore
from ercfuse.tensor import Tensor


def _x(m: int, d: int, seed: int = 0) -> Tensor:
    return Tensor(np.random.default_rng(seed).standard_normal((m, d)))


def _head(rule: UpdateRule = UpdateRule.SUM_PRODUCT, d: int = 8) -> GraphHead:
    return GraphHead.init(ParamStore(np.random.default_rng(0)), "h", rule, d, d // 2, d)


def test_edge_weights_normalized() -> None:
    g = build_graph(6, 2, 1)
    mu = edge_weights(_x(6, 8), g, _head())
    assert mu.shape == (g.num_edges, 1)
    sums = np.bincount(g.dst, weights=mu.data[:, 0], minlength=6)
    npt.assert_allclose(sums, np.ones(6))
    assert np.all(mu.data >= 0)


def test_edge_weights_node_mismatch() -> None:
    with pytest.raises(ercfuse.errors.ConfigError):
        edge_weights(_x(5, 8), build_graph(6, 1, 1), _head())


def test_message_pass_isolated_nodes_zero() -> None:
    g = build_graph(4, 0, 0)
    head = _head()
    x = _x(4, 8)
    mu = edge_weights(x, g, head)
    msgs = message_pass(x, g, mu, head.w_ps)
    npt.assert_array_equal(msgs.data, np.zeros((4, 8)))


def test_message_pass_single_neighbor() -> None:
    g = build_graph(2, 1, 0)
    head = _head()
    x = _x(2, 8)
    mu = edge_weights(x, g, head)
    npt.assert_allclose(mu.data, [[1.0]])
    msgs = message_pass(x, g, mu, head.w_ps)
    npt.assert_allclose(msgs.data[1], x.data[0] @ head.w_ps.data)


@pytest.mark.parametrize("rule", list(UpdateRule))
def test_update_state_rules(rule: UpdateRule) -> None:
    d = 8
    head = _head(rule, d)
    x_ps, x_prev = _x(3, d, 1), _x(3, d, 2)
    out = update_state(x_ps, x_prev, rule, head.update)
    assert out.shape == (3, d // 2)
    a, b = x_ps.data, x_prev.data
    match rule:
        case UpdateRule.SUM:
            expected = a @ head.update[0].data + b @ head.update[1].data
        case UpdateRule.CONCAT:
            expected = np.concatenate([a, b], axis=1) @ head.update[0].data
        case _:
            expected = np.concatenate([a + b, a * b], axis=1) @ head.update[0].data
    npt.assert_allclose(out.data, expected)


def test_sum_product_needs_matching_widths() -> None:
    with pytest.raises(ercfuse.errors.ConfigError):
        GraphHead.init(
            ParamStore(np.random.default_rng(0)), "h", UpdateRule.SUM_PRODUCT, 8, 4, 6
        )


@pytest.mark.parametrize("rule", list(UpdateRule))
def test_mdgat_layer_shape(rule: UpdateRule) -> None:
    layer = MdgatLayer.init(ParamStore(np.random.default_rng(0)), "l", rule, 8, 2, 8)
    out = mdgat_layer(_x(5, 8), build_graph(5, 2, 2), layer, rule)
    assert out.shape == (5, 8)
    npt.assert_allclose(out.data.mean(axis=1), 0.0, atol=1e-9)


def test_mdgat_forward_empty_stack() -> None:
    x = _x(3, 8)
    assert mdgat_forward(x, build_graph(3, 1, 1), [], UpdateRule.SUM) is x


def test_mdgat_single_node() -> None:
    rule = UpdateRule.SUM_PRODUCT
    layer = MdgatLayer.init(ParamStore(np.random.default_rng(0)), "l", rule, 8, 2, 8)
    out = mdgat_forward(_x(1, 8), build_graph(1, 4, 4), [layer], rule)
    assert out.shape == (1, 8)
    assert np.isfinite(out.data).all()


def _naive_layer_norm(y: np.ndarray, gain: np.ndarray, bias: np.ndarray) -> np.ndarray:
    mu = y.mean(axis=1, keepdims=True)
    var = ((y - mu) ** 2).mean(axis=1, keepdims=True)
    return (y - mu) / np.sqrt(var + 1e-5) * gain + bias


def _naive_mdgat_layer(
    x: np.ndarray, past: int, future: int, layer: MdgatLayer, rule: UpdateRule
) -> np.ndarray:
    m = x.shape[0]
    outs = []
    for head in layer.heads:
        att = head.att.data[:, 0]
        w_ps = head.w_ps.data
        msg = np.zeros((m, w_ps.shape[1]))
        for i in range(m):
            nbrs = [j for j in range(m) if j != i and -past <= j - i <= future]
            if not nbrs:
                continue
            scores = []
            for j in nbrs:
                z = np.concatenate([x[i], x[j]]) @ head.w_ew.data
                scores.append(att @ np.where(z > 0, z, 0.2 * z))
            weights = np.exp(np.array(scores) - max(scores))
            weights /= weights.sum()
            for w, j in zip(weights, nbrs):
                msg[i] += w * (x[j] @ w_ps)
        u = [w.data for w in head.update]
        if rule is UpdateRule.SUM:
            outs.append(msg @ u[0] + x @ u[1])
        elif rule is UpdateRule.CONCAT:
            outs.append(np.concatenate([msg, x], axis=1) @ u[0])
        else:
            outs.append(np.concatenate([msg + x, msg * x], axis=1) @ u[0])
    y = x + np.concatenate(outs, axis=1) @ layer.w_mg.data
    return _naive_layer_norm(y, layer.ln_gain.data, layer.ln_bias.data)


@pytest.mark.parametrize("rule", list(UpdateRule))
@pytest.mark.parametrize("m", [1, 2, 3, 6])
@pytest.mark.parametrize("window", [(0, 0), (1, 0), (0, 2), (1, 2), (2, 2)])
def test_mdgat_forward_matches_naive_loops(
    rule: UpdateRule, m: int, window: tuple[int, int]
) -> None:
    rng = np.random.default_rng(m)
    store = ParamStore(rng)
    message_dim = 8 if rule is UpdateRule.SUM_PRODUCT else 6
    layers = [
        MdgatLayer.init(store, f"l{i}", rule, 8, 2, message_dim) for i in range(2)
    ]
    for layer in layers:
        layer.ln_gain.data[:] = rng.uniform(0.5, 1.5, 8)
        layer.ln_bias.data[:] = rng.normal(0.0, 0.1, 8)
    x = _x(m, 8, seed=m + 10)
    expected = x.data
    for layer in layers:
        expected = _naive_mdgat_layer(expected, *window, layer, rule)
    out = mdgat_forward(x, build_graph(m, *window), layers, rule)
    npt.assert_allclose(out.data, expected, rtol=0, atol=1e-9)


def test_edge_weights_normalized_across_seeds() -> None:
    for seed in range(100):
        rng = np.random.default_rng(seed)
        m = int(rng.integers(2, 12))
        g = build_graph(m, int(rng.integers(0, 4)), int(rng.integers(0, 4)))
        head = GraphHead.init(ParamStore(rng), "h", UpdateRule.SUM, 8, 4, 8)
        mu = edge_weights(Tensor(rng.normal(0.0, 3.0, (m, 8))), g, head)
        sums = np.bincount(g.dst, weights=mu.data[:, 0], minlength=m)
        npt.assert_allclose(sums[g.in_degree() > 0], 1.0, rtol=0, atol=1e-12)
