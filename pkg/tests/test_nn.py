import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from uavcrew.nn import (Adam, Batch, BufferNotReady, ChecksumError, Mlp, ReplayBuffer, ShapeError, Transition,
                        load_checkpoint, save_checkpoint, soft_update)

from oracles import adam_scalar, finite_difference_grads, manual_forward


def _t(i, dim=3, action=None):
    return Transition(np.full(dim, float(i)), i if action is None else action, float(i), np.full(dim, i + 0.5),
                      False, 0)


def test_zero_net_gives_zero_output():
    net = Mlp([3, 4, 2], seed=1)
    for p in net.params:
        p[...] = 0.0
    assert np.array_equal(net.forward(np.ones(3)), np.zeros(2))


def test_identity_single_layer():
    net = Mlp([3, 3])
    net.weights[0][...] = np.eye(3)
    net.biases[0][...] = 0.0
    x = np.array([0.3, -1.2, 4.0])
    assert np.array_equal(net.forward(x), x)


@pytest.mark.parametrize("act", ["identity", "tanh", "sigmoid"])
def test_forward_matches_manual_loops(act):
    net = Mlp([4, 5, 3, 2], act, seed=3)
    x = np.random.default_rng(0).normal(size=4)
    assert np.allclose(net.forward(x), manual_forward(net.weights, net.biases, x, act), atol=1e-12)


def test_forward_shape_error():
    with pytest.raises(ShapeError):
        Mlp([3, 2]).forward(np.ones(4))


def test_linear_weight_gradient_is_input():
    net = Mlp([3, 1])
    x = np.array([1.5, -2.0, 0.25])
    g = net.backward(x, np.ones(1))
    assert np.allclose(g.params[0][:, 0], x)
    assert np.allclose(g.params[1], [1.0])


def test_zero_upstream_gives_zero_gradients():
    net = Mlp([3, 8, 2], "tanh", seed=2)
    g = net.backward(np.ones((5, 3)), np.zeros((5, 2)))
    assert all(np.all(p == 0) for p in g.params)


@pytest.mark.parametrize("sizes,act", [([5, 16, 16, 3], "tanh"), ([7, 16, 16, 1], "identity"),
                                       ([4, 8, 9], "identity"), ([3, 6, 2], "sigmoid")])
def test_gradients_match_finite_differences(sizes, act):
    rng = np.random.default_rng(11)
    net = Mlp(sizes, act, seed=5)
    x = rng.normal(size=(4, sizes[0]))
    up = rng.normal(size=(4, sizes[-1]))
    analytic = net.backward(x, up).params
    numeric = finite_difference_grads(net, x, up)
    for a, n in zip(analytic, numeric):
        assert np.max(np.abs(a - n) / np.maximum(1.0, np.abs(a) + np.abs(n))) < 1e-6


def test_input_gradient_matches_finite_differences():
    net = Mlp([4, 10, 1], seed=9)
    x = np.random.default_rng(2).normal(size=4)
    g = net.backward(x, np.ones(1)).input
    eps = 1e-5
    for i in range(4):
        e = np.zeros(4)
        e[i] = eps
        fd = (net.forward(x + e)[0] - net.forward(x - e)[0]) / (2 * eps)
        assert abs(fd - g[i]) < 1e-7


def test_adam_zero_gradient_keeps_params():
    p = [np.array([1.0, -2.0])]
    opt = Adam(p, lr=0.1)
    for _ in range(5):
        opt.step(p, [np.zeros(2)])
    assert np.array_equal(p[0], [1.0, -2.0])


def test_adam_moves_against_constant_gradient():
    p = [np.array([0.0])]
    opt = Adam(p, lr=0.01)
    for _ in range(100):
        opt.step(p, [np.array([3.0])])
    assert p[0][0] < -0.5


def test_adam_matches_scalar_formula():
    p = [np.array([0.7])]
    opt = Adam(p, lr=0.05)
    ref, m, v = 0.7, 0.0, 0.0
    for t, g in enumerate([0.3, -1.1, 2.0], start=1):
        opt.step(p, [np.array([g])])
        ref, m, v = adam_scalar(ref, g, m, v, t, 0.05)
        assert p[0][0] == pytest.approx(ref, abs=1e-15)


def test_adam_shape_error():
    p = [np.zeros(3)]
    with pytest.raises(ShapeError):
        Adam(p).step(p, [np.zeros(2)])


def test_soft_update_edges():
    a, b = Mlp([2, 3, 1], seed=1), Mlp([2, 3, 1], seed=2)
    before = a.flat().copy()
    soft_update(a, b, 0.0)
    assert np.array_equal(a.flat(), before)
    soft_update(a, b, 1.0)
    assert np.array_equal(a.flat(), b.flat())


def test_soft_update_midpoint():
    a, b = Mlp([1, 1]), Mlp([1, 1])
    a.load_flat([2.0, 2.0])
    b.load_flat([4.0, 4.0])
    soft_update(a, b, 0.5)
    assert np.array_equal(a.flat(), [3.0, 3.0])


def test_soft_update_architecture_mismatch():
    with pytest.raises(ShapeError):
        soft_update(Mlp([2, 3, 1]), Mlp([2, 4, 1]), 0.5)


@given(st.floats(0.0, 1.0), st.integers(0, 1000), st.integers(0, 1000))
@settings(max_examples=50, deadline=None)
def test_soft_update_contracts(tau, s1, s2):
    a, b = Mlp([3, 4, 2], seed=s1), Mlp([3, 4, 2], seed=s2)
    gap = np.linalg.norm(a.flat() - b.flat())
    soft_update(a, b, tau)
    assert np.linalg.norm(a.flat() - b.flat()) == pytest.approx((1 - tau) * gap, rel=1e-9, abs=1e-12)


def test_buffer_fifo():
    buf = ReplayBuffer(2, 3, action_dim=None)
    for i in range(3):
        buf.push(_t(i))
    assert [t.action for t in buf.transitions()] == [1, 2]


def test_buffer_not_ready():
    buf = ReplayBuffer(10, 3)
    buf.push(_t(0))
    with pytest.raises(BufferNotReady):
        buf.sample(2, np.random.default_rng(0))


def test_buffer_sampling_deterministic():
    buf = ReplayBuffer(10, 3)
    for i in range(6):
        buf.push(_t(i))
    a = buf.sample(4, np.random.default_rng(4))
    b = buf.sample(4, np.random.default_rng(4))
    assert all(np.array_equal(x, y) for x, y in zip(a, b))
    assert isinstance(a, Batch)


def test_buffer_sampling_uniform():
    buf = ReplayBuffer(4, 3)
    for i in range(4):
        buf.push(_t(i))
    rng = np.random.default_rng(0)
    acts = np.concatenate([buf.sample(4, rng).actions for _ in range(2500)])
    counts = np.bincount(acts, minlength=4)
    sigma = np.sqrt(10_000 * 0.25 * 0.75)
    assert np.all(np.abs(counts - 2500) < 4 * sigma)


def test_buffer_continuous_actions():
    buf = ReplayBuffer(5, 2, action_dim=2)
    buf.push(Transition(np.zeros(2), np.array([0.1, -0.2]), 1.0, np.ones(2), True, 3))
    t = buf.transitions()[0]
    assert np.allclose(t.action, [0.1, -0.2]) and t.terminal and t.tag == 3


@given(st.integers(1, 20), st.integers(0, 60))
@settings(max_examples=60, deadline=None)
def test_buffer_keeps_newest(capacity, pushes):
    buf = ReplayBuffer(capacity, 3)
    for i in range(pushes):
        buf.push(_t(i))
    assert len(buf) == min(capacity, pushes)
    assert [t.action for t in buf.transitions()] == list(range(max(0, pushes - capacity), pushes))


def test_parameters_stay_finite_on_long_regression():
    rng = np.random.default_rng(0)
    net = Mlp([3, 16, 1], seed=0)
    opt = Adam(net.params, lr=1e-3)
    x = rng.uniform(-1, 1, size=(256, 3))
    y = np.sin(x.sum(axis=1, keepdims=True))
    for k in range(100_000):
        idx = (np.arange(8) + 8 * k) % 256
        pred = net.forward(x[idx])
        opt.step(net.params, net.backward(x[idx], 2 * (pred - y[idx]) / 8).params)
    assert np.all(np.isfinite(net.flat()))


def test_checkpoint_roundtrip_bit_exact(tmp_path):
    nets = {"actor": Mlp([4, 8, 2], "tanh", seed=3), "critic": Mlp([6, 8, 1], seed=4)}
    save_checkpoint(tmp_path / "ck", nets, {"step": 7})
    back, meta = load_checkpoint(tmp_path / "ck")
    assert meta == {"step": 7}
    for k in nets:
        assert back[k].flat().tobytes() == nets[k].flat().tobytes()
        assert back[k].sizes == nets[k].sizes and back[k].out_activation == nets[k].out_activation


def test_checkpoint_corruption_detected(tmp_path):
    save_checkpoint(tmp_path / "ck", {"q": Mlp([2, 2], seed=1)})
    blob = bytearray((tmp_path / "ck" / "params.bin").read_bytes())
    blob[3] ^= 0xFF
    (tmp_path / "ck" / "params.bin").write_bytes(bytes(blob))
    with pytest.raises(ChecksumError):
        load_checkpoint(tmp_path / "ck")
