import math

import numpy as np
import pytest

from conftest import gradcheck, max_rel_error, numeric_grad
from setnovo.chem import N_VOCAB, START
from setnovo.nn import autograd as ag
from setnovo.nn.autograd import Tensor, no_grad
from setnovo.nn.layers import Embedding, Linear, LSTMCell, PointwiseConv1d, TNet
from setnovo.nn.losses import cross_entropy, focal_loss
from setnovo.nn.model import SequencingModel
from setnovo.nn.optim import AdamState, PlateauHalving, adam_step, halving_points, lr_schedule


def _tensor(rng, *shape, grad=True):
    return Tensor(rng.normal(size=shape), requires_grad=grad)


# --- autograd primitives -------------------------------------------------------

def test_linear_gradient_is_outer_product():
    x = np.array([[1.0, 2.0, 3.0]])
    W = Tensor(np.ones((3, 2)), requires_grad=True)
    ag.tsum(ag.matmul(Tensor(x), W)).backward()
    np.testing.assert_array_equal(W.grad, np.repeat(x.T, 2, axis=1))


def test_backward_on_constant_raises():
    with pytest.raises(RuntimeError):
        Tensor(np.ones(3)).sum().backward()


def test_no_grad_records_nothing(rng):
    w = _tensor(rng, 3, 3)
    with no_grad():
        y = ag.matmul(Tensor(np.ones((1, 3))), w)
    assert not y.requires_grad


@pytest.mark.parametrize("op", ["add", "sub", "mul", "sigmoid", "tanh", "relu", "concat", "stack",
                                "getitem", "reshape", "max", "log_softmax", "embedding"])
def test_primitive_gradients(op, rng):
    a = _tensor(rng, 4, 5)
    b = _tensor(rng, 5)
    w = Tensor(rng.normal(size=(4, 5)))  # random projection to make the loss non-trivial
    params = {"a": a, "b": b}

    def build():
        if op == "add":
            y = a + b
        elif op == "sub":
            y = a - b
        elif op == "mul":
            y = a * b
        elif op == "sigmoid":
            y = ag.sigmoid(a)
        elif op == "tanh":
            y = ag.tanh(a)
        elif op == "relu":
            y = ag.relu(a)
        elif op == "concat":
            y = ag.concat([a, ag.reshape(b, (1, 5))], axis=0)[:4]
        elif op == "stack":
            y = ag.stack([a[0], b, a[2], b], axis=0)
        elif op == "getitem":
            y = a[1:3] * b
            return ag.tsum(y * Tensor(w.data[1:3]))
        elif op == "reshape":
            y = ag.reshape(ag.reshape(a, (20,)), (4, 5))
        elif op == "max":
            y = ag.max_reduce(a * b, axis=0)
            return ag.tsum(y * Tensor(w.data[0]))
        elif op == "log_softmax":
            y = ag.log_softmax(a + b)
        elif op == "embedding":
            y = ag.embedding(a, [0, 3, 3, 1])
        if y.shape == (4, 5):
            return ag.tsum(y * w)
        return ag.tsum(y * y)

    err, n = gradcheck(build, params, n_samples=25, rng=rng)
    assert err < 1e-6


def test_max_pool_gradient_routes_to_first_argmax():
    x = Tensor(np.array([[1.0, 5.0], [3.0, 5.0], [3.0, 2.0]]), requires_grad=True)
    ag.tsum(ag.max_reduce(x, axis=0)).backward()
    np.testing.assert_array_equal(x.grad, [[0, 1], [1, 0], [0, 0]])


# --- layers ---------------------------------------------------------------------

def test_pointwise_conv_equals_shared_dense_rows(rng):
    conv = PointwiseConv1d(209, 32, rng)
    x = rng.normal(size=(50, 209))
    dense = Linear(209, 32, rng)
    dense.weight.data = conv.weight.data[:, :, 0].T.copy()
    dense.bias.data = conv.bias.data.copy()
    with no_grad():
        out = conv(Tensor(x)).data
        per_row = dense(Tensor(x)).data
    np.testing.assert_array_equal(out, per_row)
    # shared weights: each row only depends on itself
    with no_grad():
        single = conv(Tensor(x[7:8])).data
    np.testing.assert_allclose(single[0], out[7], rtol=0, atol=1e-12)


LAYER_CASES = ["linear", "conv", "tnet", "lstm", "embedding", "combine", "focal"]


@pytest.mark.parametrize("layer", LAYER_CASES)
def test_layer_gradients(layer, rng):
    if layer == "linear":
        mod = Linear(7, 5, rng)
        x = Tensor(rng.normal(size=(3, 7)))
        build = lambda: ag.tsum(ag.tanh(mod(x)))
        params = mod.parameters()
    elif layer == "conv":
        mod = PointwiseConv1d(9, 6, rng)
        x = Tensor(rng.normal(size=(2, 11, 9)))
        build = lambda: ag.tsum(ag.tanh(mod(x)))
        params = mod.parameters()
    elif layer == "tnet":
        mod = TNet(13, (8, 8, 10), (9, 7, 6), rng)
        x = Tensor(rng.normal(size=(3, 15, 13)))
        build = lambda: ag.tsum(ag.tanh(mod(x)))
        params = mod.parameters()
    elif layer == "lstm":
        mod = LSTMCell(6, 5, rng)
        xs = [Tensor(rng.normal(size=(2, 6))) for _ in range(3)]
        h0 = Tensor(rng.normal(size=(2, 5)))

        def build():
            state = (h0, h0)
            for x in xs:
                state = mod(x, state)
            return ag.tsum(state[0] * state[1])
        params = mod.parameters()
    elif layer == "embedding":
        mod = Embedding(26, 4, rng)
        build = lambda: ag.tsum(ag.tanh(mod([[1, 5, 5], [7, 1, 0]])))
        params = mod.parameters()
    elif layer == "combine":
        model = SequencingModel(conv=(4, 4, 6), fc=(5, 5, 6), d_lstm=8, seed=1)
        t_out = Tensor(rng.normal(size=(3, 6)))
        h = Tensor(rng.normal(size=(3, 8)))
        build = lambda: ag.tsum(ag.tanh(model.combine_and_score(t_out, h)))
        params = model.out.parameters()
    elif layer == "focal":
        logits = Tensor(rng.normal(size=(6, N_VOCAB)), requires_grad=True)
        targets = rng.integers(0, N_VOCAB, 6)
        mask = np.array([1, 1, 0, 1, 1, 1], dtype=bool)
        build = lambda: focal_loss(logits, targets, gamma=2.0, mask=mask)
        params = {"logits": logits}
    err, n = gradcheck(build, params, n_samples=50, rng=rng)
    assert n >= 50
    assert err < 1e-4


# --- T-Net -------------------------------------------------------------------------

def test_tnet_permutation_invariance(rng):
    tnet = TNet(209, (16, 16, 32), (32, 16, 16), rng)
    for _ in range(20):
        F = rng.uniform(0, 1, (int(rng.integers(1, 60)), 209))
        perm = rng.permutation(len(F))
        with no_grad():
            np.testing.assert_allclose(tnet(Tensor(F[perm])).data, tnet(Tensor(F)).data, rtol=0, atol=1e-12)


def test_tnet_single_row_and_duplicates(rng):
    tnet = TNet(209, (16, 16, 32), (32, 16, 16), rng)
    F = rng.uniform(0, 1, (10, 209))
    with no_grad():
        base = tnet(Tensor(F)).data
        doubled = tnet(Tensor(np.vstack([F, F]))).data
        one = tnet(Tensor(F[:1])).data
        # n = 1: the pool is the identity on the single row
        h = Tensor(F[:1])
        for conv in (tnet.conv1, tnet.conv2, tnet.conv3):
            h = ag.relu(conv(h))
        manual = ag.relu(tnet.fc3(ag.relu(tnet.fc2(ag.relu(tnet.fc1(h))))))
    np.testing.assert_allclose(doubled, base, rtol=0, atol=1e-12)
    np.testing.assert_allclose(one, manual.data[0], rtol=0, atol=1e-12)


def test_tnet_rejects_non_finite(rng):
    tnet = TNet(5, (4, 4, 4), (4, 4, 4), rng)
    with pytest.raises(ValueError):
        tnet(Tensor(np.array([[1.0, np.nan, 0, 0, 0]])))


# --- LSTM --------------------------------------------------------------------------

def test_lstm_zero_weights_closed_form(rng):
    cell = LSTMCell(4, 3, rng)
    for p in cell.parameters().values():
        p.data[...] = 0.0
    c0 = rng.normal(size=(1, 3))
    h, c = cell(Tensor(rng.normal(size=(1, 4))), (Tensor(rng.normal(size=(1, 3))), Tensor(c0)))
    # all gates sigmoid(0) = 1/2, candidate tanh(0) = 0
    np.testing.assert_allclose(c.data, 0.5 * c0, atol=1e-15)
    np.testing.assert_allclose(h.data, 0.5 * np.tanh(0.5 * c0), atol=1e-15)


def test_lstm_step_from_summary_state_and_purity(rng):
    model = SequencingModel(conv=(4, 4, 4), fc=(4, 4, 4), d_lstm=6, seed=0)
    s = rng.normal(size=(2, 6))
    state = model.initial_state(s)
    np.testing.assert_array_equal(state[0].data, s)
    np.testing.assert_array_equal(state[1].data, s)
    with no_grad():
        a, sa = model.lstm_step(np.array([START, START]), state)
        b, sb = model.lstm_step(np.array([START, START]), state)
    np.testing.assert_array_equal(a.data, b.data)
    np.testing.assert_array_equal(sa[1].data, sb[1].data)
    with pytest.raises(ValueError):
        model.lstm.__call__(Tensor(np.zeros((1, 5))), state)


# --- scoring head ------------------------------------------------------------------

def test_no_lstm_logits_depend_on_tnet_only(rng):
    model = SequencingModel(conv=(4, 4, 6), fc=(5, 5, 6), use_lstm=False, seed=0)
    t = Tensor(rng.normal(size=(3, 6)))
    with no_grad():
        logits = model.combine_and_score(t).data
    expected = t.data @ model.out.weight.data + model.out.bias.data
    np.testing.assert_allclose(logits, expected, atol=1e-14)
    assert not hasattr(model, "lstm")


def test_logits_finite_and_softmax_normalised(rng):
    model = SequencingModel(conv=(4, 4, 6), fc=(5, 5, 6), d_lstm=8, seed=0)
    with no_grad():
        logits = model.combine_and_score(Tensor(rng.normal(size=(4, 6)) * 10), Tensor(rng.normal(size=(4, 8)))).data
    assert np.all(np.isfinite(logits))
    p = np.exp(ag.numpy_log_softmax(logits))
    np.testing.assert_allclose(p.sum(axis=1), 1.0, atol=1e-9)


# --- focal loss --------------------------------------------------------------------

def test_focal_loss_gamma_zero_is_cross_entropy(rng):
    z = rng.normal(size=(5, N_VOCAB))
    t = rng.integers(0, N_VOCAB, 5)
    ce = -np.mean(ag.numpy_log_softmax(z)[np.arange(5), t])
    assert float(focal_loss(Tensor(z), t, gamma=0.0).data) == pytest.approx(ce, abs=1e-12)
    assert float(cross_entropy(Tensor(z), t).data) == pytest.approx(ce, abs=1e-12)


def test_focal_loss_values():
    # p_t = 1 (up to float): loss 0
    z = np.full((1, N_VOCAB), -1e4)
    z[0, 5] = 0.0
    assert float(focal_loss(Tensor(z), [5]).data) == pytest.approx(0.0, abs=1e-300)
    # p_t = 0.5, gamma = 2: 0.25 * log 2
    z = np.full((1, N_VOCAB), -np.inf)
    z[0, 3] = z[0, 4] = 0.0
    assert float(focal_loss(Tensor(z), [3], gamma=2.0).data) == pytest.approx(0.25 * math.log(2), abs=1e-12)
    assert 0.25 * math.log(2) == pytest.approx(0.1733, abs=1e-4)


def test_focal_loss_mask_and_underflow():
    z = np.zeros((3, N_VOCAB))
    z[2, 0] = 1e4  # target 1 at this row has p_t ~ e^-1e4
    loss = focal_loss(Tensor(z), [1, 1, 1], mask=[True, True, True])
    assert np.isfinite(loss.data) and loss.data > 1000
    masked = focal_loss(Tensor(z), [1, 1, 1], mask=[True, True, False])
    assert float(masked.data) == pytest.approx(float(focal_loss(Tensor(z[:2]), [1, 1]).data))
    with pytest.raises(ValueError):
        focal_loss(Tensor(z), [1, 1, 1], mask=[False, False, False])


# --- Adam --------------------------------------------------------------------------

def test_adam_zero_gradient_leaves_params():
    p = {"w": np.array([1.0, -2.0])}
    state = AdamState()
    adam_step(p, {"w": np.array([0.5, 0.5])}, state, 1e-3)
    m_before = state.m["w"].copy()
    before = p["w"].copy()
    adam_step(p, {"w": np.zeros(2)}, state, 1e-3)
    np.testing.assert_allclose(state.m["w"], 0.9 * m_before)
    # zero current gradient still moves along the decayed momentum, never away from it
    assert np.all(np.sign(before - p["w"]) == np.sign(m_before))
    fresh = {"w": np.array([1.0, -2.0])}
    adam_step(fresh, {"w": np.zeros(2)}, AdamState(), 1e-3)
    np.testing.assert_array_equal(fresh["w"], [1.0, -2.0])


def test_adam_first_step_and_constant_gradient():
    g = np.array([0.3, -4.0, 1e-3])
    p = {"w": np.zeros(3)}
    state = AdamState()
    adam_step(p, {"w": g}, state, 1e-3)
    np.testing.assert_allclose(p["w"], -1e-3 * g / (np.abs(g) + 1e-8), rtol=1e-12)
    for _ in range(2000):
        before = p["w"].copy()
        adam_step(p, {"w": g}, state, 1e-3)
    np.testing.assert_allclose(before - p["w"], 1e-3 * np.sign(g), rtol=1e-5)


def test_adam_shape_mismatch():
    with pytest.raises(ValueError):
        adam_step({"w": np.zeros(3)}, {"w": np.zeros(2)}, AdamState(), 1e-3)


# --- lr schedule -------------------------------------------------------------------

def test_schedule_decreasing_never_halves():
    assert lr_schedule(list(np.linspace(5, 1, 40))) == 1.0


def test_schedule_halves_after_ten_non_improving():
    history = [3.0, 2.0] + [2.5] * 10
    assert halving_points(history) == [11]
    assert lr_schedule(history) == 0.5
    assert lr_schedule(history[:-1]) == 1.0


def test_schedule_needs_ten_evaluations():
    assert lr_schedule([1.0] * 10) == 1.0


def test_schedule_window_restarts_after_halving():
    history = [1.0] + [2.0] * 20
    assert halving_points(history) == [10, 20]
    sched = PlateauHalving(10)
    multipliers = [sched.update(x) for x in history]
    assert multipliers.count(0.5) == 2


def test_no_grad_is_per_thread():
    import threading
    a_in, b_in, a_out = threading.Event(), threading.Event(), threading.Event()

    def first():
        with no_grad():
            a_in.set()
            b_in.wait()
        a_out.set()

    def second():
        a_in.wait()
        with no_grad():
            b_in.set()
            a_out.wait()

    threads = [threading.Thread(target=first), threading.Thread(target=second)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    # overlapping blocks that exit out of order must not leave recording off
    x = Tensor(np.ones(3), requires_grad=True)
    assert ag.tsum(x * x).requires_grad
