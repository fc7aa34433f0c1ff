"""Forward-path oracles and algebraic properties of the tensor engine."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from forgedetect import engine as E


def T(x, grad=False):
    return E.Tensor(np.asarray(x, dtype=np.float64), requires_grad=grad)


# ---------------------------------------------------------------------------
# matmul


def test_matmul_identity():
    a = T(np.eye(2))
    b = T([[1.0, 2.0], [3.0, 4.0]])
    assert np.array_equal(E.matmul(a, b).data, b.data)


def test_matmul_annihilator():
    out = E.matmul(T([[1.0, 2.0], [3.0, 4.0]]), T(np.zeros((2, 2))))
    assert np.array_equal(out.data, np.zeros((2, 2)))


def test_matmul_hand_expansion():
    out = E.matmul(T([[1.0, 2.0], [3.0, 4.0]]), T([[5.0, 6.0], [7.0, 8.0]]))
    assert np.array_equal(out.data, [[19.0, 22.0], [43.0, 50.0]])


def test_matmul_shape_error():
    with pytest.raises(E.ShapeError):
        E.matmul(T(np.ones((2, 3))), T(np.ones((2, 3))))


# ---------------------------------------------------------------------------
# softmax


def test_softmax_symmetry():
    out = E.softmax(T([0.0, 0.0, 0.0]))
    assert np.allclose(out.data, [1 / 3] * 3, atol=1e-15)


def test_softmax_ln2():
    out = E.softmax(T([np.log(2.0), 0.0, 0.0]))
    assert np.allclose(out.data, [0.5, 0.25, 0.25], atol=1e-15)


def test_softmax_paper_fusion_weights():
    # independently computed softmax of (1.36, 0.75, 0.73)
    out = E.softmax(T([1.36, 0.75, 0.73]))
    x = np.exp(np.array([1.36, 0.75, 0.73]))
    assert np.allclose(out.data, x / x.sum(), atol=1e-15)
    assert np.allclose(out.data, [0.4817, 0.2617, 0.2566], atol=1e-3)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-50, 50), min_size=1, max_size=64),
       st.floats(-10, 10))
def test_softmax_sums_to_one_and_shift_invariant(vals, c):
    x = np.array(vals, dtype=np.float64)
    out = E.softmax(T(x)).data
    assert abs(out.sum() - 1.0) <= 1e-12
    shifted = E.softmax(T(x + c)).data
    assert np.allclose(out, shifted, atol=1e-12)


# ---------------------------------------------------------------------------
# layer norm


def test_layer_norm_constant_input_maps_to_bias():
    x = T([3.0, 3.0, 3.0])
    out = E.layer_norm(x, T(np.ones(3)), T(np.zeros(3)))
    assert np.allclose(out.data, 0.0, atol=1e-12)
    out2 = E.layer_norm(x, T(np.ones(3)), T([1.0, 2.0, 3.0]))
    assert np.allclose(out2.data, [1.0, 2.0, 3.0], atol=1e-12)


def test_layer_norm_population_variance():
    out = E.layer_norm(T([1.0, 2.0, 3.0]), T(np.ones(3)), T(np.zeros(3)), eps=0.0)
    expected = (np.array([1.0, 2.0, 3.0]) - 2.0) / np.sqrt(2.0 / 3.0)
    assert np.allclose(out.data, expected, atol=1e-12)
    assert np.allclose(out.data, [-1.2247, 0.0, 1.2247], atol=1e-4)


def test_layer_norm_gain_annihilates():
    rng = np.random.default_rng(0)
    x = T(rng.normal(size=5))
    bias = rng.normal(size=5)
    out = E.layer_norm(x, T(np.zeros(5)), T(bias))
    assert np.allclose(out.data, bias, atol=1e-15)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-10, 10), min_size=2, max_size=32))
def test_layer_norm_standardizes(vals):
    x = np.array(vals, dtype=np.float64)
    if x.var() < 1e-6:
        return
    out = E.layer_norm(T(x), T(np.ones(len(vals))), T(np.zeros(len(vals))), eps=0.0).data
    assert abs(out.mean()) <= 1e-12 * max(1.0, abs(out).max())
    assert abs(out.var() - 1.0) <= 1e-9


# ---------------------------------------------------------------------------
# conv / pooling


def test_conv2d_identity_kernel():
    rng = np.random.default_rng(1)
    x = T(rng.normal(size=(1, 1, 5, 5)))
    w = T(np.ones((1, 1, 1, 1)))
    out = E.conv2d(x, w)
    assert np.array_equal(out.data, x.data)


def test_conv2d_constant_allones():
    x = T(np.full((1, 1, 6, 6), 2.5))
    w = T(np.ones((1, 1, 3, 3)))
    out = E.conv2d(x, w)
    assert np.allclose(out.data, 9 * 2.5)


def test_conv2d_shape_arithmetic():
    x = T(np.zeros((1, 1, 8, 8)))
    w = T(np.zeros((3, 1, 3, 3)))
    out = E.conv2d(x, w, stride=2, pad=1)
    assert out.data.shape == (1, 3, 4, 4)


def test_conv2d_kernel_too_large():
    with pytest.raises(E.ShapeError):
        E.conv2d(T(np.zeros((1, 1, 4, 4))), T(np.zeros((1, 1, 5, 5))))


def test_global_avg_pool():
    x = np.arange(2 * 3 * 4 * 4, dtype=np.float64).reshape(2, 3, 4, 4)
    out = E.global_avg_pool(T(x))
    assert np.allclose(out.data, x.mean(axis=(2, 3)))


def test_avg_pool2d():
    x = np.arange(16, dtype=np.float64).reshape(1, 1, 4, 4)
    out = E.avg_pool2d(T(x), 2)
    assert np.allclose(out.data, [[[[2.5, 4.5], [10.5, 12.5]]]])


# ---------------------------------------------------------------------------
# backward basics


def test_backward_sum_grad_ones():
    x = T(np.arange(6, dtype=np.float64).reshape(2, 3), grad=True)
    E.backward(E.sum_all(x))
    assert np.array_equal(x.grad, np.ones((2, 3)))


def test_backward_half_norm_sq():
    rng = np.random.default_rng(2)
    xv = rng.normal(size=(3, 3))
    x = T(xv, grad=True)
    loss = E.scale(E.sum_all(E.mul(x, x)), 0.5)
    E.backward(loss)
    assert np.allclose(x.grad, xv, atol=1e-12)


def test_backward_requires_scalar():
    x = T(np.ones((2, 2)), grad=True)
    with pytest.raises(E.GraphError):
        E.backward(E.add(x, x))


def test_fanout_accumulates():
    x = T(np.array(2.0), grad=True)
    y = E.add(x, x)  # dy/dx = 2
    E.backward(E.sum_all(y))
    assert float(x.grad) == 2.0


def test_softmax_ce_grad_is_p_minus_y():
    rng = np.random.default_rng(3)
    z = T(rng.normal(size=(4, 5)), grad=True)
    labels = rng.integers(0, 5, size=4)
    probs = E.softmax(z)
    loss = E.cross_entropy(probs, labels)
    E.backward(loss)
    p = probs.data.copy()
    y = np.zeros_like(p)
    y[np.arange(4), labels] = 1.0
    assert np.allclose(z.grad, (p - y) / 4, atol=1e-12)


# ---------------------------------------------------------------------------
# Adam


def test_adam_zero_grad_no_move():
    p = np.array([1.0, -2.0])
    st_ = E.AdamState.for_params([p], lr=0.1)
    E.adam_step([p], [np.zeros(2)], st_)
    assert np.array_equal(p, [1.0, -2.0])


def test_adam_first_step_magnitude_is_lr():
    p = np.array([0.0])
    st_ = E.AdamState.for_params([p], lr=0.05)
    E.adam_step([p], [np.array([3.7])], st_)
    assert np.isclose(p[0], -0.05, rtol=1e-6)


def test_adam_constant_grad_monotone():
    p = np.array([1.0])
    st_ = E.AdamState.for_params([p], lr=0.01)
    hist = [p[0]]
    for _ in range(5):
        E.adam_step([p], [np.array([2.0])], st_)
        hist.append(p[0])
    assert all(b < a for a, b in zip(hist, hist[1:]))


# ---------------------------------------------------------------------------
# determinism / invariants


def test_forward_bit_determinism():
    rng = np.random.default_rng(4)
    a, b = rng.normal(size=(16, 16)), rng.normal(size=(16, 16))
    r1 = E.matmul(T(a), T(b)).data
    r2 = E.matmul(T(a), T(b)).data
    assert np.array_equal(r1, r2)
    s1 = E.softmax(T(a)).data
    s2 = E.softmax(T(a)).data
    assert np.array_equal(s1, s2)


def test_tensor_rejects_nonfinite():
    with pytest.raises(ValueError):
        E.Tensor(np.array([1.0, np.nan]))


def test_narrow_and_concat_roundtrip():
    rng = np.random.default_rng(5)
    x = T(rng.normal(size=(6, 4)))
    parts = [E.narrow(x, 0, i * 2, 2) for i in range(3)]
    back = E.concat(parts, axis=0)
    assert np.array_equal(back.data, x.data)


def test_transpose2d():
    x = T(np.arange(6, dtype=np.float64).reshape(2, 3))
    assert np.array_equal(E.transpose2d(x).data, x.data.T)
