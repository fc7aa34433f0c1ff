"""Finite-difference verification of every differentiable primitive.

Probe values keep ReLU inputs away from the kink and probabilities away
from the clamp boundaries so central differences are valid.
"""

import numpy as np
import pytest

from forgedetect import engine as E


def _away_from_kink(rng, shape, margin=0.2):
    """Values with |x| >= margin so +-h probes never cross zero."""
    x = rng.uniform(margin, 1.0, size=shape)
    return x * rng.choice([-1.0, 1.0], size=shape)


def check(loss_fn, params, tol=1e-6):
    report = E.gradient_check(loss_fn, params, h=1e-5, tol=tol)
    assert report.passed, report.max_rel_error
    return report


def test_linear_graph_is_exact():
    rng = np.random.default_rng(0)
    x = E.Tensor(rng.normal(size=(3, 3)), requires_grad=True)
    report = E.gradient_check(lambda: E.sum_all(E.scale(x, 2.5)), {"x": x}, h=1e-5, tol=1e-10)
    assert report.passed


PRIMITIVE_CASES = []


def primitive(name):
    def deco(fn):
        PRIMITIVE_CASES.append((name, fn))
        return fn

    return deco


@primitive("matmul")
def _(rng):
    a = E.Tensor(rng.normal(size=(3, 4)), requires_grad=True)
    b = E.Tensor(rng.normal(size=(4, 2)), requires_grad=True)
    return lambda: E.sum_all(E.mul(E.matmul(a, b), E.matmul(a, b))), {"a": a, "b": b}


@primitive("add_sub_mul_scale")
def _(rng):
    a = E.Tensor(rng.normal(size=(2, 3)), requires_grad=True)
    b = E.Tensor(rng.normal(size=(2, 3)), requires_grad=True)
    return (lambda: E.sum_all(E.scale(E.mul(E.add(a, b), E.sub(a, b)), 0.7)),
            {"a": a, "b": b})


@primitive("broadcast_add")
def _(rng):
    a = E.Tensor(rng.normal(size=(3, 4)), requires_grad=True)
    b = E.Tensor(rng.normal(size=(4,)), requires_grad=True)
    return lambda: E.mean_all(E.mul(E.add(a, b), E.add(a, b))), {"a": a, "b": b}


@primitive("relu")
def _(rng):
    x = E.Tensor(_away_from_kink(rng, (3, 5)), requires_grad=True)
    return lambda: E.sum_all(E.mul(E.relu(x), E.relu(x))), {"x": x}


@primitive("sigmoid")
def _(rng):
    x = E.Tensor(rng.normal(size=(4,)), requires_grad=True)
    return lambda: E.sum_all(E.mul(E.sigmoid(x), E.sigmoid(x))), {"x": x}


@primitive("softmax")
def _(rng):
    x = E.Tensor(rng.normal(size=(2, 5)), requires_grad=True)
    c = rng.normal(size=(2, 5))
    return lambda: E.sum_all(E.mul(E.softmax(x), E.Tensor(c))), {"x": x}


@primitive("layer_norm")
def _(rng):
    x = E.Tensor(rng.normal(size=(3, 6)), requires_grad=True)
    g = E.Tensor(rng.normal(size=(6,)), requires_grad=True)
    b = E.Tensor(rng.normal(size=(6,)), requires_grad=True)
    c = rng.normal(size=(3, 6))
    return lambda: E.sum_all(E.mul(E.layer_norm(x, g, b), E.Tensor(c))), {"x": x, "g": g, "b": b}


@primitive("conv2d")
def _(rng):
    x = E.Tensor(rng.normal(size=(2, 2, 6, 6)), requires_grad=True)
    w = E.Tensor(rng.normal(size=(3, 2, 3, 3)) * 0.4, requires_grad=True)
    b = E.Tensor(rng.normal(size=(3,)), requires_grad=True)
    c = rng.normal(size=(2, 3, 3, 3))
    return (lambda: E.sum_all(E.mul(E.conv2d(x, w, b, stride=2, pad=1), E.Tensor(c))),
            {"x": x, "w": w, "b": b})


@primitive("avg_pool2d")
def _(rng):
    x = E.Tensor(rng.normal(size=(1, 2, 4, 4)), requires_grad=True)
    c = rng.normal(size=(1, 2, 2, 2))
    return lambda: E.sum_all(E.mul(E.avg_pool2d(x, 2), E.Tensor(c))), {"x": x}


@primitive("global_avg_pool")
def _(rng):
    x = E.Tensor(rng.normal(size=(2, 3, 4, 4)), requires_grad=True)
    c = rng.normal(size=(2, 3))
    return lambda: E.sum_all(E.mul(E.global_avg_pool(x), E.Tensor(c))), {"x": x}


@primitive("reshape_narrow_concat_transpose")
def _(rng):
    x = E.Tensor(rng.normal(size=(4, 4)), requires_grad=True)
    c = rng.normal(size=(8, 2))
    def loss():
        t = E.transpose2d(x)
        parts = [E.narrow(t, 1, 0, 2), E.narrow(t, 1, 2, 2)]
        stacked = E.concat(parts, axis=0)
        return E.sum_all(E.mul(E.reshape(stacked, (8, 2)), E.Tensor(c)))
    return loss, {"x": x}


@primitive("bce")
def _(rng):
    x = E.Tensor(rng.normal(size=(5, 1)), requires_grad=True)
    y = rng.integers(0, 2, size=(5, 1)).astype(np.float64)
    return lambda: E.bce(E.sigmoid(x), y), {"x": x}


@primitive("cross_entropy")
def _(rng):
    x = E.Tensor(rng.normal(size=(4, 3)), requires_grad=True)
    labels = rng.integers(0, 3, size=4)
    return lambda: E.cross_entropy(E.softmax(x), labels), {"x": x}


@pytest.mark.parametrize("name,builder", PRIMITIVE_CASES, ids=[n for n, _ in PRIMITIVE_CASES])
def test_primitive_gradients(name, builder):
    rng = np.random.default_rng(hash(name) % 2**32)
    loss_fn, params = builder(rng)
    check(loss_fn, params)


def test_primitives_on_many_random_shapes():
    """50 random small shapes through a mixed op pipeline."""
    rng = np.random.default_rng(99)
    for trial in range(50):
        m = int(rng.integers(1, 5))
        n = int(rng.integers(1, 5))
        k = int(rng.integers(1, 5))
        a = E.Tensor(rng.normal(size=(m, k)), requires_grad=True)
        b = E.Tensor(rng.normal(size=(k, n)), requires_grad=True)
        g = E.Tensor(rng.normal(size=(n,)), requires_grad=True)
        bias = E.Tensor(rng.normal(size=(n,)), requires_grad=True)
        c = rng.normal(size=(m, n))

        def loss():
            z = E.matmul(a, b)
            z = E.layer_norm(z, g, bias)
            z = E.softmax(z)
            return E.sum_all(E.mul(z, E.Tensor(c)))

        report = E.gradient_check(loss, {"a": a, "b": b, "g": g, "bias": bias}, h=1e-5, tol=1e-6)
        assert report.passed, (trial, report.max_rel_error)
