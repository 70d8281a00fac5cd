import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gastereo import lga
from gastereo.errors import ConfigError, DimensionError, NumericError
from gastereo.gradcheck import check_lga

from oracles import lga_triple_sum


def random_weights(rng, H, W, K=3, F=1):
    return lga.lga_normalize(rng.standard_normal((H, W, 3 * K * K, F)))


def delta_weights(H, W, K=3, F=1):
    w = np.zeros((H, W, 3 * K * K, F))
    w[:, :, (K * K) // 2] = 1.0
    return w


def test_normalize_equal_logits():
    w = lga.lga_normalize(np.full((2, 2, 75, 1), 3.0))
    assert np.allclose(w, 1 / 75, rtol=0, atol=1e-16)
    w = lga.lga_normalize(np.zeros((1, 1, 27, 1)))
    assert np.allclose(w, 1 / 27, rtol=0, atol=1e-16)


def test_normalize_dominant_logit():
    logits = np.zeros((1, 2, 27, 1))
    logits[:, :, 5] = 900.0
    w = lga.lga_normalize(logits)
    assert np.all(w[:, :, 5] == 1.0)


def test_normalize_errors():
    with pytest.raises(NumericError):
        lga.lga_normalize(np.full((1, 1, 27, 1), np.inf))
    with pytest.raises(DimensionError):
        lga.lga_normalize(np.zeros((1, 1, 26, 1)))
    with pytest.raises(ConfigError):
        lga.lga_normalize(np.zeros((1, 1, 12, 1)))  # K = 2


@pytest.mark.parametrize("repeats", [1, 2, 5])
def test_delta_kernel_identity(rng, repeats):
    v = rng.standard_normal((4, 5, 3, 2))
    out, _ = lga.lga_forward(v, delta_weights(4, 5, 5, 2), repeats)
    assert np.array_equal(out, v)


def test_constant_volume(rng):
    c = 1.7
    v = np.full((7, 7, 5, 1), c)
    w = random_weights(rng, 7, 7, 3)
    out, _ = lga.lga_forward(v, w, repeats=1)
    inner = out[1:-1, 1:-1, 1:-1]
    assert np.allclose(inner, c, rtol=0, atol=1e-12)
    assert np.all(out >= 0) and np.all(out <= c + 1e-12)
    w_d = w.copy()
    w_d[:, :, 9:] = 0.0
    w_d /= w_d.sum(axis=2, keepdims=True)
    out, _ = lga.lga_forward(v, w_d, repeats=1)
    assert np.allclose(out[1:-1, 1:-1], c, rtol=0, atol=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_forward_matches_triple_sum(seed):
    rng = np.random.default_rng(seed)
    v = rng.random((5, 5, 4, 1))
    w = random_weights(rng, 5, 5, 3)
    out, _ = lga.lga_forward(v, w, repeats=1)
    assert np.allclose(out, lga_triple_sum(v, w, 3), rtol=0, atol=1e-12)
    twice, _ = lga.lga_forward(v, w, repeats=2)
    assert np.allclose(twice, lga_triple_sum(lga_triple_sum(v, w, 3), w, 3), rtol=0, atol=1e-12)


def test_rejects_unnormalised_and_even_kernel(rng):
    with pytest.raises(ConfigError):
        lga.lga_forward(np.zeros((2, 2, 3, 1)), np.full((2, 2, 27, 1), 0.1))
    with pytest.raises(ConfigError):
        lga.lga_forward(np.zeros((2, 2, 3, 1)), np.full((2, 2, 12, 1), 1 / 12))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(-3, 3), st.floats(-3, 3))
def test_linearity(seed, a, b):
    rng = np.random.default_rng(seed)
    v1, v2 = rng.standard_normal((2, 4, 4, 3, 1))
    w = random_weights(rng, 4, 4)
    lhs = lga.lga_forward(a * v1 + b * v2, w)[0]
    rhs = a * lga.lga_forward(v1, w)[0] + b * lga.lga_forward(v2, w)[0]
    assert np.allclose(lhs, rhs, rtol=1e-12, atol=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 3))
def test_adjoint(seed, repeats):
    rng = np.random.default_rng(seed)
    v = rng.standard_normal((4, 5, 4, 2))
    g = rng.standard_normal(v.shape)
    w = random_weights(rng, 4, 5, 3, 2)
    out, tape = lga.lga_forward(v, w, repeats)
    gi, _ = lga.lga_backward(tape, w, g)
    lhs, rhs = np.sum(out * g), np.sum(v * gi)
    assert abs(lhs - rhs) <= 1e-10 * max(abs(lhs), 1.0)


def test_backward_delta_and_zero(rng):
    v = rng.standard_normal((3, 4, 3, 1))
    g = rng.standard_normal(v.shape)
    w = delta_weights(3, 4)
    _, tape = lga.lga_forward(v, w)
    assert np.array_equal(lga.lga_backward(tape, w, g)[0], g)
    gi, gw = lga.lga_backward(tape, w, np.zeros_like(v))
    assert not gi.any() and not gw.any()


@pytest.mark.parametrize("seed", range(3))
@pytest.mark.parametrize("repeats", [1, 2])
def test_backward_finite_differences(seed, repeats):
    err, ok = check_lga((4, 4, 4, 1), seed, K=3, repeats=repeats)
    assert ok, err


def test_backward_shape_mismatch(rng):
    v = rng.random((3, 3, 3, 1))
    w = random_weights(rng, 3, 3)
    _, tape = lga.lga_forward(v, w)
    with pytest.raises(DimensionError):
        lga.lga_backward(tape, w, np.zeros((3, 3, 4, 1)))


def test_layer_logit_gradient(rng):
    from oracles import fd_grad
    v = rng.random((3, 3, 3, 1))
    logits = rng.standard_normal((3, 3, 27, 1))
    g = rng.standard_normal(v.shape)
    _, tape = lga.lga_layer(v, logits)
    _, gl = lga.lga_layer_backward(tape, g)
    num = fd_grad(lambda x: np.sum(lga.lga_layer(v, x)[0] * g), logits, 1e-6)
    assert np.allclose(gl, num, rtol=1e-5, atol=1e-9)
