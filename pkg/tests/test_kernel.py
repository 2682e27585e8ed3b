import numpy as np
import pytest

from tvssl.errors import DimensionError, InvalidParameterError
from tvssl.kernel import kernel_expand, median_bandwidth, rbf_gram


def test_diagonal_is_exactly_one():
    data = np.random.default_rng(0).normal(size=(9, 3))
    K = rbf_gram(data, 0.8)
    assert np.all(K.values.diagonal() == 1.0)


def test_two_points_at_sqrt2_bandwidth():
    bw = 1.3
    data = np.array([[0.0, 0.0], [np.sqrt(2.0) * bw, 0.0]])
    K = rbf_gram(data, bw)
    assert K.values[0, 1] == pytest.approx(np.exp(-1.0), abs=1e-14)


def test_gram_matches_scalar_formula():
    rng = np.random.default_rng(4)
    data = rng.normal(size=(12, 4))
    bw = 1.1
    K = rbf_gram(data, bw)
    for i in range(12):
        for j in range(12):
            expect = np.exp(-np.sum((data[i] - data[j]) ** 2) / (2 * bw * bw))
            assert abs(K.values[i, j] - expect) < 1e-14


def test_gram_symmetry_and_psd():
    data = np.random.default_rng(1).normal(size=(30, 5))
    K = rbf_gram(data, 1.0)
    assert np.max(np.abs(K.values - K.values.T)) <= 1e-12
    eigs = np.linalg.eigvalsh(K.values)
    assert eigs.min() >= -1e-8 * np.trace(K.values) / K.n
    for seed in range(10):
        a = np.random.default_rng(seed).normal(size=30)
        assert a @ K.values @ a >= -1e-9


def test_gram_factorizable_with_jitter_policy():
    from tvssl.opt_core import SpdFactor

    data = np.random.default_rng(2).normal(size=(40, 2))
    K = rbf_gram(data, 3.0)  # wide bandwidth, numerically near-singular
    x = SpdFactor(K.values).solve(np.ones(40))
    assert np.all(np.isfinite(x))


def test_invalid_bandwidth():
    data = np.zeros((3, 2))
    with pytest.raises(InvalidParameterError):
        rbf_gram(data, 0.0)
    with pytest.raises(InvalidParameterError):
        kernel_expand(np.zeros(3), data, data, -1.0)


def test_expand_on_train_equals_gram_product():
    rng = np.random.default_rng(7)
    data = rng.normal(size=(8, 2))
    alpha = rng.normal(size=8)
    K = rbf_gram(data, 0.9)
    out = kernel_expand(alpha, data, data, 0.9)
    assert np.max(np.abs(out - K.values @ alpha)) < 1e-12


def test_expand_one_hot_gives_kernel_column():
    rng = np.random.default_rng(8)
    train = rng.normal(size=(6, 3))
    query = rng.normal(size=(4, 3))
    e2 = np.zeros(6)
    e2[2] = 1.0
    out = kernel_expand(e2, train, query, 1.2)
    expect = [np.exp(-np.sum((q - train[2]) ** 2) / (2 * 1.2**2)) for q in query]
    assert np.allclose(out, expect, atol=1e-14)


def test_expand_matches_double_loop():
    rng = np.random.default_rng(9)
    train = rng.normal(size=(5, 2))
    query = rng.normal(size=(3, 2))
    alpha = rng.normal(size=5)
    bw = 0.7
    out = kernel_expand(alpha, train, query, bw)
    for qi, q in enumerate(query):
        val = sum(
            alpha[j] * np.exp(-np.sum((q - train[j]) ** 2) / (2 * bw * bw))
            for j in range(5)
        )
        assert out[qi] == pytest.approx(val, abs=1e-13)


def test_expand_dimension_checks():
    with pytest.raises(DimensionError):
        kernel_expand(np.zeros(3), np.zeros((4, 2)), np.zeros((2, 2)), 1.0)
    with pytest.raises(DimensionError):
        kernel_expand(np.zeros(4), np.zeros((4, 2)), np.zeros((2, 3)), 1.0)


def test_median_bandwidth_deterministic_and_positive():
    data = np.random.default_rng(11).normal(size=(50, 3))
    b1 = median_bandwidth(data)
    b2 = median_bandwidth(data)
    assert b1 == b2 and b1 > 0


def test_gram_keeps_data_reference():
    data = np.random.default_rng(12).normal(size=(5, 2))
    K = rbf_gram(data, 1.0)
    assert K.data is not None and K.data.shape == (5, 2)
