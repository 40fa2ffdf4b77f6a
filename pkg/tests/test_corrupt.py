import numpy as np
import pytest

from shortfall import corrupt, dist, rng
from shortfall.errors import ParameterError


def test_none_is_identity():
    x = np.arange(10.0)
    out = corrupt.apply_corruption(x, corrupt.NoCorruption(), 5)
    assert np.array_equal(out, x)


def test_max_shift_touches_first_k_only():
    x = np.zeros(100)
    model = corrupt.MaxShiftGaussian(k=3, mu=5.0, sigma=250.0)
    out = corrupt.apply_corruption(x, model, 11)
    assert np.array_equal(out[3:], x[3:])
    assert (out != x).sum() <= 3


def test_max_shift_is_max_with_gaussian():
    model = corrupt.MaxShiftGaussian(k=3, mu=5.0, sigma=250.0)
    seed = 77
    x = np.full(10, 1.0)
    out = corrupt.apply_corruption(x, model, seed)
    shocks = 5.0 + 250.0 * dist.Normal(0.0, 1.0).quantile(rng.uniforms(seed, 3))
    assert np.allclose(out[:3], np.maximum(1.0, shocks))


def test_max_shift_never_decreases():
    model = corrupt.MaxShiftGaussian(k=5, mu=-100.0, sigma=1.0)
    x = np.linspace(-1, 1, 20)
    out = corrupt.apply_corruption(x, model, 3)
    assert np.all(out >= x)
    assert np.array_equal(out, x)  # all shocks far below the data


def test_replace_largest_multiset():
    x = np.arange(1.0, 11.0)
    out = corrupt.apply_corruption(x, corrupt.ReplaceLargest(k=2, value=0.0), 0)
    assert sorted(out.tolist()) == [0.0, 0.0] + [float(i) for i in range(1, 9)]


def test_replace_largest_with_ties_changes_at_most_k():
    x = np.full(8, 3.0)
    out = corrupt.apply_corruption(x, corrupt.ReplaceLargest(k=3, value=-1.0), 0)
    assert (out != x).sum() == 3


def test_replace_indices_one_based():
    x = np.arange(1.0, 6.0)
    model = corrupt.ReplaceIndices(frozenset({1, 5}), value=9.0)
    out = corrupt.apply_corruption(x, model, 0)
    assert out.tolist() == [9.0, 2.0, 3.0, 4.0, 9.0]
    with pytest.raises(ParameterError, match="indices"):
        corrupt.ReplaceIndices(frozenset({0}), value=9.0)
    with pytest.raises(ParameterError, match="indices"):
        corrupt.apply_corruption(x, corrupt.ReplaceIndices(frozenset({6}), 0.0), 0)


def test_k_larger_than_n_rejected():
    with pytest.raises(ParameterError, match="k"):
        corrupt.apply_corruption(np.arange(3.0), corrupt.MaxShiftGaussian(5, 0.0, 1.0), 0)
    with pytest.raises(ParameterError, match="k"):
        corrupt.apply_corruption(np.arange(3.0), corrupt.ReplaceLargest(5, 0.0), 0)


@pytest.mark.parametrize("model", [
    corrupt.NoCorruption(),
    corrupt.MaxShiftGaussian(k=4, mu=2.0, sigma=50.0),
    corrupt.ReplaceLargest(k=4, value=1e6),
    corrupt.ReplaceIndices(frozenset({2, 9, 17}), value=-1e6),
], ids=lambda m: type(m).__name__)
def test_hamming_budget_and_determinism(model):
    x = np.random.default_rng(1).exponential(size=40)
    a = corrupt.apply_corruption(x, model, 123)
    b = corrupt.apply_corruption(x, model, 123)
    assert np.array_equal(a, b)
    assert (a != x).sum() <= model.k


def test_batch_matches_single():
    x = np.random.default_rng(2).exponential(size=(6, 30))
    seeds = np.arange(100, 106, dtype=np.uint64)
    for model in (corrupt.MaxShiftGaussian(3, 5.0, 250.0),
                  corrupt.ReplaceLargest(2, 7.0),
                  corrupt.ReplaceIndices(frozenset({1, 30}), 0.5)):
        batch = corrupt.apply_corruption_batch(x.copy(), model, seeds)
        singles = [corrupt.apply_corruption(row, model, int(s)) for row, s in zip(x, seeds)]
        assert np.array_equal(batch, np.array(singles))


def test_budget_values():
    assert corrupt.corruption_budget(3250, 0.5) == 5
    assert corrupt.corruption_budget(140, 1.0) == 1
    assert corrupt.corruption_budget(100, 0.1) == 0
    with pytest.raises(ParameterError, match="eps"):
        corrupt.corruption_budget(100, 0.0)


def test_json_roundtrip():
    models = [
        corrupt.NoCorruption(),
        corrupt.MaxShiftGaussian(3, 5.0, 250.0),
        corrupt.ReplaceLargest(2, 0.0),
        corrupt.ReplaceIndices(frozenset({4, 7}), 1.5),
    ]
    for model in models:
        assert corrupt.model_from_json(corrupt.model_to_json(model)) == model
    assert corrupt.model_from_json(None) == corrupt.NoCorruption()
    with pytest.raises(ParameterError, match="kind"):
        corrupt.model_from_json({"kind": "flip_sign"})
