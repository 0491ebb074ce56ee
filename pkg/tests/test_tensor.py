import numpy as np
import pytest

from strtd import scenarios
from strtd.tensor import (
    fold,
    frobenius_norm,
    masked_project,
    mode_product,
    multi_mode_product,
    reconstruct,
    unfold,
)

from oracles import kron_factors, kron_skip_product, loop_mode_product, loop_unfold


def kolda_cube():
    t = np.zeros((2, 2, 2))
    t[:, :, 0] = [[1, 3], [2, 4]]
    t[:, :, 1] = [[5, 7], [6, 8]]
    return t


def test_unfold_reference_example():
    t = kolda_cube()
    expected = np.array([[1, 3, 5, 7], [2, 4, 6, 8]], dtype=float)
    np.testing.assert_array_equal(unfold(t, 0), expected)


def test_unfold_matches_coordinate_loop():
    rng = np.random.default_rng(0)
    for dims in [(3, 4, 5), (2, 2, 2), (4, 1, 3), (2, 3, 2, 2)]:
        t = rng.standard_normal(dims)
        for mode in range(len(dims)):
            np.testing.assert_array_equal(unfold(t, mode), loop_unfold(t, mode))


def test_unfold_vector_is_column():
    v = np.array([1.0, 2.0, 3.0])
    np.testing.assert_array_equal(unfold(v, 0), v.reshape(3, 1))


def test_fold_reference_example():
    m = np.array([[1, 3, 5, 7], [2, 4, 6, 8]], dtype=float)
    np.testing.assert_array_equal(fold(m, 0, (2, 2, 2)), kolda_cube())


def test_fold_unfold_round_trip():
    rng = np.random.default_rng(1)
    for _ in range(50):
        t = rng.standard_normal((3, 4, 5))
        for mode in range(3):
            np.testing.assert_array_equal(fold(unfold(t, mode), mode, t.shape), t)


def test_fold_rejects_wrong_shape():
    with pytest.raises(ValueError):
        fold(np.zeros((2, 5)), 0, (2, 2, 2))
    with pytest.raises(ValueError):
        fold(np.zeros(8), 0, (2, 2, 2))


def test_mode_out_of_range():
    t = np.zeros((2, 2))
    for bad in (-1, 2):
        with pytest.raises(ValueError):
            unfold(t, bad)
        with pytest.raises(ValueError):
            mode_product(t, np.eye(2), bad)


def test_mode_product_identity_and_zero():
    rng = np.random.default_rng(2)
    t = rng.standard_normal((3, 4, 2))
    for mode in range(3):
        np.testing.assert_array_equal(mode_product(t, np.eye(t.shape[mode]), mode), t)
        assert not mode_product(t, np.zeros((2, t.shape[mode])), mode).any()


def test_mode_product_column_sums_example():
    t = kolda_cube()
    out = mode_product(t, np.array([[1.0, 1.0]]), 0)
    assert out.shape == (1, 2, 2)
    np.testing.assert_array_equal(out[0, :, 0], [3, 7])
    np.testing.assert_array_equal(out[0, :, 1], [11, 15])


def test_mode_product_matches_loop_oracle():
    rng = np.random.default_rng(3)
    t = rng.standard_normal((3, 2, 4))
    for mode in range(3):
        m = rng.standard_normal((5, t.shape[mode]))
        np.testing.assert_allclose(
            mode_product(t, m, mode), loop_mode_product(t, m, mode), atol=1e-12
        )


def test_mode_product_equals_fold_of_matrix_product():
    rng = np.random.default_rng(4)
    t = rng.standard_normal((3, 4, 2))
    m = rng.standard_normal((5, 4))
    direct = mode_product(t, m, 1)
    via_unfold = fold(m @ unfold(t, 1), 1, (3, 5, 2))
    np.testing.assert_allclose(direct, via_unfold, atol=1e-12)


def test_mode_product_shape_mismatch():
    with pytest.raises(ValueError):
        mode_product(np.zeros((3, 4)), np.zeros((2, 5)), 1)


def test_mode_products_commute_across_modes():
    rng = np.random.default_rng(5)
    for _ in range(10):
        t = rng.standard_normal((3, 3, 3))
        a = rng.standard_normal((3, 3))
        b = rng.standard_normal((3, 3))
        left = mode_product(mode_product(t, a, 0), b, 1)
        right = mode_product(mode_product(t, b, 1), a, 0)
        np.testing.assert_allclose(left, right, atol=1e-12)


def test_multi_mode_product_identity_factors():
    rng = np.random.default_rng(6)
    g = rng.standard_normal((3, 4, 2))
    eyes = [np.eye(d) for d in g.shape]
    for skip in range(3):
        np.testing.assert_allclose(
            multi_mode_product(g, eyes, skip), unfold(g, skip), atol=1e-12
        )


def test_multi_mode_product_matches_kronecker_oracle():
    rng = np.random.default_rng(7)
    for dims in [(3, 4, 2), (2, 2, 2), (4, 3, 2, 2)]:
        g = rng.standard_normal(dims)
        factors = [rng.standard_normal((d + 1, d)) for d in dims]
        for skip in range(len(dims)):
            np.testing.assert_allclose(
                multi_mode_product(g, factors, skip),
                kron_skip_product(g, factors, skip),
                atol=1e-12,
            )


def test_multi_mode_product_order_one_tensor():
    g = np.array([1.0, -2.0, 3.0])
    np.testing.assert_array_equal(
        multi_mode_product(g, [np.eye(3)], 0), unfold(g, 0)
    )


def test_vectorized_kronecker_identity():
    # vec(X) for the Tucker product equals the full Kronecker system times vec(G)
    rng = np.random.default_rng(8)
    g = rng.standard_normal((3, 2, 4))
    factors = [rng.standard_normal((d, d)) for d in g.shape]
    x = reconstruct(g, factors)
    np.testing.assert_allclose(
        x.ravel(order="F"), kron_factors(factors) @ g.ravel(order="F"), atol=1e-12
    )


def test_frobenius_norm_cases():
    assert frobenius_norm(np.zeros((3, 2, 2))) == 0.0
    assert frobenius_norm(np.array([3.0, 4.0])) == pytest.approx(5.0, abs=1e-15)
    rng = np.random.default_rng(9)
    t = rng.standard_normal((4, 3, 2))
    assert frobenius_norm(t) ** 2 == pytest.approx(float(np.sum(t * t)), rel=1e-12)


def test_frobenius_norm_invariant_under_unfolding():
    rng = np.random.default_rng(10)
    t = rng.standard_normal((3, 5, 2))
    for mode in range(3):
        assert frobenius_norm(unfold(t, mode)) == pytest.approx(
            frobenius_norm(t), rel=1e-14
        )


def test_masked_project():
    rng = np.random.default_rng(11)
    t = rng.standard_normal((3, 4))
    full = np.ones_like(t, dtype=bool)
    empty = np.zeros_like(t, dtype=bool)
    np.testing.assert_array_equal(masked_project(t, full), t)
    assert not masked_project(t, empty).any()
    single = empty.copy()
    single[1, 2] = True
    projected = masked_project(t, single)
    assert projected[1, 2] == t[1, 2]
    assert np.count_nonzero(projected) <= 1


def test_masked_project_idempotent_and_accepts_mask_object():
    rng = np.random.default_rng(12)
    t = rng.standard_normal((4, 3, 2))
    mask = scenarios.mask_rm(t.shape, 0.5, seed=0)
    once = masked_project(t, mask)
    np.testing.assert_array_equal(masked_project(once, mask), once)
    np.testing.assert_array_equal(once, masked_project(t, mask.observed))
