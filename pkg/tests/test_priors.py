import numpy as np
import pytest

from strtd.priors import (
    GraphPriorConfig,
    beta_from_prior,
    laplacian,
    power_iteration,
    similarity_matrix,
    spectral_norm,
    temporal_operator,
)

from oracles import svd_norm

PATH_W = np.array([[0.0, 1.0, 0.0], [1.0, 0.0, 1.0], [0.0, 1.0, 0.0]])
PATH_L = np.array([[1.0, -1.0, 0.0], [-1.0, 2.0, -1.0], [0.0, -1.0, 1.0]])


class TestSimilarity:
    def test_identical_rows_weight_one(self):
        rows = np.array([[1.0, 2.0, 3.0], [1.0, 2.0, 3.0]])
        w = similarity_matrix(rows, cfg=GraphPriorConfig(neighbors=1))
        assert w[0, 1] == pytest.approx(1.0, abs=1e-15)
        assert w[0, 0] == 0.0 and w[1, 0] == w[0, 1]

    def test_unit_distance_gives_inverse_e(self):
        rows = np.array([[0.0], [1.0]])
        w = similarity_matrix(rows, cfg=GraphPriorConfig(neighbors=1))
        assert w[0, 1] == pytest.approx(np.exp(-1.0), abs=1e-12)

    def test_zero_neighbors_gives_empty_graph(self):
        rows = np.random.default_rng(0).random((4, 3))
        w = similarity_matrix(rows, cfg=GraphPriorConfig(neighbors=0))
        assert not w.any()

    def test_common_column_distance_rescaled(self):
        # rows agree on the two shared columns -> distance 0 -> weight 1
        rows = np.array([[1.0, 5.0, 2.0], [1.0, 9.0, 2.0]])
        mask = np.array([[True, False, True], [True, True, True]])
        w = similarity_matrix(rows, mask, GraphPriorConfig(neighbors=1))
        assert w[0, 1] == pytest.approx(1.0, abs=1e-15)
        # one shared column with difference d: distance is d^2 * (3 / 1)
        rows = np.array([[1.0, 5.0, 7.0], [2.0, 9.0, 11.0]])
        mask = np.array([[True, False, False], [True, True, True]])
        w = similarity_matrix(rows, mask, GraphPriorConfig(neighbors=1))
        assert w[0, 1] == pytest.approx(np.exp(-3.0), rel=1e-12)

    def test_disjoint_rows_warn_and_get_zero_weight(self):
        rows = np.array([[1.0, 0.0], [0.0, 2.0]])
        mask = np.array([[True, False], [False, True]])
        with pytest.warns(UserWarning, match="no observed columns"):
            w = similarity_matrix(rows, mask, GraphPriorConfig(neighbors=1))
        assert w[0, 1] == 0.0

    def test_symmetrized_by_elementwise_max(self):
        # node 2 is far from 0/1; with one neighbor each, 2 still picks a
        # neighbor, and max-symmetrization keeps that edge in both directions
        rows = np.array([[0.0], [0.1], [5.0]])
        w = similarity_matrix(rows, cfg=GraphPriorConfig(neighbors=1))
        np.testing.assert_array_equal(w, w.T)
        assert w[2, 1] > 0 and w[2, 1] == w[1, 2]

    def test_input_validation(self):
        with pytest.raises(ValueError):
            similarity_matrix(np.ones((1, 3)))
        with pytest.raises(ValueError):
            similarity_matrix(np.ones((3, 2)), cfg=GraphPriorConfig(neighbors=3))
        with pytest.raises(ValueError):
            GraphPriorConfig(neighbors=-1)
        with pytest.raises(ValueError):
            GraphPriorConfig(bandwidth=0.0)


class TestLaplacian:
    def test_path_graph_example(self):
        lap = laplacian(PATH_W)
        np.testing.assert_array_equal(lap.matrix, PATH_L)

    def test_empty_graph(self):
        lap = laplacian(np.zeros((3, 3)))
        assert not lap.matrix.any()
        assert lap.spectral_norm == 0.0

    def test_rows_sum_to_zero_and_psd(self):
        rng = np.random.default_rng(1)
        w = rng.random((6, 6))
        w = np.triu(w, k=1)
        w = w + w.T
        lap = laplacian(w)
        np.testing.assert_allclose(lap.matrix @ np.ones(6), 0.0, atol=1e-12)
        for _ in range(100):
            x = rng.standard_normal(6)
            assert x @ lap.matrix @ x >= -1e-10

    def test_quadratic_form_identity_with_factor_two(self):
        # pairwise weighted sum of squared row differences equals twice the
        # trace form under this symmetric weight convention
        rng = np.random.default_rng(2)
        w = rng.random((5, 5))
        w = np.triu(w, k=1)
        w = w + w.T
        lap = laplacian(w)
        u = rng.standard_normal((5, 4))
        pairwise = sum(
            w[i, j] * float(np.sum((u[i] - u[j]) ** 2))
            for i in range(5)
            for j in range(5)
        )
        assert pairwise == pytest.approx(2.0 * np.trace(u.T @ lap.matrix @ u), abs=1e-10)

    def test_rejects_bad_input(self):
        with pytest.raises(ValueError):
            laplacian(np.array([[0.0, 1.0], [0.5, 0.0]]))  # asymmetric
        with pytest.raises(ValueError):
            laplacian(np.array([[0.0, -1.0], [-1.0, 0.0]]))  # negative
        with pytest.raises(ValueError):
            laplacian(np.array([[1.0, 0.5], [0.5, 0.0]]))  # nonzero diagonal


class TestTemporalOperator:
    def test_annihilates_constants(self):
        top = temporal_operator(6)
        np.testing.assert_array_equal(top.matrix @ np.full(6, 3.5), np.zeros(5))

    def test_forward_differences(self):
        top = temporal_operator(3)
        np.testing.assert_array_equal(top.matrix @ np.array([1.0, 2.0, 4.0]), [1.0, 2.0])

    def test_gram_norm_matches_eigenvalue_oracle(self):
        top = temporal_operator(3)
        eigs = np.linalg.eigvalsh(top.gram)
        assert top.spectral_norm == pytest.approx(eigs.max(), abs=1e-8)
        assert top.spectral_norm == pytest.approx(3.0, abs=1e-8)

    def test_full_row_rank(self):
        for extent in (2, 5, 9):
            top = temporal_operator(extent)
            assert np.linalg.matrix_rank(top.matrix) == extent - 1

    def test_extent_too_small(self):
        with pytest.raises(ValueError):
            temporal_operator(1)


class TestSpectralNorm:
    def test_identity(self):
        for k in (1, 3, 7):
            assert spectral_norm(np.eye(k)) == pytest.approx(1.0, abs=1e-10)

    def test_diagonal_with_negative_entry(self):
        assert spectral_norm(np.diag([3.0, -5.0])) == pytest.approx(5.0, abs=1e-8)

    def test_path_laplacian_norm_is_three(self):
        # exact spectrum of the 3-node path Laplacian is {0, 1, 3}
        assert spectral_norm(PATH_L) == pytest.approx(3.0, abs=1e-8)

    def test_zero_matrix(self):
        assert spectral_norm(np.zeros((4, 4))) == 0.0

    def test_matches_svd_oracle_on_random_matrices(self):
        rng = np.random.default_rng(3)
        for n, m in [(5, 5), (20, 13), (50, 50), (7, 50)]:
            mat = rng.standard_normal((n, m))
            assert spectral_norm(mat) == pytest.approx(svd_norm(mat), abs=1e-8)

    def test_warm_start_reuses_direction(self):
        rng = np.random.default_rng(4)
        mat = rng.standard_normal((12, 12))
        sigma, v = power_iteration(mat)
        sigma2, _ = power_iteration(mat, v0=v)
        assert sigma2 == pytest.approx(sigma, abs=1e-10)

    def test_start_vector_orthogonal_trap_avoided(self):
        # the all-ones vector spans the Laplacian null space; the seeded
        # random start must not get stuck there
        assert spectral_norm(PATH_L, v0=None) == pytest.approx(3.0, abs=1e-8)


class TestBetaRule:
    def test_direct_values(self):
        top = temporal_operator(3)
        assert beta_from_prior(laplacian(PATH_W)) == pytest.approx(1.0 / 0.6, rel=1e-8)
        assert beta_from_prior(top) == pytest.approx(1.0 / 0.6, rel=1e-8)

    def test_norm_five_gives_one(self):
        from strtd.priors import PriorMatrix

        prior = PriorMatrix(kind="laplacian", matrix=np.eye(2) * 5, spectral_norm=5.0)
        assert beta_from_prior(prior) == pytest.approx(1.0, rel=1e-12)

    def test_monotone_decreasing_in_norm(self):
        from strtd.priors import PriorMatrix

        betas = [
            beta_from_prior(PriorMatrix("laplacian", np.eye(2), float(norm)))
            for norm in (0.5, 1.0, 5.0, 50.0, 5e6)
        ]
        assert all(b1 > b2 for b1, b2 in zip(betas, betas[1:]))

    def test_zero_norm_signals_inactive(self):
        from strtd.priors import PriorMatrix

        with pytest.raises(ValueError, match="regularizer inactive"):
            beta_from_prior(PriorMatrix("laplacian", np.zeros((2, 2)), 0.0))
