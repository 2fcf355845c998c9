import numpy as np
import pytest

from phmkit.errors import DataError
from phmkit.features import extract_matrix, schema_hash
from phmkit.preprocess import (
    MinMaxParams,
    apply_minmax,
    apply_pca,
    correlation_matrix,
    fit_minmax,
    fit_pca,
    fit_pipeline,
    identity_pca,
    load_transform,
    save_transform,
    symmetric_eig,
)


class TestMinMax:
    def test_fit_simple_column(self):
        params = fit_minmax(np.array([[2.0], [4.0], [6.0]]))
        assert params.mins[0] == 2.0 and params.maxs[0] == 6.0

    def test_constant_column(self):
        params = fit_minmax(np.array([[3.0], [3.0]]))
        assert params.mins[0] == params.maxs[0] == 3.0

    def test_single_row(self):
        params = fit_minmax(np.array([[1.0, 7.0]]))
        assert np.array_equal(params.mins, params.maxs)

    def test_apply_train_endpoints(self):
        X = np.array([[2.0], [4.0], [6.0]])
        out = apply_minmax(fit_minmax(X), X)
        assert out[:, 0].tolist() == [0.0, 0.5, 1.0]

    def test_test_data_not_clipped(self):
        params = MinMaxParams(mins=np.array([2.0]), maxs=np.array([6.0]))
        out = apply_minmax(params, np.array([[8.0]]))
        assert out[0, 0] == 1.5

    def test_zero_range_column_maps_to_zero(self):
        X = np.array([[3.0], [3.0]])
        out = apply_minmax(fit_minmax(X), np.array([[3.0], [9.0]]))
        assert np.all(out == 0.0)

    def test_non_finite_rejected(self):
        with pytest.raises(DataError):
            fit_minmax(np.array([[np.nan]]))

    def test_dimension_mismatch_rejected(self):
        params = fit_minmax(np.zeros((2, 3)))
        with pytest.raises(DataError):
            apply_minmax(params, np.zeros((2, 4)))


class TestSymmetricEig:
    def test_identity(self):
        V, lam = symmetric_eig(np.eye(3))
        assert np.allclose(lam, 1.0, atol=1e-12)
        assert np.allclose(np.abs(V), np.eye(3), atol=1e-12)

    def test_rank_one_ones(self):
        V, lam = symmetric_eig(np.array([[1.0, 1.0], [1.0, 1.0]]))
        assert lam == pytest.approx([2.0, 0.0], abs=1e-12)
        assert V[:, 0] == pytest.approx([1 / np.sqrt(2)] * 2, abs=1e-12)

    def test_diagonal(self):
        V, lam = symmetric_eig(np.diag([2.0, 1.0]))
        assert lam.tolist() == [2.0, 1.0]
        assert np.array_equal(V, np.eye(2))

    def test_non_symmetric_rejected(self):
        with pytest.raises(DataError, match="symmetric"):
            symmetric_eig(np.array([[1.0, 2.0], [0.0, 1.0]]))

    def test_sign_convention(self):
        rng = np.random.default_rng(0)
        A = rng.normal(size=(6, 6))
        Q = A @ A.T
        V, _ = symmetric_eig(Q)
        for k in range(6):
            pivot = np.argmax(np.abs(V[:, k]))
            assert V[pivot, k] > 0

    def test_eigenpairs_satisfy_equation(self):
        rng = np.random.default_rng(1)
        A = rng.normal(size=(12, 12))
        Q = (A + A.T) / 2
        V, lam = symmetric_eig(Q)
        norm = np.abs(Q).max()
        for k in range(12):
            residual = Q @ V[:, k] - lam[k] * V[:, k]
            assert np.abs(residual).max() <= 1e-8 * norm

    def test_descending_order(self):
        rng = np.random.default_rng(2)
        A = rng.normal(size=(8, 8))
        _, lam = symmetric_eig((A + A.T) / 2)
        assert np.all(np.diff(lam) <= 0)


class TestFitPca:
    def test_perfectly_correlated_columns(self):
        x = np.linspace(0, 1, 10)
        X = np.column_stack([x, 2 * x])
        transform = fit_pca(X)
        assert transform.eigenvalues == pytest.approx([2.0, 0.0], abs=1e-12)

    def test_uncorrelated_columns_unit_eigenvalues(self):
        # Orthogonal residual construction: exactly zero sample correlation.
        a = np.array([1.0, -1.0, 1.0, -1.0])
        b = np.array([1.0, 1.0, -1.0, -1.0])
        transform = fit_pca(np.column_stack([a, b]))
        assert transform.eigenvalues == pytest.approx([1.0, 1.0], abs=1e-12)

    def test_trace_equals_p(self):
        rng = np.random.default_rng(3)
        X = rng.normal(size=(40, 7))
        transform = fit_pca(X)
        assert transform.eigenvalues.sum() == pytest.approx(7.0, abs=1e-9)

    def test_zero_variance_column_inert(self):
        rng = np.random.default_rng(4)
        X = np.column_stack([rng.normal(size=20), np.full(20, 5.0)])
        Q = correlation_matrix(X)
        assert Q[0, 1] == 0.0 and Q[1, 1] == 1.0
        transform = fit_pca(X)
        assert transform.eigenvalues == pytest.approx([1.0, 1.0], abs=1e-12)

    def test_single_row_rejected(self):
        with pytest.raises(DataError):
            fit_pca(np.zeros((1, 3)))


class TestApplyPca:
    def test_identity_eigenvectors_are_noop(self):
        X = np.random.default_rng(0).normal(size=(5, 3))
        assert np.allclose(apply_pca(identity_pca(3), X), X)

    def test_row_norms_preserved_literal(self):
        rng = np.random.default_rng(5)
        X = rng.normal(size=(30, 6))
        transform = fit_pca(X, mode="literal")
        Xt = apply_pca(transform, X)
        assert np.allclose(
            np.linalg.norm(Xt, axis=1), np.linalg.norm(X, axis=1), rtol=1e-12
        )

    def test_standardized_mode_decorrelates_training_data(self):
        rng = np.random.default_rng(6)
        base = rng.normal(size=(200, 4))
        X = base @ rng.normal(size=(4, 8)) + rng.normal(size=8)
        X += 0.05 * rng.normal(size=X.shape)
        transform = fit_pca(X, mode="standardized")
        Xt = apply_pca(transform, X)
        corr = np.corrcoef(Xt, rowvar=False)
        off = corr - np.diag(np.diag(corr))
        assert np.abs(off).max() < 1e-6

    def test_linearity_literal(self):
        rng = np.random.default_rng(7)
        X1 = rng.normal(size=(4, 5))
        X2 = rng.normal(size=(4, 5))
        transform = fit_pca(rng.normal(size=(30, 5)), mode="literal")
        combo = apply_pca(transform, 2.0 * X1 + 3.0 * X2)
        parts = 2.0 * apply_pca(transform, X1) + 3.0 * apply_pca(transform, X2)
        assert np.allclose(combo, parts, rtol=1e-12, atol=1e-12)

    def test_dimension_mismatch_rejected(self):
        transform = identity_pca(4)
        with pytest.raises(DataError):
            apply_pca(transform, np.zeros((2, 5)))


class TestPipeline:
    def test_train_only_statistics(self, tiny_split):
        """Refit on train alone and compare transforms bit-for-bit."""
        (train, test), _ = tiny_split
        train_matrix, _ = extract_matrix(train)
        both_matrix, _ = extract_matrix(train + test)

        t1 = fit_pipeline(train_matrix)
        t2 = fit_pipeline(train_matrix)
        assert np.array_equal(t1.minmax.mins, t2.minmax.mins)
        assert np.array_equal(t1.pca.eigenvectors, t2.pca.eigenvectors)

        t3 = fit_pipeline(both_matrix)
        assert not np.array_equal(t1.minmax.maxs, t3.minmax.maxs)

    def test_train_rows_map_into_unit_interval(self, tiny_split):
        (train, _), _ = tiny_split
        matrix, _ = extract_matrix(train)
        normalized = apply_minmax(fit_minmax(matrix), matrix)
        assert normalized.min() >= 0.0 and normalized.max() <= 1.0

    def test_disabled_pca_records_identity(self, tiny_split):
        (train, _), _ = tiny_split
        matrix, _ = extract_matrix(train)
        transform = fit_pipeline(matrix, pca_enabled=False)
        assert np.array_equal(transform.pca.eigenvectors, np.eye(129))
        normalized = apply_minmax(transform.minmax, matrix)
        assert np.allclose(transform.apply(matrix), normalized)

    def test_persistence_round_trip_bit_exact(self, tmp_path, tiny_split):
        (train, _), _ = tiny_split
        matrix, _ = extract_matrix(train)
        transform = fit_pipeline(matrix)
        path = tmp_path / "transform.json"
        save_transform(transform, path)
        loaded = load_transform(path)
        assert loaded.schema == schema_hash()
        assert np.array_equal(loaded.minmax.mins, transform.minmax.mins)
        assert np.array_equal(loaded.minmax.maxs, transform.minmax.maxs)
        assert np.array_equal(loaded.pca.eigenvectors, transform.pca.eigenvectors)
        assert np.array_equal(loaded.pca.eigenvalues, transform.pca.eigenvalues)
        assert np.array_equal(loaded.pca.col_means, transform.pca.col_means)
        assert np.array_equal(loaded.pca.col_stds, transform.pca.col_stds)
