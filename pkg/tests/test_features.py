import numpy as np
import pytest

from phmkit.errors import DataError
from phmkit.features import (
    FEATURE_NAMES,
    FeatureMatrix,
    N_FEATURES,
    extract_cycle_features,
    extract_matrix,
    read_cache,
    schema_hash,
    write_cache,
)
from phmkit.types import SIGNAL_NAMES, CycleRecord, FailureFlags, LabelVector


def record_with_signal(values, fc=2, cycle=7, unit=1):
    """All 18 signals share the same per-timestamp values."""
    series = np.tile(np.asarray(values, dtype=float), (18, 1))
    return CycleRecord(unit, cycle, fc, 1, series)


class TestSchema:
    def test_exactly_129_features(self):
        assert N_FEATURES == 129
        assert len(FEATURE_NAMES) == 18 * 7 + 3

    def test_name_order(self):
        assert FEATURE_NAMES[0] == "alt_mean"
        assert FEATURE_NAMES[6] == "alt_max"
        assert FEATURE_NAMES[7] == "Mach_mean"
        assert FEATURE_NAMES[-3:] == ("duration", "cycle_number", "flight_class")
        for i, sig in enumerate(SIGNAL_NAMES):
            assert FEATURE_NAMES[i * 7] == f"{sig}_mean"
            assert FEATURE_NAMES[i * 7 + 3] == f"{sig}_q1"

    def test_schema_hash_is_stable(self):
        assert schema_hash() == schema_hash()
        assert len(schema_hash()) == 64


class TestExtractCycleFeatures:
    def test_vector_length(self):
        vec = extract_cycle_features(record_with_signal([1.0, 2.0]))
        assert vec.shape == (129,)

    def test_constant_signal(self):
        vec = extract_cycle_features(record_with_signal([3.0, 3.0, 3.0, 3.0]))
        # alt block: mean, std, min, q1, median, q3, max
        assert vec[0] == 3.0
        assert vec[1] == 0.0
        assert np.all(vec[2:7] == 3.0)

    def test_linear_signal_stats(self):
        vec = extract_cycle_features(record_with_signal([1.0, 2.0, 3.0, 4.0]))
        mean, std, lo, q1, med, q3, hi = vec[:7]
        assert mean == 2.5
        assert std == pytest.approx(np.sqrt(5.0 / 4.0), abs=1e-12)
        assert (lo, hi) == (1.0, 4.0)
        assert q1 == pytest.approx(1.75, abs=1e-12)
        assert med == pytest.approx(2.5, abs=1e-12)
        assert q3 == pytest.approx(3.25, abs=1e-12)

    def test_extras(self):
        vec = extract_cycle_features(record_with_signal([1.0, 2.0, 3.0], fc=3, cycle=9))
        assert vec[-3] == 3  # duration
        assert vec[-2] == 9
        assert vec[-1] == 3

    def test_permutation_invariance(self):
        rng = np.random.default_rng(0)
        base = rng.normal(size=(18, 40))
        rec_a = CycleRecord(1, 1, 1, 1, base)
        perm = rng.permutation(40)
        rec_b = CycleRecord(1, 1, 1, 1, base[:, perm])
        vec_a = extract_cycle_features(rec_a)
        vec_b = extract_cycle_features(rec_b)
        block_a = vec_a[: 18 * 7].reshape(18, 7)
        block_b = vec_b[: 18 * 7].reshape(18, 7)
        # Order statistics sort first, so they are bit-identical; mean and
        # std only agree up to floating summation order.
        assert np.array_equal(block_a[:, 2:], block_b[:, 2:])
        assert np.allclose(block_a[:, :2], block_b[:, :2], rtol=1e-12, atol=1e-14)
        assert np.array_equal(vec_a[-3:], vec_b[-3:])

    def test_five_number_ordering_random(self):
        rng = np.random.default_rng(7)
        for _ in range(25):
            rec = CycleRecord(1, 1, 1, 1, rng.normal(size=(18, rng.integers(1, 30))))
            vec = extract_cycle_features(rec)
            block = vec[: 18 * 7].reshape(18, 7)
            lo, q1, med, q3, hi = block[:, 2], block[:, 3], block[:, 4], block[:, 5], block[:, 6]
            assert np.all(lo <= q1) and np.all(q1 <= med)
            assert np.all(med <= q3) and np.all(q3 <= hi)
            assert np.all(block[:, 1] >= 0)

    def test_single_timestamp_defined(self):
        vec = extract_cycle_features(record_with_signal([5.0]))
        assert vec[1] == 0.0  # population std of one sample
        assert np.all(vec[2:7] == 5.0)


class TestExtractMatrix:
    def labeled(self, records):
        lab = LabelVector(hs=1, ef=FailureFlags(hpt=1), rul=10)
        return [(rec, lab) for rec in records]

    def test_shapes_and_alignment(self):
        recs = [record_with_signal([1.0, 2.0], cycle=c) for c in (1, 2, 3)]
        matrix, labels = extract_matrix(self.labeled(recs))
        assert matrix.values.shape == (3, 129)
        assert len(labels) == 3
        assert matrix.row_keys == ((1, 1), (1, 2), (1, 3))

    def test_single_cycle(self):
        matrix, _ = extract_matrix(self.labeled([record_with_signal([1.0])]))
        assert matrix.values.shape == (1, 129)

    def test_row_order_matches_input(self):
        recs = [record_with_signal([float(c)], cycle=c) for c in (1, 2, 3)]
        matrix, _ = extract_matrix(self.labeled(recs))
        assert list(matrix.values[:, -2]) == [1.0, 2.0, 3.0]

    def test_empty_input_rejected(self):
        with pytest.raises(DataError):
            extract_matrix([])

    def test_duplicate_keys_rejected(self):
        recs = [record_with_signal([1.0]), record_with_signal([2.0])]
        with pytest.raises(DataError, match="duplicate"):
            extract_matrix(self.labeled(recs))


class TestCache:
    def test_round_trip_exact(self, tmp_path, tiny_split):
        (train, _), _ = tiny_split
        matrix, _ = extract_matrix(train[:20])
        path = tmp_path / "features.csv"
        write_cache(matrix, path)
        loaded = read_cache(path)
        assert loaded.row_keys == matrix.row_keys
        assert np.array_equal(loaded.values, matrix.values)

    def test_header_schema(self, tmp_path):
        matrix = FeatureMatrix(
            values=np.zeros((1, 129)), row_keys=((1, 1),)
        )
        path = tmp_path / "cache.csv"
        write_cache(matrix, path)
        header = path.read_text().splitlines()[0]
        assert header == "unit,cycle," + ",".join(FEATURE_NAMES)
