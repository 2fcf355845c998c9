import pytest

from phmkit.errors import ConfigError
from phmkit.ingest import parse_canonical_csv, serialize_canonical_csv
from phmkit.synth import DRIFT_SIGNALS, SynthConfig, generate_fleet
from phmkit.types import COMPONENTS, SIGNAL_NAMES


def small_config(**overrides):
    base = dict(
        n_units=6,
        lifetime_range=(20, 30),
        cycle_length_range=(10, 20),
        noise_scale=0.3,
        seed=5,
    )
    base.update(overrides)
    return SynthConfig(**base)


class TestConfigValidation:
    def test_bad_proportions_rejected(self):
        with pytest.raises(ConfigError, match="sum to 1"):
            small_config(subset_mix={"DS01": 0.5, "DS03": 0.4})

    def test_unknown_subset_rejected(self):
        with pytest.raises(ConfigError, match="DS99"):
            small_config(subset_mix={"DS99": 1.0})

    def test_empty_range_rejected(self):
        with pytest.raises(ConfigError):
            small_config(lifetime_range=(30, 20))


class TestDeterminism:
    def test_same_seed_byte_identical_csv(self, tmp_path):
        paths = []
        for run in ("a", "b"):
            records, _ = generate_fleet(small_config())
            path = tmp_path / f"{run}.csv"
            serialize_canonical_csv(records, path)
            paths.append(path)
        assert paths[0].read_bytes() == paths[1].read_bytes()

    def test_different_seed_differs(self):
        rec_a, _ = generate_fleet(small_config(seed=1))
        rec_b, _ = generate_fleet(small_config(seed=2))
        assert rec_a != rec_b


class TestFleetStructure:
    def test_lifetimes_within_range(self):
        config = SynthConfig(
            n_units=50, lifetime_range=(60, 100), cycle_length_range=(5, 10),
            noise_scale=0.1, seed=3,
        )
        _, manifest = generate_fleet(config)
        assert all(60 <= e.t_eol <= 100 for e in manifest.units)

    def test_health_state_single_transition(self):
        records, manifest = generate_fleet(small_config())
        for entry in manifest.units:
            hs = [r.health_state for r in records if r.unit_id == entry.unit_id]
            assert len(hs) == entry.t_eol
            flips = sum(1 for a, b in zip(hs, hs[1:]) if a != b)
            assert flips == 1 and hs[0] == 1 and hs[-1] == 0

    def test_passes_ingest_invariants(self, tmp_path, tiny_fleet):
        records, _ = tiny_fleet
        path = tmp_path / "roundtrip.csv"
        serialize_canonical_csv(records, path)
        assert parse_canonical_csv(path) == records

    def test_split_rule_gives_60_30_at_90_units(self):
        config = SynthConfig(
            n_units=90, lifetime_range=(5, 6), cycle_length_range=(2, 3),
            noise_scale=0.1, seed=0,
        )
        _, manifest = generate_fleet(config)
        splits = [e.split for e in manifest.units]
        assert splits.count("train") == 60
        assert splits.count("test") == 30

    def test_subset_mix_respected(self):
        config = SynthConfig(
            n_units=8, lifetime_range=(5, 6), cycle_length_range=(2, 3),
            subset_mix={"DS01": 0.5, "DS06": 0.5}, noise_scale=0.1, seed=0,
        )
        _, manifest = generate_fleet(config)
        subsets = [e.subset for e in manifest.units]
        assert subsets.count("DS01") == 4
        assert subsets.count("DS06") == 4

    def test_flight_class_constant_per_cycle(self, tiny_fleet):
        records, _ = tiny_fleet
        assert all(r.flight_class in (1, 2, 3) for r in records)


class TestDriftSeparability:
    def test_noiseless_end_of_life_linearly_separable(self):
        """With no noise, per-component drifting-signal means separate the
        last 10% of each unit's life from the first 10% by a threshold."""
        config = SynthConfig(
            n_units=16, lifetime_range=(60, 100), cycle_length_range=(5, 8),
            noise_scale=0.0, seed=11,
        )
        records, manifest = generate_fleet(config)
        by_unit = manifest.by_unit()
        for comp in COMPONENTS:
            sig = next(iter(DRIFT_SIGNALS[comp]))
            j = SIGNAL_NAMES.index(sig)
            early, late = [], []
            for rec in records:
                entry = by_unit[rec.unit_id]
                if not getattr(entry.failures, comp):
                    continue
                frac = rec.cycle_number / entry.t_eol
                mean = float(rec.series[j].mean())
                if frac <= 0.1:
                    early.append(mean)
                elif frac >= 0.9:
                    late.append(mean)
            assert early and late
            # 100% separation: one threshold splits the classes exactly.
            if DRIFT_SIGNALS[comp][sig] > 0:
                assert max(early) < min(late)
            else:
                assert min(early) > max(late)
