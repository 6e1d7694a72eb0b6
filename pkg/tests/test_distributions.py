import numpy as np
import pytest

from ocsim.distributions import (
    Bin,
    DistributionTable,
    load_builtin_bundle,
    load_table,
    save_table,
    table_from_json,
    table_to_json,
)
from ocsim.errors import ConfigError


def cat(pairs, name="t", kind="categorical"):
    return DistributionTable(name, kind, tuple(Bin(l, None, None, m) for l, m in pairs))


class TestValidation:
    def test_mass_must_sum_to_one(self):
        with pytest.raises(ConfigError) as err:
            cat([("a", 0.5), ("b", 0.4)], name="bad_table").validate()
        assert "bad_table" in str(err.value)

    def test_negative_mass_rejected(self):
        with pytest.raises(ConfigError):
            cat([("a", 1.5), ("b", -0.5)]).validate()

    def test_piecewise_requires_contiguous_cover_from_zero(self):
        bins = (Bin("0-9", 0, 9, 0.5), Bin("11-20", 11, 20, 0.5))
        with pytest.raises(ConfigError):
            DistributionTable("t", "piecewise-by-age", bins).validate()
        bins = (Bin("1-10", 1, 10, 0.5), Bin("11-20", 11, 20, 0.5))
        with pytest.raises(ConfigError):
            DistributionTable("t", "piecewise-by-age", bins).validate()

    def test_overlapping_ranges_rejected(self):
        bins = (Bin("0-10", 0, 10, 0.5), Bin("10-20", 10, 20, 0.5))
        with pytest.raises(ConfigError):
            DistributionTable("t", "piecewise-by-age", bins).validate()

    def test_scalar_rate_exempt_from_sum(self):
        t = DistributionTable("t", "scalar-rate", (Bin("x", None, None, 5.0),))
        t.validate()
        assert t.scalar == 5.0


class TestSampling:
    def test_point_mass_always_that_label(self):
        t = cat([("only", 1.0)])
        rng = np.random.default_rng(0)
        assert all(t.sample_label(rng) == "only" for _ in range(50))

    def test_piecewise_sample_within_bins(self):
        bins = (Bin("0-9", 0, 9, 0.3), Bin("10-20", 10, 20, 0.7))
        t = DistributionTable("t", "piecewise-by-age", bins)
        rng = np.random.default_rng(1)
        draws = [t.sample_age_years(rng) for _ in range(500)]
        assert all(0 <= d <= 20 for d in draws)
        share_low = sum(d <= 9 for d in draws) / len(draws)
        assert abs(share_low - 0.3) < 0.08

    def test_rate_lookup_by_age(self):
        bins = (Bin("0-17", 0, 17, 0.1), Bin("18-99", 18, 99, 0.5))
        t = DistributionTable("t", "scalar-rate", bins)
        assert t.rate_for_age(10) == 0.1
        assert t.rate_for_age(40) == 0.5
        assert t.rate_for_age(150) == 0.0

    def test_sample_value_from_ranges(self):
        bins = (Bin("5-9", 5, 9, 1.0),)
        t = DistributionTable("t", "categorical", bins)
        rng = np.random.default_rng(2)
        assert all(5 <= t.sample_value(rng) <= 9 for _ in range(50))


class TestRoundTrip:
    def test_csv_round_trip(self, tmp_path):
        t = DistributionTable(
            "things",
            "categorical",
            (Bin("a", None, None, 0.25), Bin("b", None, None, 0.75)),
            "demo table",
        )
        save_table(t, tmp_path / "things.csv")
        back = load_table(tmp_path / "things.csv")
        assert back.kind == t.kind and back.bins == t.bins
        assert back.description == "demo table"

    def test_kind_inferred_when_comment_missing(self, tmp_path):
        path = tmp_path / "plain.csv"
        path.write_text(
            "bin_label,lower_bound,upper_bound,mass\na,,,0.5\nb,,,0.5\n"
        )
        assert load_table(path).kind == "categorical"
        path.write_text(
            "bin_label,lower_bound,upper_bound,mass\n0-10,0,10,0.02\n11-20,11,20,0.03\n"
        )
        assert load_table(path).kind == "scalar-rate"

    def test_json_round_trip(self):
        t = DistributionTable(
            "ranged", "scalar-rate", (Bin("0-9", 0, 9, 0.4), Bin("10-20", 10, 20, 0.2))
        )
        back = table_from_json("ranged", table_to_json(t))
        assert back == t


class TestBuiltinBundle:
    def test_all_tables_valid(self):
        bundle = load_builtin_bundle()
        assert len(bundle) >= 20
        for table in bundle.values():
            table.validate()

    def test_co_offending_mode_is_one(self):
        bundle = load_builtin_bundle()
        assert bundle["co_offending_size"].mode_label() == "1"
