import json

import numpy as np
import pytest

from homcluster.dataset import (AttributeSchema, MixedDataset,
                                clip_upper_quantile, load_csv, standardize,
                                write_csv)
from homcluster.errors import ConstantColumn, ParseFailure

from conftest import categorical_dataset


def write_files(tmp_path, csv_text, columns):
    csv_path = tmp_path / "data.csv"
    csv_path.write_text(csv_text)
    schema_path = tmp_path / "schema.json"
    schema_path.write_text(json.dumps({"columns": columns}))
    return csv_path, schema_path


COLOR_X = ("color,x\nred,1.5\nblue,2.5\nred,3.5\n",
           [{"name": "color", "kind": "nominal"},
            {"name": "x", "kind": "continuous"}])


class TestLoadCsv:

    def test_shapes_and_codes(self, tmp_path):
        d = load_csv(*write_files(tmp_path, *COLOR_X))
        assert d.p_c == 1 and d.p_n == 1 and d.n_rows == 3
        # first-appearance level order
        assert d.attribute("color").levels == ("red", "blue")
        assert list(d.categorical_codes["color"]) == [0, 1, 0]
        assert np.allclose(d.continuous_values["x"], [1.5, 2.5, 3.5])

    def test_non_numeric_token(self, tmp_path):
        files = write_files(tmp_path, "color,x\nred,abc\n", COLOR_X[1])
        with pytest.raises(ParseFailure, match="abc"):
            load_csv(*files)

    def test_empty_file(self, tmp_path):
        files = write_files(tmp_path, "", COLOR_X[1])
        with pytest.raises(ParseFailure):
            load_csv(*files)

    def test_header_only(self, tmp_path):
        files = write_files(tmp_path, "color,x\n", COLOR_X[1])
        with pytest.raises(ParseFailure):
            load_csv(*files)

    def test_schema_column_missing(self, tmp_path):
        files = write_files(tmp_path, "color\nred\n", COLOR_X[1])
        with pytest.raises(ParseFailure, match="x"):
            load_csv(*files)

    def test_missing_value_rejected_with_diagnostic(self, tmp_path):
        files = write_files(tmp_path, "color,x\nred,1.0\n,2.0\n", COLOR_X[1])
        with pytest.raises(ParseFailure, match="row 3.*'color'"):
            load_csv(*files)

    def test_missing_as_level(self, tmp_path):
        files = write_files(tmp_path, "color,x\nred,1.0\n,2.0\n", COLOR_X[1])
        d = load_csv(*files, missing_as_level=True)
        assert "__NA__" in d.attribute("color").levels

    def test_missing_continuous_still_rejected(self, tmp_path):
        files = write_files(tmp_path, "color,x\nred,\n", COLOR_X[1])
        with pytest.raises(ParseFailure):
            load_csv(*files, missing_as_level=True)

    def test_airline_schema_fixture(self, tmp_path):
        # the 11-attribute flight-delay layout: 2 ordinal, 3 nominal,
        # 6 continuous
        names_kinds = [
            ("DAY_OF_MONTH", "ordinal"), ("DAY_OF_WEEK", "ordinal"),
            ("CARRIER", "nominal"), ("ORIGIN", "nominal"),
            ("DEST", "nominal"), ("DEP_DELAY", "continuous"),
            ("TAXI_OUT", "continuous"), ("TAXI_IN", "continuous"),
            ("ARR_DELAY", "continuous"), ("CRS_ELAPSED_TIME", "continuous"),
            ("NDDT", "continuous"),
        ]
        header = ",".join(n for n, _ in names_kinds)
        rows = ["1,5,AA,JFK,LAX,3.0,11.0,6.0,-4.0,360.0,600.0",
                "2,6,DL,ATL,ORD,0.0,14.0,8.0,12.0,120.0,1440.0"]
        files = write_files(tmp_path, header + "\n" + "\n".join(rows) + "\n",
                            [{"name": n, "kind": k} for n, k in names_kinds])
        d = load_csv(*files)
        assert d.p_c == 5 and d.p_n == 6 and d.n_rows == 2

    def test_round_trip(self, tmp_path):
        d = load_csv(*write_files(tmp_path, *COLOR_X))
        out = tmp_path / "out.csv"
        write_csv(d, out)
        schema_path = tmp_path / "schema.json"
        d2 = load_csv(out, schema_path)
        assert d2.attribute("color").levels == d.attribute("color").levels
        assert np.array_equal(d2.categorical_codes["color"],
                              d.categorical_codes["color"])
        assert np.array_equal(d2.continuous_values["x"],
                              d.continuous_values["x"])

    def test_round_trip_preserves_awkward_reals(self, tmp_path):
        d = categorical_dataset({"c": [0, 1]},
                                continuous={"x": [0.1, 1 / 3]})
        out = tmp_path / "awkward.csv"
        write_csv(d, out)
        schema_path = tmp_path / "schema.json"
        schema_path.write_text(json.dumps({"columns": [
            {"name": "c", "kind": "nominal"},
            {"name": "x", "kind": "continuous"}]}))
        d2 = load_csv(out, schema_path)
        assert np.array_equal(d2.continuous_values["x"],
                              d.continuous_values["x"])


class TestStandardize:

    def test_small_column(self):
        d = categorical_dataset({"c": [0, 1, 0]}, continuous={"x": [1, 2, 3]})
        s = standardize(d)
        v = s.continuous_values["x"]
        # oracle: (x - mean) / population sd
        raw = np.array([1.0, 2.0, 3.0])
        expected = (raw - raw.mean()) / raw.std()
        assert np.allclose(v, expected, atol=1e-12)
        assert np.allclose(v, [-1.224744871391589, 0.0, 1.224744871391589])
        assert abs(v.mean()) < 1e-10
        assert abs(v.std() - 1.0) < 1e-10

    def test_constant_column(self):
        d = categorical_dataset({"c": [0, 1, 0]}, continuous={"x": [5, 5, 5]})
        with pytest.raises(ConstantColumn):
            standardize(d)

    def test_idempotent(self, rng):
        d = categorical_dataset({"c": [0, 1] * 10},
                                continuous={"x": rng.normal(3, 7, 20)})
        once = standardize(d)
        twice = standardize(once)
        assert np.allclose(twice.continuous_values["x"],
                           once.continuous_values["x"], atol=1e-12)

    def test_categorical_untouched(self):
        d = categorical_dataset({"c": [0, 1, 1]}, continuous={"x": [1, 2, 4]})
        s = standardize(d)
        assert np.array_equal(s.categorical_codes["c"],
                              d.categorical_codes["c"])


class TestClipUpperQuantile:

    @staticmethod
    def quantile_oracle(values, q):
        # sort-and-interpolate ("type 7")
        v = np.sort(np.asarray(values, dtype=float))
        pos = (len(v) - 1) * q
        lo = int(np.floor(pos))
        hi = min(lo + 1, len(v) - 1)
        return v[lo] + (pos - lo) * (v[hi] - v[lo])

    def test_percentile_99(self):
        vals = np.arange(1.0, 101.0)
        d = categorical_dataset({"c": [0, 1] * 50}, continuous={"x": vals})
        clipped = clip_upper_quantile(d, "x", 0.99)
        threshold = self.quantile_oracle(vals, 0.99)
        assert abs(threshold - 99.01) < 1e-12
        assert clipped.n_rows == 99
        assert clipped.continuous_values["x"].max() <= threshold

    def test_median(self):
        d = categorical_dataset({"c": [0, 1, 0, 1]},
                                continuous={"x": [1, 2, 3, 4]})
        clipped = clip_upper_quantile(d, "x", 0.5)
        assert self.quantile_oracle([1, 2, 3, 4], 0.5) == 2.5
        assert sorted(clipped.continuous_values["x"]) == [1.0, 2.0]

    def test_all_equal(self):
        d = categorical_dataset({"c": [0, 1, 1]}, continuous={"x": [7, 7, 7]})
        assert clip_upper_quantile(d, "x", 0.9).n_rows == 3

    def test_errors(self):
        d = categorical_dataset({"c": [0, 1]}, continuous={"x": [1, 2]})
        with pytest.raises(ValueError):
            clip_upper_quantile(d, "c", 0.9)
        with pytest.raises(ValueError):
            clip_upper_quantile(d, "x", 1.5)

    def test_never_grows_and_preserves_schema(self, rng):
        for _ in range(10):
            n = int(rng.integers(5, 40))
            d = categorical_dataset({"c": rng.integers(0, 3, n)},
                                    continuous={"x": rng.normal(size=n)})
            q = float(rng.uniform(0.05, 0.95))
            clipped = clip_upper_quantile(d, "x", q)
            assert clipped.n_rows <= d.n_rows
            assert clipped.n_rows >= int(np.floor(q * n))
            assert clipped.schema == d.schema


class TestInvariants:

    def test_unique_names_enforced(self):
        with pytest.raises(ValueError):
            MixedDataset(
                (AttributeSchema("x", "continuous"),
                 AttributeSchema("x", "continuous")),
                {}, {"x": np.array([1.0])})

    def test_duplicate_levels_rejected(self):
        with pytest.raises(ValueError):
            AttributeSchema("c", "nominal", ("A", "A"))

    def test_continuous_with_levels_rejected(self):
        with pytest.raises(ValueError):
            AttributeSchema("x", "continuous", ("A",))

    def test_code_out_of_range(self):
        with pytest.raises(ValueError):
            categorical_dataset({"c": [0, 5]}, n_levels={"c": 2})
