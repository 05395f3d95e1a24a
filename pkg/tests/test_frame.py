import io

import numpy as np
import pytest

import edaexplain as e
from conftest import csv_round_trip, random_frame


def ingest(text, **kw):
    return e.ingest_csv(io.StringIO(text), **kw)


class TestIngest:
    def test_type_inference(self):
        f = ingest("a,b,c\n1,x,1.5\n2,y,-3\n3,z,2e4\n", name="t")
        assert f.column("a").dtype is e.DType.NUMERIC
        assert f.column("b").dtype is e.DType.CATEGORICAL
        assert f.column("c").dtype is e.DType.NUMERIC
        assert f.column("c").cell(2) == 20000.0

    def test_one_non_numeric_token_makes_column_categorical(self):
        f = ingest("a\n1\n2\noops\n", name="t")
        assert f.column("a").dtype is e.DType.CATEGORICAL
        assert f.column("a").cell(0) == "1"

    def test_null_tokens(self):
        f = ingest("a,b\n1,x\n,\nNA,null\n", name="t")
        assert f.column("a").cell(1) is None
        assert f.column("a").cell(2) is None
        assert f.column("b").cell(1) is None
        assert f.column("b").cell(2) is None
        assert f.row_count == 3

    def test_custom_null_tokens(self):
        f = ingest("a\n1\nmissing\n", null_tokens=("missing",))
        assert f.column("a").dtype is e.DType.NUMERIC
        assert f.column("a").cell(1) is None

    def test_ragged_row_is_a_parse_error_with_row_number(self):
        with pytest.raises(e.ParseError, match="row 3"):
            ingest("a,b\n1,2\n3\n")

    def test_duplicate_header(self):
        with pytest.raises(e.ParseError, match="duplicate"):
            ingest("a,a\n1,2\n")

    def test_zero_data_rows(self):
        with pytest.raises(e.EmptyInputError):
            ingest("a,b\n")

    def test_missing_file(self):
        with pytest.raises(e.InputFileError):
            e.ingest_csv("/nonexistent/path.csv")

    def test_alternate_delimiter(self):
        f = ingest("a;b\n1;x\n", delimiter=";")
        assert f.column_names == ["a", "b"]

    def test_name_defaults_from_path(self, tmp_path):
        p = tmp_path / "songs.csv"
        p.write_text("a\n1\n")
        assert e.ingest_csv(str(p)).name == "songs"


class TestFrameBasics:
    def test_unknown_column(self):
        f = ingest("a\n1\n", name="t")
        with pytest.raises(e.UnknownColumnError):
            f.column("nope")

    def test_factorize_counts(self):
        f = ingest("a\nx\ny\nx\n\nx\n", name="t")
        fact = f.factorize("a")
        assert list(fact.support) == ["x", "y"]
        assert list(fact.counts) == [3, 1]
        assert fact.codes[3] == -1

    def test_factorize_is_cached(self):
        f = ingest("a\n1\n2\n", name="t")
        assert f.factorize("a") is f.factorize("a")

    def test_distribution(self):
        f = ingest("a\n1\n1\n2\n2\n", name="t")
        d = e.column_distribution(f.column("a"))
        assert list(d.support) == [1.0, 2.0]
        assert list(d.probs) == [0.5, 0.5]

    def test_distribution_all_null(self):
        f = ingest("a,b\n,1\n,2\n", name="t")
        with pytest.raises(e.AllNullError):
            e.column_distribution(f.column("a"))

    def test_take_keeps_dtypes(self):
        f = ingest("a,b\n1,x\n2,y\n3,z\n", name="t")
        g = f.take(np.array([2, 0]))
        assert g.row_count == 2
        assert g.column("a").cell(0) == 3.0
        assert g.column("b").cell(1) == "x"

    def test_row_index_set_bounds(self):
        f = ingest("a\n1\n2\n", name="t")
        with pytest.raises(e.IndexOutOfRangeError):
            e.RowIndexSet(f, [5])

    def test_remove_rows(self):
        f = ingest("a\n1\n2\n3\n", name="t")
        g = e.remove_rows(f, e.RowIndexSet(f, [1]))
        assert [g.column("a").cell(i) for i in range(2)] == [1.0, 3.0]

    def test_remove_rows_checks_frame_identity(self):
        f = ingest("a\n1\n2\n", name="t")
        g = ingest("a\n1\n2\n", name="t")
        with pytest.raises(ValueError):
            e.remove_rows(f, e.RowIndexSet(g, [0]))


class TestCsvRoundTrip:
    def test_values_and_dtypes_survive(self):
        rng = np.random.default_rng(3)
        for _ in range(10):
            f = random_frame(rng)
            g = csv_round_trip(f)
            assert g.column_names == f.column_names
            for name in f.column_names:
                assert g.column(name).dtype is f.column(name).dtype
                a, b = f.column(name).data, g.column(name).data
                if f.column(name).dtype is e.DType.NUMERIC:
                    assert np.array_equal(a, b, equal_nan=True)
                else:
                    assert list(a) == list(b)

    def test_quoting_of_delimiters_and_quotes(self):
        f = e.frame_from_rows(
            "t", [("a", "categorical")], [['say "hi", ok'], ["plain"]]
        )
        g = csv_round_trip(f)
        assert g.column("a").cell(0) == 'say "hi", ok'

    def test_nulls_become_empty_fields(self):
        f = ingest("a,b\n1,\n,x\n", name="t")
        g = csv_round_trip(f)
        assert g.column("a").cell(1) is None
        assert g.column("b").cell(0) is None

    def test_float_repr_is_exact(self):
        vals = [0.1, 1 / 3, 2.5e-100, 12345678901234.5]
        f = e.frame_from_rows("t", [("a", "numeric")], [[v] for v in vals])
        g = csv_round_trip(f)
        assert list(g.column("a").data) == vals
