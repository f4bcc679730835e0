import math
from pathlib import Path

import pytest

from observables.linalg import ComplexMatrix, ComplexScalar
from observables.matrix_file import (
    MatrixFileError,
    file_digest,
    format_float,
    parse_matrix,
    read_matrix,
    render_json,
    render_matrix,
    write_matrix,
    write_records,
)
from observables.protocol import ShotRecord
from tests.conftest import lowering_operator


class TestFormatFloat:
    """Tests for format_float"""

    @pytest.mark.parametrize(
        ("value", "expected"),
        [
            (1.0, "1.0"),
            (-0.0, "-0.0"),
            (0.5, "0.5"),
            (0.1, "0.10000000000000001"),
            (1e300, "1.0000000000000001e+300"),
        ],
    )
    def test_seventeen_significant_digits(self, value: float, expected: str):
        """Test floats are written with 17 significant digits and stay JSON floats"""
        assert format_float(value) == expected

    def test_rejects_non_finite(self):
        """Test NaN cannot be serialized"""
        with pytest.raises(MatrixFileError, match="non-finite"):
            format_float(math.nan)


class TestRenderJson:
    """Tests for render_json"""

    def test_sorted_keys(self):
        """Test keys are sorted at every level"""
        text = render_json({"b": 1, "a": {"d": True, "c": None}})
        assert text == '{"a": {"c": null, "d": true}, "b": 1}'

    def test_nested_floats(self):
        """Test floats inside lists use 17 digits"""
        assert render_json([0.25, [1e-5]]) == "[0.25, [1.0000000000000001e-05]]"

    def test_rejects_unknown_types(self):
        """Test unsupported values are rejected"""
        with pytest.raises(MatrixFileError, match="cannot serialize set"):
            render_json({1, 2})


class TestMatrixFile:
    """Tests for reading and writing matrix files"""

    def test_render_lowering_operator(self):
        """Test the document layout"""
        assert render_matrix(lowering_operator()) == (
            '{"dim": 2, "entries": [[0.0, 0.0], [0.0, 0.0], [1.0, 0.0], [0.0, 0.0]]}\n'
        )

    def test_round_trip_is_bit_exact(self, tmp_path: Path):
        """Test awkward doubles survive write then read unchanged"""
        m = ComplexMatrix(
            [
                [0.1 + math.pi * 1j, complex(-0.0, 5e-324)],
                [1.7976931348623157e308, -2.0 / 3.0 - 1e-300j],
            ]
        )
        path = tmp_path / "m.json"
        write_matrix(path, m)
        assert read_matrix(path) == m
        assert [math.copysign(1.0, re) for re, _ in read_matrix(path).to_rows()][1] == -1.0

    def test_accepts_integers(self):
        """Test integer entries parse as floats"""
        m = parse_matrix('{"dim": 1, "entries": [[2, -3]]}')
        assert m == ComplexMatrix([[2 - 3j]])

    @pytest.mark.parametrize(
        ("text", "message"),
        [
            ("not json", "Expecting value"),
            ("[1, 2]", "keys 'dim' and 'entries'"),
            ('{"dim": 0, "entries": []}', "positive integer"),
            ('{"dim": 2, "entries": [[0, 0]]}', "expected 4 entries"),
            ('{"dim": 1, "entries": [[0, "1"]]}', "entry 0"),
            ('{"dim": 1, "entries": [[NaN, 0]]}', "NaN is not a finite number"),
            ('{"dim": 1, "entries": [[1e999, 0]]}', "finite"),
        ],
    )
    def test_rejects_malformed(self, text: str, message: str):
        """Test malformed documents are rejected with a reason"""
        with pytest.raises(MatrixFileError, match=message):
            parse_matrix(text)

    def test_missing_file(self, tmp_path: Path):
        """Test an unreadable path is a matrix file error"""
        with pytest.raises(MatrixFileError, match="missing.json"):
            read_matrix(tmp_path / "missing.json")

    def test_digest_tracks_content(self, tmp_path: Path):
        """Test equal bytes give equal digests"""
        first, second = tmp_path / "a.json", tmp_path / "b.json"
        write_matrix(first, lowering_operator())
        write_matrix(second, lowering_operator())
        assert file_digest(first) == file_digest(second)
        assert len(file_digest(first)) == 64


class TestWriteRecords:
    """Tests for write_records"""

    def test_csv_layout(self, tmp_path: Path):
        """Test a header row then one line per shot"""
        path = tmp_path / "records.csv"
        write_records(path, [ShotRecord(0, 1, 0, 0.1, -0.5, ComplexScalar(0.1, -0.5))])
        assert path.read_text().splitlines() == [
            "shot,outcome1,outcome2,lambda1,lambda2,combined_re,combined_im",
            "0,1,0,0.10000000000000001,-0.5,0.10000000000000001,-0.5",
        ]
