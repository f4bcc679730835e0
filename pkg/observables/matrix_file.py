import hashlib
import json
import math
from pathlib import Path
from typing import Any, Sequence

from observables.errors import ObservablesError
from observables.linalg import ComplexMatrix
from observables.protocol import ShotRecord, records_frame


class MatrixFileError(ObservablesError):
    """Exception raised when a matrix file cannot be read or parsed"""

    invariant = "matrix-file"
    context = "Invalid matrix file"


def format_float(value: float) -> str:
    """
    Render a finite double with 17 significant digits.

    The result always reads back as a JSON float, so -0.0 keeps its sign.
    """
    if not math.isfinite(value):
        raise MatrixFileError(f"cannot serialize non-finite value {value!r}")
    text = format(value, ".17g")
    if not any(marker in text for marker in ".e"):
        text += ".0"
    return text


def render_json(value: Any) -> str:
    """
    Serialize plain data deterministically.

    Keys are sorted and floats use `format_float`, so equal values always
    produce equal bytes.
    """
    if isinstance(value, bool) or value is None:
        return json.dumps(value)
    if isinstance(value, float):
        return format_float(value)
    if isinstance(value, int):
        return str(value)
    if isinstance(value, str):
        return json.dumps(value, ensure_ascii=False)
    if isinstance(value, dict):
        members = (f"{json.dumps(str(k))}: {render_json(value[k])}" for k in sorted(value))
        return "{" + ", ".join(members) + "}"
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(render_json(item) for item in value) + "]"
    raise MatrixFileError(f"cannot serialize {type(value).__name__}")


def matrix_payload(m: ComplexMatrix) -> dict:
    return {"dim": m.dim, "entries": [list(pair) for pair in m.to_rows()]}


def render_matrix(m: ComplexMatrix) -> str:
    return render_json(matrix_payload(m)) + "\n"


def parse_matrix(text: str, source: str = "<string>") -> ComplexMatrix:
    """
    Parse a matrix document.

    Args:
        text: A JSON object `{"dim": d, "entries": [[re, im], ...]}` with d*d
            row-major pairs.
        source: Name used in error messages.

    Returns:
        ComplexMatrix: The parsed matrix.

    Raises:
        MatrixFileError: If the text is not a valid matrix document.
    """

    def reject_constant(name: str) -> float:
        raise MatrixFileError(f"{source}: {name} is not a finite number")

    try:
        document = json.loads(text, parse_constant=reject_constant)
    except json.JSONDecodeError as e:
        raise MatrixFileError(f"{source}: {e}") from e

    if not isinstance(document, dict) or set(document) != {"dim", "entries"}:
        raise MatrixFileError(f"{source}: expected an object with keys 'dim' and 'entries'")
    dim, entries = document["dim"], document["entries"]
    if isinstance(dim, bool) or not isinstance(dim, int) or dim < 1:
        raise MatrixFileError(f"{source}: dim must be a positive integer, got {dim!r}")
    if not isinstance(entries, list) or len(entries) != dim * dim:
        raise MatrixFileError(f"{source}: expected {dim * dim} entries")

    pairs = []
    for index, pair in enumerate(entries):
        if (
            not isinstance(pair, list)
            or len(pair) != 2
            or any(isinstance(x, bool) or not isinstance(x, (int, float)) for x in pair)
        ):
            raise MatrixFileError(f"{source}: entry {index} is not a [re, im] pair")
        pairs.append((float(pair[0]), float(pair[1])))

    try:
        return ComplexMatrix.from_rows(dim, pairs)
    except ObservablesError as e:
        raise MatrixFileError(f"{source}: {e.message}") from e


def read_matrix(path: str | Path) -> ComplexMatrix:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise MatrixFileError(f"{path}: {e.strerror or e}") from e
    return parse_matrix(text, source=str(path))


def write_matrix(path: str | Path, m: ComplexMatrix) -> None:
    Path(path).write_text(render_matrix(m), encoding="utf-8")


def file_digest(path: str | Path) -> str:
    """Return the SHA-256 hex digest of a file's bytes."""
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_records(path: str | Path, records: Sequence[ShotRecord]) -> None:
    """Write shot records as CSV with a header row and 17-digit floats."""
    records_frame(records).to_csv(
        path,
        index=False,
        float_format="%.17g",
        lineterminator="\n",
    )
