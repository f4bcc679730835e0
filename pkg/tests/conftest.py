import math
from pathlib import Path
from typing import Callable

import numpy as np
import pytest

from observables.linalg import ComplexMatrix
from observables.matrix_file import write_matrix

SEED = 20240611
SHOTS = 10_000
RECONSTRUCTION_TOL = 1e-10
EXACT_TOL = 1e-15
SIGMA_BAND = 5.0

# Unitary dimensions exercised by the multiport round-trip suite
MULTIPORT_DIMS = [2, 3, 4, 6, 8]

R = 1.0 / math.sqrt(2.0)


def lowering_operator() -> ComplexMatrix:
    """The non-normal operator |1⟩⟨0| = [[0, 0], [1, 0]]."""
    return ComplexMatrix([[0, 0], [1, 0]])


def sigma_x() -> ComplexMatrix:
    return ComplexMatrix([[0, 1], [1, 0]])


def sigma_y() -> ComplexMatrix:
    return ComplexMatrix([[0, -1j], [1j, 0]])


def sigma_z() -> ComplexMatrix:
    return ComplexMatrix([[1, 0], [0, -1]])


def ket0_density() -> ComplexMatrix:
    return ComplexMatrix([[1, 0], [0, 0]])


def half_identity() -> ComplexMatrix:
    return ComplexMatrix([[0.5, 0], [0, 0.5]])


def normal_diagonal() -> ComplexMatrix:
    """diag(1+2i, 3-i); its expectation in I/2 is 2 + 0.5i."""
    return ComplexMatrix.diagonal([1 + 2j, 3 - 1j])


def rotation(theta: float) -> ComplexMatrix:
    c, s = math.cos(theta), math.sin(theta)
    return ComplexMatrix([[c, -s], [s, c]])


@pytest.fixture()
def rng() -> np.random.Generator:
    return np.random.default_rng(SEED)


@pytest.fixture()
def matrix_path(tmp_path: Path) -> Callable[[str, ComplexMatrix], Path]:
    """Write a matrix file into the test's temporary directory and return its path."""

    def write(name: str, m: ComplexMatrix) -> Path:
        path = tmp_path / f"{name}.json"
        write_matrix(path, m)
        return path

    return write
