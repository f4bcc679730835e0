import sys
import math

import numpy as np
import pytest

from observables.decompose import (
    CartesianInvariantError,
    InvalidToleranceError,
    NormalityConsistencyError,
    decompose,
    default_normality_tol,
    imag_part,
    is_normal,
    real_part,
    recompose,
    roundtrip_residual,
)
from observables.linalg import ComplexMatrix, frobenius_norm, hermiticity_deviation
from tests.conftest import EXACT_TOL, lowering_operator, sigma_x, sigma_y, sigma_z
from tests.tests_utils.random_operators import RandomOperators

PART_TOL = 1e-12


class TestDecomposeExamples:
    """Tests for decompose on known operators"""

    def test_lowering_operator(self):
        """Test [[0, 0], [1, 0]] splits into σ₁/2 and -σ₂/2 and is not normal"""
        parts = decompose(lowering_operator())
        assert frobenius_norm(parts.a1 - 0.5 * sigma_x()) <= EXACT_TOL
        assert frobenius_norm(parts.a2 - (-0.5) * sigma_y()) <= EXACT_TOL
        assert parts.normal is False
        assert recompose(parts) == lowering_operator()

    def test_hermitian_input_has_zero_imaginary_part(self):
        """Test a Hermitian operator is its own real part"""
        parts = decompose(sigma_z())
        assert parts.a1 == sigma_z()
        assert parts.a2 == ComplexMatrix.zeros(2)
        assert parts.commutator_norm == 0.0
        assert parts.normal is True

    def test_anti_hermitian_input(self):
        """Test iσ₂ has A₁ = 0 and A₂ = σ₂"""
        parts = decompose(1j * sigma_y())
        assert frobenius_norm(parts.a1) == 0.0
        assert parts.a2.is_close(sigma_y(), 1e-15)
        assert parts.normal is True

    def test_scalar(self):
        """Test a 1x1 operator splits into its real and imaginary parts"""
        parts = decompose(ComplexMatrix([[2 + 3j]]))
        assert parts.a1 == ComplexMatrix([[2.0]])
        assert parts.a2 == ComplexMatrix([[3.0]])
        assert parts.normal is True


class TestDecomposeProperties:
    """Property tests for decompose"""

    def test_round_trip(self, rng: np.random.Generator):
        """Test A = A₁ + iA₂ with Hermitian parts over 500 random matrices"""
        operators = RandomOperators(rng=rng)
        for index in range(500):
            a = operators.matrix(1 + index % 16)
            parts = decompose(a)
            assert roundtrip_residual(a, parts) <= PART_TOL
            assert hermiticity_deviation(parts.a1) <= PART_TOL
            assert hermiticity_deviation(parts.a2) <= PART_TOL

    @pytest.mark.parametrize("dim", [2, 3, 4, 8])
    def test_normal_operators(self, dim: int, rng: np.random.Generator):
        """Test operators normal by construction are classified normal"""
        operators = RandomOperators(rng=rng)
        for _ in range(200):
            assert is_normal(operators.normal(dim))

    @pytest.mark.parametrize("dim", [2, 3, 4, 8])
    def test_generic_operators(self, dim: int, rng: np.random.Generator):
        """Test generic operators are classified non-normal"""
        operators = RandomOperators(rng=rng)
        for _ in range(200):
            assert not is_normal(operators.matrix(dim))

    def test_commutator_matches_self_commutator(self, rng: np.random.Generator):
        """Test ‖[A₁, A₂]‖ = ‖A†A - AA†‖/2"""
        a = RandomOperators(rng=rng).matrix(5)
        parts = decompose(a)
        e = a.entries
        self_commutator = np.linalg.norm(e.conj().T @ e - e @ e.conj().T)
        assert parts.commutator_norm == pytest.approx(self_commutator / 2, rel=1e-12)


class TestNormalityTolerance:
    """Tests for the normality tolerance"""

    def test_default_scales_with_norm(self):
        """Test the default tolerance grows with ‖A‖²"""
        assert default_normality_tol(ComplexMatrix.identity(2)) == pytest.approx(2e-10)
        assert default_normality_tol(ComplexMatrix([[0.1]])) == pytest.approx(1e-10)

    def test_explicit_tolerance(self):
        """Test a loose tolerance accepts a nearly normal operator"""
        a = ComplexMatrix([[1, 1e-6], [0, 1j]])
        assert not is_normal(a)
        assert is_normal(a, tol=1e-3)
        assert decompose(a, 1e-3).tolerance == 1e-3

    @pytest.mark.parametrize("tol", [0.0, -1e-10])
    def test_rejects_non_positive(self, tol: float):
        """Test non-positive tolerances are rejected"""
        with pytest.raises(InvalidToleranceError, match="must be positive"):
            decompose(sigma_x(), tol)

    def test_tolerance_at_the_commutator_norm(self, rng: np.random.Generator):
        """Test a tolerance on the commutator norm or either neighbouring float gives the commutator verdict"""
        operators = RandomOperators(rng=rng)
        for _ in range(200):
            a = operators.matrix(4)
            norm = decompose(a).commutator_norm
            for tol in (math.nextafter(norm, 0.0), norm, math.nextafter(norm, math.inf)):
                assert decompose(a, tol).normal is (norm <= tol)

    def test_inconsistent_measures_are_rejected(self, monkeypatch: pytest.MonkeyPatch):
        """Test a commutator that disagrees with A†A - AA† raises"""
        monkeypatch.setattr(sys.modules["observables.decompose"], "commutator", lambda x, y: ComplexMatrix.zeros(x.dim)
        )
        with pytest.raises(NormalityConsistencyError, match="differ by more than"):
            decompose(lowering_operator())


class TestCartesianParts:
    """Tests for real_part and imag_part"""

    def test_linearity(self, rng: np.random.Generator):
        """Test both parts are additive"""
        operators = RandomOperators(rng=rng)
        for dim in (1, 3, 6):
            a, b = operators.matrix(dim), operators.matrix(dim)
            assert frobenius_norm(real_part(a + b) - real_part(a) - real_part(b)) <= PART_TOL
            assert frobenius_norm(imag_part(a + b) - imag_part(a) - imag_part(b)) <= PART_TOL

    @pytest.mark.parametrize("value", [2 + 3j, -1.5j, 4.0, -0.25 + 0.75j])
    def test_scalar_multiple_of_identity(self, value: complex):
        """Test a·I splits into Re(a)·I and Im(a)·I"""
        a = value * ComplexMatrix.identity(3)
        assert real_part(a).is_close(value.real * ComplexMatrix.identity(3), 1e-15)
        assert imag_part(a).is_close(value.imag * ComplexMatrix.identity(3), 1e-15)

    def test_non_hermitian_part_is_rejected(self, monkeypatch: pytest.MonkeyPatch):
        """Test a corrupted imaginary part names the Hermiticity invariant"""
        monkeypatch.setattr(sys.modules["observables.decompose"], "imag_part", lambda a: ComplexMatrix([[0, 1], [0, 0]])
        )
        with pytest.raises(CartesianInvariantError, match="part-hermiticity") as info:
            decompose(lowering_operator())
        assert info.value.invariant == "part-hermiticity"

    def test_broken_round_trip_is_rejected(self, monkeypatch: pytest.MonkeyPatch):
        """Test parts that do not recompose to A name the round-trip invariant"""
        monkeypatch.setattr(sys.modules["observables.decompose"], "imag_part", lambda a: ComplexMatrix.zeros(a.dim))
        with pytest.raises(CartesianInvariantError, match="roundtrip") as info:
            decompose(lowering_operator())
        assert info.value.invariant == "roundtrip"
