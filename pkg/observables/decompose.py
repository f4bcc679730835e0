"""
Cartesian decomposition of an operator into self-adjoint parts.

Any square matrix splits as A = A₁ + iA₂ with A₁ = (A + A†)/2 and
A₂ = -(i/2)(A - A†), the operator analogue of a complex number's real and
imaginary parts. A can be measured jointly in one eigenbasis exactly when
[A₁, A₂] = 0, which is the same as A being normal.
"""

import logging
from dataclasses import dataclass

from observables.config import NORMALITY_ROUNDING, NORMALITY_SCALE, PART_TOL
from observables.errors import ObservablesError
from observables.linalg import (
    ComplexMatrix,
    adjoint,
    commutator,
    frobenius_norm,
    hermiticity_deviation,
    multiply,
)

logger = logging.getLogger(__name__)


class InvalidToleranceError(ObservablesError):
    """Exception raised for a non-positive tolerance"""

    invariant = "tolerance"
    context = "Invalid tolerance"


class NormalityConsistencyError(ObservablesError):
    """Exception raised when the two normality measures differ beyond rounding"""

    invariant = "normality-consistency"
    context = "Normality criteria disagree"


class CartesianInvariantError(ObservablesError):
    """Exception raised when the computed parts are not Hermitian or do not recompose"""

    context = "Cartesian parts violate an invariant"

    def __init__(self, invariant: str, message: str):
        self.invariant = invariant
        super().__init__(f"{invariant}: {message}")


@dataclass(frozen=True, slots=True)
class CartesianDecomposition:
    """
    The self-adjoint parts of an operator.

    Args:
        a1: The real part (A + A†)/2.
        a2: The imaginary part -(i/2)(A - A†).
        commutator_norm: ‖[a1, a2]‖_F.
        normal: Whether `commutator_norm` is within `tolerance`.
        tolerance: The normality tolerance that was applied.
    """

    a1: ComplexMatrix
    a2: ComplexMatrix
    commutator_norm: float
    normal: bool
    tolerance: float

    @property
    def dim(self) -> int:
        return self.a1.dim


def default_normality_tol(a: ComplexMatrix) -> float:
    """The commutator norm grows quadratically with ‖A‖, so the tolerance does too."""
    return NORMALITY_SCALE * max(1.0, frobenius_norm(a) ** 2)


def part_tol(a: ComplexMatrix) -> float:
    """Tolerance for Hermiticity of the parts and for the round trip."""
    return PART_TOL * max(1.0, frobenius_norm(a))


def real_part(a: ComplexMatrix) -> ComplexMatrix:
    return ComplexMatrix._wrap(0.5 * (a.entries + a.entries.conj().T))


def imag_part(a: ComplexMatrix) -> ComplexMatrix:
    return ComplexMatrix._wrap(-0.5j * (a.entries - a.entries.conj().T))


def recompose(d: CartesianDecomposition) -> ComplexMatrix:
    """Return a1 + i·a2."""
    return d.a1 + 1j * d.a2


def roundtrip_residual(a: ComplexMatrix, d: CartesianDecomposition) -> float:
    """‖a - (a1 + i·a2)‖_F"""
    return frobenius_norm(a - recompose(d))


def _resolve_tol(a: ComplexMatrix, tol: float | None) -> float:
    if tol is None:
        return default_normality_tol(a)
    if not tol > 0:
        raise InvalidToleranceError(f"normality tolerance must be positive, got {tol}")
    return tol


def _normality(
    a: ComplexMatrix,
    a1: ComplexMatrix,
    a2: ComplexMatrix,
    tol: float,
) -> tuple[float, bool]:
    """
    Evaluate both normality criteria and cross-check them.

    [A₁, A₂] = -(i/2)(A†A - AA†), so ‖[A₁, A₂]‖ and ‖A†A - AA†‖/2 are equal up to
    rounding. The verdict is taken from the commutator; the two measures must
    not differ by more than `NORMALITY_ROUNDING * max(1, ‖A‖_F²)`.

    Returns:
        tuple[float, bool]: The commutator norm and the verdict.

    Raises:
        NormalityConsistencyError: If the two measures differ beyond rounding.
    """
    commutator_norm = frobenius_norm(commutator(a1, a2))
    a_dagger = adjoint(a)
    self_commutator_norm = frobenius_norm(multiply(a_dagger, a) - multiply(a, a_dagger))

    bound = NORMALITY_ROUNDING * max(1.0, frobenius_norm(a) ** 2)
    if abs(commutator_norm - self_commutator_norm / 2) > bound:
        raise NormalityConsistencyError(
            f"‖[A1, A2]‖ = {commutator_norm:.6e} and ‖A†A - AA†‖/2 = "
            f"{self_commutator_norm / 2:.6e} differ by more than {bound:.3e}"
        )
    return commutator_norm, commutator_norm <= tol


def _check_parts(a: ComplexMatrix, a1: ComplexMatrix, a2: ComplexMatrix) -> None:
    tol = part_tol(a)
    for name, part in (("A1", a1), ("A2", a2)):
        asymmetry = hermiticity_deviation(part)
        if asymmetry > tol:
            raise CartesianInvariantError(
                "part-hermiticity", f"‖{name} - {name}†‖_F = {asymmetry:.3e} exceeds {tol:.1e}"
            )
    residual = frobenius_norm(a - (a1 + 1j * a2))
    if residual > tol:
        raise CartesianInvariantError(
            "roundtrip", f"‖A - (A1 + iA2)‖_F = {residual:.3e} exceeds {tol:.1e}"
        )


def decompose(a: ComplexMatrix, normality_tol: float | None = None) -> CartesianDecomposition:
    """
    Split an operator into its self-adjoint parts and classify its normality.

    Args:
        a: Any square matrix, including 1x1.
        normality_tol: Tolerance on ‖[A₁, A₂]‖_F. Defaults to
            `default_normality_tol(a)`.

    Returns:
        CartesianDecomposition: The parts, the commutator norm and the verdict.

    Raises:
        InvalidToleranceError: If `normality_tol` is not positive.
        CartesianInvariantError: If a part is not Hermitian or the parts do not
            recompose to `a` within `part_tol(a)`.
        NormalityConsistencyError: If the two normality measures differ beyond rounding.
    """
    tol = _resolve_tol(a, normality_tol)
    a1 = real_part(a)
    a2 = imag_part(a)
    _check_parts(a, a1, a2)
    commutator_norm, normal = _normality(a, a1, a2, tol)
    logger.debug(
        f"Decomposed {a.dim}x{a.dim} operator: ‖[A1, A2]‖ = {commutator_norm:.3e}, "
        f"normal = {normal}"
    )
    return CartesianDecomposition(
        a1=a1,
        a2=a2,
        commutator_norm=commutator_norm,
        normal=normal,
        tolerance=tol,
    )


def is_normal(a: ComplexMatrix, tol: float | None = None) -> bool:
    """
    Check whether the self-adjoint parts of `a` commute.

    Args:
        a: Any square matrix.
        tol: Tolerance on ‖[A₁, A₂]‖_F. Defaults to `default_normality_tol(a)`.

    Returns:
        bool: True if `a` is normal within `tol`.
    """
    tol = _resolve_tol(a, tol)
    return _normality(a, real_part(a), imag_part(a), tol)[1]
