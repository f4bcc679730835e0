import logging
import math
from dataclasses import dataclass
from typing import Any, Iterable, Sequence

import numpy as np

from observables.config import HERMITIAN_TOL, JACOBI_MAX_SWEEPS, JACOBI_REL_TOL
from observables.errors import ObservablesError
from observables.utils import is_finite_real, keeps_first
from observables.utils.enums import Subsystem

logger = logging.getLogger(__name__)

Scalar = complex | float | int


class DimensionMismatchError(ObservablesError):
    """Exception raised when operand dimensions do not fit together"""

    invariant = "dimension"
    context = "Dimension mismatch"


class NonFiniteValueError(ObservablesError):
    """Exception raised when a NaN or infinity reaches a constructor"""

    invariant = "finite-entries"
    context = "Non-finite value"


class NotHermitianError(ObservablesError):
    """Exception raised when a Hermitian input is required"""

    invariant = "hermiticity"
    context = "Matrix is not Hermitian"

    def __init__(self, asymmetry: float, tol: float = HERMITIAN_TOL):
        self.asymmetry = asymmetry
        super().__init__(f"‖H - H†‖_F = {asymmetry:.3e} exceeds {tol:.1e}")


@dataclass(frozen=True, slots=True)
class ComplexScalar:
    """A finite complex number split into real and imaginary components."""

    re: float
    im: float

    def __post_init__(self):
        if not (is_finite_real(self.re) and is_finite_real(self.im)):
            raise NonFiniteValueError(f"({self.re}, {self.im})")

    @classmethod
    def from_complex(cls, value: Scalar) -> "ComplexScalar":
        value = complex(value)
        return cls(float(value.real), float(value.imag))

    def conjugate(self) -> "ComplexScalar":
        return ComplexScalar(self.re, -self.im)

    def __complex__(self) -> complex:
        return complex(self.re, self.im)

    def __abs__(self) -> float:
        return math.hypot(self.re, self.im)


class ComplexMatrix:
    """
    An immutable dense square matrix of complex doubles.

    Entries are held in a read-only `numpy.complex128` buffer. Every operation
    returns a new matrix.

    Args:
        entries: Anything `numpy.array` accepts that yields a square 2-D array.

    Raises:
        DimensionMismatchError: If the entries are not a non-empty square array.
        NonFiniteValueError: If any entry is NaN or infinite.
    """

    __slots__ = ("_entries",)

    # numpy scalars defer to __rmul__ instead of broadcasting over the matrix
    __array_ufunc__ = None

    def __init__(self, entries: Any):
        if isinstance(entries, ComplexMatrix):
            entries = entries.entries
        self._entries = self._validated(np.array(entries, dtype=np.complex128))

    @staticmethod
    def _validated(array: np.ndarray) -> np.ndarray:
        if array.ndim != 2 or array.shape[0] != array.shape[1] or array.shape[0] < 1:
            raise DimensionMismatchError(
                f"expected a non-empty square matrix, got shape {array.shape}"
            )
        if not np.isfinite(array).all():
            raise NonFiniteValueError("matrix contains NaN or infinite entries")
        array.flags.writeable = False
        return array

    @classmethod
    def _wrap(cls, array: np.ndarray) -> "ComplexMatrix":
        """Adopt a freshly computed array without copying it."""
        matrix = cls.__new__(cls)
        matrix._entries = cls._validated(np.ascontiguousarray(array, dtype=np.complex128))
        return matrix

    @classmethod
    def identity(cls, dim: int) -> "ComplexMatrix":
        return cls._wrap(np.eye(dim, dtype=np.complex128))

    @classmethod
    def zeros(cls, dim: int) -> "ComplexMatrix":
        return cls._wrap(np.zeros((dim, dim), dtype=np.complex128))

    @classmethod
    def diagonal(cls, values: Iterable[Scalar]) -> "ComplexMatrix":
        return cls._wrap(np.diag(np.array(list(values), dtype=np.complex128)))

    @classmethod
    def from_rows(cls, dim: int, pairs: Sequence[Sequence[float]]) -> "ComplexMatrix":
        """
        Build a matrix from row-major `(re, im)` pairs.

        Args:
            dim: The matrix dimension.
            pairs: `dim * dim` pairs of reals in row-major order.

        Returns:
            ComplexMatrix: The parsed matrix.
        """
        if dim < 1 or len(pairs) != dim * dim:
            raise DimensionMismatchError(
                f"expected {dim}x{dim} = {dim * dim} entries, got {len(pairs)}"
            )
        values = np.array([complex(re, im) for re, im in pairs], dtype=np.complex128)
        return cls._wrap(values.reshape(dim, dim))

    @property
    def dim(self) -> int:
        return self._entries.shape[0]

    @property
    def entries(self) -> np.ndarray:
        """The read-only entry buffer."""
        return self._entries

    def to_rows(self) -> list[tuple[float, float]]:
        """Row-major `(re, im)` pairs, the inverse of `from_rows`."""
        return [(float(z.real), float(z.imag)) for z in self._entries.ravel()]

    def transpose(self) -> "ComplexMatrix":
        return ComplexMatrix._wrap(self._entries.T.copy())

    def is_close(self, other: "ComplexMatrix", tol: float) -> bool:
        return frobenius_norm(self - other) <= tol

    def __getitem__(self, index: tuple[int, int]) -> complex:
        return complex(self._entries[index])

    def __add__(self, other: "ComplexMatrix") -> "ComplexMatrix":
        _check_same_dim(self, other, "add")
        return ComplexMatrix._wrap(self._entries + other._entries)

    def __sub__(self, other: "ComplexMatrix") -> "ComplexMatrix":
        _check_same_dim(self, other, "subtract")
        return ComplexMatrix._wrap(self._entries - other._entries)

    def __neg__(self) -> "ComplexMatrix":
        return ComplexMatrix._wrap(-self._entries)

    def __mul__(self, factor: Scalar | ComplexScalar) -> "ComplexMatrix":
        return ComplexMatrix._wrap(self._entries * complex(factor))

    __rmul__ = __mul__

    def __matmul__(self, other: "ComplexMatrix") -> "ComplexMatrix":
        return multiply(self, other)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ComplexMatrix):
            return NotImplemented
        return bool(np.array_equal(self._entries, other._entries))

    __hash__ = None

    def __repr__(self) -> str:
        return f"ComplexMatrix({self._entries.tolist()!r})"


@dataclass(frozen=True, slots=True)
class HermitianEigensystem:
    """
    Spectrum of a Hermitian matrix.

    Args:
        eigenvalues: Real eigenvalues in ascending order.
        vectors: Unitary matrix whose k-th column belongs to `eigenvalues[k]`.
        sweeps: Jacobi sweeps spent on the decomposition.
    """

    eigenvalues: tuple[float, ...]
    vectors: ComplexMatrix
    sweeps: int = 0

    @property
    def dim(self) -> int:
        return self.vectors.dim

    def reconstruct(self) -> ComplexMatrix:
        v = self.vectors.entries
        return ComplexMatrix._wrap((v * np.array(self.eigenvalues)) @ v.conj().T)


def _check_same_dim(a: ComplexMatrix, b: ComplexMatrix, operation: str) -> None:
    if a.dim != b.dim:
        raise DimensionMismatchError(f"cannot {operation} {a.dim}x{a.dim} and {b.dim}x{b.dim}")


def adjoint(m: ComplexMatrix) -> ComplexMatrix:
    """Conjugate transpose."""
    return ComplexMatrix._wrap(m.entries.conj().T.copy())


def multiply(a: ComplexMatrix, b: ComplexMatrix) -> ComplexMatrix:
    _check_same_dim(a, b, "multiply")
    return ComplexMatrix._wrap(a.entries @ b.entries)


def commutator(x: ComplexMatrix, y: ComplexMatrix) -> ComplexMatrix:
    """Return xy - yx."""
    _check_same_dim(x, y, "commute")
    return ComplexMatrix._wrap(x.entries @ y.entries - y.entries @ x.entries)


def trace(m: ComplexMatrix) -> ComplexScalar:
    return ComplexScalar.from_complex(np.trace(m.entries))


def frobenius_norm(m: ComplexMatrix) -> float:
    return float(np.linalg.norm(m.entries))


def tensor(a: ComplexMatrix, b: ComplexMatrix) -> ComplexMatrix:
    """
    Kronecker product with the first factor as the slow index:
    `(a ⊗ b)[i*db + k, j*db + l] = a[i, j] * b[k, l]`.
    """
    return ComplexMatrix._wrap(np.kron(a.entries, b.entries))


def partial_trace(
    m: ComplexMatrix,
    dim_a: int,
    dim_b: int,
    keep: Subsystem,
) -> ComplexMatrix:
    """
    Trace out one factor of a bipartite operator.

    Args:
        m: Operator on a `dim_a * dim_b` dimensional space.
        dim_a: Dimension of the first factor.
        dim_b: Dimension of the second factor.
        keep: The factor that survives.

    Returns:
        ComplexMatrix: The reduced operator on the kept factor.

    Raises:
        DimensionMismatchError: If `m.dim != dim_a * dim_b`.
    """
    if dim_a < 1 or dim_b < 1 or m.dim != dim_a * dim_b:
        raise DimensionMismatchError(
            f"{m.dim}x{m.dim} operator does not factor as {dim_a} x {dim_b}"
        )
    blocks = m.entries.reshape(dim_a, dim_b, dim_a, dim_b)
    if keeps_first(keep):
        return ComplexMatrix._wrap(np.trace(blocks, axis1=1, axis2=3))
    return ComplexMatrix._wrap(np.trace(blocks, axis1=0, axis2=2))


def outer(u: np.ndarray, v: np.ndarray) -> ComplexMatrix:
    """Return |u⟩⟨v|."""
    return ComplexMatrix._wrap(np.outer(u, np.conj(v)))


def hermiticity_deviation(m: ComplexMatrix) -> float:
    """‖m - m†‖_F"""
    return float(np.linalg.norm(m.entries - m.entries.conj().T))


def unitarity_deviation(m: ComplexMatrix) -> float:
    """‖m†m - I‖_F"""
    gram = m.entries.conj().T @ m.entries
    return float(np.linalg.norm(gram - np.eye(m.dim)))


def require_hermitian(h: ComplexMatrix, tol: float = HERMITIAN_TOL) -> None:
    """
    Raises:
        NotHermitianError: If ‖h - h†‖_F exceeds `tol`.
    """
    asymmetry = hermiticity_deviation(h)
    if asymmetry > tol:
        raise NotHermitianError(asymmetry, tol)


def hermitian_eig(h: ComplexMatrix) -> HermitianEigensystem:
    """
    Diagonalize a Hermitian matrix with cyclic complex Jacobi rotations.

    Sweeps run until the off-diagonal Frobenius mass is at most
    `JACOBI_REL_TOL * ‖h‖_F` or `JACOBI_MAX_SWEEPS` sweeps have passed.
    Eigenvalues come back ascending; ties keep their Jacobi order.

    Args:
        h: A Hermitian matrix.

    Returns:
        HermitianEigensystem: The spectrum and a unitary eigenvector matrix.

    Raises:
        NotHermitianError: If ‖h - h†‖_F exceeds `HERMITIAN_TOL`.
    """
    require_hermitian(h)
    work = 0.5 * (h.entries + h.entries.conj().T)
    vectors = np.eye(h.dim, dtype=np.complex128)
    threshold = JACOBI_REL_TOL * float(np.linalg.norm(work))

    sweeps = 0
    while _off_diagonal_mass(work) > threshold:
        if sweeps == JACOBI_MAX_SWEEPS:
            logger.warning(
                f"Jacobi stopped after {sweeps} sweeps with off-diagonal mass "
                f"{_off_diagonal_mass(work):.3e}"
            )
            break
        for p in range(h.dim - 1):
            for q in range(p + 1, h.dim):
                _rotate(work, vectors, p, q)
        sweeps += 1

    logger.debug(f"Jacobi converged for dim {h.dim} in {sweeps} sweeps")

    eigenvalues = np.diag(work).real
    order = np.argsort(eigenvalues, kind="stable")
    return HermitianEigensystem(
        eigenvalues=tuple(float(value) for value in eigenvalues[order]),
        vectors=ComplexMatrix._wrap(vectors[:, order]),
        sweeps=sweeps,
    )


def _off_diagonal_mass(work: np.ndarray) -> float:
    return float(np.linalg.norm(work - np.diag(np.diag(work))))


def _rotate(work: np.ndarray, vectors: np.ndarray, p: int, q: int) -> None:
    """
    Annihilate `work[p, q]` in place.

    The rotation first removes the phase of `work[p, q]` with
    diag(1, e^{-iα}) and then applies the real symmetric Jacobi rotation.
    """
    magnitude = abs(work[p, q])
    if magnitude == 0.0:
        return
    phase = np.conj(work[p, q] / magnitude)
    tau = (work[q, q].real - work[p, p].real) / (2.0 * magnitude)
    t = math.copysign(1.0, tau) / (abs(tau) + math.hypot(1.0, tau))
    c = 1.0 / math.hypot(1.0, t)
    s = t * c
    rotation = np.array([[c, s], [-s * phase, c * phase]], dtype=np.complex128)

    pair = [p, q]
    work[:, pair] = work[:, pair] @ rotation
    work[pair, :] = rotation.conj().T @ work[pair, :]
    work[p, q] = 0.0
    work[q, p] = 0.0
    work[p, p] = work[p, p].real
    work[q, q] = work[q, q].real
    vectors[:, pair] = vectors[:, pair] @ rotation
