import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from observables.config import (
    DEGENERACY_TOL,
    HERMITIAN_TOL,
    NORMALIZATION_TOL,
    POSITIVITY_TOL,
    PROBABILITY_TOL,
    TRACE_TOL,
)
from observables.decompose import imag_part, real_part
from observables.errors import ObservablesError
from observables.linalg import (
    ComplexMatrix,
    ComplexScalar,
    DimensionMismatchError,
    HermitianEigensystem,
    hermitian_eig,
    hermiticity_deviation,
    outer,
    partial_trace,
)
from observables.random_stream import RandomStream
from observables.utils.enums import Subsystem

logger = logging.getLogger(__name__)


class InvalidStateError(ObservablesError):
    """Exception raised when a state violates one of its invariants"""

    context = "Invalid quantum state"

    def __init__(self, invariant: str, message: str):
        self.invariant = invariant
        super().__init__(f"{invariant}: {message}")


class InvalidDistributionError(ObservablesError):
    """Exception raised for malformed outcome distributions"""

    invariant = "distribution"
    context = "Invalid outcome distribution"


#########
# Pauli #
#########
def pauli_x() -> ComplexMatrix:
    return ComplexMatrix([[0, 1], [1, 0]])


def pauli_y() -> ComplexMatrix:
    return ComplexMatrix([[0, -1j], [1j, 0]])


def pauli_z() -> ComplexMatrix:
    return ComplexMatrix([[1, 0], [0, -1]])


def spin_along(direction: Sequence[float]) -> ComplexMatrix:
    """
    The spin observable n·σ along a unit direction.

    Args:
        direction: Three real components, normalized to unit length here.

    Returns:
        ComplexMatrix: n₁σ₁ + n₂σ₂ + n₃σ₃.
    """
    n = np.asarray(direction, dtype=float)
    norm = float(np.linalg.norm(n))
    if n.shape != (3,) or norm == 0.0:
        raise DimensionMismatchError(f"expected a non-zero 3-vector, got {direction!r}")
    n = n / norm
    return float(n[0]) * pauli_x() + float(n[1]) * pauli_y() + float(n[2]) * pauli_z()


##########
# States #
##########
@dataclass(frozen=True, slots=True, eq=False)
class PureState:
    """
    A normalized state vector.

    Args:
        amplitudes: Complex amplitudes in the computational basis.

    Raises:
        InvalidStateError: If the amplitudes are empty, non-finite or not
            normalized within `NORMALIZATION_TOL`.
    """

    amplitudes: np.ndarray

    def __post_init__(self):
        amplitudes = np.array(self.amplitudes, dtype=np.complex128)
        if amplitudes.ndim != 1 or amplitudes.size < 1:
            raise InvalidStateError("dimension", f"amplitude shape {amplitudes.shape}")
        if not np.isfinite(amplitudes).all():
            raise InvalidStateError("finite-entries", "amplitudes contain NaN or infinity")
        weight = float(np.vdot(amplitudes, amplitudes).real)
        if abs(weight - 1.0) > NORMALIZATION_TOL:
            raise InvalidStateError("normalization", f"Σ|a|² = {weight!r}")
        amplitudes.flags.writeable = False
        object.__setattr__(self, "amplitudes", amplitudes)

    @classmethod
    def normalized(cls, vector: Sequence[complex] | np.ndarray) -> "PureState":
        vector = np.asarray(vector, dtype=np.complex128)
        return cls(vector / np.linalg.norm(vector))

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def density(self) -> "DensityState":
        return DensityState(outer(self.amplitudes, self.amplitudes))


@dataclass(frozen=True, slots=True)
class DensityState:
    """
    A density matrix: Hermitian, unit trace, positive semidefinite.

    Raises:
        InvalidStateError: Naming the violated invariant (`hermiticity`,
            `unit-trace` or `positivity`).
    """

    matrix: ComplexMatrix

    def __post_init__(self):
        asymmetry = hermiticity_deviation(self.matrix)
        if asymmetry > HERMITIAN_TOL:
            raise InvalidStateError("hermiticity", f"‖ρ - ρ†‖_F = {asymmetry:.3e}")
        total = complex(np.trace(self.matrix.entries))
        if abs(total - 1.0) > TRACE_TOL:
            raise InvalidStateError("unit-trace", f"Tr ρ = {total!r}")
        lowest = hermitian_eig(self.matrix).eigenvalues[0]
        if lowest < -POSITIVITY_TOL:
            raise InvalidStateError("positivity", f"smallest eigenvalue {lowest:.3e}")

    @classmethod
    def from_pure(cls, state: PureState) -> "DensityState":
        return state.density()

    @classmethod
    def maximally_mixed(cls, dim: int) -> "DensityState":
        return cls(ComplexMatrix.identity(dim) * (1.0 / dim))

    @property
    def dim(self) -> int:
        return self.matrix.dim


State = PureState | DensityState


def as_density(state: State) -> DensityState:
    if isinstance(state, PureState):
        return DensityState.from_pure(state)
    return state


def singlet() -> PureState:
    """(|01⟩ - |10⟩)/√2 in the basis |00⟩, |01⟩, |10⟩, |11⟩."""
    r = 1.0 / math.sqrt(2.0)
    return PureState(np.array([0.0, r, -r, 0.0], dtype=np.complex128))


def maximally_entangled(d: int) -> PureState:
    """
    The canonical maximally entangled state (1/√d) Σᵢ |ii⟩.

    Raises:
        InvalidStateError: If `d < 2`.
    """
    if d < 2:
        raise InvalidStateError("dimension", f"maximally entangled state needs d >= 2, got {d}")
    amplitudes = np.zeros(d * d, dtype=np.complex128)
    amplitudes[[i * d + i for i in range(d)]] = 1.0 / math.sqrt(d)
    return PureState(amplitudes)


def reduced_state(state: State, keep: Subsystem) -> DensityState:
    """
    Reduced state of one half of a d x d bipartite state.

    Raises:
        DimensionMismatchError: If the state dimension is not a perfect square.
    """
    rho = as_density(state)
    d = math.isqrt(rho.dim)
    if d * d != rho.dim:
        raise DimensionMismatchError(f"dimension {rho.dim} is not d x d")
    return DensityState(partial_trace(rho.matrix, d, d, keep))


###############
# Expectation #
###############
def expectation(rho: State, a: ComplexMatrix) -> ComplexScalar:
    """
    Tr(ρA) for a mixed state, ⟨ψ|A|ψ⟩ for a pure one.

    Raises:
        DimensionMismatchError: If the dimensions differ.
    """
    if rho.dim != a.dim:
        raise DimensionMismatchError(f"state dim {rho.dim} vs operator dim {a.dim}")
    if isinstance(rho, PureState):
        psi = rho.amplitudes
        return ComplexScalar.from_complex(np.vdot(psi, a.entries @ psi))
    return ComplexScalar.from_complex(np.einsum("ij,ji->", rho.matrix.entries, a.entries))


def additivity_residual(rho: State, a: ComplexMatrix) -> float:
    """|Tr(ρA) - (Tr(ρA₁) + i·Tr(ρA₂))|"""
    whole = complex(expectation(rho, a))
    parts = complex(expectation(rho, real_part(a))) + 1j * complex(
        expectation(rho, imag_part(a))
    )
    return abs(whole - parts)


#############
# Born rule #
#############
@dataclass(frozen=True, slots=True)
class SpectralOutcome:
    """One measurement outcome: a merged eigenvalue and its eigenprojector."""

    value: float
    projector: ComplexMatrix
    columns: tuple[int, ...]


def spectral_projectors(
    eigensystem: HermitianEigensystem,
    merge_tol: float = DEGENERACY_TOL,
) -> list[SpectralOutcome]:
    """
    Group an ascending spectrum into distinct outcomes.

    An eigenvalue joins the current outcome when it lies within `merge_tol`
    of that outcome's smallest eigenvalue. Each outcome takes the mean of its
    eigenvalues as value and its projector spans their eigenvectors.

    Args:
        eigensystem: The spectrum to group.
        merge_tol: Degeneracy threshold.

    Returns:
        list[SpectralOutcome]: Outcomes in ascending order of value.
    """
    groups: list[list[int]] = []
    values = eigensystem.eigenvalues
    for index, value in enumerate(values):
        if groups and value - values[groups[-1][0]] <= merge_tol:
            groups[-1].append(index)
        else:
            groups.append([index])

    vectors = eigensystem.vectors.entries
    outcomes = []
    for columns in groups:
        block = vectors[:, columns]
        outcomes.append(
            SpectralOutcome(
                value=float(np.mean([values[c] for c in columns])),
                projector=ComplexMatrix._wrap(block @ block.conj().T),
                columns=tuple(columns),
            )
        )
    return outcomes


@dataclass(frozen=True, slots=True)
class OutcomeDistribution:
    """
    Outcome values with their probabilities.

    Raises:
        InvalidDistributionError: If the lengths differ, a probability is
            negative, or the probabilities do not sum to 1 within
            `PROBABILITY_TOL`.
    """

    eigenvalues: tuple[float, ...]
    probabilities: tuple[float, ...]

    def __post_init__(self):
        if len(self.eigenvalues) != len(self.probabilities) or not self.probabilities:
            raise InvalidDistributionError(
                f"{len(self.eigenvalues)} values vs {len(self.probabilities)} probabilities"
            )
        if min(self.probabilities) < 0.0:
            raise InvalidDistributionError(f"negative probability {min(self.probabilities)!r}")
        total = math.fsum(self.probabilities)
        if abs(total - 1.0) > PROBABILITY_TOL:
            raise InvalidDistributionError(f"probabilities sum to {total!r}")

    @property
    def mean(self) -> float:
        return math.fsum(v * p for v, p in zip(self.eigenvalues, self.probabilities))


def born_distribution(state: State, obs: HermitianEigensystem) -> OutcomeDistribution:
    """
    Born-rule distribution of a projective measurement.

    Args:
        state: The measured state.
        obs: Spectrum of the measured observable.

    Returns:
        OutcomeDistribution: One entry per merged eigenvalue, ascending.

    Raises:
        DimensionMismatchError: If the dimensions differ.
    """
    if state.dim != obs.dim:
        raise DimensionMismatchError(f"state dim {state.dim} vs observable dim {obs.dim}")
    rho = as_density(state).matrix.entries
    vectors = obs.vectors.entries
    # ⟨v|ρ|v⟩ for every eigenvector column
    weights = np.einsum("ik,ij,jk->k", vectors.conj(), rho, vectors).real

    outcomes = spectral_projectors(obs)
    raw = np.array([max(0.0, float(weights[list(o.columns)].sum())) for o in outcomes])
    probabilities = raw / raw.sum()
    return OutcomeDistribution(
        eigenvalues=tuple(o.value for o in outcomes),
        probabilities=tuple(float(p) for p in probabilities),
    )


def inverse_cdf(probabilities: np.ndarray, uniforms: np.ndarray) -> np.ndarray:
    """
    Map uniforms in [0, 1) onto outcome indices.

    Outcomes with zero probability are never returned.

    Args:
        probabilities: Non-negative weights in outcome order.
        uniforms: Draws from a `RandomStream`.

    Returns:
        np.ndarray: One outcome index per uniform.
    """
    probabilities = np.asarray(probabilities, dtype=float)
    cdf = np.cumsum(probabilities)
    indices = np.searchsorted(cdf, np.asarray(uniforms) * cdf[-1], side="right")
    last_possible = int(np.flatnonzero(probabilities > 0.0)[-1])
    return np.minimum(indices, last_possible)


def sample_outcome(dist: OutcomeDistribution, rng: RandomStream) -> int:
    """Draw one outcome index by inverse CDF over the ascending outcome list."""
    return int(inverse_cdf(np.array(dist.probabilities), np.array([rng.uniform()]))[0])


def sample_outcomes(dist: OutcomeDistribution, rng: RandomStream, count: int) -> np.ndarray:
    """The same draws as `count` calls of `sample_outcome`, vectorized."""
    return inverse_cdf(np.array(dist.probabilities), rng.uniforms(count))
