"""
Triangular two-level factorization of unitaries.

Any d x d unitary is a product of at most d(d-1)/2 rotations, each mixing two
modes, followed by a diagonal of output phases. Realizing the eigenvector
unitary of an observable this way turns its measurement into a passive
network plus detection in the computational basis.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np

from observables.config import NULL_TOL, UNITARY_TOL
from observables.decompose import decompose
from observables.errors import ObservablesError
from observables.linalg import (
    ComplexMatrix,
    ComplexScalar,
    DimensionMismatchError,
    HermitianEigensystem,
    frobenius_norm,
    hermitian_eig,
    unitarity_deviation,
)
from observables.protocol import mirror_observable
from observables.states import State, as_density, born_distribution, spectral_projectors
from observables.utils import wrap_phase
from observables.utils.enums import SourceKind

logger = logging.getLogger(__name__)


class NotUnitaryError(ObservablesError):
    """Exception raised when a unitary input is required"""

    invariant = "unitarity"
    context = "Matrix is not unitary"

    def __init__(self, deviation: float, tol: float = UNITARY_TOL):
        self.deviation = deviation
        super().__init__(f"‖U†U - I‖_F = {deviation:.3e} exceeds {tol:.1e}")


@dataclass(frozen=True, slots=True)
class TwoLevelRotation:
    """
    A beam-splitter-like factor acting on modes m and n.

    The 2x2 block on (m, n) is [[e^{iφ}cos θ, -sin θ], [e^{iφ}sin θ, cos θ]].

    Args:
        m: First mode, m < n.
        n: Second mode.
        theta: Mixing angle in [0, π/2].
        phi: Phase in [0, 2π).
    """

    m: int
    n: int
    theta: float
    phi: float

    def __post_init__(self):
        if not 0 <= self.m < self.n:
            raise DimensionMismatchError(f"modes must satisfy 0 <= m < n, got ({self.m}, {self.n})")

    def block(self) -> np.ndarray:
        c, s = math.cos(self.theta), math.sin(self.theta)
        phase = complex(math.cos(self.phi), math.sin(self.phi))
        return np.array([[phase * c, -s], [phase * s, c]], dtype=np.complex128)

    def matrix(self, dim: int) -> ComplexMatrix:
        """Embed the factor into a dim x dim identity."""
        if self.n >= dim:
            raise DimensionMismatchError(f"mode {self.n} does not exist in dimension {dim}")
        embedded = np.eye(dim, dtype=np.complex128)
        pair = [self.m, self.n]
        embedded[np.ix_(pair, pair)] = self.block()
        return ComplexMatrix._wrap(embedded)


@dataclass(frozen=True, slots=True)
class MultiportPlan:
    """
    A unitary as diag(output_phases) · F_K ⋯ F_1.

    `factors` are listed in propagation order, so `factors[0]` acts first.
    """

    dim: int
    factors: tuple[TwoLevelRotation, ...]
    output_phases: tuple[ComplexScalar, ...]

    @property
    def factor_count(self) -> int:
        return len(self.factors)


def reck_decompose(u: ComplexMatrix) -> MultiportPlan:
    """
    Factor a unitary into adjacent-mode rotations and output phases.

    Rotations act on W = u† from the left, nulling the entries below the
    diagonal column by column, bottom row first. What remains is a diagonal D
    with T_K ⋯ T_1 u† = D, so u = D† T_K ⋯ T_1. Entries already below
    `NULL_TOL` emit no factor.

    Args:
        u: The unitary to factor.

    Returns:
        MultiportPlan: At most dim(dim-1)/2 factors and dim output phases.

    Raises:
        NotUnitaryError: If ‖u†u - I‖_F exceeds `UNITARY_TOL`.
    """
    deviation = unitarity_deviation(u)
    if deviation > UNITARY_TOL:
        raise NotUnitaryError(deviation)

    dim = u.dim
    work = u.entries.conj().T.copy()
    factors = []
    for column in range(dim - 1):
        for row in range(dim - 1, column, -1):
            x, y = work[row - 1, column], work[row, column]
            if abs(y) < NULL_TOL:
                continue
            factor = TwoLevelRotation(
                m=row - 1,
                n=row,
                theta=math.atan2(abs(y), abs(x)),
                phi=wrap_phase(float(np.angle(-y) - np.angle(x))),
            )
            pair = [row - 1, row]
            work[pair, :] = factor.block() @ work[pair, :]
            work[row, column] = 0.0
            factors.append(factor)
            logger.debug(
                f"Factor {len(factors)}: modes ({factor.m}, {factor.n}), "
                f"theta = {factor.theta:.6f}, phi = {factor.phi:.6f}"
            )

    phases = np.conj(np.diag(work))
    return MultiportPlan(
        dim=dim,
        factors=tuple(factors),
        output_phases=tuple(ComplexScalar.from_complex(p) for p in phases),
    )


def reconstruct(plan: MultiportPlan) -> ComplexMatrix:
    """Multiply the plan back out."""
    product = np.eye(plan.dim, dtype=np.complex128)
    for factor in plan.factors:
        pair = [factor.m, factor.n]
        product[pair, :] = factor.block() @ product[pair, :]
    phases = np.array([complex(p) for p in plan.output_phases], dtype=np.complex128)
    return ComplexMatrix._wrap(phases[:, None] * product)


@dataclass(frozen=True, slots=True)
class MeasurementRealization:
    """
    A Hermitian observable measured as a network plus mode detection.

    Running the inverse of the plan's network sends the k-th eigenvector to
    mode k, so detecting mode k reads `eigenvalues[k]`.

    Args:
        observable: The Hermitian observable.
        eigenvalues: Ascending eigenvalues, one per mode.
        plan: Factorization of the eigenvector unitary.
        residual: ‖V·diag(λ)·V† - observable‖_F with V = reconstruct(plan).
    """

    observable: ComplexMatrix
    eigenvalues: tuple[float, ...]
    plan: MultiportPlan
    residual: float


def realize_measurement(h: ComplexMatrix) -> MeasurementRealization:
    """
    Raises:
        NotHermitianError: If `h` is not Hermitian.
    """
    eigensystem = hermitian_eig(h)
    plan = reck_decompose(eigensystem.vectors)
    realized = HermitianEigensystem(eigensystem.eigenvalues, reconstruct(plan))
    return MeasurementRealization(
        observable=h,
        eigenvalues=eigensystem.eigenvalues,
        plan=plan,
        residual=frobenius_norm(realized.reconstruct() - h),
    )


@dataclass(frozen=True, slots=True)
class NetworkBornComparison:
    """
    Outcome probabilities from the network path next to the Born rule.

    Args:
        mode_probabilities: Detection probability of each output mode.
        network_probabilities: Mode probabilities summed over degenerate outcomes.
        born_probabilities: `born_distribution` of the same state and observable.
        max_difference: Largest absolute difference between the two.
    """

    mode_probabilities: tuple[float, ...]
    network_probabilities: tuple[float, ...]
    born_probabilities: tuple[float, ...]
    max_difference: float


def network_born_check(state: State, realization: MeasurementRealization) -> NetworkBornComparison:
    """
    Compare detection statistics behind the inverse network with the Born rule.

    The Born probabilities come from a fresh eigendecomposition of the
    observable and never from the network. Modes are grouped into outcomes by
    that spectrum.

    Raises:
        DimensionMismatchError: If the state and the observable differ in dimension.
    """
    if state.dim != realization.observable.dim:
        raise DimensionMismatchError(
            f"state dim {state.dim} vs observable dim {realization.observable.dim}"
        )
    network = reconstruct(realization.plan).entries
    rho = as_density(state).matrix.entries
    modes = np.clip(np.diag(network.conj().T @ rho @ network).real, 0.0, None)

    eigensystem = hermitian_eig(realization.observable)
    merged = [float(modes[list(o.columns)].sum()) for o in spectral_projectors(eigensystem)]
    born = born_distribution(state, eigensystem).probabilities

    return NetworkBornComparison(
        mode_probabilities=tuple(float(p) for p in modes),
        network_probabilities=tuple(merged),
        born_probabilities=born,
        max_difference=max(abs(n - b) for n, b in zip(merged, born)),
    )


@dataclass(frozen=True, slots=True)
class ArmRealizations:
    """Networks for the two arms of the counterfactual protocol."""

    particle1: MeasurementRealization
    particle2: MeasurementRealization


def realize_arms(a: ComplexMatrix, source: SourceKind) -> ArmRealizations:
    """
    Realize both measurements of the counterfactual protocol as networks.

    Particle 1's arm measures the mirror of A₁; particle 2's arm measures A₂.
    """
    parts = decompose(a)
    mirror = mirror_observable(parts.a1, source)
    return ArmRealizations(
        particle1=realize_measurement(mirror.mirrored),
        particle2=realize_measurement(parts.a2),
    )
