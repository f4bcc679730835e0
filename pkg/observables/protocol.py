"""
EPR-type counterfactual measurement of an arbitrary operator.

A source emits an entangled pair. Particle 1 is measured for the mirror of A₁,
whose outcome predicts with certainty the A₁-value of particle 2. Particle 2
is measured for A₂. Each shot combines the inferred and the measured value as
λ₁ + iλ₂, the per-shot counterpart of A = A₁ + iA₂.

When A is normal its parts commute and `direct_joint_measure` measures both on
one system in a common eigenbasis instead.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import pandas as pd

from observables.config import DEFAULT_BATCH_SIZE, DEFAULT_WORKERS, SimulationSettings
from observables.decompose import CartesianDecomposition, decompose
from observables.errors import ObservablesError
from observables.linalg import (
    ComplexMatrix,
    ComplexScalar,
    DimensionMismatchError,
    hermitian_eig,
    require_hermitian,
)
from observables.random_stream import RNG_ALGORITHM, RandomStream
from observables.states import (
    DensityState,
    PureState,
    SpectralOutcome,
    State,
    as_density,
    expectation,
    inverse_cdf,
    maximally_entangled,
    pauli_y,
    reduced_state,
    singlet,
    spectral_projectors,
)
from observables.utils import canonical, direct
from observables.utils import singlet as is_singlet
from observables.utils.enums import ProtocolMode, SourceKind, Subsystem

# Off-correspondence probability mass tolerated by the certainty check
CERTAINTY_TOL = 1e-12

RECORD_COLUMNS = [
    "shot",
    "outcome1",
    "outcome2",
    "lambda1",
    "lambda2",
    "combined_re",
    "combined_im",
]

_SEED_RANGE = (-(2**63), 2**64)


class ProtocolConfigError(ObservablesError):
    """Exception raised for an inconsistent protocol configuration"""

    invariant = "protocol-config"
    context = "Invalid protocol configuration"


class NonNormalOperatorError(ObservablesError):
    """Exception raised when a direct joint measurement is asked of a non-normal operator"""

    invariant = "normality"
    context = "Operator is not normal"

    def __init__(self, commutator_norm: float, tol: float):
        self.commutator_norm = commutator_norm
        super().__init__(
            f"‖[A1, A2]‖_F = {commutator_norm:.6e} exceeds {tol:.3e}; "
            "only the counterfactual measurement is available"
        )


class CertaintyViolationError(ObservablesError):
    """Exception raised when a mirror observable fails to predict with certainty"""

    invariant = "certainty"
    context = "Mirror observable is not perfectly correlated"


###########
# Sources #
###########
def resolve_source(kind: SourceKind | None, dim: int) -> SourceKind:
    """The singlet for qubits and the canonical state otherwise, unless `kind` is given."""
    if kind is not None:
        return kind
    return SourceKind.SINGLET if dim == 2 else SourceKind.CANONICAL


def source_state(kind: SourceKind, dim: int) -> PureState:
    """
    The two-particle state emitted by the source.

    Raises:
        ProtocolConfigError: If the singlet is asked for with `dim != 2`, or
            `dim < 2`.
    """
    if dim < 2:
        raise ProtocolConfigError(f"entangled sources need single-particle dim >= 2, got {dim}")
    if is_singlet(kind):
        if dim != 2:
            raise ProtocolConfigError(f"the singlet source has single-particle dim 2, got {dim}")
        return singlet()
    return maximally_entangled(dim)


def _mirror_map(kind: SourceKind) -> Callable[[ComplexMatrix], ComplexMatrix]:
    """
    The map X ↦ X' with (X' ⊗ I)|ψ⟩ = (I ⊗ X)|ψ⟩ for the source state.
    """
    if canonical(kind):
        return lambda x: x.transpose()
    sigma_y = pauli_y()
    return lambda x: sigma_y @ x.transpose() @ sigma_y


def joint_distribution(
    psi: PureState,
    first: Sequence[ComplexMatrix],
    second: Sequence[ComplexMatrix],
) -> np.ndarray:
    """
    P(j, k) = ⟨ψ|(Q_j ⊗ R_k)|ψ⟩ for projectors on particle 1 and particle 2.

    Args:
        psi: A d x d bipartite pure state.
        first: Projectors acting on particle 1.
        second: Projectors acting on particle 2.

    Returns:
        np.ndarray: Non-negative array of shape (len(first), len(second)).
    """
    d = math.isqrt(psi.dim)
    if d * d != psi.dim:
        raise DimensionMismatchError(f"dimension {psi.dim} is not d x d")
    # ψ[i*d + k] = M[i, k], so (Q ⊗ R)ψ corresponds to Q M Rᵀ
    m = psi.amplitudes.reshape(d, d)
    q = np.stack([p.entries for p in first])
    r = np.stack([p.entries for p in second])
    joint = np.einsum("ab,jac,cd,kbd->jk", m.conj(), q, m, r, optimize=True).real
    return np.clip(joint, 0.0, None)


##########
# Mirror #
##########
@dataclass(frozen=True, slots=True)
class MirrorObservable:
    """
    An observable on particle 1 that predicts `original` on particle 2.

    Args:
        original: Hermitian observable on particle 2.
        mirrored: Hermitian observable on particle 1 with the same spectrum.
        source: The source that carries the correlation.
        outcomes: Merged outcomes of `original`, ascending.
        mirrored_projectors: Eigenprojectors of `mirrored`, one per outcome.
        value_map: Pairs `(outcome on particle 1, predicted outcome on particle 2)`.
    """

    original: ComplexMatrix
    mirrored: ComplexMatrix
    source: SourceKind
    outcomes: tuple[SpectralOutcome, ...]
    mirrored_projectors: tuple[ComplexMatrix, ...]
    value_map: tuple[tuple[int, int], ...]

    @property
    def values(self) -> tuple[float, ...]:
        return tuple(outcome.value for outcome in self.outcomes)

    @property
    def predictions(self) -> np.ndarray:
        """`predictions[j]` is the outcome on particle 2 predicted by outcome j on particle 1."""
        table = np.empty(len(self.value_map), dtype=np.int64)
        for outcome1, outcome2 in self.value_map:
            table[outcome1] = outcome2
        return table


def off_correspondence_mass(mirror: MirrorObservable, joint: np.ndarray) -> float:
    """Total joint probability of outcome pairs that break the value map."""
    mask = np.ones_like(joint, dtype=bool)
    for outcome1, outcome2 in mirror.value_map:
        mask[outcome1, outcome2] = False
    return float(joint[mask].sum())


def mirror_observable(h: ComplexMatrix, source: SourceKind) -> MirrorObservable:
    """
    Build the mirror of a Hermitian observable for an entangled source.

    For the canonical state the mirror is hᵀ; for the singlet it is σ_y hᵀ σ_y.
    Outcome projectors are mirrored one by one, so outcome j on particle 1
    predicts outcome j on particle 2.

    Args:
        h: Hermitian observable on particle 2.
        source: The entangled source.

    Returns:
        MirrorObservable: The mirrored observable and its value map.

    Raises:
        NotHermitianError: If `h` is not Hermitian.
        ProtocolConfigError: If `h` does not fit the source.
        CertaintyViolationError: If the exact off-correspondence mass exceeds
            `CERTAINTY_TOL`.
    """
    require_hermitian(h)
    psi = source_state(source, h.dim)
    mirror_of = _mirror_map(source)

    outcomes = tuple(spectral_projectors(hermitian_eig(h)))
    mirrored_projectors = tuple(mirror_of(outcome.projector) for outcome in outcomes)
    mirror = MirrorObservable(
        original=h,
        mirrored=mirror_of(h),
        source=source,
        outcomes=outcomes,
        mirrored_projectors=mirrored_projectors,
        value_map=tuple((j, j) for j in range(len(outcomes))),
    )

    joint = joint_distribution(psi, mirrored_projectors, [o.projector for o in outcomes])
    mass = off_correspondence_mass(mirror, joint)
    if mass > CERTAINTY_TOL:
        raise CertaintyViolationError(f"off-correspondence probability {mass:.3e}")
    return mirror


###########
# Reports #
###########
@dataclass(frozen=True, slots=True)
class ProtocolConfig:
    """
    A protocol run.

    Args:
        operator: The operator A to "measure" on particle 2.
        source: The entangled source.
        shots: Number of shots, at least 1.
        seed: 64-bit seed of the root random stream.
        mode: Counterfactual (two arms) or direct (normal operators only).

    Raises:
        ProtocolConfigError: If the shots, seed or dimensions are invalid.
        NonNormalOperatorError: If direct mode is asked of a non-normal operator.
    """

    operator: ComplexMatrix
    source: SourceKind
    shots: int
    seed: int
    mode: ProtocolMode = ProtocolMode.COUNTERFACTUAL

    def __post_init__(self):
        if self.shots < 1:
            raise ProtocolConfigError(f"shots must be positive, got {self.shots}")
        if not _SEED_RANGE[0] <= self.seed < _SEED_RANGE[1]:
            raise ProtocolConfigError(f"seed {self.seed} is not a 64-bit integer")
        source_state(self.source, self.operator.dim)
        if direct(self.mode):
            parts = decompose(self.operator)
            if not parts.normal:
                raise NonNormalOperatorError(parts.commutator_norm, parts.tolerance)


@dataclass(frozen=True, slots=True)
class ShotRecord:
    """
    One shot. `combined` is exactly `lambda1 + i·lambda2`.

    Args:
        shot: Shot index.
        outcome1: Outcome index on particle 1 (direct mode: the A₁ outcome group).
        outcome2: Outcome index on particle 2 (direct mode: the joint basis vector).
        lambda1: The A₁-value of particle 2.
        lambda2: The A₂-value of particle 2.
        combined: lambda1 + i·lambda2.
    """

    shot: int
    outcome1: int
    outcome2: int
    lambda1: float
    lambda2: float
    combined: ComplexScalar

    def __post_init__(self):
        if self.combined.re != self.lambda1 or self.combined.im != self.lambda2:
            raise ProtocolConfigError("combined value does not match lambda1 + i*lambda2")


@dataclass(frozen=True, slots=True)
class ProtocolReport:
    """
    Estimator of Tr(ρ₂A) from the shot records next to its exact value.

    `exact` is the expectation of A in the measured system's state;
    `exact_a1` and `exact_a2` are the expectations of its parts.
    """

    mean: ComplexScalar
    stderr_re: float
    stderr_im: float
    exact: ComplexScalar
    exact_a1: float
    exact_a2: float
    shots: int
    seed: int
    rng: str
    mode: ProtocolMode
    source: SourceKind | None = None

    def within_sigma(self, k: float) -> tuple[bool, bool]:
        """Whether each component of the mean lies within k standard errors of the exact value."""
        return (
            abs(self.mean.re - self.exact.re) <= k * self.stderr_re,
            abs(self.mean.im - self.exact.im) <= k * self.stderr_im,
        )


@dataclass(frozen=True, slots=True)
class CorrelationReport:
    """
    Result of a certainty check.

    Args:
        agreement_fraction: Fraction of sampled shots obeying the value map.
        off_correspondence_mass: Exact joint probability outside the value map.
    """

    agreement_fraction: float
    off_correspondence_mass: float
    shots: int
    seed: int
    rng: str
    source: SourceKind


def records_frame(records: Sequence[ShotRecord]) -> pd.DataFrame:
    """
    Tabulate shot records.

    Returns:
        pd.DataFrame: One row per shot with the columns in `RECORD_COLUMNS`.
    """
    return pd.DataFrame(
        {
            "shot": [r.shot for r in records],
            "outcome1": [r.outcome1 for r in records],
            "outcome2": [r.outcome2 for r in records],
            "lambda1": [r.lambda1 for r in records],
            "lambda2": [r.lambda2 for r in records],
            "combined_re": [r.combined.re for r in records],
            "combined_im": [r.combined.im for r in records],
        },
        columns=RECORD_COLUMNS,
    )


##########
# Runner #
##########
class ProtocolRunner:
    """
    Runs shot-sampling simulations.

    This class is responsible for:
    - Splitting a run into batches with streams derived from (seed, batch index)
    - Sampling batches on a thread pool and merging them in batch order
    - Turning sampled outcomes into shot records and reports

    Output depends only on the seed, the shot count and the batch size, never on
    the number of workers.

    Args:
        batch_size: Shots per batch.
        workers: Threads used for sampling.
    """

    logger_name = "ProtocolRunner"

    def __init__(
        self,
        *,
        batch_size: int = DEFAULT_BATCH_SIZE,
        workers: int = DEFAULT_WORKERS,
    ):
        if batch_size < 1 or workers < 1:
            raise ProtocolConfigError("batch_size and workers must be positive")
        self.batch_size = batch_size
        self.workers = workers
        self.logger = logging.getLogger(f"{__name__}.{self.logger_name}")

    @classmethod
    def from_settings(cls, settings: SimulationSettings) -> "ProtocolRunner":
        return cls(batch_size=settings.batch_size, workers=settings.workers)

    ############
    # Sampling #
    ############
    def sample(self, probabilities: np.ndarray, shots: int, seed: int) -> np.ndarray:
        """
        Draw `shots` outcome indices by inverse CDF.

        Args:
            probabilities: Outcome weights in sampling order.
            shots: Number of draws.
            seed: Seed of the root stream; batch i uses `derive(i)`.

        Returns:
            np.ndarray: Outcome indices in shot order.
        """
        if shots < 1:
            raise ProtocolConfigError(f"shots must be positive, got {shots}")
        root = RandomStream(seed)
        batches = [
            (index, min(self.batch_size, shots - start))
            for index, start in enumerate(range(0, shots, self.batch_size))
        ]

        def draw(batch: tuple[int, int]) -> np.ndarray:
            index, size = batch
            return inverse_cdf(probabilities, root.derive(index).uniforms(size))

        if self.workers == 1 or len(batches) == 1:
            results = [draw(batch) for batch in batches]
        else:
            with ThreadPoolExecutor(max_workers=self.workers) as pool:
                results = list(pool.map(draw, batches))

        self.logger.debug(f"Sampled {shots} shots in {len(batches)} batches (seed {seed})")
        return np.concatenate(results)

    ###############
    # Simulations #
    ###############
    def run(self, config: ProtocolConfig) -> tuple[list[ShotRecord], ProtocolReport]:
        """
        Simulate the protocol described by `config`.

        Counterfactual mode measures the mirror of A₁ on particle 1 and A₂ on
        particle 2, sampling both outcomes from their exact joint Born
        distribution. Direct mode measures A jointly on particle 2's reduced
        state.

        Returns:
            tuple[list[ShotRecord], ProtocolReport]: Records in shot order and the report.
        """
        psi = source_state(config.source, config.operator.dim)
        rho2 = reduced_state(psi, Subsystem.SECOND)

        if direct(config.mode):
            return self.direct(
                config.operator,
                rho2,
                config.shots,
                config.seed,
                source=config.source,
            )

        parts = decompose(config.operator)
        mirror = mirror_observable(parts.a1, config.source)
        second = spectral_projectors(hermitian_eig(parts.a2))

        joint = joint_distribution(psi, mirror.mirrored_projectors, [o.projector for o in second])
        indices = self.sample(joint.ravel(), config.shots, config.seed)
        outcome1 = indices // len(second)
        outcome2 = indices % len(second)

        lambda1 = np.array(mirror.values)[mirror.predictions[outcome1]]
        lambda2 = np.array([o.value for o in second])[outcome2]

        self.logger.info(
            f"Counterfactual run: {config.shots} shots, dim {config.operator.dim}, "
            f"source {config.source.value}, ‖[A1, A2]‖ = {parts.commutator_norm:.3e}"
        )
        return self._finish(
            outcome1,
            outcome2,
            lambda1,
            lambda2,
            parts=parts,
            operator=config.operator,
            rho=rho2,
            seed=config.seed,
            mode=ProtocolMode.COUNTERFACTUAL,
            source=config.source,
        )

    def direct(
        self,
        a: ComplexMatrix,
        rho: State,
        shots: int,
        seed: int,
        *,
        source: SourceKind | None = None,
    ) -> tuple[list[ShotRecord], ProtocolReport]:
        """
        Measure a normal operator in a common eigenbasis of its parts.

        Raises:
            NonNormalOperatorError: If `a` is not normal.
            DimensionMismatchError: If `rho` and `a` differ in dimension.
        """
        if rho.dim != a.dim:
            raise DimensionMismatchError(f"state dim {rho.dim} vs operator dim {a.dim}")
        parts = decompose(a)
        if not parts.normal:
            raise NonNormalOperatorError(parts.commutator_norm, parts.tolerance)

        basis, values1, values2, groups = joint_eigenbasis(parts)
        density = as_density(rho).matrix.entries
        weights = np.clip(np.einsum("ik,ij,jk->k", basis.conj(), density, basis).real, 0.0, None)
        indices = self.sample(weights, shots, seed)

        self.logger.info(f"Direct run: {shots} shots, dim {a.dim}")
        return self._finish(
            groups[indices],
            indices,
            values1[indices],
            values2[indices],
            parts=parts,
            operator=a,
            rho=rho,
            seed=seed,
            mode=ProtocolMode.DIRECT,
            source=source,
        )

    def verify_certainty(
        self,
        h: ComplexMatrix,
        source: SourceKind,
        shots: int,
        seed: int,
    ) -> CorrelationReport:
        """
        Sample (mirror(h) on particle 1, h on particle 2) and count agreements.

        Returns:
            CorrelationReport: Sampled agreement fraction and exact
                off-correspondence mass.
        """
        psi = source_state(source, h.dim)
        mirror = mirror_observable(h, source)
        joint = joint_distribution(
            psi, mirror.mirrored_projectors, [o.projector for o in mirror.outcomes]
        )
        indices = self.sample(joint.ravel(), shots, seed)
        outcome1 = indices // len(mirror.outcomes)
        outcome2 = indices % len(mirror.outcomes)
        agreement = float(np.mean(mirror.predictions[outcome1] == outcome2))
        return CorrelationReport(
            agreement_fraction=agreement,
            off_correspondence_mass=off_correspondence_mass(mirror, joint),
            shots=shots,
            seed=seed,
            rng=RNG_ALGORITHM,
            source=source,
        )

    ###################
    # Private helpers #
    ###################
    def _finish(
        self,
        outcome1: np.ndarray,
        outcome2: np.ndarray,
        lambda1: np.ndarray,
        lambda2: np.ndarray,
        *,
        parts: CartesianDecomposition,
        operator: ComplexMatrix,
        rho: State,
        seed: int,
        mode: ProtocolMode,
        source: SourceKind | None,
    ) -> tuple[list[ShotRecord], ProtocolReport]:
        records = [
            ShotRecord(
                shot=shot,
                outcome1=int(o1),
                outcome2=int(o2),
                lambda1=float(l1),
                lambda2=float(l2),
                combined=ComplexScalar(float(l1), float(l2)),
            )
            for shot, (o1, o2, l1, l2) in enumerate(zip(outcome1, outcome2, lambda1, lambda2))
        ]
        frame = pd.DataFrame({"combined_re": lambda1, "combined_im": lambda2})
        shots = len(frame)
        mean = frame.mean()
        if shots > 1:
            stderr = frame.std(ddof=1) / math.sqrt(shots)
        else:
            stderr = pd.Series({"combined_re": 0.0, "combined_im": 0.0})

        report = ProtocolReport(
            mean=ComplexScalar(float(mean["combined_re"]), float(mean["combined_im"])),
            stderr_re=float(stderr["combined_re"]),
            stderr_im=float(stderr["combined_im"]),
            exact=expectation(rho, operator),
            exact_a1=expectation(rho, parts.a1).re,
            exact_a2=expectation(rho, parts.a2).re,
            shots=shots,
            seed=seed,
            rng=RNG_ALGORITHM,
            mode=mode,
            source=source,
        )
        return records, report


def joint_eigenbasis(
    parts: CartesianDecomposition,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """
    A common eigenbasis of commuting parts.

    The eigenbasis of A₁ is refined by diagonalizing A₂ inside each degenerate
    A₁ block.

    Returns:
        tuple: Basis vectors as columns, their A₁ values, their A₂ values, and
            the A₁ outcome group of each vector.
    """
    blocks, values1, values2, groups = [], [], [], []
    eigensystem = hermitian_eig(parts.a1)
    vectors = eigensystem.vectors.entries
    a2 = parts.a2.entries
    for group, outcome in enumerate(spectral_projectors(eigensystem)):
        block = vectors[:, list(outcome.columns)]
        within = block.conj().T @ a2 @ block
        restricted = hermitian_eig(ComplexMatrix._wrap(0.5 * (within + within.conj().T)))
        blocks.append(block @ restricted.vectors.entries)
        values1.extend([outcome.value] * len(outcome.columns))
        values2.extend(restricted.eigenvalues)
        groups.extend([group] * len(outcome.columns))
    return (
        np.hstack(blocks),
        np.array(values1),
        np.array(values2),
        np.array(groups, dtype=np.int64),
    )


###########################
# Module-level operations #
###########################
def run_protocol(config: ProtocolConfig) -> tuple[list[ShotRecord], ProtocolReport]:
    return ProtocolRunner().run(config)


def verify_certainty(
    h: ComplexMatrix,
    source: SourceKind,
    shots: int,
    seed: int,
) -> CorrelationReport:
    return ProtocolRunner().verify_certainty(h, source, shots, seed)


def direct_joint_measure(
    a: ComplexMatrix,
    rho: DensityState,
    shots: int,
    seed: int,
) -> tuple[list[ShotRecord], ProtocolReport]:
    return ProtocolRunner().direct(a, rho, shots, seed)


__all__ = [
    "CERTAINTY_TOL",
    "CertaintyViolationError",
    "CorrelationReport",
    "MirrorObservable",
    "NonNormalOperatorError",
    "ProtocolConfig",
    "ProtocolConfigError",
    "ProtocolReport",
    "ProtocolRunner",
    "RECORD_COLUMNS",
    "ShotRecord",
    "direct_joint_measure",
    "joint_distribution",
    "joint_eigenbasis",
    "mirror_observable",
    "off_correspondence_mass",
    "records_frame",
    "resolve_source",
    "run_protocol",
    "source_state",
    "verify_certainty",
]
