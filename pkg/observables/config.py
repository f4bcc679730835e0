from dataclasses import dataclass

# Frobenius tolerance for every input that must be Hermitian
HERMITIAN_TOL = 1e-10

# Hermiticity and round-trip tolerance for Cartesian parts
PART_TOL = 1e-12

# Frobenius tolerance on ‖U†U − I‖ for unitary inputs
UNITARY_TOL = 1e-10

# Eigenvalues closer than this are merged into a single measurement outcome
DEGENERACY_TOL = 1e-9

# Entries below this modulus count as already nulled by the multiport sweep
NULL_TOL = 1e-14

# Jacobi stops when the off-diagonal mass drops below JACOBI_REL_TOL * ‖H‖_F
JACOBI_REL_TOL = 1e-14
JACOBI_MAX_SWEEPS = 100

# Normality tolerance is NORMALITY_SCALE * max(1, ‖A‖_F²)
NORMALITY_SCALE = 1e-10

# The two normality measures may differ by at most NORMALITY_ROUNDING * max(1, ‖A‖_F²)
NORMALITY_ROUNDING = 1e-12

# Density-matrix validation
TRACE_TOL = 1e-12
POSITIVITY_TOL = 1e-10
NORMALIZATION_TOL = 1e-12
PROBABILITY_TOL = 1e-12

# Run defaults, overridden by explicit CLI flags
DEFAULT_SHOTS = 10_000
DEFAULT_SEED = 0
DEFAULT_BATCH_SIZE = 8_192
DEFAULT_WORKERS = 4


@dataclass(frozen=True, slots=True)
class SimulationSettings:
    """
    Run-level settings for shot sampling.

    Args:
        shots: Number of shots to sample.
        seed: Seed of the root random stream.
        batch_size: Shots per independently seeded batch.
        workers: Threads used to sample batches. Output does not depend on it.
    """

    shots: int = DEFAULT_SHOTS
    seed: int = DEFAULT_SEED
    batch_size: int = DEFAULT_BATCH_SIZE
    workers: int = DEFAULT_WORKERS

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch_size must be positive")
        if self.workers < 1:
            raise ValueError("workers must be positive")
