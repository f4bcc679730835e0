__version__ = "0.1.0"

from observables.decompose import CartesianDecomposition, decompose, is_normal, recompose
from observables.linalg import ComplexMatrix, ComplexScalar, hermitian_eig
from observables.multiport import (
    MultiportPlan,
    TwoLevelRotation,
    network_born_check,
    realize_arms,
    realize_measurement,
    reck_decompose,
    reconstruct,
)
from observables.protocol import (
    ProtocolConfig,
    ProtocolReport,
    ProtocolRunner,
    ShotRecord,
    direct_joint_measure,
    mirror_observable,
    run_protocol,
    verify_certainty,
)
from observables.states import (
    DensityState,
    PureState,
    born_distribution,
    expectation,
    maximally_entangled,
    reduced_state,
    singlet,
)

__all__ = [
    "__version__",
    "CartesianDecomposition",
    "ComplexMatrix",
    "ComplexScalar",
    "DensityState",
    "MultiportPlan",
    "ProtocolConfig",
    "ProtocolReport",
    "ProtocolRunner",
    "PureState",
    "ShotRecord",
    "TwoLevelRotation",
    "born_distribution",
    "decompose",
    "direct_joint_measure",
    "expectation",
    "hermitian_eig",
    "is_normal",
    "maximally_entangled",
    "mirror_observable",
    "network_born_check",
    "realize_arms",
    "realize_measurement",
    "recompose",
    "reck_decompose",
    "reconstruct",
    "reduced_state",
    "run_protocol",
    "singlet",
    "verify_certainty",
]
