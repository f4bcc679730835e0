from enum import Enum, IntEnum


class Subsystem(Enum):
    """Which factor of a bipartite space survives a partial trace"""

    FIRST = "first"
    SECOND = "second"


class SourceKind(Enum):
    """Entangled sources of the two-arm setup"""

    SINGLET = "singlet"
    CANONICAL = "canonical"


class ProtocolMode(Enum):
    COUNTERFACTUAL = "counterfactual"
    DIRECT = "direct"


class ExitCode(IntEnum):
    """CLI exit codes"""

    SUCCESS = 0
    USAGE = 2
    INVARIANT = 3
    DOMAIN = 4
