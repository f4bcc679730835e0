import math

from observables.utils.enums import ProtocolMode, SourceKind, Subsystem


def is_finite_real(value: float) -> bool:
    return math.isfinite(value)


def keeps_first(keep: Subsystem) -> bool:
    return keep == Subsystem.FIRST


def singlet(kind: SourceKind) -> bool:
    return kind == SourceKind.SINGLET


def canonical(kind: SourceKind) -> bool:
    return kind == SourceKind.CANONICAL


def counterfactual(mode: ProtocolMode) -> bool:
    return mode == ProtocolMode.COUNTERFACTUAL


def direct(mode: ProtocolMode) -> bool:
    return mode == ProtocolMode.DIRECT


def wrap_phase(phi: float) -> float:
    """
    Map an angle onto [0, 2π).

    Args:
        phi: Any finite angle in radians.

    Returns:
        float: The equivalent angle in [0, 2π).
    """
    wrapped = math.fmod(phi, 2 * math.pi)
    if wrapped < 0:
        wrapped += 2 * math.pi
    # fmod of a tiny negative angle can land exactly on 2π
    if wrapped >= 2 * math.pi:
        wrapped = 0.0
    return wrapped
