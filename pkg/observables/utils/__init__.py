from .utils import (
    canonical,
    counterfactual,
    direct,
    is_finite_real,
    keeps_first,
    singlet,
    wrap_phase,
)

__all__ = [
    "is_finite_real",
    "keeps_first",
    "singlet",
    "canonical",
    "counterfactual",
    "direct",
    "wrap_phase",
]
