"""
GFC Engine - general fractional calculus with Sonin kernels
"""
__version__ = "1.0.0"

from gfc_engine.errors import EngineError
from gfc_engine.kernels import (
    H0,
    H1,
    MLK,
    BesselK,
    BesselKappa,
    Kernel,
    KernelKind,
    KernelSeries,
    KernelTriple,
    MLKappa,
    PowerLaw,
    Series,
    Tempered,
    TemperedAssociated,
    associated_kernel,
    laplace_transform,
    power_triple,
    sonin_pair,
    third_kernel,
)
from gfc_engine.operators import (
    OperatorKind,
    OperatorSpec,
    apply_gfd_1l,
    apply_gfd_caputo,
    apply_gfd_rl,
    apply_gfi,
    apply_hilfer,
    projector_1l,
)
from gfc_engine.quadrature import Grid, GridFunction, TestFunction, convolve

__all__ = [
    "EngineError",
    "H0",
    "H1",
    "MLK",
    "BesselK",
    "BesselKappa",
    "Kernel",
    "KernelKind",
    "KernelSeries",
    "KernelTriple",
    "MLKappa",
    "PowerLaw",
    "Series",
    "Tempered",
    "TemperedAssociated",
    "associated_kernel",
    "laplace_transform",
    "power_triple",
    "sonin_pair",
    "third_kernel",
    "OperatorKind",
    "OperatorSpec",
    "apply_gfd_1l",
    "apply_gfd_caputo",
    "apply_gfd_rl",
    "apply_gfi",
    "apply_hilfer",
    "projector_1l",
    "Grid",
    "GridFunction",
    "TestFunction",
    "convolve",
]
