"""
Operators
=========

General fractional integral and derivatives on a grid:

- apply_gfi: I_(kappa) f = kappa * f
- apply_gfd_rl: D_(k) f = d/dt (k * f)
- apply_gfd_caputo: *D_(k) f = k * f'
- apply_gfd_1l: I_(k1) D_(k2) f, the first-level derivative
- apply_hilfer: first-level derivative with power-law kernels
- projector_1l: f - I_(kappa) 1L-D f = (I_(k2) f)(0) (k1 * kappa)

Derivatives use the rewrite d/dt (k * f) = f(0) k + k * f' when f' and f(0)
are known, and numerical differentiation of the convolution otherwise.
"""
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Union

import numpy as np

from gfc_engine.config import config
from gfc_engine.errors import (
    ExtrapolationError,
    MissingDerivativeError,
    MissingInitialValueError,
    ParameterRangeError,
)
from gfc_engine.kernels import H0, Kernel, KernelSeries, PowerLaw, Series
from gfc_engine.quadrature import (
    SINGULARITY_EPS,
    Grid,
    GridFunction,
    TestFunction,
    convolve,
    cumulative_integral,
    differentiate,
    kernel_on_grid,
)

logger = logging.getLogger("gfc_engine.operators")

Operand = Union[TestFunction, GridFunction]

# Closed Hilfer endpoints are detected with this slack
_ENDPOINT_EPS = 1e-12


def _sample(f: Operand, grid: Grid) -> GridFunction:
    if isinstance(f, GridFunction):
        return f
    return f.sample(grid)


def _has_analytic_derivative(f: Operand) -> bool:
    return isinstance(f, TestFunction) and f.derivative_evaluator is not None


def _initial_value(f: TestFunction) -> float:
    if f.value_at_zero is None:
        raise MissingInitialValueError(
            f"f(0) is required when f' is supplied for {f.name}"
        )
    return float(f.value_at_zero)


def _scaled_kernel(kernel: Kernel, scale: float, grid: Grid) -> GridFunction:
    return scale * kernel_on_grid(kernel, grid)


# ============================================================================
# Integral and derivatives
# ============================================================================

def apply_gfi(kappa: Kernel, f: Operand, grid: Grid) -> GridFunction:
    """General fractional integral (kappa * f) on the grid; h0 returns f"""
    if isinstance(kappa, H0):
        return _sample(f, grid)
    return convolve(kappa, f, grid)


def _numeric_derivative(k: Kernel, f: Operand, grid: Grid) -> GridFunction:
    logger.warning("d/dt (%s * f) by numerical differentiation (%s)", k.label, config.DERIVATIVE_METHOD)
    return differentiate(convolve(k, f, grid), method=config.DERIVATIVE_METHOD)


def apply_gfd_rl(k: Kernel, f: Operand, grid: Grid) -> GridFunction:
    """
    Riemann-Liouville type derivative d/dt (k * f).

    A test function with f' supplied takes the rewrite f(0) k + k * f' and
    then needs f(0); everything else is differentiated numerically.
    """
    if isinstance(k, H0):
        if _has_analytic_derivative(f):
            return f.derivative().sample(grid)
        return differentiate(_sample(f, grid), method=config.DERIVATIVE_METHOD)
    if _has_analytic_derivative(f) and f.singularity >= 0:
        f0 = _initial_value(f)
        derivative_part = convolve(k, f.derivative(), grid)
        if f0 == 0.0:
            return derivative_part
        return _scaled_kernel(k, f0, grid) + derivative_part
    return _numeric_derivative(k, f, grid)


def apply_gfd_caputo(k: Kernel, f: Operand, grid: Grid) -> GridFunction:
    """Caputo type derivative k * f'"""
    if isinstance(f, GridFunction):
        derivative = differentiate(f, method=config.DERIVATIVE_METHOD)
    elif f.derivative_evaluator is None:
        raise MissingDerivativeError(f"Caputo type derivative needs f' for {f.name}")
    else:
        derivative = f.derivative()
    if isinstance(k, H0):
        return _sample(derivative, grid)
    return convolve(k, derivative, grid)


def apply_gfd_1l(k1: Kernel, k2: Kernel, f: Operand, grid: Grid) -> GridFunction:
    """
    First-level derivative I_(k1) D_(k2) f.

    k1 = h0 is the RL type derivative, k2 = h0 the Caputo type derivative.
    """
    if isinstance(k1, H0):
        return apply_gfd_rl(k2, f, grid)
    if isinstance(k2, H0):
        return apply_gfd_caputo(k1, f, grid)
    if _has_analytic_derivative(f) and f.singularity >= 0:
        f0 = _initial_value(f)
        inner = convolve(k2, f.derivative(), grid)
        result = convolve(k1, inner, grid)
        if f0 != 0.0:
            # k1 * (f(0) k2) with k2 integrated exactly as a kernel source
            result = f0 * convolve(k1, k2, grid) + result
        return result
    return apply_gfi(k1, _numeric_derivative(k2, f, grid), grid)


def hilfer_kernels(alpha: float, gamma: float):
    """
    (k1, k2) = (h_gamma, h_{1-alpha-gamma}) with the closed endpoints
    gamma = 0 and gamma = 1 - alpha mapped to h0.
    """
    if not 0.0 < alpha < 1.0:
        raise ParameterRangeError(f"Hilfer order alpha must lie in (0, 1), got {alpha}")
    upper = 1.0 - alpha
    if gamma < -_ENDPOINT_EPS or gamma > upper + _ENDPOINT_EPS:
        raise ParameterRangeError(f"Hilfer type gamma must lie in [0, {upper:g}], got {gamma}")
    if abs(gamma) <= _ENDPOINT_EPS:
        return H0(), PowerLaw(upper)
    if abs(gamma - upper) <= _ENDPOINT_EPS:
        return PowerLaw(upper), H0()
    return PowerLaw(gamma), PowerLaw(upper - gamma)


def apply_hilfer(alpha: float, gamma: float, f: Operand, grid: Grid) -> GridFunction:
    """Hilfer derivative of order alpha and type gamma"""
    k1, k2 = hilfer_kernels(alpha, gamma)
    return apply_gfd_1l(k1, k2, f, grid)


def power_kernel(alpha: float) -> Kernel:
    """h_alpha as a kernel: h0 at 0, a series kernel for 1 < alpha <= 2"""
    if alpha == 0.0:
        return H0()
    if 0.0 < alpha <= 1.0:
        return PowerLaw(alpha)
    return Series(KernelSeries(alpha, (1.0,)))


def apply_rl_integral(alpha: float, f: Operand, grid: Grid) -> GridFunction:
    """Riemann-Liouville integral I^alpha f, alpha >= 0"""
    if not alpha >= 0.0:
        raise ParameterRangeError(f"integral order must be >= 0, got {alpha}")
    result = _sample(f, grid)
    while alpha > 2.0:
        result = cumulative_integral(result)
        alpha -= 1.0
    return apply_gfi(power_kernel(alpha), result, grid)


# ============================================================================
# Projector
# ============================================================================

def limit_at_zero(g: GridFunction) -> float:
    """
    Estimate g(0+) from the three smallest nodes.

    Zero when g vanishes like t^p, p > 0; otherwise the regular part is
    extrapolated quadratically and checked against the linear estimate.
    """
    if g.p > SINGULARITY_EPS:
        return 0.0
    if g.p < -SINGULARITY_EPS:
        raise ExtrapolationError(f"function behaves like t^{g.p:g} and has no finite limit at 0")
    x = g.nodes[:3]
    y = g.values[:3]
    quadratic = float(np.polyval(np.polyfit(x, y, 2), 0.0))
    linear = float(np.polyval(np.polyfit(x[:2], y[:2], 1), 0.0))
    spread = abs(quadratic - linear)
    if spread > config.EXTRAPOLATION_TOL * max(1.0, abs(quadratic)):
        raise ExtrapolationError(
            f"limit at 0 is unstable: quadratic {quadratic:.10g} vs linear {linear:.10g}"
        )
    logger.debug("limit at 0: %.12g (spread %.2e)", quadratic, spread)
    return quadratic


def projector_1l(k1: Kernel, k2: Kernel, kappa: Kernel, f: Operand, grid: Grid) -> GridFunction:
    """
    Projector of the first-level derivative: (I_(k2) f)(0) (k1 * kappa)(t).
    """
    if isinstance(k2, H0) and isinstance(f, TestFunction) and f.value_at_zero is not None:
        constant = float(f.value_at_zero)
    else:
        constant = limit_at_zero(apply_gfi(k2, f, grid))
    if isinstance(k1, H0):
        shape = kernel_on_grid(kappa, grid)
    elif isinstance(kappa, H0):
        shape = kernel_on_grid(k1, grid)
    else:
        shape = convolve(k1, kappa, grid)
    logger.debug("projector constant (I_k2 f)(0) = %.12g", constant)
    return constant * shape


# ============================================================================
# Operator specifications
# ============================================================================

class OperatorKind(Enum):
    GFI = "gfi"
    GFD_RL = "gfd-rl"
    GFD_CAPUTO = "gfd-caputo"
    GFD_1L = "gfd-1l"
    HILFER = "hilfer"
    RL_INTEGRAL = "rl-integral"
    PROJECTOR = "projector"


@dataclass(frozen=True)
class OperatorSpec:
    """
    One operator with its kernels or orders. Fields not used by a kind stay
    None.
    """
    kind: OperatorKind
    kappa: Optional[Kernel] = None
    k: Optional[Kernel] = None
    k1: Optional[Kernel] = None
    k2: Optional[Kernel] = None
    alpha: Optional[float] = None
    gamma: Optional[float] = None

    def _need(self, name: str):
        value = getattr(self, name)
        if value is None:
            raise ParameterRangeError(f"operator {self.kind.value} needs {name}")
        return value

    def apply(self, f: Operand, grid: Grid) -> GridFunction:
        kind = self.kind
        if kind is OperatorKind.GFI:
            return apply_gfi(self._need("kappa"), f, grid)
        if kind is OperatorKind.GFD_RL:
            return apply_gfd_rl(self._need("k"), f, grid)
        if kind is OperatorKind.GFD_CAPUTO:
            return apply_gfd_caputo(self._need("k"), f, grid)
        if kind is OperatorKind.GFD_1L:
            return apply_gfd_1l(self._need("k1"), self._need("k2"), f, grid)
        if kind is OperatorKind.HILFER:
            return apply_hilfer(self._need("alpha"), self._need("gamma"), f, grid)
        if kind is OperatorKind.RL_INTEGRAL:
            return apply_rl_integral(self._need("alpha"), f, grid)
        return projector_1l(self._need("k1"), self._need("k2"), self._need("kappa"), f, grid)
