"""
Quadrature
==========

Laplace convolutions (kernel * f)(t) of weakly singular kernels on graded
meshes:

- Grid: nodes t_i = T (i/n)^r, i = 1..n (t = 0 excluded)
- GridFunction: samples of the regular part g of f(t) = t^p g(t)
- TestFunction: callable input with optional derivative and f(0)
- convolve / cumulative_integral / differentiate

Product integration per output node t_i over the panels [t_j, t_{j+1}]
(t_0 = 0):

- first panel: Gauss-Jacobi with the weight tau^p of the source singularity
- last panel: Gauss-Jacobi with the weight s^(mu-1) of every kernel power group
- interior panels: Gauss-Legendre

Sources given on a grid are interpolated through a cubic spline of their
regular part.
"""
import math
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from functools import cached_property
from pathlib import Path
from typing import Callable, List, Optional, Tuple, Union

import numpy as np
import pandas as pd
from scipy.interpolate import CubicSpline
from scipy.special import roots_legendre

from gfc_engine.config import config
from gfc_engine.errors import (
    GridTooCoarseError,
    MissingDerivativeError,
    NonIntegrableError,
    ParameterRangeError,
)
from gfc_engine.kernels import H0, H1, Kernel, _jacobi_rule
from gfc_engine.special_functions import rgamma

logger = logging.getLogger("gfc_engine.quadrature")

Evaluator = Callable[[np.ndarray], Union[float, np.ndarray]]

# Exponents closer than this to zero are treated as a regular function
SINGULARITY_EPS = 1e-12


# ============================================================================
# Grid and sampled functions
# ============================================================================

@dataclass(frozen=True)
class Grid:
    """Graded mesh t_i = T (i/n)^r, i = 1..n"""
    n: int
    r: float = 2.0
    T: float = 2.0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < config.MIN_GRID_NODES:
            raise GridTooCoarseError(
                f"grid needs at least {config.MIN_GRID_NODES} nodes, got n={self.n}"
            )
        if not self.r >= 1.0:
            raise ParameterRangeError(f"grading exponent r must be >= 1, got {self.r}")
        if not (self.T > 0 and math.isfinite(self.T)):
            raise ParameterRangeError(f"horizon T must be positive, got {self.T}")
        object.__setattr__(self, "n", int(self.n))

    @cached_property
    def nodes(self) -> np.ndarray:
        return self.T * (np.arange(1, self.n + 1) / self.n) ** self.r

    @cached_property
    def edges(self) -> np.ndarray:
        """Panel edges 0 = t_0 < t_1 < ... < t_n"""
        return np.concatenate(([0.0], self.nodes))

    @classmethod
    def parse(cls, text: str) -> "Grid":
        """Grid from the 'n:r:T' notation"""
        parts = text.split(":")
        if len(parts) != 3:
            raise ParameterRangeError(f"grid must be written n:r:T, got {text!r}")
        try:
            n, r, T = int(parts[0]), float(parts[1]), float(parts[2])
        except ValueError as exc:
            raise ParameterRangeError(f"grid must be written n:r:T, got {text!r}") from exc
        return cls(n=n, r=r, T=T)

    @classmethod
    def from_nodes(cls, nodes: np.ndarray) -> "Grid":
        """Recover (n, r, T) from a node array written by GridFunction.to_csv"""
        nodes = np.asarray(nodes, dtype=float)
        n, T = len(nodes), float(nodes[-1])
        if n < 2 or np.any(np.diff(nodes) <= 0):
            raise ParameterRangeError("grid nodes must be strictly increasing")
        r = math.log(nodes[0] / T) / math.log(1.0 / n)
        grid = cls(n=n, r=round(r, 9), T=T)
        if not np.allclose(grid.nodes, nodes, rtol=1e-9, atol=0.0):
            raise ParameterRangeError("nodes do not follow t_i = T (i/n)^r")
        return grid

    def __str__(self) -> str:
        return f"{self.n}:{self.r:g}:{self.T:g}"


def _as_array(values, x: np.ndarray) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim == 0:
        return np.full(np.shape(x), float(arr))
    return arr


@dataclass(frozen=True, eq=False)
class GridFunction:
    """
    f(t) = t^p g(t) sampled on a grid; values holds g at the nodes.
    """
    grid: Grid
    p: float
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float).copy()
        if not self.p > -1.0:
            raise NonIntegrableError(f"singularity exponent must exceed -1, got p={self.p}")
        if values.shape != (self.grid.n,):
            raise ParameterRangeError(f"expected {self.grid.n} samples, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ParameterRangeError("grid function values must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "p", float(self.p))

    @property
    def nodes(self) -> np.ndarray:
        return self.grid.nodes

    @cached_property
    def full_values(self) -> np.ndarray:
        """f(t_i) = t_i^p g(t_i)"""
        return np.power(self.nodes, self.p) * self.values

    @cached_property
    def spline(self) -> CubicSpline:
        """Cubic spline of the regular part g"""
        return CubicSpline(self.nodes, self.values)

    def regular_at(self, t) -> np.ndarray:
        return self.spline(t)

    def at(self, t):
        """Interpolated f(t) for 0 < t <= T"""
        arr = np.asarray(t, dtype=float)
        result = np.power(arr, self.p) * self.spline(arr)
        return float(result) if np.ndim(t) == 0 else result

    @classmethod
    def from_callable(cls, fn: Evaluator, grid: Grid, p: float = 0.0) -> "GridFunction":
        nodes = grid.nodes
        return cls(grid, p, _as_array(fn(nodes), nodes) / np.power(nodes, p))

    @classmethod
    def from_full_values(cls, grid: Grid, full: np.ndarray, p: float = 0.0) -> "GridFunction":
        return cls(grid, p, np.asarray(full, dtype=float) / np.power(grid.nodes, p))

    def with_singularity(self, p: float) -> "GridFunction":
        """Same function with its regular part taken against t^p"""
        if abs(p - self.p) < SINGULARITY_EPS:
            return self
        return GridFunction.from_full_values(self.grid, self.full_values, p)

    def _align(self, other: "GridFunction") -> Tuple["GridFunction", "GridFunction"]:
        if other.grid != self.grid:
            raise ParameterRangeError(f"grid mismatch: {self.grid} vs {other.grid}")
        p = min(self.p, other.p)
        return self.with_singularity(p), other.with_singularity(p)

    def __add__(self, other):
        if isinstance(other, GridFunction):
            a, b = self._align(other)
            return GridFunction(a.grid, a.p, a.values + b.values)
        return NotImplemented

    def __sub__(self, other):
        if isinstance(other, GridFunction):
            a, b = self._align(other)
            return GridFunction(a.grid, a.p, a.values - b.values)
        return NotImplemented

    def __mul__(self, scalar):
        if isinstance(scalar, (int, float, np.floating)):
            return GridFunction(self.grid, self.p, float(scalar) * self.values)
        return NotImplemented

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"t": self.nodes, "value": self.full_values})

    def to_csv(self, path: Union[str, Path]) -> None:
        """CSV with header t,value holding the full function, 15 significant digits"""
        self.to_frame().to_csv(path, index=False, float_format="%.15g")

    @classmethod
    def from_csv(cls, path: Union[str, Path], p: float = 0.0) -> "GridFunction":
        frame = pd.read_csv(path)
        if list(frame.columns) != ["t", "value"]:
            raise ParameterRangeError(f"{path}: expected columns t,value, got {list(frame.columns)}")
        grid = Grid.from_nodes(frame["t"].to_numpy())
        return cls.from_full_values(grid, frame["value"].to_numpy(), p)


@dataclass(frozen=True)
class TestFunction:
    """
    Input function given by callables. singularity declares the exponent p of
    f(t) = t^p g(t) with g continuous on [0, T].
    """
    __test__ = False

    evaluator: Evaluator
    derivative_evaluator: Optional[Evaluator] = None
    value_at_zero: Optional[float] = None
    singularity: float = 0.0
    name: str = "f"
    # Exponent of f' near 0 when it is not implied by singularity
    derivative_exponent: Optional[float] = None

    def __call__(self, t):
        arr = np.asarray(t, dtype=float)
        result = _as_array(self.evaluator(arr), arr)
        return float(result) if np.ndim(t) == 0 else result

    def sample(self, grid: Grid) -> GridFunction:
        return GridFunction.from_callable(self.evaluator, grid, self.singularity)

    @property
    def derivative_singularity(self) -> float:
        if self.derivative_exponent is not None:
            return self.derivative_exponent
        p = self.singularity
        return 0.0 if abs(p) < SINGULARITY_EPS else p - 1.0

    def derivative(self) -> "TestFunction":
        """f' as a test function; its own derivative is unknown"""
        if self.derivative_evaluator is None:
            raise MissingDerivativeError(f"no derivative supplied for {self.name}")
        return TestFunction(
            self.derivative_evaluator,
            singularity=self.derivative_singularity,
            name=f"{self.name}'",
        )


# Two small abscissae for the local power of an unbounded f'
_SMALL_ABSCISSAE = np.array([1e-10, 1e-8])


def infer_derivative_exponent(f: TestFunction) -> TestFunction:
    """
    Declare the exponent of f' for a function that is regular at 0 while its
    derivative is not, such as t^0.5. q in f'(t) ~ c t^q is estimated from
    two small abscissae. An f' that is not integrable at 0 is dropped, which
    sends derivatives to numerical differentiation.
    """
    if (f.derivative_evaluator is None or f.derivative_exponent is not None
            or abs(f.singularity) >= SINGULARITY_EPS):
        return f
    zero = np.zeros(1)
    with np.errstate(all="ignore"):
        if np.all(np.isfinite(_as_array(f.derivative_evaluator(zero), zero))):
            return f
        near = np.abs(_as_array(f.derivative_evaluator(_SMALL_ABSCISSAE), _SMALL_ABSCISSAE))
    if np.all(np.isfinite(near)) and np.all(near > 0):
        q = math.log(near[1] / near[0]) / math.log(_SMALL_ABSCISSAE[1] / _SMALL_ABSCISSAE[0])
        if q > -1.0:
            q = round(q, 6)
            logger.warning("%s: f' is unbounded at 0, treating it as t^%g g(t)", f.name, q)
            return replace(f, derivative_exponent=q)
    logger.warning("%s: f' is not integrable at 0, differentiating numerically", f.name)
    return replace(f, derivative_evaluator=None)


# ============================================================================
# Convolution sources
# ============================================================================

@dataclass
class _Source:
    """
    Integrand factor f of a convolution: full(x) everywhere on (0, T], plus
    singular parts (p, g) with f = sum x^p g(x) near 0.
    """
    full: Callable[[np.ndarray], np.ndarray]
    parts: List[Tuple[float, Callable[[np.ndarray], np.ndarray]]]
    p: float


def _test_function_source(f: TestFunction) -> _Source:
    p = f.singularity
    if not p > -1.0:
        raise NonIntegrableError(f"{f.name} has singularity exponent {p}, not integrable at 0")

    def regular(x):
        return _as_array(f.evaluator(x), x) / np.power(x, p)

    return _Source(lambda x: _as_array(f.evaluator(x), x), [(p, regular)], p)


def _grid_function_source(f: GridFunction) -> _Source:
    return _Source(f.at, [(f.p, f.spline)], f.p)


def _kernel_source(kernel: Kernel, horizon: float) -> _Source:
    parts = []
    for group in kernel.power_groups(horizon):
        scale = rgamma(group.mu)
        parts.append((group.mu - 1.0, lambda x, g=group, c=scale: c * g.polynomial(x)))
    return _Source(kernel.sample, parts, kernel.leading_order - 1.0)


ConvolutionInput = Union[TestFunction, GridFunction, Kernel]


def _make_source(f: ConvolutionInput, grid: Grid) -> _Source:
    if isinstance(f, GridFunction):
        return _grid_function_source(f)
    if isinstance(f, TestFunction):
        return _test_function_source(f)
    if isinstance(f, Kernel):
        return _kernel_source(f, grid.nodes[0])
    raise TypeError(f"cannot convolve with {type(f).__name__}")


def kernel_on_grid(kernel: Kernel, grid: Grid) -> GridFunction:
    """Kernel sampled as a grid function with p = mu - 1"""
    p = kernel.leading_order - 1.0
    return GridFunction.from_full_values(grid, kernel.evaluate(grid.nodes), p)


# ============================================================================
# Product integration
# ============================================================================

def _source_panel(kernel: Kernel, source: _Source, end: float, targets: np.ndarray) -> np.ndarray:
    """
    int_0^end kernel(t - tau) f(tau) dtau for every t in targets (t > end),
    exact in the tau^p singularity of f.
    """
    total = np.zeros(len(targets))
    half = end / 2.0
    for p, regular in source.parts:
        y, w = _jacobi_rule(config.JACOBI_ORDER, 0.0, p)
        tau = half * (y + 1.0)
        k_values = kernel.sample(targets[:, None] - tau[None, :])
        total += half ** (p + 1.0) * (k_values @ (w * regular(tau)))
    return total


def _kernel_panel(groups, source: _Source, width: np.ndarray, targets: np.ndarray) -> np.ndarray:
    """
    int_0^width kernel(s) f(t - s) ds for every t in targets, exact in the
    s^(mu-1) singularity of each kernel power group.
    """
    total = np.zeros(len(targets))
    half = width / 2.0
    for group in groups:
        y, w = _jacobi_rule(config.JACOBI_ORDER, 0.0, group.mu - 1.0)
        s = half[:, None] * (y[None, :] + 1.0)
        f_values = source.full(targets[:, None] - s)
        integrand = group.polynomial(s) * f_values
        total += half ** group.mu * rgamma(group.mu) * (integrand @ w)
    return total


def _interior_rows(kernel: Kernel, rows: np.ndarray, edges: np.ndarray,
                   tau: np.ndarray, weighted_f: np.ndarray) -> np.ndarray:
    """
    Gauss-Legendre sum over the interior panels 1..i-2 of each output node i.
    tau / weighted_f have shape (n_panels, order).
    """
    n_panels, order = tau.shape
    panel = np.repeat(np.arange(n_panels), order)
    inside = (panel[None, :] >= 1) & (panel[None, :] <= rows[:, None] - 2)
    if not inside.any():
        return np.zeros(len(rows))
    s = edges[rows][:, None] - tau.reshape(1, -1)
    contributions = np.zeros(inside.shape)
    contributions[inside] = kernel.sample(s[inside]) * np.broadcast_to(weighted_f.reshape(1, -1), inside.shape)[inside]
    return contributions.sum(axis=1)


def _convolve_rows(kernel: Kernel, source: _Source, grid: Grid, rows: np.ndarray,
                   groups, tau: np.ndarray, weighted_f: np.ndarray) -> np.ndarray:
    edges = grid.edges
    targets = edges[rows]
    x1 = edges[1]
    # node 1: split its single panel at the midpoint
    first_end = np.where(rows == 1, x1 / 2.0, x1)
    last_width = np.where(rows == 1, x1 / 2.0, targets - edges[rows - 1])

    values = np.zeros(len(rows))
    for end in np.unique(first_end):
        mask = first_end == end
        values[mask] += _source_panel(kernel, source, end, targets[mask])
    values += _kernel_panel(groups, source, last_width, targets)
    values += _interior_rows(kernel, rows, edges, tau, weighted_f)
    return values


def _convolution_values(kernel: Kernel, source: _Source, grid: Grid) -> np.ndarray:
    edges = grid.edges
    widths = np.diff(edges)
    groups = kernel.power_groups(float(widths.max()))

    y, w = roots_legendre(config.QUADRATURE_ORDER)
    half = widths / 2.0
    tau = (edges[:-1] + half)[:, None] + half[:, None] * y[None, :]
    weighted_f = np.zeros_like(tau)
    # panel 0 is always handled by the Jacobi rule
    weighted_f[1:] = half[1:, None] * w[None, :] * source.full(tau[1:])

    rows = np.arange(1, grid.n + 1)
    chunks = [rows[i:i + config.ROW_CHUNK] for i in range(0, len(rows), config.ROW_CHUNK)]

    def run(chunk):
        return _convolve_rows(kernel, source, grid, chunk, groups, tau, weighted_f)

    if config.WORKERS > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=config.WORKERS) as executor:
            parts = list(executor.map(run, chunks))
    else:
        parts = [run(chunk) for chunk in chunks]
    return np.concatenate(parts)


def convolve(kernel: Kernel, f: ConvolutionInput, grid: Grid) -> GridFunction:
    """
    (kernel * f)(t_i) at every grid node.

    f may be a TestFunction, a GridFunction on the same grid, or another
    kernel. h0 returns f itself, h1 reduces to cumulative integration.
    """
    if isinstance(f, GridFunction) and f.grid != grid:
        raise ParameterRangeError(f"grid function lives on {f.grid}, convolution grid is {grid}")
    if isinstance(kernel, H0):
        if isinstance(f, GridFunction):
            return f
        if isinstance(f, TestFunction):
            return f.sample(grid)
        return kernel_on_grid(f, grid)
    if isinstance(f, H0):
        return kernel_on_grid(kernel, grid)

    source = _make_source(f, grid)
    # t^(mu-1) * t^p -> t^(mu+p); a kernel source carries p = nu - 1
    p_out = kernel.leading_order + source.p
    full = _convolution_values(kernel, source, grid)
    logger.debug("convolve %s on %s: p_out=%g", kernel.label, grid, p_out)
    return GridFunction.from_full_values(grid, full, p_out)


def cumulative_integral(f: Union[GridFunction, TestFunction], grid: Optional[Grid] = None) -> GridFunction:
    """int_0^t f(s) ds at every grid node"""
    if grid is None:
        if not isinstance(f, GridFunction):
            raise ParameterRangeError("a grid is required for test-function input")
        grid = f.grid
    return convolve(H1(), f, grid)


DIFFERENTIATION_METHODS = ("three_point", "spline")


def differentiate(f: GridFunction, method: str = "three_point") -> GridFunction:
    """
    Node-wise derivative of a grid function.

    three_point: second-order nonuniform differences of the full values,
    one-sided at both ends.
    spline: derivative of the regular-part spline with the exact t^p product
    rule, f' = t^(p-1) (p g + t g').
    """
    if method not in DIFFERENTIATION_METHODS:
        raise ValueError(f"unknown differentiation method {method!r}, expected one of {DIFFERENTIATION_METHODS}")
    grid = f.grid
    if grid.n < config.MIN_GRID_NODES:
        raise GridTooCoarseError(f"differentiation needs at least {config.MIN_GRID_NODES} nodes")
    nodes = grid.nodes
    p = f.p
    p_out = 0.0 if abs(p) < SINGULARITY_EPS else p - 1.0

    if method == "three_point":
        derivative = np.gradient(f.full_values, nodes, edge_order=2)
        return GridFunction.from_full_values(grid, derivative, p_out)

    g = f.spline(nodes)
    dg = f.spline(nodes, 1)
    if abs(p) < SINGULARITY_EPS:
        return GridFunction(grid, 0.0, dg)
    return GridFunction(grid, p_out, p * g + nodes * dg)
