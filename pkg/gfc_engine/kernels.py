"""
Kernel Algebra
==============

Kernels of the class C_{-1}, their power-series representation, and the
Sonin power-series construction of associated kernels:

- KernelSeries: t -> h_mu(t) * sum_k a_k t^k
- Kernel variants: PowerLaw, Tempered, TemperedAssociated, BesselKappa,
  BesselK, MLKappa, MLK, H0, H1, Series
- series_convolve, solve_associated_pair, solve_third_kernel
- laplace_transform with closed forms and a singularity-split numeric path

h_mu(t) = t^(mu-1) / Gamma(mu) throughout.
"""
import math
import logging
from dataclasses import dataclass, replace
from enum import Enum
from typing import ClassVar, Dict, List, Optional, Tuple, Union

import numpy as np
from numpy.polynomial import polynomial as npoly
from scipy import integrate
from scipy.special import roots_jacobi, roots_legendre

from gfc_engine.config import config
from gfc_engine.errors import (
    ArgumentRangeError,
    DivergenceError,
    NonEvaluableKernelError,
    NotRepresentableError,
    OrderOverflowError,
    ParameterRangeError,
    ZeroLeadingCoefficientError,
)
from gfc_engine.special_functions import bessel_i, bessel_j, log_gamma, mittag_leffler, rgamma

logger = logging.getLogger("gfc_engine.kernels")

ArrayLike = Union[float, np.ndarray]

MAX_SERIES_ORDER = 2.0
# Order tolerance for sums such as 0.3 + 0.7
_ORDER_EPS = 1e-12
_MAX_ADAPTIVE_TERMS = 400


class KernelKind(Enum):
    """Kernel catalog tags, as written in kernel specification files"""
    POWERLAW = "powerlaw"
    TEMPERED = "tempered"
    TEMPERED_ASSOC = "tempered_assoc"
    BESSEL_KAPPA = "bessel_kappa"
    BESSEL_K = "bessel_k"
    ML_KAPPA = "ml_kappa"
    ML_K = "ml_k"
    H0 = "h0"
    H1 = "h1"
    SERIES = "series"


def h(mu: float, t: ArrayLike) -> ArrayLike:
    """Power-law function h_mu(t) = t^(mu-1) / Gamma(mu) for t > 0"""
    return np.power(t, mu - 1.0) * rgamma(mu)


# ============================================================================
# Series representation
# ============================================================================

@dataclass(frozen=True)
class KernelSeries:
    """
    Kernel t -> h_mu(t) * sum_k coeffs[k] t^k, truncated after len(coeffs) terms.

    mu lies in (0, 2]: catalog kernels have mu in (0, 1], products of two
    series can reach 2.
    """
    mu: float
    coeffs: Tuple[float, ...]

    def __post_init__(self):
        mu = float(self.mu)
        coeffs = tuple(float(c) for c in np.atleast_1d(np.asarray(self.coeffs, dtype=float)))
        if not (math.isfinite(mu) and 0.0 < mu <= MAX_SERIES_ORDER + _ORDER_EPS):
            raise ParameterRangeError(f"series order mu must lie in (0, 2], got {mu}")
        if not coeffs:
            raise ParameterRangeError("series needs at least one coefficient")
        if not all(math.isfinite(c) for c in coeffs):
            raise ParameterRangeError("series coefficients must be finite")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def truncation(self) -> int:
        """Number of retained terms"""
        return len(self.coeffs)

    @property
    def tail_ratio(self) -> Optional[float]:
        """|b_N / b_{N-1}| of the last two coefficients; None when undefined"""
        if len(self.coeffs) < 2 or self.coeffs[-2] == 0.0:
            return None
        return abs(self.coeffs[-1] / self.coeffs[-2])

    def polynomial(self, t: ArrayLike) -> ArrayLike:
        """Regular factor sum_k a_k t^k"""
        return npoly.polyval(t, self.coeffs)

    def values(self, t: ArrayLike) -> ArrayLike:
        return h(self.mu, t) * self.polynomial(t)

    def truncated(self, n: int) -> "KernelSeries":
        n = max(1, min(int(n), self.truncation))
        return KernelSeries(self.mu, self.coeffs[:n])

    def padded(self, n: int) -> "KernelSeries":
        """Same kernel with zero coefficients appended up to n terms"""
        if n <= self.truncation:
            return self
        return KernelSeries(self.mu, self.coeffs + (0.0,) * (n - self.truncation))

    def to_dict(self) -> Dict:
        return {"kind": KernelKind.SERIES.value, "mu": self.mu, "coeffs": list(self.coeffs)}


def _adaptive_coeffs(next_coeff, horizon: float, minimum: int = 4) -> List[float]:
    """
    Collect series coefficients a_0, a_1, ... from next_coeff(k) until the
    term a_k horizon^k is negligible against the largest term seen.
    """
    coeffs: List[float] = []
    largest = 0.0
    for k in range(_MAX_ADAPTIVE_TERMS):
        a = next_coeff(k)
        coeffs.append(a)
        size = abs(a) * horizon ** k if horizon > 0 else abs(a) * (k == 0)
        largest = max(largest, size)
        if k >= minimum and size <= config.SERIES_TERM_CUTOFF * largest:
            # the next term can still be of similar size when a_k vanishes
            following = abs(next_coeff(k + 1)) * horizon ** (k + 1)
            if following <= config.SERIES_TERM_CUTOFF * largest:
                break
    return coeffs


# ============================================================================
# Kernel catalog
# ============================================================================

def _require(condition: bool, message: str) -> None:
    if not condition:
        raise ParameterRangeError(message)


def _positive_times(t: ArrayLike) -> np.ndarray:
    arr = np.asarray(t, dtype=float)
    if np.any(~np.isfinite(arr)) or np.any(arr <= 0):
        raise ArgumentRangeError("kernels are evaluated at t > 0 only")
    return arr


def _as_output(t: ArrayLike, values: np.ndarray) -> ArrayLike:
    if np.ndim(t) == 0:
        return float(np.asarray(values).reshape(-1)[0])
    return values


@dataclass(frozen=True)
class Kernel:
    """
    Base of the kernel catalog.

    evaluate() is the accurate pointwise value, sample() the vectorized
    value used inside quadrature loops. power_groups() decomposes the kernel
    into series valid on (0, horizon] for the singular-panel treatment.
    """
    kind: ClassVar[KernelKind]

    @property
    def params(self) -> Dict[str, float]:
        return {}

    @property
    def leading_order(self) -> float:
        """Exponent mu of the leading power factor t^(mu-1)"""
        raise NotImplementedError

    @property
    def max_argument(self) -> float:
        """Largest t accepted by evaluate()"""
        return math.inf

    @property
    def is_identity(self) -> bool:
        return False

    @property
    def label(self) -> str:
        values = ",".join(f"{v:g}" for v in self.params.values())
        return f"{self.kind.value}:{values}" if values else self.kind.value

    def evaluate(self, t: ArrayLike) -> ArrayLike:
        arr = _positive_times(t)
        return _as_output(t, self._values(arr))

    def sample(self, s: np.ndarray) -> np.ndarray:
        return self._values(np.asarray(s, dtype=float))

    def power_groups(self, horizon: float) -> List[KernelSeries]:
        return [self.to_series(config.SERIES_TRUNCATION)]

    def to_series(self, truncation: int) -> KernelSeries:
        raise NotRepresentableError(f"{self.label} has no single power-series form")

    def laplace_closed_form(self, p: float) -> Optional[float]:
        return None

    def _values(self, t: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def to_dict(self) -> Dict:
        return {"kind": self.kind.value, **self.params}


@dataclass(frozen=True)
class PowerLaw(Kernel):
    """h_alpha(t) = t^(alpha-1) / Gamma(alpha)"""
    alpha: float
    kind: ClassVar[KernelKind] = KernelKind.POWERLAW

    def __post_init__(self):
        _require(0.0 < self.alpha <= 1.0, f"powerlaw alpha must lie in (0, 1], got {self.alpha}")

    @property
    def params(self):
        return {"alpha": self.alpha}

    @property
    def leading_order(self):
        return self.alpha

    def _values(self, t):
        return h(self.alpha, t)

    def power_groups(self, horizon):
        return [KernelSeries(self.alpha, (1.0,))]

    def to_series(self, truncation):
        return KernelSeries(self.alpha, (1.0,)).padded(truncation)

    def laplace_closed_form(self, p):
        return p ** (-self.alpha)


@dataclass(frozen=True)
class Tempered(Kernel):
    """h_{alpha,rho}(t) = t^(alpha-1) e^(-rho t) / Gamma(alpha)"""
    alpha: float
    rho: float
    kind: ClassVar[KernelKind] = KernelKind.TEMPERED

    def __post_init__(self):
        _require(0.0 < self.alpha < 1.0, f"tempered alpha must lie in (0, 1), got {self.alpha}")
        _require(self.rho >= 0.0, f"tempered rho must be >= 0, got {self.rho}")

    @property
    def params(self):
        return {"alpha": self.alpha, "rho": self.rho}

    @property
    def leading_order(self):
        return self.alpha

    def _coeff(self, k: int) -> float:
        return (-self.rho) ** k / math.factorial(k)

    def _values(self, t):
        return h(self.alpha, t) * np.exp(-self.rho * t)

    def power_groups(self, horizon):
        return [KernelSeries(self.alpha, _adaptive_coeffs(self._coeff, horizon))]

    def to_series(self, truncation):
        return KernelSeries(self.alpha, [self._coeff(k) for k in range(truncation)])

    def laplace_closed_form(self, p):
        return (p + self.rho) ** (-self.alpha)


@dataclass(frozen=True)
class TemperedAssociated(Kernel):
    """
    Associated kernel of Tempered(alpha, rho):

        k(t) = h_{1-alpha,rho}(t) + rho * int_0^t h_{1-alpha,rho}(s) ds
    """
    alpha: float
    rho: float
    kind: ClassVar[KernelKind] = KernelKind.TEMPERED_ASSOC

    def __post_init__(self):
        _require(0.0 < self.alpha < 1.0, f"tempered_assoc alpha must lie in (0, 1), got {self.alpha}")
        _require(self.rho >= 0.0, f"tempered_assoc rho must be >= 0, got {self.rho}")

    @property
    def params(self):
        return {"alpha": self.alpha, "rho": self.rho}

    @property
    def leading_order(self):
        return 1.0 - self.alpha

    def _coeff(self, k: int) -> float:
        rho, alpha = self.rho, self.alpha
        if k == 0:
            return 1.0
        return (-rho) ** k / math.factorial(k) + rho * (-rho) ** (k - 1) / (math.factorial(k - 1) * (k - alpha))

    def _integral(self, t: np.ndarray) -> np.ndarray:
        """int_0^t h_{1-alpha,rho}(s) ds by Gauss-Jacobi with weight s^(-alpha)"""
        nu = 1.0 - self.alpha
        nodes, weights = _jacobi_rule(config.JACOBI_ORDER, 0.0, -self.alpha)
        u = (nodes + 1.0) / 2.0
        # int_0^c s^-alpha e^(-rho s) ds = c^nu 2^(alpha-1) sum w_i e^(-rho c u_i)
        reach = 4.0 / self.rho if self.rho > 0 else np.inf
        head = np.minimum(t, reach)
        scale = np.power(head, nu) * 2.0 ** (self.alpha - 1.0)
        result = scale * (np.exp(-self.rho * np.outer(head, u)) @ weights)
        far = t > reach
        if np.any(far):
            gl_nodes, gl_weights = roots_legendre(16)
            for i in np.flatnonzero(far):
                edges = np.arange(reach, t[i] + reach, reach)
                edges[-1] = t[i]
                for a, b in zip(edges[:-1], edges[1:]):
                    s = (b - a) / 2.0 * gl_nodes + (a + b) / 2.0
                    result[i] += (b - a) / 2.0 * np.dot(gl_weights, s ** (-self.alpha) * np.exp(-self.rho * s))
        return result * rgamma(nu)

    def _values(self, t):
        flat = np.atleast_1d(t).astype(float).ravel()
        values = h(1.0 - self.alpha, flat) * np.exp(-self.rho * flat)
        if self.rho > 0:
            values = values + self.rho * self._integral(flat)
        return values.reshape(np.shape(t))

    def power_groups(self, horizon):
        return [KernelSeries(1.0 - self.alpha, _adaptive_coeffs(self._coeff, horizon))]

    def to_series(self, truncation):
        return KernelSeries(1.0 - self.alpha, [self._coeff(k) for k in range(truncation)])

    def laplace_closed_form(self, p):
        return (p + self.rho) ** self.alpha / p


def _bessel_max_argument() -> float:
    # Bessel kernels take the argument 2 sqrt t
    return (config.BESSEL_MAX_ARGUMENT / 2.0) ** 2


@dataclass(frozen=True)
class BesselKappa(Kernel):
    """(sqrt t)^(alpha-1) J_{alpha-1}(2 sqrt t)"""
    alpha: float
    kind: ClassVar[KernelKind] = KernelKind.BESSEL_KAPPA

    def __post_init__(self):
        _require(0.0 < self.alpha < 1.0, f"bessel_kappa alpha must lie in (0, 1), got {self.alpha}")

    @property
    def params(self):
        return {"alpha": self.alpha}

    @property
    def max_argument(self):
        return _bessel_max_argument()

    @property
    def leading_order(self):
        return self.alpha

    def _coeff(self, m: int) -> float:
        return (-1.0) ** m / math.factorial(m) * math.exp(log_gamma(self.alpha) - log_gamma(self.alpha + m))

    def _values(self, t):
        root = np.sqrt(t)
        return np.power(root, self.alpha - 1.0) * bessel_j(self.alpha - 1.0, 2.0 * root)

    def sample(self, s):
        return self.power_groups(float(np.max(s, initial=0.0)))[0].values(np.asarray(s, dtype=float))

    def power_groups(self, horizon):
        return [KernelSeries(self.alpha, _adaptive_coeffs(self._coeff, horizon))]

    def to_series(self, truncation):
        return KernelSeries(self.alpha, [self._coeff(m) for m in range(truncation)])

    def laplace_closed_form(self, p):
        return p ** (-self.alpha) * math.exp(-1.0 / p)


@dataclass(frozen=True)
class BesselK(Kernel):
    """(sqrt t)^(-alpha) I_{-alpha}(2 sqrt t), associated with BesselKappa(alpha)"""
    alpha: float
    kind: ClassVar[KernelKind] = KernelKind.BESSEL_K

    def __post_init__(self):
        _require(0.0 < self.alpha < 1.0, f"bessel_k alpha must lie in (0, 1), got {self.alpha}")

    @property
    def params(self):
        return {"alpha": self.alpha}

    @property
    def max_argument(self):
        return _bessel_max_argument()

    @property
    def leading_order(self):
        return 1.0 - self.alpha

    def _coeff(self, m: int) -> float:
        nu = 1.0 - self.alpha
        return math.exp(log_gamma(nu) - log_gamma(nu + m)) / math.factorial(m)

    def _values(self, t):
        root = np.sqrt(t)
        return np.power(root, -self.alpha) * bessel_i(-self.alpha, 2.0 * root)

    def sample(self, s):
        return self.power_groups(float(np.max(s, initial=0.0)))[0].values(np.asarray(s, dtype=float))

    def power_groups(self, horizon):
        return [KernelSeries(1.0 - self.alpha, _adaptive_coeffs(self._coeff, horizon))]

    def to_series(self, truncation):
        return KernelSeries(1.0 - self.alpha, [self._coeff(m) for m in range(truncation)])

    def laplace_closed_form(self, p):
        return p ** (self.alpha - 1.0) * math.exp(1.0 / p)


def _reduced_order(nu: float) -> float:
    """Exponent in (0, 1] differing from nu by an integer"""
    nearest = round(nu)
    if abs(nu - nearest) < 1e-9:
        return 1.0
    return nu - math.floor(nu)


def _check_ml_params(alpha: float, beta: float, name: str) -> None:
    _require(0.0 < alpha < beta < 1.0, f"{name} requires 0 < alpha < beta < 1, got alpha={alpha}, beta={beta}")


@dataclass(frozen=True)
class MLKappa(Kernel):
    """h_{1-beta+alpha}(t) + h_{1-beta}(t)"""
    alpha: float
    beta: float
    kind: ClassVar[KernelKind] = KernelKind.ML_KAPPA

    def __post_init__(self):
        _check_ml_params(self.alpha, self.beta, "ml_kappa")

    @property
    def params(self):
        return {"alpha": self.alpha, "beta": self.beta}

    @property
    def leading_order(self):
        return 1.0 - self.beta

    def _values(self, t):
        return h(1.0 - self.beta + self.alpha, t) + h(1.0 - self.beta, t)

    def power_groups(self, horizon):
        return [KernelSeries(1.0 - self.beta, (1.0,)), KernelSeries(1.0 - self.beta + self.alpha, (1.0,))]

    def to_series(self, truncation):
        raise NotRepresentableError(
            "ml_kappa mixes the exponents 1-beta and 1-beta+alpha; use power_groups()"
        )

    def laplace_closed_form(self, p):
        return p ** (self.beta - self.alpha - 1.0) + p ** (self.beta - 1.0)


@dataclass(frozen=True)
class MLK(Kernel):
    """t^(beta-1) E_{alpha,beta}(-t^alpha), associated with MLKappa(alpha, beta)"""
    alpha: float
    beta: float
    kind: ClassVar[KernelKind] = KernelKind.ML_K

    def __post_init__(self):
        _check_ml_params(self.alpha, self.beta, "ml_k")

    @property
    def params(self):
        return {"alpha": self.alpha, "beta": self.beta}

    @property
    def max_argument(self):
        return (1.0 - 1e-12) * config.ML_MAX_ARGUMENT ** (1.0 / self.alpha)

    @property
    def leading_order(self):
        return self.beta

    def _values(self, t):
        flat = np.atleast_1d(t).astype(float).ravel()
        values = np.array([
            v ** (self.beta - 1.0) * mittag_leffler(self.alpha, self.beta, -(v ** self.alpha))
            for v in flat
        ])
        return values.reshape(np.shape(t))

    def sample(self, s):
        arr = np.asarray(s, dtype=float)
        total = np.zeros_like(arr)
        for group in self.power_groups(float(np.max(arr, initial=0.0))):
            total = total + group.values(arr)
        return total

    def power_groups(self, horizon):
        """
        sum_k (-1)^k h_{beta+alpha k}(t), with exponents sharing a fractional
        part collected into one series h_mu(t) * sum_m a_m t^m with mu in
        (0, 1]; a group whose first exponent exceeds 1 starts with zeros.
        """
        horizon = max(horizon, 1e-12)
        log_h = math.log(horizon)
        first = (self.beta - 1.0) * log_h - log_gamma(self.beta)
        groups: Dict[float, Tuple[float, Dict[int, float]]] = {}
        largest = first
        for k in range(_MAX_ADAPTIVE_TERMS):
            nu = self.beta + self.alpha * k
            size = (nu - 1.0) * log_h - log_gamma(nu)
            largest = max(largest, size)
            key = round(nu % 1.0, 9) % 1.0
            if key not in groups:
                groups[key] = (_reduced_order(nu), {})
            mu, terms = groups[key]
            m = int(round(nu - mu))
            terms[m] = terms.get(m, 0.0) + (-1.0) ** k * math.exp(log_gamma(mu) - log_gamma(nu))
            if k * self.alpha > 4.0 and size < largest + math.log(config.SERIES_TERM_CUTOFF):
                break
        result = []
        for mu, terms in sorted(groups.values(), key=lambda item: item[0]):
            coeffs = np.zeros(max(terms) + 1)
            for m, value in terms.items():
                coeffs[m] = value
            result.append(KernelSeries(mu, coeffs))
        return result

    def to_series(self, truncation):
        raise NotRepresentableError(
            "ml_k is an infinite sum of incommensurate powers; use power_groups()"
        )

    def laplace_closed_form(self, p):
        return p ** (self.alpha - self.beta) / (p ** self.alpha + 1.0)


@dataclass(frozen=True)
class H0(Kernel):
    """Generalized identity kernel; convolution with H0 is the identity map"""
    kind: ClassVar[KernelKind] = KernelKind.H0

    @property
    def leading_order(self):
        return 0.0

    @property
    def is_identity(self):
        return True

    def evaluate(self, t):
        raise NonEvaluableKernelError("h0 acts only through convolution and has no pointwise value")

    def sample(self, s):
        return self.evaluate(s)

    def power_groups(self, horizon):
        raise NonEvaluableKernelError("h0 has no power-series decomposition")

    def to_series(self, truncation):
        raise NotRepresentableError("h0 has no series form")

    def laplace_closed_form(self, p):
        return 1.0


@dataclass(frozen=True)
class H1(Kernel):
    """Constant kernel 1 = h_1"""
    kind: ClassVar[KernelKind] = KernelKind.H1

    @property
    def leading_order(self):
        return 1.0

    def _values(self, t):
        return np.ones_like(t, dtype=float)

    def power_groups(self, horizon):
        return [KernelSeries(1.0, (1.0,))]

    def to_series(self, truncation):
        return KernelSeries(1.0, (1.0,)).padded(truncation)

    def laplace_closed_form(self, p):
        return 1.0 / p


@dataclass(frozen=True)
class Series(Kernel):
    """Kernel given by its truncated series"""
    series: KernelSeries
    kind: ClassVar[KernelKind] = KernelKind.SERIES

    @property
    def params(self):
        return {"mu": self.series.mu, "truncation": self.series.truncation}

    @property
    def leading_order(self):
        return self.series.mu

    def _values(self, t):
        return self.series.values(t)

    def power_groups(self, horizon):
        return [self.series]

    def to_series(self, truncation):
        return self.series.truncated(truncation)

    def laplace_closed_form(self, p):
        mu = self.series.mu
        total = 0.0
        for k, a in enumerate(self.series.coeffs):
            if a != 0.0:
                total += a * math.exp(log_gamma(mu + k) - log_gamma(mu) - (mu + k) * math.log(p))
        return total

    def to_dict(self):
        return self.series.to_dict()


@dataclass(frozen=True)
class KernelTriple:
    """
    First-level kernel triple (kappa, k1, k2), intended to satisfy
    (kappa * k1 * k2)(t) = 1. The verified flag and residual are filled in by
    the verification module through with_report().
    """
    kappa: Kernel
    k1: Kernel
    k2: Kernel
    verified: bool = False
    residual: Optional[float] = None

    def members(self) -> List[Kernel]:
        return [self.kappa, self.k1, self.k2]

    def with_report(self, report) -> "KernelTriple":
        return replace(self, verified=bool(report.passed), residual=report.max_residual)

    def to_dict(self) -> Dict:
        return {
            "kappa": self.kappa.to_dict(),
            "k1": self.k1.to_dict(),
            "k2": self.k2.to_dict(),
            "verified": self.verified,
            "residual": self.residual,
        }


# ============================================================================
# Operations
# ============================================================================

def evaluate(kernel: Kernel, t: float) -> float:
    """Pointwise kernel value at t > 0"""
    return kernel.evaluate(t)


def _log_weight(mu: float, j: int) -> float:
    return log_gamma(mu + j) - log_gamma(mu)


def series_convolve(a: KernelSeries, b: KernelSeries) -> KernelSeries:
    """
    Laplace convolution of two series kernels.

    Term-wise h_{mu+j} * h_{nu+k} = h_{mu+nu+j+k}, so with
    t^j h_mu = Gamma(mu+j)/Gamma(mu) h_{mu+j} the product coefficients are
    Gamma-ratio weighted Cauchy sums.
    """
    mu = a.mu + b.mu
    if mu > MAX_SERIES_ORDER + _ORDER_EPS:
        raise OrderOverflowError(f"series convolution order {mu:g} exceeds {MAX_SERIES_ORDER:g}")
    mu = min(mu, MAX_SERIES_ORDER)
    n_terms = min(a.truncation, b.truncation)
    log_wa = [_log_weight(a.mu, j) for j in range(n_terms)]
    log_wb = [_log_weight(b.mu, j) for j in range(n_terms)]
    coeffs = []
    for n in range(n_terms):
        log_wc = _log_weight(mu, n)
        total = 0.0
        for k in range(n + 1):
            product = a.coeffs[n - k] * b.coeffs[k]
            if product != 0.0:
                total += product * math.exp(log_wa[n - k] + log_wb[k] - log_wc)
        coeffs.append(total)
    return KernelSeries(mu, coeffs)


def solve_associated_pair(kappa: KernelSeries) -> KernelSeries:
    """
    Sonin associated series k with kappa * k = 1, by forward substitution in
    the triangular system

        sum_{k=0}^{n} Gamma(mu+n-k) Gamma(nu+k) a_{n-k} b_k = 0,  n >= 1,

    with nu = 1 - mu and b_0 = 1 / a_0.
    """
    a = kappa.coeffs
    if a[0] == 0.0:
        raise ZeroLeadingCoefficientError("leading coefficient a_0 must be nonzero")
    if kappa.mu >= 1.0 - _ORDER_EPS:
        raise OrderOverflowError(f"associated kernel needs mu < 1, got {kappa.mu:g}")
    mu = kappa.mu
    nu = 1.0 - mu
    b = [1.0 / a[0]]
    lg_mu = [log_gamma(mu + j) for j in range(kappa.truncation)]
    lg_nu = [log_gamma(nu + j) for j in range(kappa.truncation)]
    for n in range(1, kappa.truncation):
        total = 0.0
        for k in range(n):
            product = a[n - k] * b[k]
            if product != 0.0:
                total += product * math.exp(lg_mu[n - k] + lg_nu[k] - lg_mu[0] - lg_nu[n])
        b.append(-total / a[0] if total != 0.0 else 0.0)
    result = KernelSeries(nu, b)
    logger.debug(
        "associated series: mu=%g, truncation=%d, tail ratio=%s",
        nu, result.truncation, result.tail_ratio,
    )
    return result


def solve_third_kernel(kappa: KernelSeries, k1: KernelSeries) -> KernelSeries:
    """Series k2 completing the first-level triple kappa * k1 * k2 = 1"""
    if kappa.mu + k1.mu >= 1.0 - _ORDER_EPS:
        raise OrderOverflowError(
            f"third kernel needs kappa.mu + k1.mu < 1, got {kappa.mu + k1.mu:g}"
        )
    if kappa.coeffs[0] == 0.0 or k1.coeffs[0] == 0.0:
        raise ZeroLeadingCoefficientError("leading coefficients of kappa and k1 must be nonzero")
    return solve_associated_pair(series_convolve(kappa, k1))


def associated_kernel(kernel: Kernel, truncation: Optional[int] = None) -> Kernel:
    """Catalog Sonin partner of a kernel (series kernels are solved)"""
    if isinstance(kernel, PowerLaw):
        return H0() if kernel.alpha == 1.0 else PowerLaw(1.0 - kernel.alpha)
    if isinstance(kernel, Tempered):
        return TemperedAssociated(kernel.alpha, kernel.rho)
    if isinstance(kernel, TemperedAssociated):
        return Tempered(kernel.alpha, kernel.rho)
    if isinstance(kernel, BesselKappa):
        return BesselK(kernel.alpha)
    if isinstance(kernel, BesselK):
        return BesselKappa(kernel.alpha)
    if isinstance(kernel, MLKappa):
        return MLK(kernel.alpha, kernel.beta)
    if isinstance(kernel, MLK):
        return MLKappa(kernel.alpha, kernel.beta)
    if isinstance(kernel, H0):
        return H1()
    if isinstance(kernel, H1):
        return H0()
    return Series(solve_associated_pair(kernel.to_series(truncation or config.SERIES_TRUNCATION)))


def sonin_pair(kernel: Kernel, truncation: Optional[int] = None) -> Tuple[Kernel, Kernel]:
    """(kernel, its associated kernel) ready for a Sonin check"""
    return kernel, associated_kernel(kernel, truncation)


def power_triple(alpha: float, gamma: float) -> KernelTriple:
    """(h_alpha, h_gamma, h_{1-alpha-gamma}) with 0 < alpha, gamma and alpha + gamma < 1"""
    _require(0.0 < alpha < 1.0 and 0.0 < gamma < 1.0 and alpha + gamma < 1.0,
             f"power triple needs 0 < alpha, gamma and alpha + gamma < 1, got {alpha}, {gamma}")
    return KernelTriple(PowerLaw(alpha), PowerLaw(gamma), PowerLaw(1.0 - alpha - gamma))


def third_kernel(kappa: Kernel, k1: Kernel, truncation: Optional[int] = None) -> Series:
    n = truncation or config.SERIES_TRUNCATION
    return Series(solve_third_kernel(kappa.to_series(n), k1.to_series(n)))


# ============================================================================
# Laplace transform
# ============================================================================

_RULE_CACHE: Dict[Tuple[int, float, float], Tuple[np.ndarray, np.ndarray]] = {}


def _jacobi_rule(n: int, a: float, b: float) -> Tuple[np.ndarray, np.ndarray]:
    """Gauss-Jacobi rule on [-1, 1] for the weight (1-x)^a (1+x)^b, cached"""
    key = (n, round(a, 14), round(b, 14))
    if key not in _RULE_CACHE:
        nodes, weights = roots_jacobi(n, a, b)
        _RULE_CACHE[key] = (nodes, weights)
    return _RULE_CACHE[key]


def _laplace_head(kernel: Kernel, p: float, split: float) -> float:
    """int_0^split e^(-pt) kernel(t) dt, exact in the t^(mu-1) singularity"""
    total = 0.0
    half = split / 2.0
    for group in kernel.power_groups(split):
        nodes, weights = _jacobi_rule(config.JACOBI_ORDER, 0.0, group.mu - 1.0)
        t = half * (nodes + 1.0)
        integrand = group.polynomial(t) * np.exp(-p * t)
        total += half ** group.mu * rgamma(group.mu) * float(np.dot(weights, integrand))
    return total


def _laplace_numeric(kernel: Kernel, p: float) -> float:
    split = config.LAPLACE_SPLIT
    head = _laplace_head(kernel, p, split)

    def integrand(t: float) -> float:
        return math.exp(-p * t) * kernel.evaluate(t)

    limit = min(config.LAPLACE_MAX_HORIZON, kernel.max_argument)
    horizon = min(max(config.LAPLACE_DECAY / p, 2.0 * split), limit)
    while True:
        try:
            tail_bound = math.exp(-p * horizon) * abs(kernel.evaluate(horizon)) / p
        except ArgumentRangeError as exc:
            raise DivergenceError(
                f"laplace tail of {kernel.label} at p={p:g} cannot be bounded: {exc.message}"
            ) from exc
        if tail_bound <= config.LAPLACE_TAIL_TOL:
            break
        if horizon >= limit:
            raise DivergenceError(
                f"laplace tail of {kernel.label} at p={p:g} is {tail_bound:.3g} at t={horizon:g}, "
                f"the largest argument available; p is too small for the numeric path"
            )
        horizon = min(2.0 * horizon, limit)

    body, error = integrate.quad(integrand, split, horizon, limit=400, epsabs=1e-14, epsrel=1e-13)
    logger.debug("laplace %s at p=%g: head=%.3e body=%.3e (quad error %.1e, horizon %g)",
                 kernel.label, p, head, body, error, horizon)
    return head + body


def laplace_transform(kernel: Kernel, p: float, numeric: Optional[bool] = None) -> float:
    """
    Laplace transform of a kernel at p > 0.

    Closed forms for powerlaw, tempered, h0, h1 and series kernels; singular
    head by Gauss-Jacobi plus adaptive quadrature of the tail otherwise.
    numeric=True forces the quadrature path (not available for h0).

    The numeric tail stops at kernel.max_argument. Bessel kernels are only
    evaluated for t <= 100, which limits them to about p >= 0.3 (bessel_kappa)
    and p >= 0.45 (bessel_k) at alpha = 0.5; smaller p raises DivergenceError
    and laplace_closed_form(p) gives the value there.
    """
    p = float(p)
    if not (p > 0 and math.isfinite(p)):
        raise ParameterRangeError(f"laplace transform needs p > 0, got {p}")
    closed = isinstance(kernel, (PowerLaw, Tempered, H0, H1, Series))
    if isinstance(kernel, H0) or (closed and not numeric):
        return kernel.laplace_closed_form(p)
    return _laplace_numeric(kernel, p)
