"""
Special Functions
=================

Scalar special functions used by the kernel catalog:

- gamma / log_gamma / rgamma: Lanczos approximation with reflection
- mittag_leffler: two-parameter E_{alpha,beta}(z) by direct series
- bessel_j / bessel_i: ascending series for J_nu and I_nu

All functions are pure. Bessel functions accept numpy arrays as well as
scalars; the other functions are scalar.
"""
import math
import logging
from typing import Union

import numpy as np
import mpmath

from gfc_engine.config import config
from gfc_engine.errors import ArgumentRangeError, ParameterRangeError, PoleError

logger = logging.getLogger("gfc_engine.special_functions")

ArrayLike = Union[float, np.ndarray]

# Lanczos coefficients for g = 7, n = 9
_LANCZOS_G = 7.0
_LANCZOS_COEFFS = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)
_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)
_GAMMA_MAX = 171.6

# Below this peak term magnitude the Mittag-Leffler series is summed in doubles
_ML_DOUBLE_PEAK_LOG10 = 3.0
_ML_MAX_TERMS = 40000
# J_nu series in doubles is accurate to ~1e-14 up to this argument
_BESSEL_J_DOUBLE_MAX = 8.0


def _is_nonpositive_integer(x: float) -> bool:
    return x <= 0 and x == math.floor(x)


def _lanczos_sum(x: float) -> float:
    """Lanczos series A_g(x) for the shifted argument x = z - 1"""
    total = _LANCZOS_COEFFS[0]
    for i in range(1, len(_LANCZOS_COEFFS)):
        total += _LANCZOS_COEFFS[i] / (x + i)
    return total


def gamma(x: float) -> float:
    """
    Gamma function of a real argument.

    Args:
        x: any real number except zero and the negative integers

    Returns:
        Gamma(x)

    Raises:
        PoleError: x is zero or a negative integer
        ArgumentRangeError: x is not finite or Gamma(x) overflows
    """
    x = float(x)
    if not math.isfinite(x):
        raise ArgumentRangeError(f"gamma argument must be finite, got {x}")
    if _is_nonpositive_integer(x):
        raise PoleError(f"gamma has a pole at {x:g}")
    if x > _GAMMA_MAX:
        raise ArgumentRangeError(f"gamma({x:g}) overflows double precision")
    if x == math.floor(x) and x <= 171:
        return float(math.factorial(int(x) - 1))
    if x < 0.5:
        # Reflection: Gamma(x) Gamma(1 - x) = pi / sin(pi x)
        return math.pi / (math.sin(math.pi * x) * gamma(1.0 - x))

    z = x - 1.0
    t = z + _LANCZOS_G + 0.5
    half_power = t ** ((z + 0.5) / 2.0)
    return math.sqrt(2.0 * math.pi) * half_power * math.exp(-t) * half_power * _lanczos_sum(z)


def log_gamma(x: float) -> float:
    """log Gamma(x) for x > 0, without overflow"""
    x = float(x)
    if not (x > 0 and math.isfinite(x)):
        raise ArgumentRangeError(f"log_gamma requires a finite positive argument, got {x}")
    if x < 0.5:
        return math.log(math.pi / math.sin(math.pi * x)) - log_gamma(1.0 - x)
    z = x - 1.0
    t = z + _LANCZOS_G + 0.5
    return _LOG_SQRT_2PI + (z + 0.5) * math.log(t) - t + math.log(_lanczos_sum(z))


def log_abs_gamma(x: float) -> float:
    """log |Gamma(x)| for any non-pole real x"""
    if x > 0:
        return log_gamma(x)
    if _is_nonpositive_integer(x):
        raise PoleError(f"gamma has a pole at {x:g}")
    return math.log(math.pi / abs(math.sin(math.pi * x))) - log_gamma(1.0 - x)


def rgamma(x: float) -> float:
    """Reciprocal gamma 1/Gamma(x); zero at the poles"""
    if _is_nonpositive_integer(x):
        return 0.0
    if x > _GAMMA_MAX:
        return math.exp(-log_gamma(x))
    return 1.0 / gamma(x)


# ============================================================================
# Mittag-Leffler
# ============================================================================

def _ml_log_term(alpha: float, beta: float, k: int, log_abs_z: float) -> float:
    arg = alpha * k + beta
    if _is_nonpositive_integer(arg):
        return -math.inf
    return k * log_abs_z - log_abs_gamma(arg)


def _gamma_sign(x: float) -> float:
    if x > 0:
        return 1.0
    return -1.0 if math.ceil(-x) % 2 else 1.0


def _ml_term(alpha: float, beta: float, k: int, z: float, log_abs_z: float) -> float:
    """k-th series term z^k / Gamma(alpha k + beta), formed in log space"""
    arg = alpha * k + beta
    if _is_nonpositive_integer(arg):
        return 0.0
    magnitude = math.exp(_ml_log_term(alpha, beta, k, log_abs_z))
    sign = _gamma_sign(arg)
    if z < 0 and k % 2:
        sign = -sign
    return sign * magnitude


def _ml_peak(alpha: float, beta: float, log_abs_z: float):
    """Index and log-magnitude of the largest series term"""
    best_k, best = 0, _ml_log_term(alpha, beta, 0, log_abs_z)
    previous = best
    k = 1
    while k < _ML_MAX_TERMS:
        current = _ml_log_term(alpha, beta, k, log_abs_z)
        if current > best:
            best_k, best = k, current
        if alpha * k + beta > 2.0 and current < previous and current < best:
            break
        previous = current
        k += 1
    return best_k, best


def mittag_leffler(alpha: float, beta: float, z: float) -> float:
    """
    Two-parameter Mittag-Leffler function E_{alpha,beta}(z) for real arguments.

    The defining series sum_k z^k / Gamma(alpha k + beta) is summed directly,
    stopping once a term past the peak drops below 1e-17 of the partial sum.
    Mild cancellation is summed in doubles with math.fsum; heavy cancellation
    switches to mpmath with a working precision sized to the peak term.

    Raises:
        ParameterRangeError: alpha <= 0
        ArgumentRangeError: |z| above the supported bound (config.ML_MAX_ARGUMENT)
    """
    alpha, beta, z = float(alpha), float(beta), float(z)
    if not alpha > 0:
        raise ParameterRangeError(f"mittag_leffler requires alpha > 0, got {alpha}")
    if not math.isfinite(z) or abs(z) > config.ML_MAX_ARGUMENT:
        raise ArgumentRangeError(
            f"mittag_leffler supports |z| <= {config.ML_MAX_ARGUMENT:g}, got z={z}"
        )
    if z == 0.0:
        return rgamma(beta)

    log_abs_z = math.log(abs(z))
    k_peak, peak_log = _ml_peak(alpha, beta, log_abs_z)
    peak_log10 = peak_log / math.log(10.0)
    cutoff = config.SERIES_TERM_CUTOFF

    if peak_log10 < _ML_DOUBLE_PEAK_LOG10:
        terms = []
        partial = 0.0
        for k in range(_ML_MAX_TERMS):
            term = _ml_term(alpha, beta, k, z, log_abs_z)
            terms.append(term)
            partial += term
            if k > k_peak and abs(term) < cutoff * max(abs(partial), 1e-300):
                break
        return math.fsum(terms)

    dps = int(peak_log10) + 30
    logger.debug("mittag_leffler(%g, %g, %g): extended precision, %d digits", alpha, beta, z, dps)
    with mpmath.workdps(dps):
        zm = mpmath.mpf(z)
        total = mpmath.mpf(0)
        power = mpmath.mpf(1)
        for k in range(_ML_MAX_TERMS):
            term = power * mpmath.rgamma(mpmath.mpf(alpha) * k + beta)
            total += term
            if k > k_peak and abs(term) < cutoff * max(abs(total), mpmath.mpf(10) ** -300):
                break
            power *= zm
        return float(total)


# ============================================================================
# Bessel functions
# ============================================================================

def _check_bessel_args(nu: float, x: np.ndarray, name: str) -> None:
    if not nu > -1:
        raise ParameterRangeError(f"{name} requires nu > -1, got {nu}")
    if np.any(~np.isfinite(x)) or np.any(x < 0):
        raise ArgumentRangeError(f"{name} requires finite x >= 0")
    if np.any(x > config.BESSEL_MAX_ARGUMENT):
        raise ArgumentRangeError(
            f"{name} supports x <= {config.BESSEL_MAX_ARGUMENT:g} (ascending series only)"
        )
    if nu < 0 and np.any(x == 0):
        raise ArgumentRangeError(f"{name}({nu:g}, 0) is infinite")


def _ascending_series(nu: float, x: np.ndarray, sign: float) -> np.ndarray:
    """sum_m sign^m (x/2)^(2m+nu) / (m! Gamma(m+nu+1)) in doubles"""
    half = x / 2.0
    quarter_sq = sign * half * half
    with np.errstate(divide="ignore", invalid="ignore"):
        term = np.power(half, nu) / gamma(nu + 1.0)
    total = term.copy()
    m = 1
    while True:
        term = term * quarter_sq / (m * (m + nu))
        total = total + term
        scale = np.maximum(np.abs(total), 1e-300)
        if np.all(np.abs(term) <= config.SERIES_TERM_CUTOFF * scale) or m > 500:
            break
        m += 1
    return total


def _ascending_series_mp(nu: float, x: float, sign: int) -> float:
    with mpmath.workdps(40):
        half = mpmath.mpf(x) / 2
        q = sign * half * half
        term = half ** nu * mpmath.rgamma(nu + 1)
        total = term
        m = 1
        while True:
            term = term * q / (m * (m + nu))
            total += term
            if abs(term) < mpmath.mpf(10) ** -25 * max(abs(total), mpmath.mpf(1)):
                break
            m += 1
        return float(total)


def _bessel(nu: float, x: ArrayLike, sign: int, name: str) -> ArrayLike:
    nu = float(nu)
    arr = np.asarray(x, dtype=float)
    _check_bessel_args(nu, arr, name)
    flat = np.atleast_1d(arr).astype(float)
    result = _ascending_series(nu, flat, float(sign))
    if sign < 0:
        hard = flat > _BESSEL_J_DOUBLE_MAX
        if np.any(hard):
            result[hard] = [_ascending_series_mp(nu, v, sign) for v in flat[hard]]
    if np.ndim(x) == 0:
        return float(result[0])
    return result.reshape(arr.shape)


def bessel_j(nu: float, x: ArrayLike) -> ArrayLike:
    """Bessel function of the first kind J_nu(x) for nu > -1, 0 <= x <= 20"""
    return _bessel(nu, x, -1, "bessel_j")


def bessel_i(nu: float, x: ArrayLike) -> ArrayLike:
    """Modified Bessel function of the first kind I_nu(x) for nu > -1, 0 <= x <= 20"""
    return _bessel(nu, x, 1, "bessel_i")
