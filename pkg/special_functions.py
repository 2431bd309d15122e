"""Standard normal density, distribution and quantile functions plus logit/expit.

All functions accept a float or a numpy array and return the same kind
(float in, float out). Domain violations raise ``DomainError``.
"""
import math
from typing import Union

import numpy as np

from exceptions import DomainError

ArrayLike = Union[float, np.ndarray]

_SQRT2 = math.sqrt(2.0)
_SQRT2PI = math.sqrt(2.0 * math.pi)
_INV_SQRT2PI = 1.0 / _SQRT2PI

_erfc = np.vectorize(math.erfc, otypes=[float])

# Acklam's rational approximation coefficients (relative error ~1.15e-9)
_A = (-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
      1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00)
_B = (-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
      6.680131188771972e+01, -1.328068155288572e+01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
      -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
      3.754408661907416e+00)
_P_LOW = 0.02425


def _result(x: ArrayLike, out: np.ndarray) -> ArrayLike:
    if np.ndim(x) == 0:
        return float(out)
    return out


def _require_finite(arr: np.ndarray, name: str) -> None:
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} requires finite input")


def _require_open_unit(arr: np.ndarray, name: str) -> None:
    # NaN fails both comparisons and is rejected too
    if not np.all((arr > 0.0) & (arr < 1.0)):
        raise DomainError(f"{name} requires probabilities strictly inside (0, 1)")


def normal_pdf(x: ArrayLike) -> ArrayLike:
    """
    Standard normal density phi(x) = exp(-x^2/2) / sqrt(2 pi).

    Args:
        x: Finite real value(s)

    Returns:
        Density value(s)
    """
    arr = np.asarray(x, dtype=float)
    _require_finite(arr, "normal_pdf")
    return _result(x, np.exp(-0.5 * arr * arr) * _INV_SQRT2PI)


def normal_cdf(x: ArrayLike) -> ArrayLike:
    """
    Standard normal distribution function Phi(x).

    Evaluated as erfc(-x / sqrt 2) / 2, which keeps full relative accuracy
    in the lower tail and absolute accuracy near machine epsilon elsewhere.

    Args:
        x: Finite real value(s)

    Returns:
        Probability value(s) in [0, 1]
    """
    arr = np.asarray(x, dtype=float)
    _require_finite(arr, "normal_cdf")
    if arr.ndim == 0:
        return 0.5 * math.erfc(-float(arr) / _SQRT2)
    return 0.5 * _erfc(-arr / _SQRT2)


def _lower_quantile_guess(q: np.ndarray) -> np.ndarray:
    """Acklam's approximation for 0 < q <= 0.5 (non-positive quantiles)."""
    z = np.empty_like(q)

    tail = q < _P_LOW
    if np.any(tail):
        t = np.sqrt(-2.0 * np.log(q[tail]))
        z[tail] = (((((_C[0] * t + _C[1]) * t + _C[2]) * t + _C[3]) * t + _C[4]) * t + _C[5]) / (
            (((_D[0] * t + _D[1]) * t + _D[2]) * t + _D[3]) * t + 1.0
        )

    central = ~tail
    if np.any(central):
        s = q[central] - 0.5
        r = s * s
        z[central] = (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * s / (
            ((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0
        )
    return z


def normal_quantile(p: ArrayLike) -> ArrayLike:
    """
    Inverse standard normal distribution function.

    Works on the lower half q = min(p, 1 - p), where 1 - p is exact for
    p >= 0.5, then refines Acklam's starting value with one Halley step
    against the lower-tail Phi and restores the sign.

    Args:
        p: Probability value(s) strictly inside (0, 1)

    Returns:
        Quantile(s) z with Phi(z) = p

    Raises:
        DomainError: If any p is outside the open unit interval
    """
    arr = np.asarray(p, dtype=float)
    _require_open_unit(arr, "normal_quantile")

    flat = np.atleast_1d(arr)
    upper = flat > 0.5
    q = np.where(upper, 1.0 - flat, flat)

    z = _lower_quantile_guess(q)
    error = 0.5 * _erfc(-z / _SQRT2) - q
    u = error * _SQRT2PI * np.exp(0.5 * z * z)
    z = z - u / (1.0 + 0.5 * z * u)

    z = np.where(upper, -z, z)
    if arr.ndim == 0:
        return float(z[0])
    return z.reshape(arr.shape)


def logit(p: ArrayLike) -> ArrayLike:
    """Log-odds log(p / (1 - p)) for p strictly inside (0, 1)."""
    arr = np.asarray(p, dtype=float)
    _require_open_unit(arr, "logit")
    return _result(p, np.log(arr) - np.log1p(-arr))


def expit(x: ArrayLike) -> ArrayLike:
    """Inverse of logit, evaluated without overflow for large |x|."""
    arr = np.asarray(x, dtype=float)
    if np.any(np.isnan(arr)):
        raise DomainError("expit requires non-NaN input")
    e = np.exp(-np.abs(arr))
    out = np.where(arr >= 0, 1.0 / (1.0 + e), e / (1.0 + e))
    return _result(x, out)
