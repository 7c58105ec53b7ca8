"""Special functions on the truncated Fock space.

Laguerre polynomials come from the three-term recurrence in the degree;
factorial ratios are formed from log-gamma so nothing overflows past n ~ 170.
"""

import math

import numpy as np
from scipy.special import gammaln

from .errors import ConvergenceError, ValidationError

BESSEL_SERIES_RADIUS = 30.0
BESSEL_MAX_TERMS = 200


def assoc_laguerre(n, alpha, x):
    """Associated Laguerre polynomial ``L_n^alpha(x)`` (scalar or array ``x``)."""
    if n < 0 or alpha < 0:
        raise ValidationError("n and alpha must be non-negative")
    x = np.asarray(x, dtype=float)
    prev = np.ones_like(x)
    if n == 0:
        return prev if prev.ndim else float(prev)
    cur = 1.0 + alpha - x
    for k in range(1, n):
        prev, cur = cur, ((2 * k + 1 + alpha - x) * cur - (k + alpha) * prev) / (k + 1)
    return cur if cur.ndim else float(cur)


def laguerre_table(nmax, alpha, x):
    """``L_n^alpha(x)`` for ``n = 0..nmax`` stacked along axis 0.

    ``alpha`` may be a scalar or an array broadcastable against ``x``; the
    result then has shape ``(nmax + 1,) + broadcast_shape``.
    """
    x = np.asarray(x, dtype=float)
    alpha = np.asarray(alpha, dtype=float)
    shape = np.broadcast_shapes(x.shape, alpha.shape)
    out = np.empty((nmax + 1,) + shape)
    out[0] = 1.0
    if nmax >= 1:
        out[1] = 1.0 + alpha - x
    for k in range(1, nmax):
        out[k + 1] = ((2 * k + 1 + alpha - x) * out[k] - (k + alpha) * out[k - 1]) / (k + 1)
    return out


def log_factorial(n):
    return gammaln(np.asarray(n, dtype=float) + 1.0)


def displacement_radial(m, k, x):
    """Real radial factor of ``<m|D(r e^{i theta})|k>`` without ``exp(-x/2)``.

    ``(-1)^max(0,k-m) sqrt(min!/max!) r^|m-k| L^{|m-k|}_{min}(x)`` with ``x = r**2``.
    """
    lo, hi = min(m, k), max(m, k)
    diff = hi - lo
    sign = -1.0 if (k > m and diff % 2) else 1.0
    scale = math.exp(0.5 * (log_factorial(lo) - log_factorial(hi)))
    x = np.asarray(x, dtype=float)
    return sign * scale * x ** (diff / 2.0) * assoc_laguerre(lo, diff, x)


def displacement_element(m, k, r, theta):
    """Fock matrix element ``<m|D(r e^{i theta})|k>`` of the displacement operator."""
    if m < 0 or k < 0:
        raise ValidationError("indices must be non-negative")
    x = np.asarray(r, dtype=float) ** 2
    value = displacement_radial(m, k, x) * np.exp(1j * np.asarray(theta) * (m - k) - x / 2.0)
    return value if np.ndim(value) else complex(value)


def displacement_radial_table(d, x):
    """Radial factors for all ``0 <= m, k < d`` as an array ``(d, d, len(x))``.

    Entry ``[m, k]`` equals ``displacement_radial(m, k, x)``.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.empty((d, d, len(x)))
    lf = log_factorial(np.arange(d))
    for diff in range(d):
        lag = laguerre_table(d - 1 - diff, diff, x)  # L^diff_lo for lo = 0..d-1-diff
        power = x ** (diff / 2.0)
        for lo in range(d - diff):
            hi = lo + diff
            base = math.exp(0.5 * (lf[lo] - lf[hi])) * power * lag[lo]
            out[hi, lo] = base
            out[lo, hi] = -base if diff % 2 else base
    return out


def bessel_j0(z, radius=BESSEL_SERIES_RADIUS):
    """Bessel function ``J_0(z)`` for complex ``z`` by its power series.

    Summation stops once a term drops below ``1e-17`` of the partial sum.
    """
    z = complex(z)
    if abs(z) > radius:
        raise ValidationError(f"|z| = {abs(z):.3g} exceeds the series radius {radius}")
    q = -(z / 2.0) ** 2
    term = 1.0 + 0j
    total = term
    for m in range(1, BESSEL_MAX_TERMS + 1):
        term *= q / (m * m)
        total += term
        if abs(term) < 1e-17 * abs(total):
            return total
    raise ConvergenceError(f"J0 series did not converge in {BESSEL_MAX_TERMS} terms")
