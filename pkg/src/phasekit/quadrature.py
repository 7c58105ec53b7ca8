"""Radial quadrature grids and angle partitions.

All radial integrals are written in the variable ``x = r**2`` against the
probability measure ``exp(-x) dx`` on ``[0, inf)``.  Two rules are offered:

``radial_grid(Q)``
    Gauss rule in ``r = sqrt(x)`` for the weight ``2 r exp(-r**2) dr`` (the same
    measure).  It integrates ``x**(j/2)`` exactly for ``j <= 2Q - 1``, which is
    what the displacement-operator integrands need: they carry half-integer
    powers ``x**(|m-k|/2)``.  This is the default everywhere.

``gauss_laguerre_grid(Q)``
    Classical Gauss-Laguerre rule in ``x``; exact for ``x**k`` with
    ``k <= 2Q - 1`` but only algebraically convergent on half-integer powers.
"""

from dataclasses import dataclass
from functools import lru_cache

import mpmath
import numpy as np
from scipy.linalg import eigh_tridiagonal

from .errors import ValidationError

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True, eq=False)
class QuadratureGrid:
    """Nodes ``x_q >= 0`` and weights ``w_q > 0`` for ``exp(-x) dx``."""

    order: int
    nodes: np.ndarray
    weights: np.ndarray
    kind: str = "radial"

    def __post_init__(self):
        if self.nodes.shape != (self.order,) or self.weights.shape != (self.order,):
            raise ValidationError("grid arrays must have length equal to the order")
        if np.any(self.nodes < 0) or np.any(self.weights <= 0):
            raise ValidationError("nodes must be >= 0 and weights > 0")
        self.nodes.setflags(write=False)
        self.weights.setflags(write=False)

    def __len__(self):
        return self.order

    @property
    def r(self):
        return np.sqrt(self.nodes)

    def integrate(self, values, axis=-1):
        """Weighted sum of ``values`` sampled on the nodes along ``axis``."""
        values = np.moveaxis(np.asarray(values), axis, -1)
        return values @ self.weights


def _half_range_recurrence(order, dps):
    """Three-term recurrence coefficients of the monic polynomials orthogonal
    for ``2 r exp(-r**2) dr`` on ``[0, inf)``.

    Chebyshev's algorithm on the moments ``Gamma(j/2 + 1)``; the moment map is
    badly conditioned so it runs in ``dps``-digit arithmetic.
    """
    ctx = mpmath.mp.clone()
    ctx.dps = dps
    n_mom = 2 * order
    mom = [ctx.gamma(ctx.mpf(j) / 2 + 1) for j in range(n_mom)]
    a = [ctx.mpf(0)] * order
    b = [ctx.mpf(0)] * order
    a[0] = mom[1] / mom[0]
    b[0] = mom[0]
    sig_prev = [ctx.mpf(0)] * n_mom
    sig = list(mom)
    for k in range(1, order):
        sig_new = [ctx.mpf(0)] * n_mom
        for l in range(k, n_mom - k):
            sig_new[l] = sig[l + 1] - a[k - 1] * sig[l] - b[k - 1] * sig_prev[l]
        a[k] = sig_new[k + 1] / sig_new[k] - sig[k] / sig[k - 1]
        b[k] = sig_new[k] / sig[k - 1]
        sig_prev, sig = sig, sig_new
    return ctx, a, b


def _orthonormal_eval(ctx, a, sb, r, order):
    """Value and derivative of the degree-``order`` orthonormal polynomial at
    ``r`` plus the Christoffel sum of squares of degrees ``< order``."""
    p_prev, p = ctx.mpf(0), 1 / sb[0]
    dp_prev, dp = ctx.mpf(0), ctx.mpf(0)
    christoffel = p * p
    for k in range(order):
        back = sb[k] if k > 0 else 0
        scale = sb[k + 1] if k + 1 < order else 1
        p_next = ((r - a[k]) * p - back * p_prev) / scale
        dp_next = (p + (r - a[k]) * dp - back * dp_prev) / scale
        p_prev, p = p, p_next
        dp_prev, dp = dp, dp_next
        if k + 1 < order:
            christoffel += p * p
    return p, dp, christoffel


@lru_cache(maxsize=None)
def _radial_nodes_weights(order):
    dps = 60 + order
    ctx, a, b = _half_range_recurrence(order, dps)
    sb = [ctx.sqrt(v) for v in b]
    guess = eigh_tridiagonal(
        np.array([float(v) for v in a]),
        np.array([float(v) for v in sb[1:]]),
        eigvals_only=True,
    )
    nodes, weights = [], []
    for r0 in guess:
        r = ctx.mpf(float(r0))
        for _ in range(4):
            p, dp, _ = _orthonormal_eval(ctx, a, sb, r, order)
            r -= p / dp
        _, _, christoffel = _orthonormal_eval(ctx, a, sb, r, order)
        nodes.append(r)
        weights.append(1 / christoffel)
    r = np.array([float(v) for v in nodes])
    w = np.array([float(v) for v in weights])
    return r * r, w


def radial_grid(order):
    """Gauss rule of ``order`` nodes in ``r`` for the measure ``exp(-x) dx``."""
    if order < 1:
        raise ValidationError("quadrature order must be positive")
    x, w = _radial_nodes_weights(int(order))
    return QuadratureGrid(int(order), x.copy(), w.copy(), kind="radial")


def gauss_laguerre_grid(order):
    """Classical Gauss-Laguerre rule in ``x``."""
    if order < 1:
        raise ValidationError("quadrature order must be positive")
    x, w = np.polynomial.laguerre.laggauss(int(order))
    return QuadratureGrid(int(order), x, w, kind="laguerre")


@dataclass(frozen=True, eq=False)
class AnglePartition:
    """Bins ``[theta_j, theta_{j+1})`` covering ``[0, 2 pi)`` exactly."""

    edges: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.edges, dtype=float)
        if e.ndim != 1 or len(e) < 2:
            raise ValidationError("a partition needs at least two edges")
        if e[0] != 0.0 or e[-1] != TWO_PI:
            raise ValidationError("partition must start at 0 and end at 2*pi")
        if np.any(np.diff(e) <= 0):
            raise ValidationError("partition edges must be strictly increasing")
        e.setflags(write=False)
        object.__setattr__(self, "edges", e)

    @classmethod
    def uniform(cls, bins):
        if bins < 1:
            raise ValidationError("bin count must be positive")
        edges = TWO_PI * np.arange(bins + 1) / bins
        edges[-1] = TWO_PI
        return cls(edges)

    @property
    def bins(self):
        return len(self.edges) - 1

    def __len__(self):
        return self.bins

    def intervals(self):
        return list(zip(self.edges[:-1], self.edges[1:]))

    @property
    def midpoints(self):
        return 0.5 * (self.edges[:-1] + self.edges[1:])

    @property
    def widths(self):
        return np.diff(self.edges)
