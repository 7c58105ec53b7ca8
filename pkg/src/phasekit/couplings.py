"""Two-mode couplings into the phase-space wavefunction picture.

Every coupling here maps ``|m> (x) |n>`` to a function on ``C`` of the form

    (1/sqrt(pi)) * exp(-i theta (m - n)) * R_mn(x) * exp(-x/2)

with a real radial factor ``R_mn``.  For ``U`` (beam splitter plus phase
shifter) ``R_mn`` is the displacement radial factor, for the target coupling
``V`` it is ``L_min(m, n)(x)``.  Integrals use the measure ``r dr dtheta``,
which makes both kernels isometric.  ``W = U* V`` is assembled from Gauss
quadrature and is block diagonal in the number difference.
"""

from dataclasses import dataclass, field
import json
import math
import os
import tempfile

import numpy as np
from scipy.special import gammaln

from .errors import ConfigError, ValidationError
from .fock import TwoModeVector
from .phase import angle_kernel_integral
from .quadrature import QuadratureGrid
from .special import displacement_radial, displacement_radial_table, laguerre_table

INV_SQRT_PI = 1.0 / math.sqrt(math.pi)
W_CACHE_FORMAT = 1


@dataclass(frozen=True)
class RnsIndex:
    """Relative number state label: ``diff = p - q``, ``pair = min(p, q)``."""

    diff: int
    pair: int

    def __post_init__(self):
        if self.pair < 0:
            raise ValidationError("pair index must be non-negative")


def rns_pack(p, q):
    if p < 0 or q < 0:
        raise ValidationError("number indices must be non-negative")
    return RnsIndex(p - q, min(p, q))


def rns_unpack(index):
    if index.pair < 0:
        raise ValidationError("pair index must be non-negative")
    if index.diff >= 0:
        return index.pair + index.diff, index.pair
    return index.pair, index.pair - index.diff


def product_index(p, q, d):
    return p * d + q


# --- kernels -----------------------------------------------------------------


@dataclass(frozen=True)
class CouplingKernel:
    """A coupling of the common form above; ``label`` is ``"U"`` or ``"V"``."""

    label: str

    def radial(self, m, n, x):
        if self.label == "U":
            return displacement_radial(m, n, x)
        return laguerre_table(min(m, n), 0.0, x)[min(m, n)]

    def radial_table(self, d, x):
        """``R[m, n, q]`` for all ``m, n < d``."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if self.label == "U":
            return displacement_radial_table(d, x)
        lag = laguerre_table(d - 1, 0.0, x)
        idx = np.minimum.outer(np.arange(d), np.arange(d))
        return lag[idx]

    def __call__(self, m, n, x, theta):
        x = np.asarray(x, dtype=float)
        if np.any(x < 0):
            raise ValidationError("x must be non-negative")
        val = INV_SQRT_PI * np.exp(-1j * np.asarray(theta) * (m - n) - x / 2.0) * self.radial(m, n, x)
        return val if np.ndim(val) else complex(val)

    def sample(self, d, grid, angles):
        """Kernel values on ``(m, n, x_q, theta_j)``."""
        R = self.radial_table(d, grid.nodes)
        diff = np.subtract.outer(np.arange(d), np.arange(d))
        phase = np.exp(-1j * diff[:, :, None] * np.asarray(angles)[None, None, :])
        env = INV_SQRT_PI * np.exp(-grid.nodes / 2.0)
        return R[:, :, :, None] * env[None, None, :, None] * phase[:, :, None, :]


def u_kernel(m, n, x, theta):
    """``(1/sqrt(pi)) <n|D(r e^{i theta})*|m>`` with ``r = sqrt(x)``."""
    return CouplingKernel("U")(m, n, x, theta)


def v_kernel(m, n, x, theta):
    """``(1/sqrt(pi)) e^{i theta (n - m)} L_min(m, n)(x) e^{-x/2}``."""
    return CouplingKernel("V")(m, n, x, theta)


U_KERNEL = CouplingKernel("U")
V_KERNEL = CouplingKernel("V")


@dataclass(frozen=True, eq=False)
class Wavefunction:
    """Image of a two-mode vector under a coupling, stored by angular frequency.

    ``Psi(x, theta) = (1/sqrt(pi)) e^{-x/2} sum_D e^{-i theta D} phi[D + d - 1](x)``.
    """

    grid: QuadratureGrid
    phi: np.ndarray  # (2d - 1, Q)

    @property
    def dim(self):
        return (self.phi.shape[0] + 1) // 2

    def values(self, angles):
        """``Psi(x_q, theta_j)`` as a ``(Q, J)`` table."""
        d = self.dim
        freqs = np.arange(-(d - 1), d)
        phase = np.exp(-1j * np.outer(freqs, np.asarray(angles, dtype=float)))
        env = INV_SQRT_PI * np.exp(-self.grid.nodes / 2.0)
        return env[:, None] * (self.phi.T @ phase)

    def bin_mass(self, partition):
        """Probability of each (node, bin) cell under ``r dr dtheta``, shape ``(Q, K)``."""
        d = self.dim
        freqs = np.arange(-(d - 1), d)
        lag = freqs[None, :] - freqs[:, None]  # D' - D
        kern = np.array([angle_kernel_integral(lag, iv) for iv in partition.intervals()])
        # mass[q, j] = w_q sum_{D, D'} phi_D conj(phi_D') K_j(D' - D)
        tmp = np.einsum("jab,bq->jaq", kern, self.phi.conj())
        mass = np.einsum("aq,jaq->qj", self.phi, tmp).real
        return mass * self.grid.weights[:, None]

    def norm_sq(self):
        return float(np.sum(self.grid.weights * np.sum(np.abs(self.phi) ** 2, axis=0)))


def _frequency_profiles(amps, R):
    """``phi[c, D + d - 1, q] = sum_{m - n = D} amps[c, m, n] R[m, n, q]``."""
    n_comp, d = amps.shape[0], amps.shape[1]
    phi = np.empty((n_comp, 2 * d - 1, R.shape[2]), dtype=complex)
    for D in range(-(d - 1), d):
        m = np.arange(max(0, D), min(d, d + D))
        phi[:, D + d - 1] = amps[:, m, m - D] @ R[m, m - D]
    return phi


def apply_kernel(state, kernel, grid):
    """Push a two-mode vector through ``kernel`` (``U_KERNEL`` or ``V_KERNEL``).

    ``state`` is a TwoModeVector or an amplitude array ``amp[m, n]``.  Values
    are the unnormalized wavefunction of the given amplitudes; scale by
    ``state.norm`` to undo a normalization.
    """
    amp = state.amp if isinstance(state, TwoModeVector) else np.asarray(state, dtype=complex)
    if amp.ndim != 2 or amp.shape[0] != amp.shape[1]:
        raise ValidationError("two-mode amplitudes must be a square array")
    R = kernel.radial_table(amp.shape[0], grid.nodes)
    return Wavefunction(grid, _frequency_profiles(amp[None], R)[0])


def mixture_bin_mass(amps, probs, kernel, grid, partition):
    """Cell masses of the mixture ``sum_c probs[c] |amps[c]><amps[c]|`` after ``kernel``.

    Same result as summing ``Wavefunction.bin_mass`` over components, with the
    mixture folded into one frequency-frequency matrix per node.
    """
    amps = np.asarray(amps, dtype=complex)
    d = amps.shape[1]
    R = kernel.radial_table(d, grid.nodes)
    phi = _frequency_profiles(amps, R)
    gram = np.einsum("c,caq,cbq->qab", np.asarray(probs, dtype=float), phi, phi.conj())
    freqs = np.arange(-(d - 1), d)
    lag = freqs[None, :] - freqs[:, None]
    kern = np.array([angle_kernel_integral(lag, iv) for iv in partition.intervals()])
    mass = np.einsum("qab,jab->qj", gram, kern).real
    return mass * grid.weights[:, None]


# --- W = U* V ------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class WMatrix:
    """``W`` in the product basis (row/column ``p * d + q``).

    ``dropped[m, n]`` is the squared norm column ``(m, n)`` loses because its
    output indices ``l = k + n - m`` leave ``[0, d)``.
    """

    dim: int
    order: int
    matrix: np.ndarray = field(repr=False)
    dropped: np.ndarray = field(repr=False)

    def column(self, m, n):
        return self.matrix[:, product_index(m, n, self.dim)].reshape(self.dim, self.dim)

    def apply(self, amp):
        amp = np.asarray(amp, dtype=complex)
        return (self.matrix @ amp.ravel()).reshape(self.dim, self.dim)

    @property
    def max_dropped(self):
        return float(self.dropped.max())

    def safe_dropped(self, limit=None):
        limit = self.dim // 2 if limit is None else limit
        return float(self.dropped[: limit + 1, : limit + 1].max())


def _check_order(d, grid):
    if grid.order < 2 * d:
        raise ConfigError(f"coupling computations need quadrature order >= 2d ({2 * d}), got {grid.order}")


def _alpha_table(d, grid):
    """``A[k, l, j] = sum_q w_q R_U[k, l](x_q) L_j(x_q)``."""
    R = displacement_radial_table(d, grid.nodes)
    lag = laguerre_table(d - 1, 0.0, grid.nodes)
    return np.einsum("klq,jq->klj", R, lag * grid.weights)


def w_matrix(d, grid):
    """Quadrature assembly of ``W``; needs ``grid.order >= 2d`` for exactness."""
    _check_order(d, grid)
    A = _alpha_table(d, grid)
    W = np.zeros((d * d, d * d))
    idx = np.arange(d)
    for m in range(d):
        for n in range(d):
            k = idx[(idx + n - m >= 0) & (idx + n - m < d)]
            W[k * d + k + n - m, m * d + n] = A[k, k + n - m, min(m, n)]
    kept = np.sum(W ** 2, axis=0).reshape(d, d)
    dropped = np.clip(1.0 - kept, 0.0, None)
    return WMatrix(d, grid.order, W.astype(complex), dropped)


def w_coefficient(k, l, m, n, grid):
    """Single coefficient ``<k, l| W |m, n>`` by quadrature (zero off the selection rule)."""
    if l != k + n - m:
        return 0.0
    x = grid.nodes
    lag = laguerre_table(min(m, n), 0.0, x)[min(m, n)]
    return float(np.sum(grid.weights * displacement_radial(k, l, x) * lag))


@dataclass(frozen=True)
class VacuumColumn:
    diff: int
    coefficients: np.ndarray  # coefficient of |diff + k> (x) |k> at index k
    partial_norm: float

    @property
    def tail(self):
        return 1.0 - self.partial_norm


def w_column_vacuum(m, kmax):
    """Closed-form image of ``|m> (x) |0>``: ``(m/2) Gamma(k + m/2) / sqrt(k! (k+m)!)``."""
    if m < 0 or kmax < 0:
        raise ValidationError("m and kmax must be non-negative")
    if m == 0:
        return VacuumColumn(0, np.array([1.0]), 1.0)
    k = np.arange(kmax + 1, dtype=float)
    log_c = gammaln(k + m / 2.0) - 0.5 * (gammaln(k + 1) + gammaln(k + m + 1))
    c = (m / 2.0) * np.exp(log_c)
    return VacuumColumn(m, c, float(np.sum(c ** 2)))


def vacuum_column_tail_estimate(m, kmax):
    """Leading large-``kmax`` behaviour ``m**2 / (4 kmax)`` of the missing weight."""
    return m * m / (4.0 * kmax)


def coupling_discrepancy(Wm, grid, m, n):
    """Squared grid-L2 distance between ``V|m,n>`` and ``U W|m,n>``.

    Both functions carry the single angular frequency ``n - m``, so the angle
    integral is exact and only the radial quadrature remains.
    """
    d = Wm.dim
    col = Wm.column(m, n)
    x = grid.nodes
    target = laguerre_table(min(m, n), 0.0, x)[min(m, n)]
    approx = np.zeros_like(x)
    for k in range(d):
        l = k + n - m
        if 0 <= l < d and col[k, l] != 0:
            approx = approx + col[k, l].real * displacement_radial(k, l, x)
    return float(np.sum(grid.weights * (target - approx) ** 2))


# --- spectral measures in the relative number basis ---------------------------


def _rns_labels(d):
    p, q = np.divmod(np.arange(d * d), d)
    return p - q, np.minimum(p, q)


def o_angle_effect(interval, d):
    """Angle part of the canonical spectral measure on the two-mode truncation."""
    diff, pair = _rns_labels(d)
    same_pair = pair[:, None] == pair[None, :]
    kern = angle_kernel_integral(diff[:, None] - diff[None, :], interval)
    return np.where(same_pair, kern, 0.0)


def o_rad_effect(X, d, grid):
    """Radial part: ``sum_q∈X w_q L_k(x_q) L_l(x_q)`` between pair indices at equal difference."""
    X = np.arange(grid.order) if X is None else np.asarray(X, dtype=int)
    lag = laguerre_table(d - 1, 0.0, grid.nodes[X])
    gram = (lag * grid.weights[X]) @ lag.T
    diff, pair = _rns_labels(d)
    same_diff = diff[:, None] == diff[None, :]
    return np.where(same_diff, gram[pair[:, None], pair[None, :]], 0.0)


def o_effect(X, interval, d, grid):
    return o_angle_effect(interval, d) @ o_rad_effect(X, d, grid)


def safe_product_indices(d, limit=None):
    """Product-basis indices ``p * d + q`` with ``p, q < limit`` (default ``d // 2``)."""
    limit = d // 2 if limit is None else limit
    p, q = np.meshgrid(np.arange(limit), np.arange(limit), indexing="ij")
    return (p * d + q).ravel()


# --- cache -------------------------------------------------------------------


def save_w_matrix(Wm, path):
    """Write ``W`` and its metadata to an ``.npz`` file atomically."""
    meta = {
        "format_version": W_CACHE_FORMAT,
        "dim": Wm.dim,
        "order": Wm.order,
        "max_dropped": Wm.max_dropped,
    }
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".npz")
    try:
        with os.fdopen(fd, "wb") as fh:
            np.savez(fh, matrix=Wm.matrix.real, dropped=Wm.dropped, meta=json.dumps(meta, sort_keys=True))
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_w_matrix(path, d=None, order=None):
    """Read a cached ``W``; raises ConfigError on a version or key mismatch."""
    with np.load(path, allow_pickle=False) as data:
        meta = json.loads(str(data["meta"]))
        if meta.get("format_version") != W_CACHE_FORMAT:
            raise ConfigError(f"unsupported W cache format {meta.get('format_version')!r}")
        if (d is not None and meta["dim"] != d) or (order is not None and meta["order"] != order):
            raise ConfigError("cached W was built for a different (d, Q)")
        return WMatrix(meta["dim"], meta["order"], data["matrix"].astype(complex), data["dropped"])


def w_matrix_cached(d, grid, cache_dir=None):
    """``w_matrix`` with an optional on-disk cache keyed by ``(d, Q)``."""
    if cache_dir is None:
        return w_matrix(d, grid)
    path = os.path.join(cache_dir, f"w_d{d}_q{grid.order}_{grid.kind}.npz")
    if os.path.exists(path):
        return load_w_matrix(path, d, grid.order)
    Wm = w_matrix(d, grid)
    os.makedirs(cache_dir, exist_ok=True)
    save_w_matrix(Wm, path)
    return Wm
