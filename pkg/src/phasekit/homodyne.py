"""Double homodyne detection on the truncated two-mode space.

The signal ``rho`` and parameter state ``sigma`` enter the coupling ``U``; the
detectors read out the phase-space point ``z = r e^{i theta}``.  Probabilities
are tabulated on (radial node, angle bin) cells.  The modified scheme first
entangles the signal with a vacuum ancilla through ``W``.
"""

from dataclasses import dataclass, field
import warnings

import numpy as np

from .couplings import U_KERNEL, V_KERNEL, WMatrix, mixture_bin_mass, w_matrix
from .errors import TruncationError, ValidationError
from .fock import DensityMatrix, density_array
from .phase import PhaseMatrix, angle_kernel_integral, phase_distribution
from .quadrature import AnglePartition, QuadratureGrid
from .special import displacement_radial_table

IDENTITY_TOL = 1e-6
MODIFIED_SCHEME_TOL = 2e-4
MASS_DEFICIT_WARN = 1e-4


class TruncationWarning(UserWarning):
    pass


@dataclass(frozen=True, eq=False)
class JointDensityTable:
    """Cell probabilities ``mass[q, j]`` on radial node ``q`` and angle bin ``j``."""

    grid: QuadratureGrid
    partition: AnglePartition
    mass: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = np.asarray(self.mass, dtype=float)
        if m.shape != (self.grid.order, self.partition.bins):
            raise ValidationError("mass table shape does not match the grid and partition")
        if np.min(m) < -1e-12:
            raise ValidationError(f"negative cell probability {np.min(m):.3e}")
        m = np.clip(m, 0.0, None)
        m.setflags(write=False)
        object.__setattr__(self, "mass", m)

    @property
    def total(self):
        return float(self.mass.sum())

    @property
    def density(self):
        """Density with respect to ``dx dtheta`` at each cell."""
        cell = self.grid.weights[:, None] * np.exp(self.grid.nodes)[:, None] * self.partition.widths[None, :]
        return self.mass / cell

    def angle_marginal(self):
        return self.mass.sum(axis=0)

    def radial_marginal(self):
        return self.mass.sum(axis=1)


def _sigma_weights(sigma, allow_nondiagonal=False, tol=1e-12):
    s = density_array(sigma)
    off = s - np.diag(np.diag(s))
    if not allow_nondiagonal and np.max(np.abs(off), initial=0.0) > tol:
        raise ValidationError("parameter state must be diagonal in the number basis")
    return s


def gsigma_effect(weights, X, interval, grid, d):
    """``sum_k weights[k] P^{G_k}(X x interval)`` for number-diagonal generators.

    ``X`` is a node-index set (``None`` for all nodes).
    """
    lam = np.asarray(weights, dtype=float)
    if np.min(lam) < -1e-12 or abs(lam.sum() - 1.0) > 1e-10:
        raise ValidationError("generator weights must be a probability vector")
    if lam.ndim != 1 or len(lam) > d:
        raise ValidationError("generator weights exceed the dimension")
    nodes = np.arange(grid.order) if X is None else np.asarray(X, dtype=int)
    R = displacement_radial_table(d, grid.nodes[nodes])  # [m, k, q]
    w = grid.weights[nodes]
    gram = np.einsum("k,q,mkq,nkq->mn", lam, w, R[:, : len(lam)], R[:, : len(lam)])
    diff = np.subtract.outer(np.arange(d), np.arange(d))
    return gram * angle_kernel_integral(diff, interval)


def gsigma_probability_table(rho, weights, grid, partition):
    """``tr[rho P^{G_sigma}(node q x bin j)]`` for every cell, via effect matrices."""
    r = density_array(rho)
    d = r.shape[0]
    lam = np.asarray(weights, dtype=float)
    R = displacement_radial_table(d, grid.nodes)
    ks = np.arange(-(d - 1), d)
    kern = np.array([angle_kernel_integral(ks, iv) for iv in partition.intervals()])  # (J, 2d-1)
    # tr[rho P] = sum_{m,n} rho[n, m] R_mk R_nk K(m - n), grouped by D = m - n
    A = np.einsum("k,nm,mkq,nkq->mnq", lam, r, R[:, : len(lam)], R[:, : len(lam)])
    sums = np.empty((2 * d - 1, grid.order), dtype=complex)
    for D in range(-(d - 1), d):
        m = np.arange(max(0, D), min(d, d + D))
        sums[D + d - 1] = A[m, m - D].sum(axis=0)
    return (kern @ sums).real.T * grid.weights[:, None]


def conjugate_state(sigma):
    """Entrywise complex conjugate in the number basis."""
    s = density_array(sigma)
    return DensityMatrix(s.conj())


def _pure_components(rho, cutoff=1e-14):
    r = density_array(rho)
    r = 0.5 * (r + r.conj().T)
    lam, vec = np.linalg.eigh(r)
    keep = lam > cutoff
    return lam[keep], vec[:, keep]


def double_homodyne_dist(rho, sigma, grid, partition, allow_nondiagonal=False):
    """Joint (radial node, angle bin) distribution of double homodyne detection.

    Each pure component ``psi (x) s`` of ``rho (x) sigma`` is pushed through
    ``U`` and its cell masses added with the mixture weights.
    """
    r = density_array(rho)
    s = _sigma_weights(sigma, allow_nondiagonal)
    if r.shape != s.shape:
        raise ValidationError("signal and parameter states must share the dimension")
    p_sig, v_sig = _pure_components(r)
    p_par, v_par = _pure_components(s)
    amps = np.einsum("ai,bj->ijab", v_sig, v_par).reshape(-1, r.shape[0], r.shape[0])
    probs = np.outer(p_sig, p_par).ravel()
    mass = mixture_bin_mass(amps, probs, U_KERNEL, grid, partition)
    deficit = 1.0 - mass.sum()
    if deficit > MASS_DEFICIT_WARN:
        warnings.warn(f"joint distribution misses {deficit:.3e} of its mass: check the truncation", TruncationWarning)
    return JointDensityTable(grid, partition, mass)


def identity_discrepancy(rho, sigma, grid, partition):
    """Largest cell difference between the coupled distribution and ``tr[rho G^{sigma'}]``."""
    table = double_homodyne_dist(rho, sigma, grid, partition)
    weights = np.diag(conjugate_state(sigma).mat).real
    ref = gsigma_probability_table(rho, weights, grid, partition)
    return float(np.max(np.abs(table.mass - ref)))


@dataclass(frozen=True, eq=False)
class ModifiedSchemeResult:
    via_w: np.ndarray  # angle marginal through W then U
    via_v: np.ndarray  # angle marginal straight through V
    canonical: np.ndarray  # canonical phase distribution of rho
    dropped_weight: float  # squared norm W truncation removes from rho (x) |0>

    @property
    def residual(self):
        return self.via_w - self.canonical

    @property
    def max_residual(self):
        return float(np.max(np.abs(self.residual)))

    @property
    def path_discrepancy(self):
        return float(np.max(np.abs(self.via_w - self.via_v)))


def modified_scheme_phase_dist(rho, grid, partition, Wm: WMatrix = None):
    """Angle marginal of ``U W (rho (x) |0><0|) W* U*`` next to its two references."""
    r = density_array(rho)
    d = r.shape[0]
    if Wm is None:
        Wm = w_matrix(d, grid)
    elif Wm.dim != d:
        raise ValidationError("W dimension does not match the state")
    p_sig, v_sig = _pure_components(r)
    amps = np.zeros((len(p_sig), d, d), dtype=complex)
    amps[:, :, 0] = v_sig.T
    out = np.array([Wm.apply(a) for a in amps])
    dropped = float(np.sum(p_sig * (1.0 - np.sum(np.abs(out) ** 2, axis=(1, 2)))))
    via_w = mixture_bin_mass(out, p_sig, U_KERNEL, grid, partition).sum(axis=0)
    via_v = mixture_bin_mass(amps, p_sig, V_KERNEL, grid, partition).sum(axis=0)
    canon = phase_distribution(r, PhaseMatrix.canonical(d), partition)
    return ModifiedSchemeResult(via_w, via_v, canon, dropped)


def sample_outcomes(table, n, seed=None):
    """``n`` i.i.d. cells ``(q, j)`` drawn from the normalized table."""
    if n < 0:
        raise ValidationError("sample count must be non-negative")
    if n == 0:
        return np.empty((0, 2), dtype=int)
    total = table.total
    if abs(total - 1.0) > 1e-4:
        raise TruncationError(f"table mass {total:.6f} is not normalized")
    p = table.mass.ravel() / total
    rng = np.random.default_rng(seed)
    flat = rng.choice(p.size, size=n, p=p)
    return np.column_stack(np.unravel_index(flat, table.mass.shape))
