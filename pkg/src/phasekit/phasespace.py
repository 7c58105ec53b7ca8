"""Phase-shift covariant observables on the phase space ``C = R_+ x [0, 2pi)``.

Such an observable is fixed by a probability measure on the radial variable
``x = r**2`` and vector fields ``eta_m(x)``:

    P(X x T)_{mn} = [sum_{q in X} w_q <eta_m(x_q)|eta_n(x_q)>] * K_T(m - n)

with ``K_T`` the angle kernel.  Radial sets ``X`` are sets of quadrature-node
indices, or the single atom of a Dirac measure.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ValidationError
from .phase import (
    PhaseMatrix,
    _difference_matrix,
    angle_kernel_integral,
    kernel_matrix,
    structure_vectors,
)
from .quadrature import TWO_PI, AnglePartition, QuadratureGrid
from .special import displacement_radial_table, laguerre_table


@dataclass(frozen=True, eq=False)
class RadialProfile:
    """``eta[m, q, :]`` is ``eta_m`` at radial node ``q``.

    ``nodes``/``weights`` come from a QuadratureGrid, or are ``[x0]``/``[1]``
    for a Dirac atom (then ``atom`` holds ``x0``).
    """

    nodes: np.ndarray
    weights: np.ndarray
    eta: np.ndarray
    atom: Optional[float] = None
    label: str = ""

    def __post_init__(self):
        if self.eta.ndim != 3 or self.eta.shape[1] != len(self.nodes):
            raise ValidationError("eta must be (dim, nodes, components)")

    @property
    def dim(self):
        return self.eta.shape[0]

    @property
    def component_dim(self):
        return self.eta.shape[2]

    @property
    def n_nodes(self):
        return len(self.nodes)

    def norms(self):
        """``sum_q w_q ||eta_m(x_q)||^2`` for every ``m``."""
        return np.einsum("q,mqc->m", self.weights, np.abs(self.eta) ** 2)

    def radial_gram(self, nodes=None):
        """``c_mn(X) = sum_{q in X} w_q <eta_m(x_q)|eta_n(x_q)>``."""
        sel = slice(None) if nodes is None else np.asarray(nodes, dtype=int)
        eta = self.eta[:, sel, :]
        w = self.weights[sel]
        return np.einsum("q,mqc,nqc->mn", w, eta.conj(), eta)


@dataclass(frozen=True, eq=False)
class PhaseSpaceEffect:
    nodes: tuple
    interval: tuple
    matrix: np.ndarray


def profile_G(k, grid: QuadratureGrid, d):
    """Profile of the observable generated by ``|k><k|`` under phase-space translations."""
    if not 0 <= k < d:
        raise ValidationError("generator index must be below the dimension")
    table = displacement_radial_table(d, grid.nodes)  # [m, k, q]
    eta = table[:, k, :][:, :, None].astype(complex)
    return RadialProfile(grid.nodes, grid.weights, eta, label=f"G{k}")


def profile_F(k, grid: QuadratureGrid, d):
    """Profile with ``eta_m(x) = L_min(m, k)(x)``."""
    if not 0 <= k < d:
        raise ValidationError("profile index must be below the dimension")
    lag = laguerre_table(k, 0.0, grid.nodes)
    idx = np.minimum(np.arange(d), k)
    eta = lag[idx][:, :, None].astype(complex)
    return RadialProfile(grid.nodes, grid.weights, eta, label=f"F{k}")


def profile_dirac(x0, C):
    """Dirac radial measure at ``x0 > 0`` with x-independent structure vectors of ``C``."""
    if not x0 > 0:
        raise ValidationError("Dirac atom must sit at x0 > 0")
    sv = structure_vectors(C)
    eta = sv.eta[:, None, :]
    return RadialProfile(np.array([float(x0)]), np.array([1.0]), eta, atom=float(x0), label="dirac")


def _node_set(profile, X):
    if X is None:
        return np.arange(profile.n_nodes)
    X = np.asarray(X, dtype=int).ravel()
    if X.size and (X.min() < 0 or X.max() >= profile.n_nodes):
        raise ValidationError("radial set refers to nodes outside the profile")
    return X


def psc_effect(profile, X, interval):
    """Effect ``P(X x interval)``; ``X`` is a node-index set (``None`` for all)."""
    nodes = _node_set(profile, X)
    gram = profile.radial_gram(nodes)
    mat = gram * kernel_matrix(profile.dim, interval)
    return PhaseSpaceEffect(tuple(int(q) for q in nodes), tuple(interval), mat)


def psc_effect_table(profile, radial_sets, partition):
    """All effects on a product partition as an array ``(nX, K, d, d)``."""
    d = profile.dim
    kern = np.array([kernel_matrix(d, iv) for iv in partition.intervals()])
    grams = np.array([profile.radial_gram(_node_set(profile, X)) for X in radial_sets])
    return grams[:, None, :, :] * kern[None, :, :, :]


@dataclass(frozen=True)
class Margins:
    phase_matrix: PhaseMatrix
    radial_kernel: np.ndarray  # radial_kernel[i, m] = c_mm(X_i)


def margins(profile, radial_sets=None, psd_tol=1e-8):
    """Angle-margin phase matrix and the radial smeared-number kernel.

    ``radial_sets`` defaults to one set per node.  Raises when the angle-margin
    matrix misses positive semidefiniteness by more than ``psd_tol``.
    """
    c = profile.radial_gram()
    c = 0.5 * (c + c.conj().T)
    min_eig = np.linalg.eigvalsh(c)[0]
    if min_eig < -psd_tol:
        raise ValidationError(f"margin phase matrix fails PSD by {-min_eig:.3e}")
    if np.max(np.abs(np.diag(c) - 1.0)) > psd_tol:
        raise ValidationError("profile is not normalized on this grid")
    if radial_sets is None:
        radial_sets = [[q] for q in range(profile.n_nodes)]
    diag = np.einsum("q,mqc->mq", profile.weights, np.abs(profile.eta) ** 2)
    kernel = np.array([diag[:, _node_set(profile, X)].sum(axis=1) for X in radial_sets])
    return Margins(PhaseMatrix(c), kernel)


def radial_bins(grid_or_profile, edges):
    """Map radial intervals ``[e_i, e_{i+1})`` in ``x`` to node-index sets."""
    nodes = np.asarray(grid_or_profile.nodes)
    edges = np.asarray(edges, dtype=float)
    cell = np.searchsorted(edges, nodes, side="right") - 1
    return [np.flatnonzero(cell == i) for i in range(len(edges) - 1)]


def covariantize(effects, d=None):
    """Cyclic average ``(1/K) sum_s e^{-i t_s N} M(X x (T_j + t_s)) e^{i t_s N}``.

    ``effects`` is ``(nX, K, d, d)`` on a uniform K-bin angle partition with
    ``t_s = 2 pi s / K``.
    """
    M = np.asarray(effects, dtype=complex)
    n_x, K, dd, _ = M.shape
    if d is not None and d != dd:
        raise ValidationError("effect dimension mismatch")
    diff = _difference_matrix(dd)
    out = np.zeros_like(M)
    for s in range(K):
        phase = np.exp(-1j * (TWO_PI * s / K) * diff)  # e^{-itN} A e^{itN} entrywise
        out += phase * np.roll(M, -s, axis=1)
    return out / K


def covariance_defect_table(effects):
    """Largest deviation from ``e^{i t_s N} P(X, T_j) e^{-i t_s N} = P(X, T_{j+s})``
    over the shift grid ``t_s = 2 pi s / K``."""
    M = np.asarray(effects)
    K, dd = M.shape[1], M.shape[2]
    diff = _difference_matrix(dd)
    worst = 0.0
    for s in range(K):
        rotated = np.exp(1j * (TWO_PI * s / K) * diff) * M
        worst = max(worst, float(np.max(np.abs(rotated - np.roll(M, -s, axis=1)))))
    return worst


def uniform_partition_kernel(K, d):
    return np.array([kernel_matrix(d, iv) for iv in AnglePartition.uniform(K).intervals()])


__all__ = [
    "RadialProfile",
    "PhaseSpaceEffect",
    "Margins",
    "profile_G",
    "profile_F",
    "profile_dirac",
    "psc_effect",
    "psc_effect_table",
    "margins",
    "radial_bins",
    "covariantize",
    "covariance_defect_table",
    "angle_kernel_integral",
]
