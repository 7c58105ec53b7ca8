"""Covariant phase observables defined by phase matrices.

An observable with phase matrix ``C`` has effects

    E(T)_{mn} = c_mn * (1/2pi) * integral_T exp(i theta (m - n)) dtheta

and every integral over an angle set reduces to ``angle_kernel_integral``.
Angle sets are half-open intervals ``[a, b)``; anything wrapping past ``2 pi``
is split into at most two pieces.
"""

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import ValidationError
from .fock import density_array
from .quadrature import TWO_PI, AnglePartition

TRAPEZOID_POINTS = 4096


def wrap_interval(a, b):
    """Split ``[a, b)`` (taken mod ``2 pi``) into sub-intervals of ``[0, 2 pi)``."""
    length = b - a
    if length < 0:
        raise ValidationError("interval end precedes its start")
    if length >= TWO_PI:
        return [(0.0, TWO_PI)]
    a = float(np.mod(a, TWO_PI))
    b = a + length
    if b <= TWO_PI:
        return [(a, b)] if length > 0 else []
    return [(a, TWO_PI), (0.0, b - TWO_PI)]


def _kernel_single(k, a, b):
    k = np.asarray(k)
    kf = k.astype(float)
    safe = np.where(k == 0, 1.0, kf)
    val = (np.exp(1j * b * kf) - np.exp(1j * a * kf)) / (2j * np.pi * safe)
    return np.where(k == 0, (b - a) / TWO_PI, val)


def angle_kernel_integral(k, interval):
    """``(1/2pi) integral_interval exp(i theta k) dtheta`` in closed form.

    ``k`` may be an integer array; ``interval`` is ``(a, b)`` and may wrap.
    """
    a, b = interval
    out = np.zeros(np.shape(k), dtype=complex)
    for lo, hi in wrap_interval(a, b):
        out = out + _kernel_single(k, lo, hi)
    return out if np.ndim(out) else complex(out)


def _difference_matrix(d):
    idx = np.arange(d)
    return idx[:, None] - idx[None, :]


def kernel_matrix(d, interval):
    """Matrix ``K[m, n] = angle_kernel_integral(m - n, interval)``; the canonical effect."""
    return angle_kernel_integral(_difference_matrix(d), interval)


@dataclass(frozen=True, eq=False)
class PhaseMatrix:
    """Positive semidefinite unit-diagonal matrix ``c_mn``."""

    c: np.ndarray

    def __post_init__(self):
        c = np.array(self.c, dtype=complex)
        if c.ndim != 2 or c.shape[0] != c.shape[1]:
            raise ValidationError("phase matrix must be square")
        if np.max(np.abs(c - c.conj().T), initial=0.0) > 1e-10:
            raise ValidationError("phase matrix is not Hermitian")
        diag = np.diag(c)
        if np.max(np.abs(diag - 1.0), initial=0.0) > 1e-8:
            raise ValidationError("phase matrix diagonal is not 1")
        c = 0.5 * (c + c.conj().T)
        np.fill_diagonal(c, 1.0)
        min_eig = np.linalg.eigvalsh(c)[0]
        if min_eig < -1e-10:
            raise ValidationError(f"phase matrix is not PSD (min eigenvalue {min_eig:.3e})")
        c.setflags(write=False)
        object.__setattr__(self, "c", c)

    @property
    def dim(self):
        return self.c.shape[0]

    @classmethod
    def canonical(cls, d):
        return cls(np.ones((d, d), dtype=complex))

    @classmethod
    def trivial(cls, d):
        return cls(np.eye(d, dtype=complex))

    @classmethod
    def from_vectors(cls, vectors):
        """Gram matrix ``<v_m|v_n>`` of the rows of ``vectors`` (normalized first)."""
        v = np.asarray(vectors, dtype=complex)
        v = v / np.linalg.norm(v, axis=1, keepdims=True)
        return cls(v.conj() @ v.T)

    @classmethod
    def random(cls, d, rank=None, rng=None):
        rng = np.random.default_rng(rng)
        rank = d if rank is None else rank
        v = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
        return cls.from_vectors(v)


@dataclass(frozen=True, eq=False)
class StructureVectors:
    """Unit vectors ``eta[m]`` with ``<eta_m|eta_n> = c_mn``; ``eta`` is ``(d, rank)``."""

    eta: np.ndarray

    @property
    def rank(self):
        return self.eta.shape[1]

    def gram(self):
        return self.eta.conj() @ self.eta.T


@dataclass(frozen=True, eq=False)
class PhaseEffect:
    interval: tuple
    matrix: np.ndarray


def phase_effect(C, interval):
    """Effect ``E(interval)`` of the phase observable with phase matrix ``C``."""
    c = C.c if isinstance(C, PhaseMatrix) else np.asarray(C)
    return PhaseEffect(tuple(interval), c * kernel_matrix(c.shape[0], interval))


def _diagonal_sums(mat):
    """``S[k + d - 1] = sum_{m - n = k} mat[n, m]`` for ``k = -(d-1)..d-1``."""
    d = mat.shape[0]
    return np.array([np.trace(mat, offset=k) for k in range(-(d - 1), d)])


def phase_distribution(rho, C, partition, max_trace_deficit=1e-6):
    """Bin probabilities ``Re tr[rho E(T_j)]`` over an AnglePartition.

    Values above ``-1e-10`` are clipped at 0; lower values raise.
    """
    r = density_array(rho)
    c = C.c if isinstance(C, PhaseMatrix) else np.asarray(C)
    d = c.shape[0]
    if r.shape != (d, d):
        raise ValidationError("state and phase matrix dimensions differ")
    deficit = abs(np.trace(r).real - 1.0)
    if deficit > max_trace_deficit:
        raise ValidationError(f"state trace deficit {deficit:.3e}: check the truncation")
    # tr[rho E] = sum_{m,n} rho[n, m] c[m, n] K(m - n)
    weights = _diagonal_sums(r * c.T)
    ks = np.arange(-(d - 1), d)
    kern = np.array([angle_kernel_integral(ks, iv) for iv in partition.intervals()])
    p = (kern @ weights).real
    if np.min(p) < -1e-10:
        raise ValidationError(f"negative bin probability {np.min(p):.3e}")
    return np.clip(p, 0.0, None)


def phase_moment(rho, C, k=1):
    """``tr[rho integral exp(i k theta) dE(theta)]``."""
    r = density_array(rho)
    c = C.c if isinstance(C, PhaseMatrix) else np.asarray(C)
    d = c.shape[0]
    if k >= d or k <= -d:
        return 0j
    # integral exp(ik theta) dE = sum_m c[m, m+k] |m><m+k|
    m = np.arange(max(0, -k), min(d, d - k))
    return complex(np.sum(c[m, m + k] * r[m + k, m]))


def circular_variance(rho, C):
    """``1 - |E[exp(i theta)]|`` of the phase distribution."""
    return 1.0 - abs(phase_moment(rho, C, 1))


def structure_vectors(C, rel_cutoff=1e-12):
    """Minimal Kolmogorov factorization of ``C`` via its eigendecomposition."""
    c = C.c if isinstance(C, PhaseMatrix) else np.asarray(C)
    lam, vec = np.linalg.eigh(c)
    keep = lam > rel_cutoff * lam[-1]
    lam, vec = lam[keep][::-1], vec[:, keep][:, ::-1]
    # C = V diag(lam) V^H, so eta_m = conj(V[m]) sqrt(lam) gives <eta_m|eta_n> = c_mn
    return StructureVectors(vec.conj() * np.sqrt(lam))


def check_covariance(C, theta, interval):
    """Frobenius norm of ``e^{i theta N} E(T) e^{-i theta N} - E(T + theta)``."""
    c = C.c if isinstance(C, PhaseMatrix) else np.asarray(C)
    d = c.shape[0]
    diff = _difference_matrix(d)
    a, b = interval
    rotated = np.exp(1j * theta * diff) * phase_effect(c, (a, b)).matrix
    shifted = phase_effect(c, (a + theta, b + theta)).matrix
    return float(np.linalg.norm(rotated - shifted))


def shift_operator(k, d):
    """``B_k = sum_m |m><m+k|`` truncated to dimension ``d``."""
    return np.eye(d, k=k, dtype=complex)


def commutator_defect(A, partition):
    """Largest Frobenius norm of ``[A, E_can(T_j)]`` over the partition's bins."""
    A = np.asarray(A, dtype=complex)
    d = A.shape[0]
    worst = 0.0
    for iv in partition.intervals():
        E = kernel_matrix(d, iv)
        worst = max(worst, float(np.linalg.norm(A @ E - E @ A)))
    return worst


@dataclass(frozen=True, eq=False)
class MarkovKernel:
    """Weak Markov kernel ``m(X_j, theta)`` over a finite list of outcomes.

    Give either ``values`` (shape ``(n_outcomes, bins)``, piecewise constant on
    ``partition``) or ``func`` mapping an angle array to an
    ``(n_outcomes, len(theta))`` array.
    """

    n_outcomes: int
    partition: Optional[AnglePartition] = None
    values: Optional[np.ndarray] = None
    func: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def __post_init__(self):
        if (self.values is None) == (self.func is None):
            raise ValidationError("give exactly one of values or func")
        if self.values is not None:
            if self.partition is None:
                raise ValidationError("piecewise-constant kernels need a partition")
            v = np.asarray(self.values, dtype=float)
            if v.shape != (self.n_outcomes, self.partition.bins):
                raise ValidationError("kernel values must be (n_outcomes, bins)")
            object.__setattr__(self, "values", v)
            self._validate(v)
        else:
            theta = TWO_PI * np.arange(TRAPEZOID_POINTS) / TRAPEZOID_POINTS
            self._validate(self.sample(theta))

    @staticmethod
    def _validate(v):
        if np.min(v) < -1e-12 or np.max(v) > 1 + 1e-12:
            raise ValidationError("kernel values must lie in [0, 1]")
        if np.max(np.abs(v.sum(axis=0) - 1.0)) > 1e-10:
            raise ValidationError("kernel is not normalized over its outcomes")

    @property
    def piecewise(self):
        return self.values is not None

    def sample(self, theta):
        theta = np.asarray(theta, dtype=float)
        if self.func is not None:
            return np.asarray(self.func(theta), dtype=float).reshape(self.n_outcomes, len(theta))
        cell = np.searchsorted(self.partition.edges, np.mod(theta, TWO_PI), side="right") - 1
        cell = np.clip(cell, 0, self.partition.bins - 1)
        return self.values[:, cell]


def _phi_weights(u):
    """``phi0(u) = int_0^1 (1-s) e^{us} ds`` and ``phi1(u) = int_0^1 s e^{us} ds``."""
    u = np.asarray(u, dtype=complex)
    phi0 = np.empty_like(u)
    phi1 = np.empty_like(u)
    small = np.abs(u) < 0.5
    big = ~small
    ub = u[big]
    eu = np.exp(ub)
    phi0[big] = (eu - 1 - ub) / ub ** 2
    phi1[big] = (eu * (ub - 1) + 1) / ub ** 2
    # series sum_j u^j/(j+2)! and sum_j (j+1) u^j/(j+2)! near the origin
    us = u[small]
    s0 = np.zeros_like(us)
    s1 = np.zeros_like(us)
    term = np.full_like(us, 0.5)
    for j in range(20):
        s0 += term
        s1 += (j + 1) * term
        term = term * us / (j + 3)
    phi0[small] = s0
    phi1[small] = s1
    return phi0, phi1


def _linear_product_integral(kernel, intervals, ks):
    """``(1/2pi) int_T m(theta) e^{ik theta}`` for every outcome, with ``m`` sampled
    on the uniform 4096-point grid, linearly interpolated, and the exponential
    integrated exactly on each segment.  Returns ``(n_outcomes, len(ks))``.
    """
    step = TWO_PI / TRAPEZOID_POINTS
    ks = np.asarray(ks, dtype=float)
    out = np.zeros((kernel.n_outcomes, len(ks)), dtype=complex)
    for lo, hi in intervals:
        inner = np.arange(np.floor(lo / step) + 1, np.ceil(hi / step)) * step
        t = np.concatenate(([lo], inner[(inner > lo) & (inner < hi)], [hi]))
        vals = kernel.sample(t)
        t0, dt = t[:-1], np.diff(t)
        # interior segments share the grid step; only the two end pieces differ
        phi0, phi1 = _phi_weights(1j * np.outer(ks, np.full(len(dt), step)))
        if len(dt) > 0:
            ends = [0, len(dt) - 1]
            e0, e1 = _phi_weights(1j * np.outer(ks, dt[ends]))
            phi0[:, ends], phi1[:, ends] = e0, e1
        base = np.exp(1j * np.outer(ks, t0)) * dt
        out += vals[:, :-1] @ (base * phi0).T + vals[:, 1:] @ (base * phi1).T
    return out / TWO_PI


def _effect_from_coefficients(coeff, d):
    # coeff[..., k + d - 1] is the integral for difference k = m - n
    diff = _difference_matrix(d) + d - 1
    return coeff[..., diff]


def _joint_coefficients(kernel, interval, d):
    ks = np.arange(-(d - 1), d)
    pieces = wrap_interval(*interval)
    if not kernel.piecewise:
        return _linear_product_integral(kernel, pieces, ks)
    coeff = np.zeros((kernel.n_outcomes, len(ks)), dtype=complex)
    for (a, b), weights in zip(kernel.partition.intervals(), kernel.values.T):
        for lo, hi in pieces:
            s, e = max(a, lo), min(b, hi)
            if e > s:
                coeff += np.outer(weights, _kernel_single(ks, s, e))
    return coeff


def joint_observable(kernel, outcome, interval, d):
    """Effect ``M(X_outcome x interval)`` of the joint observable of ``kernel``
    post-processing and the canonical phase."""
    return _effect_from_coefficients(_joint_coefficients(kernel, interval, d)[outcome], d)


def joint_observable_table(kernel, interval, d):
    """``joint_observable`` for every outcome at once, shape ``(n_outcomes, d, d)``."""
    return _effect_from_coefficients(_joint_coefficients(kernel, interval, d), d)


def post_process(kernel, d):
    """Effects ``F(X_j) = int m(X_j, theta) dE_can(theta)`` for every outcome."""
    effects = joint_observable_table(kernel, (0.0, TWO_PI), d)
    total = effects.sum(axis=0)
    if np.max(np.abs(total - np.eye(d))) > 1e-8:
        raise ValidationError("post-processed effects do not sum to the identity")
    return effects


def box_smoothing_kernel(partition, half_width):
    """Kernel ``m(X_j, theta) = (1/2pi) int_{T_j} g(theta' - theta) dtheta'`` for a
    box density ``g`` of half-width ``half_width`` (normalized on the circle)."""
    edges = partition.edges

    def func(theta):
        lo = theta[None, :] - half_width
        hi = theta[None, :] + half_width
        out = np.zeros((partition.bins, len(theta)))
        for shift in (-TWO_PI, 0.0, TWO_PI):
            a = edges[:-1, None] + shift
            b = edges[1:, None] + shift
            out += np.clip(np.minimum(b, hi) - np.maximum(a, lo), 0.0, None)
        return out / (2 * half_width)

    return MarkovKernel(partition.bins, func=func)


def sharp_projection_search(partition, d, tol=1e-10):
    """Diagonal 0/1 projections commuting with every canonical bin effect.

    Exhaustive over the ``2**d`` diagonal projections; returns the survivors
    as 0/1 tuples.
    """
    effects = [kernel_matrix(d, iv) for iv in partition.intervals()]
    survivors = []
    for mask in range(2 ** d):
        s = np.array([(mask >> i) & 1 for i in range(d)], dtype=float)
        ok = all(np.max(np.abs((s[:, None] - s[None, :]) * E)) <= tol for E in effects)
        if ok:
            survivors.append(tuple(int(v) for v in s))
    return survivors


def random_intervals(rng, count) -> Sequence[tuple]:
    rng = np.random.default_rng(rng)
    a = rng.uniform(0, TWO_PI, size=count)
    length = rng.uniform(0, TWO_PI, size=count)
    return [(float(x), float(x + l)) for x, l in zip(a, length)]
