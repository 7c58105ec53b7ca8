"""Measurement models for covariant phase observables.

Instruments map a state and an angle interval to an unnormalized output
state.  All angle integrals are single complex exponentials and go through
``angle_kernel_integral``, so outputs are exactly additive over bins.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from .errors import ValidationError
from .fock import FockVector, density_array
from .phase import PhaseMatrix, StructureVectors, angle_kernel_integral, structure_vectors
from .couplings import o_angle_effect


@dataclass(frozen=True, eq=False)
class InstrumentOutput:
    interval: tuple
    output: np.ndarray = field(repr=False)

    def __post_init__(self):
        out = np.asarray(self.output, dtype=complex)
        if np.max(np.abs(out - out.conj().T), initial=0.0) > 1e-10:
            raise ValidationError("instrument output is not Hermitian")
        if np.linalg.eigvalsh(0.5 * (out + out.conj().T))[0] < -1e-10:
            raise ValidationError("instrument output is not positive semidefinite")
        out.setflags(write=False)
        object.__setattr__(self, "output", out)

    @property
    def weight(self):
        return float(np.trace(self.output).real)

    def posterior(self):
        w = self.weight
        if w <= 0:
            raise ValidationError("posterior undefined for a zero-probability outcome")
        return self.output / w


def _embed(eta, d):
    """Structure vectors as rows of a ``(d_in, d)`` array, zero-padded."""
    eta = np.asarray(eta, dtype=complex)
    if eta.shape[1] > d:
        raise ValidationError("structure vectors have more components than the output space")
    out = np.zeros((eta.shape[0], d), dtype=complex)
    out[:, : eta.shape[1]] = eta
    return out


def _shift_kernel(d, interval):
    """``K4[j, l, m, n] = K((j - l) + (m - n))`` for output ``j, l`` and input ``m, n``."""
    ks = np.arange(-2 * (d - 1), 2 * d - 1)
    table = angle_kernel_integral(ks, interval)
    idx = np.arange(d)
    total = (idx[:, None, None, None] - idx[None, :, None, None]
             + idx[None, None, :, None] - idx[None, None, None, :])
    return table[total + 2 * (d - 1)]


def rank1_map(rho, eta, interval):
    """Linear map behind the rank-one covariant instrument (no state checks).

    ``out[j, l] = sum_{m,n} rho[n, m] eta_n[j] conj(eta_m[l]) K(j - l + m - n)``.
    """
    r = np.asarray(rho, dtype=complex)
    d = r.shape[0]
    E = _embed(eta, d)
    K4 = _shift_kernel(d, interval)
    return np.einsum("nm,nj,ml,jlmn->jl", r, E, E.conj(), K4)


def rank1_covariant_instrument(rho, C, eta, interval):
    """Rank-one covariant instrument of the phase observable ``C`` on ``interval``.

    ``eta`` is a StructureVectors (or ``(d, rank)`` array) whose Gram matrix is ``C``.
    """
    r = density_array(rho)
    c = C.c if isinstance(C, PhaseMatrix) else np.asarray(C)
    eta = eta.eta if isinstance(eta, StructureVectors) else np.asarray(eta, dtype=complex)
    d = r.shape[0]
    if c.shape != (d, d) or eta.shape[0] != d:
        raise ValidationError("state, phase matrix and structure vectors disagree in dimension")
    if np.max(np.abs(eta.conj() @ eta.T - c)) > 1e-8:
        raise ValidationError("structure vectors do not reproduce the phase matrix")
    return InstrumentOutput(tuple(interval), rank1_map(r, eta, interval))


def canonical_nuclear_map(rho, eta, interval):
    """``int_interval sigma_theta tr[rho E_can(dtheta)]``, ``sigma_theta = e^{i theta N}|eta><eta|e^{-i theta N}``.

    The canonical density is grouped by frequency: ``s_D = sum_{m - n = D} rho[n, m]``.
    """
    r = np.asarray(rho, dtype=complex)
    d = r.shape[0]
    v = np.zeros(d, dtype=complex)
    v[: len(eta)] = eta
    s = np.array([np.trace(r, offset=D) for D in range(-(d - 1), d)])  # rho[n, n + D]
    idx = np.arange(d)
    jl = idx[:, None] - idx[None, :]
    freqs = np.arange(-(d - 1), d)
    kern = angle_kernel_integral(jl[:, :, None] + freqs[None, None, :], interval)
    return np.outer(v, v.conj()) * (kern @ s)


def canonical_nuclear_instrument(rho, eta, interval):
    """Nuclear instrument of the canonical phase with posterior ``sigma_theta``."""
    r = density_array(rho)
    v = eta.amp if isinstance(eta, FockVector) else np.asarray(eta, dtype=complex)
    if abs(np.linalg.norm(v) - 1.0) > 1e-10:
        raise ValidationError("posterior vector must be normalized")
    if len(v) > r.shape[0]:
        raise ValidationError("posterior vector exceeds the state dimension")
    return InstrumentOutput(tuple(interval), canonical_nuclear_map(r, v, interval))


def instrument_over_partition(rho, C, partition, eta=None):
    """Rank-one outputs on every bin; ``eta`` defaults to the structure vectors of ``C``."""
    eta = structure_vectors(C) if eta is None else eta
    return [rank1_covariant_instrument(rho, C, eta, iv) for iv in partition.intervals()]


def choi_matrix(linear_map, d):
    """``sum_{ij} |i><j| (x) map(|i><j|)`` for a linear map on ``d x d`` matrices."""
    out = np.zeros((d * d, d * d), dtype=complex)
    for i in range(d):
        for j in range(d):
            unit = np.zeros((d, d), dtype=complex)
            unit[i, j] = 1.0
            out[i * d : (i + 1) * d, j * d : (j + 1) * d] = linear_map(unit)
    return out


def choi_min_eigenvalue(linear_map, d):
    ch = choi_matrix(linear_map, d)
    return float(np.linalg.eigvalsh(0.5 * (ch + ch.conj().T))[0])


def swap_operator(d):
    """``SWAP (psi (x) phi) = phi (x) psi`` in the product basis ``p * d + q``."""
    idx = np.arange(d * d)
    p, q = np.divmod(idx, d)
    S = np.zeros((d * d, d * d))
    S[q * d + p, idx] = 1.0
    return S


def antisymmetric_projector(d):
    """``sum_{n < k} |phi_nk^-><phi_nk^-|`` with ``phi_nk^- = (|n,k> - |k,n>)/sqrt(2)``."""
    P = np.zeros((d * d, d * d))
    for n in range(d):
        for k in range(n + 1, d):
            v = np.zeros(d * d)
            v[n * d + k] = 1.0 / np.sqrt(2.0)
            v[k * d + n] = -1.0 / np.sqrt(2.0)
            P += np.outer(v, v)
    return P


def swap_hamiltonian_check(d):
    """Frobenius distance between ``exp(i pi P_antisym)`` and SWAP."""
    if d > 24:
        raise ValidationError("swap check is limited to d <= 24")
    U = expm(1j * np.pi * antisymmetric_projector(d))
    return float(np.linalg.norm(U - swap_operator(d)))


def dilation_check(rho, interval, d=None):
    """``|tr[(rho (x) |0><0|) O_angle(interval)] - tr[rho E_can(interval)]|``."""
    r = density_array(rho)
    d = r.shape[0] if d is None else d
    if r.shape != (d, d):
        raise ValidationError("state dimension mismatch")
    vac = np.zeros((d, d))
    vac[0, 0] = 1.0
    lhs = np.trace(np.kron(r, vac) @ o_angle_effect(interval, d))
    diff = np.subtract.outer(np.arange(d), np.arange(d))
    rhs = np.trace(r @ angle_kernel_integral(diff, interval))
    return float(abs(lhs - rhs))
