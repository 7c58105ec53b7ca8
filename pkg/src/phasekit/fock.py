"""States and basic operators on the truncated number basis ``|0>, ..., |d-1>``."""

from dataclasses import dataclass, field
import math

import numpy as np
from scipy.special import gammaln

from .errors import TruncationError, ValidationError
from .special import bessel_j0

DEFAULT_DIM = 32
DEFAULT_MAX_LEAKAGE = 1e-6


@dataclass(frozen=True, eq=False)
class FockVector:
    """Single-mode amplitudes; ``amp[n]`` is the coefficient of ``|n>``.

    ``leakage`` is the squared norm lost to truncation and ``norm`` the norm of
    the untruncated vector before any normalization (1 for physical states).
    """

    amp: np.ndarray
    leakage: float = 0.0
    norm: float = 1.0

    def __post_init__(self):
        a = np.asarray(self.amp, dtype=complex)
        if a.ndim != 1 or not np.all(np.isfinite(a)):
            raise ValidationError("FockVector amplitudes must be a finite 1-d array")
        if np.vdot(a, a).real > 1 + 1e-12:
            raise ValidationError("FockVector norm exceeds 1")
        a.setflags(write=False)
        object.__setattr__(self, "amp", a)

    @property
    def dim(self):
        return len(self.amp)

    def density(self, normalize=True):
        return DensityMatrix.from_vector(self.amp, normalize=normalize)


@dataclass(frozen=True, eq=False)
class TwoModeVector:
    """Two-mode amplitudes; ``amp[m, n]`` multiplies ``|m> (x) |n>``."""

    amp: np.ndarray
    leakage: float = 0.0
    norm: float = 1.0

    def __post_init__(self):
        a = np.asarray(self.amp, dtype=complex)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or not np.all(np.isfinite(a)):
            raise ValidationError("TwoModeVector amplitudes must be a finite square array")
        if np.vdot(a, a).real > 1 + 1e-12:
            raise ValidationError("TwoModeVector norm exceeds 1")
        a.setflags(write=False)
        object.__setattr__(self, "amp", a)

    @property
    def dim(self):
        return self.amp.shape[0]

    @classmethod
    def product(cls, first, second):
        a = np.outer(_amp(first), _amp(second))
        return cls(a, leakage=max(0.0, 1.0 - np.vdot(a, a).real))


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    mat: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = np.array(self.mat, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValidationError("density matrix must be square")
        if np.max(np.abs(m - m.conj().T), initial=0.0) > 1e-12:
            raise ValidationError("density matrix is not Hermitian")
        if abs(np.trace(m).real - 1.0) > 1e-10:
            raise ValidationError(f"density matrix trace {np.trace(m).real!r} is not 1")
        m = 0.5 * (m + m.conj().T)
        if np.linalg.eigvalsh(m)[0] < -1e-10:
            raise ValidationError("density matrix is not positive semidefinite")
        m.setflags(write=False)
        object.__setattr__(self, "mat", m)

    @property
    def dim(self):
        return self.mat.shape[0]

    @classmethod
    def from_vector(cls, amp, normalize=True):
        v = np.asarray(_amp(amp), dtype=complex)
        if normalize:
            v = v / np.linalg.norm(v)
        return cls(np.outer(v, v.conj()))

    @classmethod
    def diagonal(cls, weights):
        return cls(np.diag(np.asarray(weights, dtype=complex)))


def _amp(obj):
    if isinstance(obj, (FockVector, TwoModeVector)):
        return obj.amp
    return np.asarray(obj)


def density_array(rho):
    """Coerce a DensityMatrix, FockVector or raw array into a matrix."""
    if isinstance(rho, DensityMatrix):
        return rho.mat
    if isinstance(rho, FockVector):
        return np.outer(rho.amp, rho.amp.conj())
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim == 1:
        return np.outer(rho, rho.conj())
    return rho


def number_operator(d):
    return np.diag(np.arange(d, dtype=float))


def phase_shift_unitary(theta, d):
    """``exp(i theta N)`` on the ``d``-dimensional truncation."""
    return np.diag(np.exp(1j * theta * np.arange(d)))


def annihilation(d):
    return np.diag(np.sqrt(np.arange(1, d, dtype=float)), 1)


def _log_abs_power(z, n):
    # n * log|z| with 0**0 == 1
    n = np.asarray(n, dtype=float)
    if z == 0:
        return np.where(n == 0, 0.0, -np.inf)
    return n * math.log(abs(z))


def coherent_amplitudes(alpha, d):
    """``exp(-|a|^2/2) a^n / sqrt(n!)`` for ``n < d``."""
    n = np.arange(d)
    alpha = complex(alpha)
    mag = np.exp(_log_abs_power(alpha, n) - 0.5 * gammaln(n + 1.0) - 0.5 * abs(alpha) ** 2)
    return mag * np.exp(1j * np.angle(alpha) * n)


def _check_leakage(leakage, bound, what):
    if leakage > bound:
        raise TruncationError(f"{what}: truncation leakage {leakage:.3e} exceeds bound {bound:.3e}")


def make_state(kind, *params, dim=DEFAULT_DIM, max_leakage=DEFAULT_MAX_LEAKAGE):
    """Build a named state on the ``dim``-dimensional truncation.

    ``kind`` is one of

    ``"number", n``
        the number state ``|n>``
    ``"coherent", alpha``
        the coherent state ``|alpha>``
    ``"pair_coherent", alpha``
        ``C(alpha) sum_m alpha^m/m! |m>|m>`` with ``C = J0(2i|alpha|)^(-1/2)``
    ``"two_mode_phase_coherent", q, alpha``
        ``(1-|alpha|^2)^(1/2) sum_m alpha^m |m>|m+q>`` for ``|alpha| < 1``
    ``"monomial", n``
        ``sum_m (-1)^m binom(n, m) |m>|m>`` normalized; ``norm`` keeps the
        original norm ``sqrt(binom(2n, n))``

    Single-mode kinds return a FockVector, the others a TwoModeVector.  The
    kept amplitudes are not renormalized (except for ``monomial``), so
    ``leakage`` equals ``1 - ||amp||^2``.
    """
    d = int(dim)
    if d < 1:
        raise ValidationError("dimension must be positive")
    if kind == "number":
        (n,) = params
        if not 0 <= n < d:
            raise TruncationError(f"number state |{n}> lies outside dimension {d}")
        amp = np.zeros(d, dtype=complex)
        amp[n] = 1.0
        return FockVector(amp)

    if kind == "coherent":
        (alpha,) = params
        amp = coherent_amplitudes(alpha, d)
        leakage = max(0.0, 1.0 - float(np.sum(np.abs(amp) ** 2)))
        _check_leakage(leakage, max_leakage, "coherent state")
        return FockVector(amp, leakage=leakage)

    if kind == "pair_coherent":
        (alpha,) = params
        alpha = complex(alpha)
        norm_sq = bessel_j0(2j * abs(alpha)).real
        n = np.arange(d)
        mag = np.exp(_log_abs_power(alpha, n) - gammaln(n + 1.0)) / math.sqrt(norm_sq)
        amp = np.diag(mag * np.exp(1j * np.angle(alpha) * n))
        leakage = max(0.0, 1.0 - float(np.sum(np.abs(amp) ** 2)))
        _check_leakage(leakage, max_leakage, "pair-coherent state")
        return TwoModeVector(amp, leakage=leakage)

    if kind == "two_mode_phase_coherent":
        q, alpha = params
        alpha = complex(alpha)
        if abs(alpha) >= 1:
            raise ValidationError("two-mode phase coherent state needs |alpha| < 1")
        if not 0 <= q < d:
            raise TruncationError(f"offset q={q} lies outside dimension {d}")
        amp = np.zeros((d, d), dtype=complex)
        m = np.arange(d - q)
        amp[m, m + q] = math.sqrt(1 - abs(alpha) ** 2) * alpha ** m
        leakage = abs(alpha) ** (2 * (d - q))
        _check_leakage(leakage, max_leakage, "two-mode phase coherent state")
        return TwoModeVector(amp, leakage=leakage)

    if kind == "monomial":
        (n,) = params
        if not 0 <= n < d:
            raise TruncationError(f"monomial order {n} needs dimension > {n}")
        m = np.arange(n + 1)
        coeff = np.array([(-1) ** k * math.comb(n, k) for k in m], dtype=float)
        norm = float(np.linalg.norm(coeff))
        amp = np.zeros((d, d), dtype=complex)
        amp[m, m] = coeff / norm
        return TwoModeVector(amp, norm=norm)

    raise ValidationError(f"unknown state kind {kind!r}")


def random_density(d, rng=None, rank=None):
    """Random density matrix ``A A^H / tr`` with a complex Gaussian ``d x rank`` factor."""
    rng = np.random.default_rng(rng)
    rank = d if rank is None else rank
    A = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    m = A @ A.conj().T
    return DensityMatrix(m / np.trace(m).real)
