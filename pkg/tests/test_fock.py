import math

import numpy as np
import pytest
from scipy.special import i0
from scipy.stats import poisson

from phasekit.errors import TruncationError, ValidationError
from phasekit.fock import (
    DensityMatrix,
    FockVector,
    TwoModeVector,
    annihilation,
    coherent_amplitudes,
    density_array,
    make_state,
    number_operator,
    phase_shift_unitary,
    random_density,
)


def test_number_state():
    s = make_state("number", 3, dim=8)
    assert isinstance(s, FockVector) and s.amp[3] == 1 and s.leakage == 0
    with pytest.raises(TruncationError):
        make_state("number", 8, dim=8)


@pytest.mark.parametrize("alpha", [0.5, 1.0 + 1.0j, -2.0])
def test_coherent_photon_statistics_are_poisson(alpha):
    s = make_state("coherent", alpha, dim=40)
    n = np.arange(40)
    np.testing.assert_allclose(np.abs(s.amp) ** 2, poisson.pmf(n, abs(alpha) ** 2), atol=1e-14)
    # eigenvector of the annihilation operator away from the cut
    a = annihilation(40)
    np.testing.assert_allclose((a @ s.amp)[:30], alpha * s.amp[:30], atol=1e-12)


def test_coherent_leakage_guard():
    with pytest.raises(TruncationError):
        make_state("coherent", 4.0, dim=16)
    s = make_state("coherent", 4.0, dim=16, max_leakage=1.0)
    assert s.leakage == pytest.approx(1 - poisson.cdf(15, 16.0), rel=1e-9)


def test_coherent_vacuum_amplitude():
    amp = coherent_amplitudes(0.0, 5)
    np.testing.assert_array_equal(amp, [1, 0, 0, 0, 0])


@pytest.mark.parametrize("alpha", [0.5, 1.0, 1.2 + 0.9j])
def test_pair_coherent_normalization(alpha):
    s = make_state("pair_coherent", alpha, dim=32)
    assert isinstance(s, TwoModeVector)
    # C(alpha)^-2 = sum |alpha|^{2n}/n!^2 = I0(2|alpha|)
    diag = np.abs(np.diag(s.amp)) ** 2 * i0(2 * abs(alpha))
    n = np.arange(32)
    np.testing.assert_allclose(diag, np.array([abs(alpha) ** (2 * k) / math.factorial(k) ** 2 for k in n]), rtol=1e-12)
    assert np.vdot(s.amp, s.amp).real == pytest.approx(1.0, abs=1e-12)


def test_two_mode_phase_coherent():
    s = make_state("two_mode_phase_coherent", 2, 0.5j, dim=20)
    assert s.amp[0, 2] == pytest.approx(math.sqrt(0.75))
    assert s.amp[3, 5] == pytest.approx(math.sqrt(0.75) * (0.5j) ** 3)
    assert s.leakage == pytest.approx(0.25 ** 18)
    with pytest.raises(ValidationError):
        make_state("two_mode_phase_coherent", 0, 1.0, dim=8)


@pytest.mark.parametrize("n", [0, 1, 4, 7])
def test_monomial_norm(n):
    s = make_state("monomial", n, dim=10)
    assert s.norm == pytest.approx(math.sqrt(math.comb(2 * n, n)))
    assert np.vdot(s.amp, s.amp).real == pytest.approx(1.0)
    assert s.amp[1, 1] * s.norm == pytest.approx(-n if n else 0)


def test_unknown_kind():
    with pytest.raises(ValidationError):
        make_state("squeezed", 1.0)


def test_density_matrix_validation():
    with pytest.raises(ValidationError):
        DensityMatrix(np.array([[0.5, 0.1], [0.0, 0.5]]))
    with pytest.raises(ValidationError):
        DensityMatrix(np.eye(2))
    with pytest.raises(ValidationError):
        DensityMatrix(np.diag([1.5, -0.5]))
    rho = DensityMatrix.from_vector([1.0, 1.0j])
    np.testing.assert_allclose(rho.mat, [[0.5, -0.5j], [0.5j, 0.5]])
    with pytest.raises(ValueError):
        rho.mat[0, 0] = 1


def test_density_array_coercions():
    v = make_state("number", 1, dim=3)
    np.testing.assert_array_equal(density_array(v), np.diag([0, 1, 0]))
    np.testing.assert_array_equal(density_array(np.array([0, 1.0])), np.diag([0, 1.0]))
    rho = random_density(5, 3)
    assert density_array(rho) is rho.mat


def test_random_density_is_valid():
    for seed in range(5):
        rho = random_density(6, seed, rank=2)
        assert np.linalg.matrix_rank(rho.mat, tol=1e-10) == 2


def test_operators():
    d = 6
    N = number_operator(d)
    a = annihilation(d)
    np.testing.assert_allclose(a.conj().T @ a, N, atol=1e-14)
    U = phase_shift_unitary(0.3, d)
    np.testing.assert_allclose(U, np.diag(np.exp(0.3j * np.arange(d))))
