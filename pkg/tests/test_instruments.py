import math

import numpy as np
import pytest

from phasekit.errors import ValidationError
from phasekit.fock import make_state, phase_shift_unitary, random_density
from phasekit.instruments import (
    InstrumentOutput,
    antisymmetric_projector,
    canonical_nuclear_instrument,
    canonical_nuclear_map,
    choi_min_eigenvalue,
    dilation_check,
    instrument_over_partition,
    rank1_covariant_instrument,
    rank1_map,
    swap_hamiltonian_check,
    swap_operator,
)
from phasekit.phase import PhaseMatrix, kernel_matrix, phase_effect, structure_vectors
from phasekit.quadrature import TWO_PI, AnglePartition


def _unit(d, n=0):
    v = np.zeros(d, dtype=complex)
    v[n] = 1
    return v


def test_vacuum_posterior_over_full_circle(rng):
    d = 8
    rho = random_density(d, rng)
    out = rank1_covariant_instrument(rho, PhaseMatrix.canonical(d), np.tile(_unit(d), (d, 1)), (0, TWO_PI))
    ref = np.zeros((d, d))
    ref[0, 0] = 1
    np.testing.assert_allclose(out.output, ref, atol=1e-12)
    np.testing.assert_allclose(out.posterior(), ref, atol=1e-12)


@pytest.mark.parametrize("seed", range(6))
def test_weight_matches_observable(seed):
    rng = np.random.default_rng(seed)
    d = 7
    rho = random_density(d, rng)
    C = PhaseMatrix.random(d, 3, rng)
    a = rng.uniform(0, TWO_PI)
    iv = (a, a + rng.uniform(0, TWO_PI))
    out = rank1_covariant_instrument(rho, C, structure_vectors(C), iv)
    assert out.weight == pytest.approx(np.trace(rho.mat @ phase_effect(C, iv).matrix).real, abs=1e-9)


def test_covariance(rng):
    d = 6
    rho = random_density(d, rng).mat
    C = PhaseMatrix.random(d, 2, rng)
    eta = structure_vectors(C)
    iv = (0.4, 1.9)
    for theta in np.arange(8) * TWO_PI / 8:
        U = phase_shift_unitary(theta, d)
        lhs = U @ rank1_map(U.conj().T @ rho @ U, eta.eta, iv) @ U.conj().T
        rhs = rank1_map(rho, eta.eta, (iv[0] + theta, iv[1] + theta))
        assert np.max(np.abs(lhs - rhs)) <= 1e-9


def test_additivity_and_normalization(rng):
    d = 6
    rho = random_density(d, rng)
    C = PhaseMatrix.random(d, 3, rng)
    eta = structure_vectors(C).eta
    whole = rank1_map(rho.mat, eta, (0.5, 2.5))
    parts = rank1_map(rho.mat, eta, (0.5, 1.2)) + rank1_map(rho.mat, eta, (1.2, 2.5))
    assert np.max(np.abs(whole - parts)) <= 1e-12
    outs = instrument_over_partition(rho, C, AnglePartition.uniform(9))
    assert sum(o.weight for o in outs) == pytest.approx(1.0, abs=1e-9)


def test_rank1_validation():
    d = 4
    C = PhaseMatrix.random(d, 2, 0)
    with pytest.raises(ValidationError):
        rank1_covariant_instrument(np.eye(d) / d, C, np.tile(_unit(d), (d, 1)), (0, 1))
    with pytest.raises(ValidationError):
        rank1_covariant_instrument(np.eye(3) / 3, C, structure_vectors(C), (0, 1))


def test_nuclear_examples(rng):
    d = 8
    iv = (1.0, 3.0)
    # vacuum input: uniform density, posterior averaged over the interval
    v = np.ones(d, dtype=complex) / math.sqrt(d)
    out = canonical_nuclear_instrument(make_state("number", 0, dim=d), v, iv)
    ts = np.linspace(iv[0], iv[1], 20001)
    sig = np.array([np.outer(np.exp(1j * t * np.arange(d)) * v, np.conj(np.exp(1j * t * np.arange(d)) * v)) for t in ts])
    avg = (sig.sum(axis=0) - 0.5 * (sig[0] + sig[-1])) / (len(ts) - 1)
    np.testing.assert_allclose(out.output, (2.0 / TWO_PI) * avg, atol=1e-8)
    # number-state posterior stays put
    rho = random_density(d, rng)
    out = canonical_nuclear_instrument(rho, make_state("number", 3, dim=d), iv)
    P = np.zeros((d, d))
    P[3, 3] = 1
    np.testing.assert_allclose(out.output, out.weight * P, atol=1e-14)
    with pytest.raises(ValidationError):
        canonical_nuclear_instrument(rho, 2 * v, iv)


@pytest.mark.parametrize("seed", range(5))
def test_nuclear_matches_rank1_with_canonical_matrix(seed):
    rng = np.random.default_rng(seed)
    d = 7
    rho = random_density(d, rng)
    v = rng.normal(size=d) + 1j * rng.normal(size=d)
    v /= np.linalg.norm(v)
    a = rng.uniform(0, TWO_PI)
    iv = (a, a + rng.uniform(0, TWO_PI))
    nuc = canonical_nuclear_instrument(rho, v, iv).output
    r1 = rank1_covariant_instrument(rho, PhaseMatrix.canonical(d), np.tile(v, (d, 1)), iv).output
    assert np.max(np.abs(nuc - r1)) <= 1e-8
    assert np.trace(nuc).real == pytest.approx(np.trace(rho.mat @ kernel_matrix(d, iv)).real, abs=1e-9)


def test_choi_positivity():
    d = 8
    rng = np.random.default_rng(2)
    C = PhaseMatrix.random(d, 3, rng)
    eta = structure_vectors(C).eta
    v = _unit(d, 2) + _unit(d, 5)
    v /= np.linalg.norm(v)
    for iv in AnglePartition.uniform(4).intervals():
        assert choi_min_eigenvalue(lambda X: rank1_map(X, eta, iv), d) >= -1e-8
        assert choi_min_eigenvalue(lambda X: canonical_nuclear_map(X, v, iv), d) >= -1e-8


def test_output_validation():
    with pytest.raises(ValidationError):
        InstrumentOutput((0, 1), np.array([[1, 1j], [1j, 1]]))
    with pytest.raises(ValidationError):
        InstrumentOutput((0, 1), np.diag([1.0, -0.1]))
    with pytest.raises(ValidationError):
        InstrumentOutput((0, 1), np.zeros((2, 2))).posterior()


def test_swap():
    assert swap_hamiltonian_check(2) <= 1e-12
    assert swap_hamiltonian_check(8) <= 1e-10
    S = swap_operator(5)
    np.testing.assert_array_equal(S @ S, np.eye(25))
    a, b = np.arange(5.0), np.arange(5.0) ** 2
    np.testing.assert_array_equal(S @ np.kron(a, b), np.kron(b, a))
    P = antisymmetric_projector(4)
    np.testing.assert_allclose(P @ P, P, atol=1e-15)
    with pytest.raises(ValidationError):
        swap_hamiltonian_check(25)


def test_dilation(rng):
    d = 24
    rho = random_density(d, rng)
    assert dilation_check(rho, (0, TWO_PI)) <= 1e-12
    assert dilation_check(make_state("coherent", 1.0, dim=d).density(), (0, math.pi)) <= 1e-9
    worst = 0.0
    for _ in range(10):
        a = rng.uniform(0, TWO_PI)
        worst = max(worst, dilation_check(random_density(d, rng), (a, a + rng.uniform(0, TWO_PI))))
    assert worst <= 1e-8
    with pytest.raises(ValidationError):
        dilation_check(rho, (0, 1), d=12)
