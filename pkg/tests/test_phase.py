import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from phasekit.errors import ValidationError
from phasekit.fock import DensityMatrix, make_state, number_operator, random_density
from phasekit.phase import (
    TRAPEZOID_POINTS,
    MarkovKernel,
    PhaseMatrix,
    angle_kernel_integral,
    box_smoothing_kernel,
    check_covariance,
    circular_variance,
    commutator_defect,
    joint_observable,
    joint_observable_table,
    kernel_matrix,
    phase_distribution,
    phase_effect,
    phase_moment,
    post_process,
    sharp_projection_search,
    shift_operator,
    structure_vectors,
    wrap_interval,
)
from phasekit.quadrature import TWO_PI, AnglePartition


def _trapezoid_kernel(k, a, b, n=10_000):
    t = np.linspace(a, b, n + 1)
    f = np.exp(1j * k * t)
    return (f.sum() - 0.5 * (f[0] + f[-1])) * (b - a) / n / TWO_PI


def _london_bins(alpha, d, edges, nodes=16):
    """Bin masses of |<theta|alpha>|^2 / 2pi by Gauss-Legendre per bin, amplitudes by direct series."""
    c = np.array([math.exp(-abs(alpha) ** 2 / 2) * alpha ** m / math.sqrt(math.factorial(m)) for m in range(d)])
    x, w = np.polynomial.legendre.leggauss(nodes)
    out = []
    for a, b in zip(edges[:-1], edges[1:]):
        t = 0.5 * (b - a) * x + 0.5 * (a + b)
        amp = np.exp(-1j * np.outer(t, np.arange(d))) @ c
        out.append(0.5 * (b - a) * np.sum(w * np.abs(amp) ** 2) / TWO_PI)
    return np.array(out)


# --- angle kernel ----------------------------------------------------------------


def test_kernel_examples():
    assert angle_kernel_integral(0, (0, TWO_PI)) == pytest.approx(1)
    assert abs(angle_kernel_integral(3, (0, TWO_PI))) < 1e-15
    assert angle_kernel_integral(-1, (0, math.pi)) == pytest.approx(-1j / math.pi)
    assert abs(_trapezoid_kernel(-1, 0, math.pi) - (-1j / math.pi)) < 1e-8


@given(st.integers(-20, 20), st.floats(0, TWO_PI), st.floats(0, TWO_PI))
@settings(max_examples=100, deadline=None)
def test_kernel_matches_trapezoid(k, a, length):
    b = a + length
    ref = sum(_trapezoid_kernel(k, lo, hi) for lo, hi in wrap_interval(a, b))
    assert abs(angle_kernel_integral(k, (a, b)) - ref) < 1e-6


def test_wrap_interval():
    assert wrap_interval(0, TWO_PI) == [(0.0, TWO_PI)]
    assert wrap_interval(1.0, 1.0) == []
    lo, hi = wrap_interval(6.0, 7.0)
    assert lo == (6.0, TWO_PI) and hi[0] == 0.0 and hi[1] == pytest.approx(7.0 - TWO_PI)
    with pytest.raises(ValidationError):
        wrap_interval(2.0, 1.0)


# --- phase matrices and effects ----------------------------------------------------


def test_phase_matrix_validation():
    with pytest.raises(ValidationError):
        PhaseMatrix(np.array([[1, 2], [2, 1]]))
    with pytest.raises(ValidationError):
        PhaseMatrix(np.array([[1, 0.5], [0.4, 1]]))
    with pytest.raises(ValidationError):
        PhaseMatrix(np.array([[0.9, 0], [0, 1]]))
    C = PhaseMatrix(np.array([[1 + 1e-9, 0.5], [0.5, 1]]))
    assert C.c[0, 0] == 1.0


def test_canonical_effect_examples():
    C = PhaseMatrix.canonical(6)
    np.testing.assert_allclose(phase_effect(C, (0, TWO_PI)).matrix, np.eye(6), atol=1e-15)
    E = phase_effect(C, (0.5, 2.0)).matrix
    np.testing.assert_allclose(np.diag(E).real, 1.5 / TWO_PI)
    assert phase_effect(C, (0, math.pi)).matrix[0, 1] == pytest.approx(-1j / math.pi)


@pytest.mark.parametrize("seed", range(10))
def test_effects_psd_and_normalized(seed):
    rng = np.random.default_rng(seed)
    d = int(rng.integers(2, 16))
    C = PhaseMatrix.random(d, int(rng.integers(1, d + 1)), rng)
    cuts = np.sort(rng.uniform(0, TWO_PI, 5))
    part = AnglePartition(np.concatenate(([0.0], cuts, [TWO_PI])))
    effects = [phase_effect(C, iv).matrix for iv in part.intervals()]
    for E in effects:
        ev = np.linalg.eigvalsh(E)
        assert ev[0] >= -1e-10 and ev[-1] <= 1 + 1e-10
    np.testing.assert_allclose(sum(effects), np.eye(d), atol=1e-9)


def test_vacuum_and_number_states_are_uniform():
    part = AnglePartition.uniform(12)
    for n in (0, 3):
        rho = make_state("number", n, dim=8).density()
        for C in (PhaseMatrix.canonical(8), PhaseMatrix.random(8, 3, 1)):
            np.testing.assert_allclose(phase_distribution(rho, C, part), 1 / 12, atol=1e-15)


def test_london_histogram():
    d, K = 32, 360
    part = AnglePartition.uniform(K)
    rho = make_state("coherent", 1.0, dim=d).density()
    p = phase_distribution(rho, PhaseMatrix.canonical(d), part)
    ref = _london_bins(1.0, d, part.edges)
    assert np.max(np.abs(p - ref)) < 1e-8
    assert abs(p.sum() - 1) < 1e-9


def test_london_complex_amplitude_peaks_at_its_argument():
    part = AnglePartition.uniform(64)
    rho = make_state("coherent", 2 * np.exp(1.0j), dim=32).density()
    p = phase_distribution(rho, PhaseMatrix.canonical(32), part)
    assert abs(part.midpoints[np.argmax(p)] - 1.0) < TWO_PI / 64


def test_distribution_errors():
    part = AnglePartition.uniform(4)
    with pytest.raises(ValidationError):
        phase_distribution(np.eye(3) / 3, PhaseMatrix.canonical(4), part)
    with pytest.raises(ValidationError):
        phase_distribution(np.eye(4) / 3, PhaseMatrix.canonical(4), part)


def test_phase_moment_and_variance():
    rho = make_state("coherent", 1.5, dim=32).density()
    C = PhaseMatrix.canonical(32)
    # E[e^{i theta}] from the distribution on a fine partition
    part = AnglePartition.uniform(2000)
    p = phase_distribution(rho, C, part)
    assert abs(phase_moment(rho, C, 1) - np.sum(p * np.exp(1j * part.midpoints))) < 1e-5
    assert phase_moment(rho, C, 40) == 0
    assert 0 < circular_variance(rho, C) < 1
    assert circular_variance(make_state("number", 2, dim=32).density(), C) == pytest.approx(1.0)


# --- structure vectors --------------------------------------------------------------


def test_structure_vectors_examples():
    sv = structure_vectors(PhaseMatrix.canonical(7))
    assert sv.rank == 1
    np.testing.assert_allclose(sv.eta, sv.eta[0:1].repeat(7, axis=0), atol=1e-12)
    sv = structure_vectors(PhaseMatrix.trivial(5))
    assert sv.rank == 5
    np.testing.assert_allclose(sv.gram(), np.eye(5), atol=1e-12)
    idx = np.minimum(np.arange(8), 1)
    C = PhaseMatrix((idx[:, None] == idx[None, :]).astype(float))
    sv = structure_vectors(C)
    assert sv.rank == 2
    assert np.max(np.abs(sv.gram() - C.c)) < 1e-9


@given(st.integers(1, 14), st.integers(0, 2 ** 31))
@settings(max_examples=60, deadline=None)
def test_structure_vectors_reconstruct(d, seed):
    rng = np.random.default_rng(seed)
    C = PhaseMatrix.random(d, int(rng.integers(1, d + 1)), rng)
    sv = structure_vectors(C)
    assert np.max(np.abs(np.linalg.norm(sv.eta, axis=1) - 1)) < 1e-10
    assert np.max(np.abs(sv.gram() - C.c)) < 1e-9


# --- covariance ----------------------------------------------------------------------


def test_covariance_examples():
    C = PhaseMatrix.canonical(10)
    assert check_covariance(C, 0.0, (0.3, 1.0)) == 0.0
    assert check_covariance(C, math.pi / 3, (0, math.pi / 2)) <= 1e-12


@given(st.integers(0, 2 ** 31), st.floats(0, TWO_PI), st.floats(0, TWO_PI), st.floats(0, TWO_PI))
@settings(max_examples=100, deadline=None)
def test_covariance_random(seed, theta, a, length):
    C = PhaseMatrix.random(9, 3, seed)
    assert check_covariance(C, theta, (a, a + length)) <= 1e-10


# --- commutation and sharpness --------------------------------------------------------


def test_shift_operator():
    B = shift_operator(2, 5)
    v = np.arange(5.0)
    np.testing.assert_array_equal(B @ v, [2, 3, 4, 0, 0])
    np.testing.assert_array_equal(shift_operator(-1, 3), np.eye(3, k=-1))


def test_commutator_examples():
    part = AnglePartition.uniform(8)
    assert commutator_defect(3.0 * np.eye(16), part) <= 1e-14
    P0 = np.zeros((16, 16))
    P0[0, 0] = 1
    assert commutator_defect(P0, part) > 0.01
    assert commutator_defect(number_operator(16), part) > 0


def test_commutator_nonscalar_sweep():
    part = AnglePartition.uniform(8)
    for seed in range(50):
        rng = np.random.default_rng(seed)
        B = rng.normal(size=(12, 12)) + 1j * rng.normal(size=(12, 12))
        A = B + B.conj().T
        A -= np.trace(A) / 12 * np.eye(12)
        assert commutator_defect(A, part) > 1e-6


def test_only_trivial_sharp_projections_commute():
    survivors = sharp_projection_search(AnglePartition.uniform(8), 8)
    assert sorted(survivors) == [(0,) * 8, (1,) * 8]


# --- Markov kernels, post-processing, joint observables ------------------------------------


def test_markov_kernel_validation():
    part = AnglePartition.uniform(4)
    with pytest.raises(ValidationError):
        MarkovKernel(2, part, values=np.full((2, 4), 0.6))
    with pytest.raises(ValidationError):
        MarkovKernel(2, part, values=np.full((2, 3), 0.5))
    with pytest.raises(ValidationError):
        MarkovKernel(2)
    with pytest.raises(ValidationError):
        MarkovKernel(1, func=lambda t: 1.5 * np.ones((1, len(t))))


def test_identity_post_processing():
    part = AnglePartition.uniform(6)
    kern = MarkovKernel(6, part, values=np.eye(6))
    F = post_process(kern, 10)
    for j, iv in enumerate(part.intervals()):
        np.testing.assert_allclose(F[j], kernel_matrix(10, iv), atol=1e-14)


def test_trivial_post_processing():
    mu = np.array([0.2, 0.5, 0.3])
    kern = MarkovKernel(3, func=lambda t: np.outer(mu, np.ones_like(t)))
    F = post_process(kern, 7)
    for j in range(3):
        np.testing.assert_allclose(F[j], mu[j] * np.eye(7), atol=1e-12)


def test_box_smoothing_against_fourier_oracle():
    part = AnglePartition.uniform(8)
    half = 1.5 * TWO_PI / 8  # three-bin box
    kern = box_smoothing_kernel(part, half)
    d = 12
    F = post_process(kern, d)
    k = np.subtract.outer(np.arange(d), np.arange(d))
    damping = np.sinc(k * half / np.pi)  # sin(k w)/(k w)
    for j, iv in enumerate(part.intervals()):
        # linear interpolation of the kinked kernel on the 4096-point grid limits this
        assert np.max(np.abs(F[j] - kernel_matrix(d, iv) * damping)) < 1e-6
    assert TRAPEZOID_POINTS == 4096


def test_joint_observable_margins_and_positivity():
    part = AnglePartition.uniform(8)
    kern = box_smoothing_kernel(part, 1.5 * TWO_PI / 8)
    d = 12
    F = post_process(kern, d)
    np.testing.assert_allclose(joint_observable_table(kern, (0, TWO_PI), d), F, atol=1e-9)
    for iv in [(0.2, 1.7), (5.0, 7.0)]:
        table = joint_observable_table(kern, iv, d)
        np.testing.assert_allclose(table.sum(axis=0), kernel_matrix(d, iv), atol=1e-9)
        for j in range(kern.n_outcomes):
            np.testing.assert_allclose(joint_observable(kern, j, iv, d), table[j])
            assert np.linalg.eigvalsh(table[j])[0] >= -1e-10


def test_piecewise_joint_observable():
    part = AnglePartition.uniform(4)
    vals = np.array([[1, 0.5, 0, 0.25], [0, 0.5, 1, 0.75]])
    kern = MarkovKernel(2, part, values=vals)
    d = 6
    iv = (1.0, 4.0)
    M0 = joint_observable(kern, 0, iv, d)
    # direct sum over bin pieces
    ref = np.zeros((d, d), dtype=complex)
    for (a, b), v in zip(part.intervals(), vals[0]):
        lo, hi = max(a, 1.0), min(b, 4.0)
        if hi > lo:
            ref += v * kernel_matrix(d, (lo, hi))
    np.testing.assert_allclose(M0, ref, atol=1e-14)
    np.testing.assert_allclose(M0 + joint_observable(kern, 1, iv, d), kernel_matrix(d, iv), atol=1e-14)
