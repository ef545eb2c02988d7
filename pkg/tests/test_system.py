import itertools

import numpy as np
import pytest
import scipy.integrate
import scipy.linalg
from hypothesis import given, settings, strategies as st

from conftest import random_system, rotation
from oueigen.errors import HypoellipticityViolated, InputError, NotDiagonalizable, ShapeMismatch, UnstableDrift
from oueigen.system import (
    Tolerances,
    finite_time_covariance,
    spectral_decomposition,
    spectrum,
    stationary_covariance,
    validate_system,
)

seeds = st.integers(0, 2**32 - 1)
dims = st.integers(1, 5)


def char_poly(A):
    """Faddeev-LeVerrier coefficients of det(t I - A), highest power first."""
    d = A.shape[0]
    coeffs = [1.0]
    M = np.zeros_like(A)
    for k in range(1, d + 1):
        M = A @ M + coeffs[-1] * np.eye(d)
        coeffs.append(-np.trace(A @ M) / k)
    return np.array(coeffs)


def test_identity_system():
    s = validate_system(-np.eye(2), np.eye(2))
    assert np.array_equal(s.Q, 0.5 * np.eye(2))


def test_unstable_drift():
    with pytest.raises(UnstableDrift):
        validate_system(np.diag([1.0, -2.0]), np.eye(2))


def test_hypoellipticity_violation():
    with pytest.raises(HypoellipticityViolated):
        validate_system(np.diag([-1.0, -2.0]), np.array([[1.0], [0.0]]))


def test_hypoelliptic_system_accepted():
    A = np.array([[0.0, 1.0], [-1.0, -1.0]])
    s = validate_system(A, np.array([[0.0], [1.0]]))
    assert np.linalg.eigvalsh(stationary_covariance(s).Sigma).min() > 0


def test_shape_errors():
    with pytest.raises(ShapeMismatch):
        validate_system(np.ones((2, 3)), np.eye(2))
    with pytest.raises(ShapeMismatch):
        validate_system(-np.eye(2), np.eye(3))
    with pytest.raises(ShapeMismatch):
        validate_system(-np.eye(2), np.ones((2, 3)))


def test_jordan_block_rejected():
    with pytest.raises(NotDiagonalizable):
        validate_system(np.array([[-1.0, 1.0], [0.0, -1.0]]), np.eye(2))


def test_tolerance_overrides():
    s = validate_system(-np.eye(2), np.eye(2), {"condition_threshold": 10.0})
    assert s.tolerances.condition_threshold == 10.0
    with pytest.raises(InputError):
        Tolerances().updated({"nonsense": 1.0})


def test_decomposition_identity():
    dec = spectral_decomposition(validate_system(-np.eye(2), np.eye(2)))
    assert np.allclose(dec.eigenvalues, [1, 1])
    assert dec.is_real == (True, True)
    assert np.allclose(np.abs(dec.left_eigenvectors), np.eye(2))


def test_decomposition_rotation():
    a, b = 0.7, 1.9
    dec = spectral_decomposition(rotation(a, b))
    assert dec.classification == ("complex-pair(1)", "complex-pair(0)")
    assert np.allclose(sorted(dec.eigenvalues, key=lambda z: z.imag), [a - 1j * b, a + 1j * b])
    assert dec.l == 1 and dec.l_prime == 0


def test_real_eigenspaces_first():
    s = random_system(5, 3, n_pairs=1)
    assert spectral_decomposition(s).is_real == (True, True, True, False, False)


@pytest.mark.parametrize("seed", range(5))
def test_eigenvalues_match_characteristic_roots(seed):
    s = random_system(3, seed)
    roots = np.roots(char_poly(np.asarray(s.A)))
    lam = -spectral_decomposition(s).eigenvalues
    for r in roots:
        assert np.min(np.abs(lam - r)) < 1e-8


def test_spectrum_examples():
    dec = spectral_decomposition(validate_system(-np.eye(2), np.eye(2)))
    assert sorted(mu.real for _, mu in spectrum(dec, 2)) == [-2, -1, 0]
    dec = spectral_decomposition(validate_system(np.diag([-1.0, -2.0]), np.eye(2)))
    got = dict(spectrum(dec, 2))
    expected = {(0, 0): 0, (1, 0): -1, (2, 0): -2, (0, 1): -2, (1, 1): -3, (0, 2): -4}
    assert set(got) == set(expected)
    for n, mu in expected.items():
        assert got[n] == pytest.approx(mu)


def test_spectrum_rotation_formula():
    a, b = 1.3, 0.4
    dec = spectral_decomposition(rotation(a, b))
    for n, mu in spectrum(dec, 4):
        m_, n_ = n
        assert abs(mu - (-(m_ + n_) * a + 1j * (m_ - n_) * b)) < 1e-12


def test_stationary_covariance_scalar_balance():
    s = validate_system(-np.eye(3), np.sqrt(2) * np.eye(3))
    assert np.allclose(stationary_covariance(s).Sigma, np.eye(3))
    a, sig = 0.8, 1.7
    s = validate_system(-a * np.eye(2), sig * np.eye(2))
    assert np.allclose(stationary_covariance(s).Sigma, sig**2 / (2 * a) * np.eye(2))


def _quadrature_covariance(A, W, T):
    f = lambda t: scipy.linalg.expm(t * A) @ W @ scipy.linalg.expm(t * A.T)
    return scipy.integrate.quad_vec(f, 0.0, T, epsabs=1e-13, epsrel=1e-12, limit=500)[0]


@pytest.mark.parametrize("seed", range(3))
def test_stationary_covariance_quadrature(seed):
    s = random_system(3, seed)
    A, W = np.asarray(s.A), s.B @ s.B.T
    S = stationary_covariance(s).Sigma
    assert np.allclose(S, _quadrature_covariance(A, W, 80.0), atol=1e-9 * np.abs(S).max())


def test_finite_time_covariance():
    s = random_system(2, 0)
    assert np.array_equal(finite_time_covariance(s, 0.0).Sigma, np.zeros((2, 2)))
    a, sig, t = 0.6, 1.4, 0.9
    s1 = validate_system(np.array([[-a]]), np.array([[sig]]))
    expected = sig**2 * (1 - np.exp(-2 * a * t)) / (2 * a)
    assert finite_time_covariance(s1, t).Sigma[0, 0] == pytest.approx(expected, rel=1e-12)
    s2 = rotation(0.5, 1.0)
    S_inf = stationary_covariance(s2).Sigma
    assert np.allclose(finite_time_covariance(s2, 50 / 0.5).Sigma, S_inf, atol=1e-10)


def test_finite_time_matches_quadrature():
    s = random_system(3, 8)
    A, W = np.asarray(s.A), s.B @ s.B.T
    assert np.allclose(finite_time_covariance(s, 1.3).Sigma, _quadrature_covariance(A, W, 1.3), atol=1e-10)


@settings(max_examples=40, deadline=None)
@given(dims, seeds)
def test_decomposition_invariants(d, seed):
    s = random_system(d, seed)
    dec = spectral_decomposition(s)
    lam, F = dec.eigenvalues, dec.left_eigenvectors
    assert np.all(lam.real > 0)
    assert np.allclose(np.linalg.norm(F, axis=1), 1.0)
    A = np.asarray(s.A)
    resid = np.linalg.norm(F.conj() @ A + lam[:, None] * F.conj()) / np.linalg.norm(A)
    assert resid <= 1e-10
    for k, p in enumerate(dec.partner):
        if p is not None:
            assert lam[p] == np.conj(lam[k])
            assert np.array_equal(F[p], np.conj(F[k]))


@settings(max_examples=40, deadline=None)
@given(dims, seeds)
def test_lyapunov_residual(d, seed):
    s = random_system(d, seed)
    S = stationary_covariance(s).Sigma
    W = s.B @ s.B.T
    A = np.asarray(s.A)
    assert np.linalg.norm(A @ S + S @ A.T + W) / np.linalg.norm(W) <= 1e-10
    assert np.allclose(S, S.T)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 4), seeds, st.integers(0, 4))
def test_spectrum_is_minkowski_sum(d, seed, m):
    dec = spectral_decomposition(random_system(d, seed))
    got = sorted((round(mu.real, 8), round(mu.imag, 8)) for _, mu in spectrum(dec, m))
    vals = [v for v, _ in dec.distinct]
    brute = set()
    for n in itertools.product(range(m + 1), repeat=len(vals)):
        if sum(n) <= m:
            mu = -sum(k * v for k, v in zip(n, vals))
            brute.add((n, round(mu.real, 8), round(mu.imag, 8)))
    assert got == sorted((r, i) for _, r, i in brute)
