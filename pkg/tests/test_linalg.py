import math

import mpmath
import numpy as np
import pytest
from conftest import ode_oracle, random_metzler, random_schedule, rk4_richardson

from digrowth.errors import InvalidArgumentError, NumericFailure
from digrowth.linalg import (
    expm,
    is_metzler,
    propagate,
    scalar_linear_solution,
    spectral_radius,
    switched_product,
)


def mp_expm(A, t):
    mpmath.mp.dps = 40
    E = mpmath.expm(mpmath.matrix(A.tolist()) * t)
    return np.array(E.tolist(), dtype=float)


@pytest.mark.parametrize("seed", range(8))
def test_expm_metzler_matches_high_precision(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 7))
    A = random_metzler(rng, n, diag=(-5, 2), off=(0, 3))
    t = float(rng.uniform(0.1, 6))
    ref = mp_expm(A, t)
    got = expm(A, t)
    assert np.all(got >= 0)
    assert np.max(np.abs(got - ref) / np.abs(ref).max()) < 1e-13


@pytest.mark.parametrize("seed", range(4))
def test_expm_general_matrix(seed):
    rng = np.random.default_rng(100 + seed)
    A = rng.normal(size=(4, 4))
    ref = mp_expm(A, 1.7)
    assert np.allclose(expm(A, 1.7), ref, rtol=1e-12, atol=1e-13 * np.abs(ref).max())


def test_expm_negative_time_is_inverse(rng):
    A = random_metzler(rng, 4)
    assert np.allclose(expm(A, -1.3) @ expm(A, 1.3), np.eye(4), atol=1e-12)


def test_expm_zero_and_scalar():
    A = np.array([[-2.0, 1.0], [0.5, -1.0]])
    assert np.array_equal(expm(A, 0.0), np.eye(2))
    assert expm(np.array([[0.7]]), 2.0)[0, 0] == pytest.approx(math.exp(1.4), rel=1e-15)


def test_expm_against_rk4(rng):
    A = random_metzler(rng, 5)
    x0 = rng.uniform(0, 1, 5)
    assert np.allclose(expm(A, 2.0) @ x0, rk4_richardson(A, x0, 2.0), rtol=1e-11)


def test_is_metzler():
    assert is_metzler(np.array([[-1.0, 0.0], [2.0, 3.0]]))
    assert not is_metzler(np.array([[1.0, -1e-9], [0.0, 1.0]]))


def test_rejects_bad_matrices():
    with pytest.raises(InvalidArgumentError):
        expm(np.ones((2, 3)))
    with pytest.raises(InvalidArgumentError):
        expm(np.array([[np.nan]]))
    with pytest.raises(InvalidArgumentError):
        expm(np.eye(2), np.inf)


def test_propagate_matches_ode_oracle(rng):
    sched = random_schedule(rng, 4, 3)
    x0 = rng.uniform(0, 1, 4)
    ref = ode_oracle(sched, x0)
    assert np.allclose(propagate(sched, x0), ref, rtol=1e-9)


def test_propagate_equals_product(rng):
    sched = random_schedule(rng, 3, 4)
    x0 = np.array([1.0, 0.0, 2.0])
    assert np.allclose(switched_product(sched) @ x0, propagate(sched, x0), rtol=1e-13)


def test_propagate_validation(rng):
    sched = random_schedule(rng, 3, 2)
    with pytest.raises(InvalidArgumentError, match="nonnegative"):
        propagate(sched, [1.0, -1.0, 0.0])
    with pytest.raises(InvalidArgumentError, match="expected 2x2"):
        propagate(sched, [1.0, 1.0])
    with pytest.raises(InvalidArgumentError, match="duration"):
        propagate([(-1.0, np.eye(3))], np.ones(3))
    assert np.array_equal(propagate([], [1.0, 2.0]), [1.0, 2.0])


def test_spectral_radius_matches_eigvals(rng):
    for _ in range(20):
        M = rng.uniform(0, 1, (5, 5))
        rho, x = spectral_radius(M)
        assert rho == pytest.approx(max(abs(np.linalg.eigvals(M))), rel=1e-11)
        assert np.all(x >= 0)
        # the vector is a by-product; its residual tracks the stopping rule
        assert np.abs(M @ x - rho * x).max() <= 1e-8 * rho * x.max()


def test_spectral_radius_periodic_matrix():
    # eigenvalues +-1: a plain power iteration oscillates
    M = np.array([[0.0, 1.0], [1.0, 0.0]])
    rho, _ = spectral_radius(M)
    assert rho == pytest.approx(1.0, rel=1e-12)


def test_spectral_radius_reducible_and_zero():
    M = np.array([[2.0, 1.0], [0.0, 3.0]])
    assert spectral_radius(M)[0] == pytest.approx(3.0, rel=1e-10)
    assert spectral_radius(np.zeros((3, 3)))[0] == 0.0


def test_spectral_radius_errors():
    with pytest.raises(InvalidArgumentError):
        spectral_radius(np.array([[1.0, -0.1], [0.0, 1.0]]))
    # ratio of the top two eigenvalues is 1 - 1e-9: too slow for 3 iterations
    M = np.diag([1.0, 1.0 - 1e-9]) + 1e-12
    with pytest.raises(NumericFailure) as info:
        spectral_radius(M, maxiter=3)
    assert info.value.estimate == pytest.approx(1.0, rel=1e-6)


def test_scalar_linear_solution_closed_form():
    # dx/dt = a x + c, x(0) = x0
    a, c, x0, t = -0.7, 2.0, 1.5, 3.0
    exact = math.exp(a * t) * x0 + c * (math.exp(a * t) - 1) / a
    assert scalar_linear_solution(a, lambda s: c, t, x0) == pytest.approx(exact, rel=1e-12)
    assert scalar_linear_solution(a, lambda s: c, 0.0, x0) == x0


@pytest.mark.parametrize(
    "M",
    [
        # nilpotent: the Rayleigh quotient repeats once before reaching 0
        [[0.0, 0.0, 1.0, 0.0], [1.0, 0.0, 0.0, 0.0], [0.0] * 4, [0.0] * 4],
        # imprimitive block with eigenvalues +-sqrt(2)
        [[0.0, 1.0, 0.0, 0.0], [2.0, 0.0, 0.0, 0.0], [0.0] * 4, [0.0] * 4],
        # two equal consecutive estimates far from convergence
        [[1.0, 2.0, 2.0, 2.0], [2.0, 2.0, 1.0, 2.0], [2.0] * 4, [2.0] * 4],
        # reducible, period two in the dominant class, decaying transient class
        [
            [0.0, 0.0, 0.287, 0.0, 8.983],
            [9.928, 0.0, 1.126, 0.0, 0.0],
            [9.717, 0.0, 0.0, 3.487, 0.0],
            [0.0, 0.0, 0.0, 0.152, 0.0],
            [0.0] * 5,
        ],
    ],
)
def test_spectral_radius_hard_cases(M):
    M = np.array(M)
    rho, _ = spectral_radius(M)
    assert rho == pytest.approx(max(abs(np.linalg.eigvals(M))), rel=1e-10, abs=1e-12)
