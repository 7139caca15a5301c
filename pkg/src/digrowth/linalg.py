"""Small dense linear-ODE kernels for positive switched systems.

Public wrappers over :mod:`digrowth._kernels` that validate their inputs:
matrix exponentials, exact propagation through piecewise-constant
schedules, the Perron root of nonnegative matrices and the scalar
variation-of-constants formula.
"""

from __future__ import annotations

from typing import Callable, Iterable, Sequence

import numpy as np
from scipy import integrate

from . import _kernels
from .errors import InvalidArgumentError, NumericFailure

SPECTRAL_TOL = 1e-12
SPECTRAL_MAXITER = 100_000


def _square(A, name="A") -> np.ndarray:
    A = np.array(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] == 0:
        raise InvalidArgumentError(f"{name} must be a non-empty square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise InvalidArgumentError(f"{name} has non-finite entries")
    return A


def is_metzler(A) -> bool:
    """True when every off-diagonal entry of ``A`` is nonnegative."""
    return bool(_kernels.is_metzler(_square(A)))


def expm(A, t: float = 1.0) -> np.ndarray:
    """Matrix exponential e^{tA}.

    Metzler generators with ``t >= 0`` go through a shifted Taylor kernel
    that is exactly nonnegative; everything else uses Pade-13 scaling and
    squaring.
    """
    A = _square(A)
    t = float(t)
    if not np.isfinite(t):
        raise InvalidArgumentError("t must be finite")
    return _kernels.expm_auto(A, t)


def _schedule_arrays(schedule, n=None):
    durations = []
    mats = []
    for k, (d, A) in enumerate(schedule):
        d = float(d)
        if not np.isfinite(d) or d < 0:
            raise InvalidArgumentError(f"segment {k}: duration must be finite and >= 0, got {d}")
        A = _square(A, f"segment {k} generator")
        if n is None:
            n = A.shape[0]
        elif A.shape[0] != n:
            raise InvalidArgumentError(
                f"segment {k}: generator is {A.shape[0]}x{A.shape[0]}, expected {n}x{n}"
            )
        durations.append(d)
        mats.append(A)
    if not mats:
        return np.zeros(0), np.zeros((0, n or 0, n or 0)), n
    return np.array(durations), np.stack(mats), n


def propagate(schedule: Iterable[tuple[float, np.ndarray]], x0) -> np.ndarray:
    """Integrate dx/dt = A_k x through consecutive segments.

    ``schedule`` is a sequence of ``(duration, A)`` pairs applied in order;
    the state at the end of one segment is the initial condition of the
    next.  Returns the final state.
    """
    x0 = np.array(x0, dtype=float)
    if x0.ndim != 1 or not np.all(np.isfinite(x0)):
        raise InvalidArgumentError("x0 must be a finite vector")
    if np.any(x0 < 0):
        raise InvalidArgumentError("x0 must be componentwise nonnegative")
    durations, mats, _ = _schedule_arrays(list(schedule), n=x0.shape[0])
    if durations.size == 0:
        return x0.copy()
    return _kernels.switched_apply(durations, mats, x0)


def switched_product(schedule: Sequence[tuple[float, np.ndarray]]) -> np.ndarray:
    """Product of segment exponentials, later segments on the left."""
    durations, mats, _ = _schedule_arrays(list(schedule))
    if durations.size == 0:
        raise InvalidArgumentError("empty schedule has no dimension")
    return _kernels.switched_product(durations, mats)


def spectral_radius(
    M,
    *,
    tol: float = SPECTRAL_TOL,
    maxiter: int = SPECTRAL_MAXITER,
    perturb: float = 0.0,
) -> tuple[float, np.ndarray]:
    """Perron root and a nonnegative eigenvector of a nonnegative matrix.

    Uses power iteration from the uniform vector.  ``perturb`` adds
    ``perturb * ones / n`` before iterating, which makes reducible inputs
    irreducible; it is off by default.

    Raises:
        InvalidArgumentError: ``M`` has a negative entry.
        NumericFailure: no convergence within ``maxiter`` iterations; the
            exception's ``estimate`` holds the last Rayleigh estimate.
    """
    M = _square(M, "M")
    if np.any(M < 0):
        raise InvalidArgumentError("spectral_radius expects a nonnegative matrix")
    if perturb:
        if perturb < 0:
            raise InvalidArgumentError("perturb must be >= 0")
        M = M + perturb / M.shape[0]
    rho, x, _, ok = _kernels.power_iteration(M, float(tol), int(maxiter))
    if not ok:
        raise NumericFailure(
            f"power iteration did not converge in {maxiter} iterations", estimate=rho
        )
    return float(rho), x


def scalar_linear_solution(a: float, b: Callable[[float], float], t: float, x0: float) -> float:
    """Solution at time ``t`` of dx/dt = a x + b(s), x(0) = x0.

    Evaluates e^{ta} (x0 + int_0^t e^{-sa} b(s) ds) with adaptive
    quadrature.
    """
    a, t, x0 = float(a), float(t), float(x0)
    if not all(np.isfinite(v) for v in (a, t, x0)):
        raise InvalidArgumentError("a, t and x0 must be finite")
    if t == 0.0:
        return x0
    # e^{(t-s)a} keeps the integrand bounded for large |ta|.
    val, _ = integrate.quad(lambda s: np.exp((t - s) * a) * b(s), 0.0, t,
                            epsabs=0.0, epsrel=1e-13, limit=200)
    return float(np.exp(t * a) * x0 + val)
