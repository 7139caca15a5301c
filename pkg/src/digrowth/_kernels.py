"""Hot numeric kernels: small dense matrix exponentials, switched products,
Perron-root power iteration and renormalised orbit growth.

Everything here takes and returns float64 ndarrays and stays inside the
numba-supported numpy subset.  Validation lives in the public wrappers.
"""

import numpy as np

from ._jit import njit

# Taylor degree for the nonnegative kernel; the tail after scaling to
# ||X||_1 <= 1 is below sum_{k>18} 1/k! ~ 8e-18.
_TAYLOR_DEGREE = 18

_PADE13 = np.array([
    64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
    1187353796428800.0, 129060195264000.0, 10559470521600.0,
    670442572800.0, 33522128640.0, 1323241920.0, 40840800.0,
    960960.0, 16380.0, 182.0, 1.0,
])
_THETA13 = 5.371920351148152


@njit
def norm1(A):
    n = A.shape[0]
    best = 0.0
    for j in range(n):
        s = 0.0
        for i in range(n):
            s += abs(A[i, j])
        if s > best:
            best = s
    return best


@njit
def is_metzler(A):
    n = A.shape[0]
    for i in range(n):
        for j in range(n):
            if i != j and A[i, j] < 0.0:
                return False
    return True


@njit
def expm_metzler(A, t):
    """e^{tA} for Metzler A and t >= 0 using only nonnegative arithmetic.

    A + cI is nonnegative for c = max(0, -min diag), so every Taylor term
    and every squaring is a sum of nonnegative products: no cancellation,
    entrywise relative accuracy and exact nonnegativity of the result.
    """
    n = A.shape[0]
    c = 0.0
    for i in range(n):
        if -A[i, i] > c:
            c = -A[i, i]
    B = t * A
    for i in range(n):
        B[i, i] += t * c
    nrm = norm1(B)
    s = 0
    if nrm > 1.0:
        s = int(np.ceil(np.log2(nrm)))
    X = B / (2.0 ** s)
    eye = np.eye(n)
    P = eye.copy()
    for k in range(_TAYLOR_DEGREE, 0, -1):
        P = eye + (X @ P) / k
    P *= np.exp(-t * c / (2.0 ** s))
    for _ in range(s):
        P = P @ P
    return P


@njit
def expm_pade(A, t):
    """General e^{tA}: degree-13 Pade with scaling and squaring."""
    n = A.shape[0]
    B = t * A
    nrm = norm1(B)
    s = 0
    if nrm > _THETA13:
        s = int(np.ceil(np.log2(nrm / _THETA13)))
    B = B / (2.0 ** s)
    b = _PADE13
    eye = np.eye(n)
    B2 = B @ B
    B4 = B2 @ B2
    B6 = B4 @ B2
    U = B @ (B6 @ (b[13] * B6 + b[11] * B4 + b[9] * B2)
             + b[7] * B6 + b[5] * B4 + b[3] * B2 + b[1] * eye)
    V = (B6 @ (b[12] * B6 + b[10] * B4 + b[8] * B2)
         + b[6] * B6 + b[4] * B4 + b[2] * B2 + b[0] * eye)
    R = np.ascontiguousarray(np.linalg.solve(V - U, V + U))
    for _ in range(s):
        R = R @ R
    return R


@njit
def expm_auto(A, t):
    if t >= 0.0 and is_metzler(A):
        return expm_metzler(A, t)
    return expm_pade(A, t)


@njit
def switched_product(durations, generators):
    """prod_k e^{d_k A_k}, later segments multiplied on the left."""
    n = generators.shape[1]
    M = np.eye(n)
    for k in range(durations.shape[0]):
        M = expm_auto(generators[k].copy(), durations[k]) @ M
    return M


@njit
def switched_apply(durations, generators, x0):
    x = x0.copy()
    for k in range(durations.shape[0]):
        x = expm_auto(generators[k].copy(), durations[k]) @ x
    return x


@njit
def collatz_wielandt(M, x):
    """Bracket [lo, hi] on the Perron root from a nonnegative vector x.

    Components below 1e-280 count as zero; mass flowing into them makes the
    upper end infinite only when it is not itself negligible.
    """
    z = M @ x
    lo = np.inf
    hi = 0.0
    for i in range(x.shape[0]):
        if x[i] > 1e-280:
            q = z[i] / x[i]
            if q < lo:
                lo = q
            if q > hi:
                hi = q
        elif z[i] > 1e-270:
            hi = np.inf
    return lo, hi, z


# Plain iterations per phase.  If iterating on M stalls (subdominant
# eigenvalue close to -rho, as in imprimitive or nearly imprimitive
# matrices), the same is done on M + alpha I with alpha an upper bound on
# rho: that maps -rho to a much smaller modulus while keeping the Perron
# vector.  Repeated squaring of the shifted matrix is the last resort.
_PLAIN_ITERATIONS = 2000
_MAX_SQUARINGS = 64
_BRACKET_FLOOR = 1e-8
_WINDOW = 8


@njit
def _iterate(M, B, alpha, x, tol, budget):
    """Power steps on B = M + alpha I; brackets are taken on M.

    The Rayleigh stop compares the largest change over the last
    ``_WINDOW`` steps with that of the window before; their ratio gives the
    contraction rate even when a complex subdominant pair makes single
    changes oscillate.

    Returns (rho, x, steps, converged, hi) with hi the last upper bracket.
    """
    rho = 0.0
    prev = -1.0
    hi = np.inf
    deltas = np.zeros(2 * _WINDOW)
    filled = 0
    for it in range(1, budget + 1):
        y = B @ x
        total = y.sum()
        if total <= 0.0:
            return 0.0, x, it, True, 0.0
        xn = y / total
        rho = total - alpha
        lo, hi, z = collatz_wielandt(M, xn)
        x = xn
        if 0.0 < hi < np.inf and hi - lo <= tol * hi:
            return z.sum(), x, it, True, hi
        if hi == 0.0 and alpha == 0.0 and z.sum() == 0.0:
            # M x = 0 on the support of x and nothing leaves it
            return 0.0, x, it, True, hi
        if prev >= 0.0:
            deltas[filled % (2 * _WINDOW)] = abs(rho - prev)
            filled += 1
        prev = rho
        if filled >= 2 * _WINDOW:
            recent = 0.0
            older = 0.0
            for k in range(_WINDOW):
                recent = max(recent, deltas[(filled - 1 - k) % (2 * _WINDOW)])
                older = max(older, deltas[(filled - 1 - _WINDOW - k) % (2 * _WINDOW)])
            consistent = lo <= rho * (1.0 + tol) and rho <= hi * (1.0 + tol)
            if consistent and recent < older:
                q = (recent / older) ** (1.0 / _WINDOW)
                if recent <= tol * rho * (1.0 - q):
                    return rho, x, it, True, hi
            elif consistent and recent == 0.0:
                return rho, x, it, True, hi
    return rho, x, budget, False, hi


@njit
def power_iteration(M, tol, maxiter):
    """Perron root of a nonnegative matrix.

    Returns (rho, x, iterations, converged).  Each phase stops when the
    Collatz-Wielandt bracket on ``M`` closes to ``tol`` or when the
    estimate lies in the bracket and changes by less than ``tol`` after
    correcting for the observed contraction ratio.  Phases: plain power
    iteration, then iteration on ``M + alpha I``, then repeated squaring of
    the normalized shifted matrix.  Every product counts toward
    ``maxiter``.
    """
    n = M.shape[0]
    x = np.full(n, 1.0 / n)
    used = 0
    budget = min(maxiter, _PLAIN_ITERATIONS)
    rho, x, it, ok, hi = _iterate(M, M, 0.0, x, tol, budget)
    used += it
    if ok:
        return rho, x, used, True

    alpha = hi if (np.isfinite(hi) and hi > 0.0) else norm1(M)
    B = M + alpha * np.eye(n)
    budget = min(maxiter - used, _PLAIN_ITERATIONS)
    if budget > 0:
        rho, x, it, ok, hi = _iterate(M, B, alpha, np.full(n, 1.0 / n), tol, budget)
        used += it
        if ok:
            return rho, x, used, True

    P = B / max(norm1(B), 1e-300)
    ones = np.ones(n)
    for _ in range(_MAX_SQUARINGS):
        if used >= maxiter:
            break
        used += 1
        P = P @ P
        s = norm1(P)
        if s == 0.0 or not np.isfinite(s):
            break
        P = P / s
        y = P @ ones
        total = y.sum()
        if total <= 0.0:
            break
        xn = y / total
        lo, hi, z = collatz_wielandt(M, xn)
        est = z.sum()
        if 0.0 < hi < np.inf and hi - lo <= tol * hi:
            return est, xn, used, True
        # Eigenvector conditioning can keep the bracket just above tol even
        # though the estimate is stationary; accept that only while the
        # bracket still certifies the root to _BRACKET_FLOOR.
        if abs(est - rho) <= tol * est and 0.0 < hi < np.inf and hi - lo <= _BRACKET_FLOOR * hi:
            return est, xn, used, True
        x = xn
        rho = est
    return rho, x, used, False


@njit
def orbit_log_norms(M, x0, periods):
    """log ||M^j x0||_1 for j = 0..periods, renormalising every step."""
    out = np.empty(periods + 1)
    x = x0.copy()
    acc = np.log(x.sum())
    x = x / x.sum()
    out[0] = acc
    for j in range(1, periods + 1):
        x = M @ x
        s = x.sum()
        acc += np.log(s)
        x = x / s
        out[j] = acc
    return out
