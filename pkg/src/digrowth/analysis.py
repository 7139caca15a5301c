"""Growth of the periodic system: monodromy, Lyapunov exponent, thresholds.

The monodromy ``M(m, T)`` maps the population at the start of a period to
the population one period later.  Its Perron root ``lambda`` decides
growth; ``Lambda = log(lambda) / T`` is the long-run growth rate per unit
time.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _kernels
from .bounds import CircuitBound, H, circuit_bound
from .circuits import Circuit, best_circuit, format_circuit, growth_index_qcircuit, growth_index_system
from .errors import DomainError, InvalidArgumentError, NoCircuitFound, NumericFailure
from .linalg import SPECTRAL_MAXITER, SPECTRAL_TOL, spectral_radius
from .network import DynamicNetwork, SystemParams, assemble

VERDICT_TOL = 1e-9
_STEP_EXPONENT = 200.0


def _params(params) -> SystemParams:
    return params if isinstance(params, SystemParams) else SystemParams(*params)


def monodromy(net: DynamicNetwork, params: SystemParams) -> np.ndarray:
    """One-period transition matrix, later seasons multiplied on the left."""
    return assemble(net, _params(params)).monodromy()


def scaled_monodromy(net: DynamicNetwork, params: SystemParams) -> tuple[np.ndarray, float]:
    """Monodromy as ``(M / e^s, s)`` with ``M / e^s`` of unit 1-norm.

    Each generator is shifted by its logarithmic 1-norm ``c`` so that
    ``e^{h(A - cI)}`` has norm at most 1, and long seasons are cut into
    steps with ``h ||A - cI||_1 <= _STEP_EXPONENT``.  The product is
    renormalized after every step, so long periods neither overflow nor
    underflow.
    """
    sys = assemble(net, _params(params))
    n = sys.n
    M = np.eye(n)
    log_scale = 0.0
    for d, A in sys.segments:
        off = np.abs(A).sum(axis=0) - np.abs(np.diag(A))
        c = float(np.max(np.diag(A) + off))
        B = np.ascontiguousarray(A - c * np.eye(n))
        steps = max(1, math.ceil(d * _kernels.norm1(B) / _STEP_EXPONENT))
        h = d / steps
        E = _kernels.expm_auto(B, h)
        for _ in range(steps):
            M = E @ M
            nrm = np.abs(M).sum(axis=0).max()
            if nrm == 0.0:
                return M, -math.inf
            M /= nrm
            log_scale += math.log(nrm) + c * h
    return M, log_scale


def classify(log_lambda: float, tol: float = VERDICT_TOL) -> str:
    """``source``, ``sink`` or ``marginal`` from ``log(lambda)``."""
    if log_lambda > math.log1p(tol):
        return "source"
    if log_lambda < math.log1p(-tol):
        return "sink"
    return "marginal"


@dataclass
class CircuitReport:
    """One circuit's contribution to a report."""

    circuit: str
    q: int
    chi_c: float
    bound: CircuitBound | None = None
    H: float | None = None


@dataclass
class GrowthReport:
    """Outcome of a single ``(m, T)`` analysis.

    Attributes:
        params: The ``(m, T)`` pair.
        lam: Perron root of the monodromy; may be ``inf`` for huge growth.
        Lyapunov: ``log(lam) / T``, computed without forming ``lam``.
        verdict: ``source``, ``sink``, ``marginal`` or ``failed``.
        chi: Growth index of the system.
        circuits: Circuits examined, with their bounds when requested.
    """

    params: SystemParams
    lam: float
    Lyapunov: float
    verdict: str
    chi: float
    circuits: list[CircuitReport] = field(default_factory=list)
    note: str = ""

    def as_dict(self) -> dict:
        return {
            "m": self.params.m,
            "T": self.params.T,
            "lambda": self.lam,
            "Lambda": self.Lyapunov,
            "verdict": self.verdict,
            "chi": self.chi,
            "circuits": [
                {
                    "circuit": c.circuit,
                    "q": c.q,
                    "chi_c": c.chi_c,
                    "H": c.H,
                    **(
                        {"C": c.bound.C, "L": c.bound.L, "mu": c.bound.mu, "T_star": c.bound.T_star}
                        if c.bound
                        else {}
                    ),
                }
                for c in self.circuits
            ],
            "note": self.note,
        }


def log_perron_root(
    net: DynamicNetwork,
    params: SystemParams,
    *,
    tol: float = SPECTRAL_TOL,
    maxiter: int = SPECTRAL_MAXITER,
    perturb: float = 0.0,
) -> float:
    """``log(lambda)`` of the monodromy, robust to over- and underflow."""
    M, log_scale = scaled_monodromy(net, params)
    if log_scale == -math.inf:
        return -math.inf
    try:
        rho, _ = spectral_radius(M, tol=tol, maxiter=maxiter, perturb=perturb)
    except NumericFailure as exc:
        est = exc.estimate
        raise NumericFailure(
            str(exc), estimate=(math.log(est) + log_scale) if est and est > 0 else None
        ) from None
    if rho <= 0.0:
        return -math.inf
    return math.log(rho) + log_scale


def lyapunov(
    net: DynamicNetwork,
    params: SystemParams,
    *,
    tol: float = VERDICT_TOL,
    circuits: Sequence[Circuit] | bool = False,
    perturb: float = 0.0,
) -> GrowthReport:
    """Perron root, Lyapunov exponent and verdict at one ``(m, T)``.

    Args:
        tol: Half-width of the marginal band around ``lambda = 1``.
        circuits: Circuits whose bounds go into the report; ``True`` uses
            the best circuit found by :func:`best_circuit`.
        perturb: Passed to :func:`spectral_radius`.

    Raises:
        NumericFailure: power iteration failed; ``exc.report`` holds the
            partial report built from the last estimate.
    """
    params = _params(params)
    chi = growth_index_system(net)
    reports = _circuit_reports(net, params, circuits)
    try:
        log_lam = log_perron_root(net, params, perturb=perturb)
    except NumericFailure as exc:
        est = exc.estimate
        exc.report = GrowthReport(
            params,
            math.exp(est) if est is not None else math.nan,
            est / params.T if est is not None else math.nan,
            "failed",
            chi,
            reports,
            note=str(exc),
        )
        raise
    lam = math.exp(log_lam) if log_lam < 709.0 else math.inf
    return GrowthReport(params, lam, log_lam / params.T, classify(log_lam, tol), chi, reports)


def _circuit_reports(net, params, circuits) -> list[CircuitReport]:
    if circuits is False or circuits is None:
        return []
    if circuits is True:
        try:
            circuits = [best_circuit(net)[0]]
        except NoCircuitFound:
            return []
    out = []
    for c in circuits:
        chi_c = growth_index_qcircuit(net, c)
        try:
            b = circuit_bound(net, c, T=params.T)
            h = H(params.m, params.T, b)
        except DomainError:
            b, h = None, None
        out.append(CircuitReport(format_circuit(c), c.q, chi_c, b, h))
    return out


def entry_growth(net: DynamicNetwork, params: SystemParams, i: int, j: int) -> float:
    """Entry ``(i, j)`` of the monodromy (0-based sites).

    ``M[i, i] > 1`` certifies growth, because the Perron root of a
    nonnegative matrix is at least its largest diagonal entry.
    """
    if not (0 <= i < net.n and 0 <= j < net.n):
        raise InvalidArgumentError(f"entry ({i}, {j}) out of range for {net.n} sites")
    return float(monodromy(net, params)[i, j])


def longrun_lyapunov(
    net: DynamicNetwork,
    params: SystemParams,
    x0=None,
    first: int = 50,
    last: int = 100,
    window: int | None = None,
) -> float:
    """Growth rate from repeated application of the monodromy.

    Fits the slope of ``log sum_{i<w} ||x((j+i)T)||_1`` for ``j = first..last``
    by least squares, renormalizing every period. Summing over ``w``
    consecutive periods cancels the periodic factor carried by imprimitive
    monodromies, whose period always divides ``lcm(1..n)``; that is the
    default for ``w``. Pass ``window=1`` for the plain norm fit.
    """
    params = _params(params)
    if window is None:
        window = math.lcm(*range(1, net.n + 1))
    if window < 1 or first < 0 or last <= first:
        raise InvalidArgumentError("need window >= 1 and 0 <= first < last")
    M, log_scale = scaled_monodromy(net, params)
    x0 = np.ones(net.n) if x0 is None else np.asarray(x0, dtype=float)
    end = last + window - 1
    logs = _kernels.orbit_log_norms(M, x0, end) + log_scale * np.arange(end + 1)
    if window > 1:
        stacked = np.lib.stride_tricks.sliding_window_view(logs, window)
        logs = np.logaddexp.reduce(stacked, axis=1)
    j = np.arange(first, last + 1)
    slope = np.polyfit(j, logs[first : last + 1], 1)[0]
    return float(slope / params.T)


@dataclass
class ThresholdResult:
    """Smallest growth-inducing ``m`` in a bracket.

    Attributes:
        m_star: Lower edge of the first growth interval, or ``None``.
        upper_edge: Where that interval ends inside the bracket, or ``None``
            if growth persists up to ``m_hi``.
        grid: Coarse scan values of ``m``.
        log_lambda: ``log(lambda)`` on the coarse grid.
    """

    T: float
    m_star: float | None
    upper_edge: float | None
    grid: np.ndarray
    log_lambda: np.ndarray


def _bisect_log(f, lo, hi, rtol):
    """Shrink ``[lo, hi]`` in log scale, keeping ``f(lo) != f(hi)``."""
    f_lo = f(lo)
    while hi / lo - 1.0 > rtol:
        mid = math.sqrt(lo * hi)
        if f(mid) == f_lo:
            lo = mid
        else:
            hi = mid
    return lo, hi


def threshold_search(
    net: DynamicNetwork,
    T: float,
    m_lo: float,
    m_hi: float,
    *,
    n_grid: int = 64,
    rtol: float = 1e-4,
) -> ThresholdResult:
    """Locate the first ``m`` in ``[m_lo, m_hi]`` where the system grows.

    A log-spaced scan finds the first grid point with ``lambda > 1``;
    bisection in ``log m`` then narrows the sign change to relative width
    ``rtol`` and returns its upper end.  Growth can stop again at larger
    ``m``; the end of the first growth interval is located the same way.
    """
    if not (0 < m_lo < m_hi) or not all(map(math.isfinite, (m_lo, m_hi))):
        raise InvalidArgumentError(f"need 0 < m_lo < m_hi, got [{m_lo}, {m_hi}]")
    if n_grid < 2:
        raise InvalidArgumentError("n_grid must be >= 2")
    grid = np.geomspace(m_lo, m_hi, n_grid)

    def log_lam(m):
        return log_perron_root(net, SystemParams(m, T))

    def grows(m):
        return log_lam(m) > 0.0

    values = np.array([log_lam(m) for m in grid])
    src = values > 0.0
    if not src.any():
        return ThresholdResult(T, None, None, grid, values)
    i = int(np.argmax(src))
    m_star = grid[0] if i == 0 else _bisect_log(grows, grid[i - 1], grid[i], rtol)[1]
    upper = None
    after = np.nonzero(~src[i:])[0]
    if after.size:
        k = i + int(after[0])
        upper = _bisect_log(grows, grid[k - 1], grid[k], rtol)[0]
    return ThresholdResult(T, float(m_star), None if upper is None else float(upper), grid, values)


@dataclass
class SweepGrid:
    """Lyapunov exponents on a rectangular ``(T, m)`` grid.

    ``Lambda[a, b]`` belongs to ``T_values[a]`` and ``m_values[b]``.
    """

    m_values: np.ndarray
    T_values: np.ndarray
    Lambda: np.ndarray
    log_lambda: np.ndarray
    verdict: np.ndarray
    errors: dict = field(default_factory=dict)
    threshold_curve: list[ThresholdResult] | None = None

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("T,m,Lambda,lambda,verdict\n")
        for a, T in enumerate(self.T_values):
            for b, m in enumerate(self.m_values):
                ll = self.log_lambda[a, b]
                lam = math.exp(ll) if ll < 709.0 else math.inf
                buf.write(f"{_fmt(T)},{_fmt(m)},{_fmt(self.Lambda[a, b])},{_fmt(lam)},{self.verdict[a, b]}\n")
        return buf.getvalue()

    def threshold_csv(self) -> str:
        buf = io.StringIO()
        buf.write("T,m_star,upper_edge\n")
        for res in self.threshold_curve or []:
            buf.write(f"{_fmt(res.T)},{_fmt(res.m_star)},{_fmt(res.upper_edge)}\n")
        return buf.getvalue()


def _fmt(x) -> str:
    if x is None:
        return ""
    return format(float(x), ".17g")


def sweep(
    net: DynamicNetwork,
    m_values: Sequence[float],
    T_values: Sequence[float],
    *,
    threshold: bool = False,
    tol: float = VERDICT_TOL,
) -> SweepGrid:
    """Evaluate ``Lambda`` on every grid cell.

    Cells whose power iteration fails hold ``nan`` with verdict ``failed``
    and an entry in ``errors``; they do not stop the sweep.  With
    ``threshold`` set, :func:`threshold_search` runs for every ``T`` over
    the range of ``m_values``.
    """
    m_values = np.asarray(m_values, dtype=float)
    T_values = np.asarray(T_values, dtype=float)
    if m_values.size == 0 or T_values.size == 0:
        raise InvalidArgumentError("sweep ranges must be nonempty")
    shape = (T_values.size, m_values.size)
    Lam = np.full(shape, np.nan)
    log_lam = np.full(shape, np.nan)
    verdict = np.full(shape, "failed", dtype=object)
    errors = {}
    for a, T in enumerate(T_values):
        for b, m in enumerate(m_values):
            try:
                ll = log_perron_root(net, SystemParams(m, T))
            except NumericFailure as exc:
                errors[(a, b)] = str(exc)
                continue
            log_lam[a, b] = ll
            Lam[a, b] = ll / T
            verdict[a, b] = classify(ll, tol)
    curve = None
    if threshold:
        lo, hi = float(m_values.min()), float(m_values.max())
        if not lo > 0 or lo == hi:
            raise InvalidArgumentError("threshold curve needs a positive, non-degenerate m range")
        curve = [threshold_search(net, float(T), lo, hi) for T in T_values]
    return SweepGrid(m_values, T_values, Lam, log_lam, verdict, errors, curve)


@dataclass
class Trajectory:
    """Sampled populations; ``log_x[i, k]`` is ``log x_k(t[i])``."""

    t: np.ndarray
    log_x: np.ndarray

    @property
    def log_total(self) -> np.ndarray:
        mx = np.max(self.log_x, axis=1, keepdims=True)
        return (mx + np.log(np.exp(self.log_x - mx).sum(axis=1, keepdims=True)))[:, 0]

    def to_csv(self) -> str:
        n = self.log_x.shape[1]
        buf = io.StringIO()
        buf.write("t," + ",".join(f"log_x_{k + 1}" for k in range(n)) + "\n")
        for t, row in zip(self.t, self.log_x):
            buf.write(_fmt(t) + "," + ",".join(_fmt(v) for v in row) + "\n")
        return buf.getvalue()


def simulate(
    net: DynamicNetwork,
    params: SystemParams,
    periods: float = 1.0,
    dt: float | None = None,
    x0=None,
) -> Trajectory:
    """Exact solution sampled every ``dt`` over ``periods`` periods.

    Samples at multiples of ``dt`` (default ``T / 100``) and keeps the state
    normalized, so long runs neither overflow nor underflow.
    """
    params = _params(params)
    if not periods > 0:
        raise InvalidArgumentError("periods must be > 0")
    dt = params.T / 100.0 if dt is None else float(dt)
    if not dt > 0:
        raise InvalidArgumentError("dt must be > 0")
    x = np.ones(net.n) if x0 is None else np.array(x0, dtype=float)
    if x.shape != (net.n,) or np.any(x < 0) or not np.all(np.isfinite(x)) or not x.sum() > 0:
        raise InvalidArgumentError("x0 must be a nonnegative, nonzero vector of length n")
    sys = assemble(net, params)
    horizon = periods * params.T
    n_samples = int(math.floor(horizon / dt * (1 + 1e-12))) + 1
    times = dt * np.arange(n_samples)
    out = np.empty((n_samples, net.n))

    scale = math.log(x.sum())
    x = x / x.sum()
    segs = [(d, np.ascontiguousarray(A)) for d, A in sys.segments]
    seg, t0 = 0, 0.0
    with np.errstate(divide="ignore"):
        for i, t in enumerate(times):
            d, A = segs[seg % len(segs)]
            while t - t0 > d:
                x = _kernels.expm_auto(A, d) @ x
                total = x.sum()
                if total <= 0.0:
                    out[i:] = -np.inf
                    return Trajectory(times, out)
                scale += math.log(total)
                x /= total
                t0 += d
                seg += 1
                d, A = segs[seg % len(segs)]
            out[i] = np.log(_kernels.expm_auto(A, t - t0) @ x) + scale
    return Trajectory(times, out)
