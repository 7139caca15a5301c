"""Explicit lower bounds on growth along paths and circuits.

Along a simple path ``a_0 -> ... -> a_l`` inside one static network, the
population reaching ``a_l`` after time ``t >= theta`` from a unit mass at
``a_0`` is at least ``C(theta) m^l exp(t (r - mu m))``, where ``r`` is the
largest rate on the path and ``C`` does not depend on ``m``.  Chaining such
bounds over the legs of a circuit gives ``H(m, T) = C m^L exp(qT (chi - mu m))``,
a lower bound on the growth of the circuit's start site over ``q`` periods.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import special

from .circuits import Circuit, Leg, check_circuit, format_circuit, growth_index_qcircuit
from .errors import DomainError, InvalidArgumentError
from .network import DynamicNetwork, relax

LOOP_BETA = 0.5


def _check_gap(r: float, s: float) -> float:
    a = float(r) - float(s)
    if not a > 0:
        raise DomainError(f"need r > s, got r={r}, s={s}")
    return a


def v_rsd(r: float, s: float, d: int, t: float) -> float:
    """int_0^t exp(-tau (r - s)) tau^(d-1) / (d-1)! dtau.

    Evaluated in closed form as ``P(d, (r-s) t) / (r-s)^d`` with the
    regularized lower incomplete gamma ``P``.  For ``d = 0`` (dominant site
    at the head of the path) the kernel is a point mass at 0 and the value
    is 1 for every ``t``.
    """
    a = _check_gap(r, s)
    d = int(d)
    if d < 0:
        raise DomainError("d must be >= 0")
    if t < 0:
        raise DomainError("t must be >= 0")
    if d == 0:
        return 1.0
    return float(special.gammainc(d, a * t) / a**d)


def w_rs(r: float, s: float, t: float) -> float:
    """(1 - exp(-t (r - s))) / (r - s)."""
    a = _check_gap(r, s)
    if t < 0:
        raise DomainError("t must be >= 0")
    return float(-math.expm1(-t * a) / a)


def c_theta(r: float, s: float, d: int, l: int, theta: float) -> float:
    """Path constant v(u) w(u)^(l-d) with u = theta / (l - d + 1)."""
    if not 0 <= d <= l:
        raise DomainError(f"dominant position {d} outside path of length {l}")
    u = theta / (l - d + 1)
    return v_rsd(r, s, d, u) * w_rs(r, s, u) ** (l - d)


@dataclass(frozen=True)
class PathBoundConstants:
    """Constants of the path bound ``C(theta) m^l exp(t (r - mu m))``.

    Attributes:
        r: Largest growth rate on the path.
        s: Floor rate, the smallest rate on the path minus one.
        d: Position (0-based) of the dominant site along the path.
        l: Number of links.
        theta: Warm-up time; the bound holds for ``t >= theta``.
        C_theta: The constant, independent of ``m``.
        mu: Largest per-site outflow in units of ``m``.
    """

    r: float
    s: float
    d: int
    l: int
    theta: float
    C_theta: float
    mu: float


def path_constants(rates: Sequence[float], theta: float, mu: float) -> PathBoundConstants:
    """Constants for a simple path whose sites have the given rates.

    When several sites share the top rate the position giving the largest
    constant is used.
    """
    rates = [float(x) for x in rates]
    if not rates:
        raise InvalidArgumentError("empty path")
    if not theta > 0:
        raise DomainError(f"theta must be > 0, got {theta}")
    r = max(rates)
    s = min(rates) - 1.0
    l = len(rates) - 1
    best = None
    for d, x in enumerate(rates):
        if x == r:
            c = c_theta(r, s, d, l, theta)
            if best is None or c > best[1]:
                best = (d, c)
    return PathBoundConstants(r, s, best[0], l, float(theta), best[1], float(mu))


def path_bound(constants: PathBoundConstants, m: float, t: float) -> float:
    """``C(theta) m^l exp(t (r - mu m))``, valid for ``t >= theta``."""
    if t < constants.theta:
        raise DomainError(f"bound holds for t >= theta={constants.theta}, got t={t}")
    if m <= 0:
        raise DomainError("m must be > 0")
    k = constants
    return k.C_theta * m**k.l * math.exp(t * (k.r - k.mu * m))


def split_simple(sites: Sequence[int]) -> list[tuple[int, ...]]:
    """Cut a walk into consecutive simple pieces sharing their endpoints."""
    pieces = []
    cur = [sites[0]]
    for s in sites[1:]:
        if s in cur:
            pieces.append(tuple(cur))
            cur = [cur[-1]]
        cur.append(s)
    pieces.append(tuple(cur))
    return pieces


@dataclass(frozen=True)
class LegConstant:
    """Bound data for one leg: ``K exp(t (rate - mu m)) m^length`` for ``t >= theta``."""

    rate: float
    length: int
    theta: float
    K: float
    pieces: tuple[PathBoundConstants, ...]


def _leg_constant(net: DynamicNetwork, leg: Leg, theta: float, mu: float, beta: float) -> LegConstant:
    """Bound for one leg, splitting walks with repeated sites into simple pieces.

    Pieces get ``beta theta`` and ``(1 - beta) theta`` when there are two,
    ``theta / k`` each otherwise.  The first piece with the top rate absorbs
    the remaining time; every other piece costs ``exp(-theta_j (R - R_j))``.
    """
    growth = net.layers[leg.season].growth
    pieces = split_simple(leg.sites)
    k = len(pieces)
    if k == 1:
        shares = [theta]
    elif k == 2:
        shares = [beta * theta, (1.0 - beta) * theta]
    else:
        shares = [theta / k] * k
    consts = [path_constants([growth[s] for s in piece], th, mu) for piece, th in zip(pieces, shares)]
    R = max(c.r for c in consts)
    K = 1.0
    dominant_seen = False
    for c, th in zip(consts, shares):
        K *= c.C_theta
        if c.r == R and not dominant_seen:
            dominant_seen = True
        else:
            K *= math.exp(-th * (R - c.r))
    return LegConstant(R, leg.length, float(theta), K, tuple(consts))


def leg_constants(
    net: DynamicNetwork, c: Circuit, thetas: Sequence[float], mu: float, beta: float = LOOP_BETA
) -> list[LegConstant]:
    """Per-leg bound data for a circuit with one warm-up time per leg."""
    if len(thetas) != len(c.legs):
        raise InvalidArgumentError(f"{len(thetas)} warm-up times for {len(c.legs)} legs")
    if not 0 < beta < 1:
        raise DomainError("beta must lie in (0, 1)")
    return [_leg_constant(net, leg, float(th), mu, beta) for leg, th in zip(c.legs, thetas)]


@dataclass(frozen=True)
class CircuitBound:
    """Constants of ``H(m, T) = C (s m)^L exp(qT (chi_c - mu s m))``.

    ``s`` is ``m_scale``: 1 for unit-weight networks, the smallest link
    weight for weighted ones (the bound is then built on the relaxed
    network).

    Attributes:
        chi_c: Growth index of the circuit (per period).
        L: Total circuit length.
        C: Product of per-leg constants.
        mu: Outflow multiplier, ``n - 1`` plus the largest drain.
        T_star: Smallest period for which the bound holds.
        q: Periods spanned by the circuit.
        thetas: Warm-up time per leg.
        m_scale: Factor applied to ``m`` before evaluation.
        circuit: The circuit in bar notation.
    """

    chi_c: float
    L: int
    C: float
    mu: float
    T_star: float
    q: int = 1
    thetas: tuple[float, ...] = ()
    m_scale: float = 1.0
    circuit: str = ""


def circuit_bound(
    net: DynamicNetwork,
    c: Circuit,
    theta: float | Sequence[float] | None = None,
    *,
    T: float | None = None,
    beta: float = LOOP_BETA,
) -> CircuitBound:
    """Lower-bound constants for growth along a circuit.

    Args:
        theta: Warm-up time, one value for all legs or one per leg.  When
            omitted, each leg uses half its duration at period ``T``.
        T: Period used for the default warm-up times.
        beta: Split used on legs that contain a loop.

    Raises:
        DomainError: a warm-up time is not positive.
    """
    check_circuit(net, c)
    strict, ell = relax(net)
    mu = (net.n - 1) + strict.max_drain
    fracs = np.tile(net.durations, c.q)
    if theta is None:
        if T is None or not T > 0:
            raise InvalidArgumentError("give theta or a period T > 0 for the default warm-up")
        thetas = [T * f / 2.0 for f in fracs]
    elif np.ndim(theta) == 0:
        thetas = [float(theta)] * len(c.legs)
    else:
        thetas = [float(x) for x in theta]
    if any(not th > 0 for th in thetas):
        raise DomainError("theta must be > 0")
    consts = leg_constants(strict, c, thetas, mu, beta)
    C = float(np.prod([k.K for k in consts]))
    T_star = max(th / f for th, f in zip(thetas, fracs))
    return CircuitBound(
        chi_c=growth_index_qcircuit(net, c),
        L=c.L,
        C=C,
        mu=float(mu),
        T_star=float(T_star),
        q=c.q,
        thetas=tuple(float(x) for x in thetas),
        m_scale=float(ell),
        circuit=format_circuit(c),
    )


def _check_T(bound: CircuitBound, T: float) -> None:
    if T < bound.T_star * (1 - 1e-12):
        raise DomainError(f"bound holds for T >= T_star={bound.T_star}, got T={T}")


def H(m: float, T: float, bound: CircuitBound) -> float:
    """Lower bound on the circuit start site's growth over ``q`` periods."""
    _check_T(bound, T)
    if m < 0:
        raise DomainError("m must be >= 0")
    me = m * bound.m_scale
    if me == 0.0:
        return bound.C if bound.L == 0 else 0.0
    log_h = math.log(bound.C) + bound.L * math.log(me) + bound.q * T * (bound.chi_c - bound.mu * me)
    return math.exp(log_h) if log_h < 709 else math.inf


@dataclass(frozen=True)
class ThresholdBound:
    """Exponentially small upper bound on the growth threshold.

    Attributes:
        value: ``exp(-alpha qT)`` (divided by ``m_scale``).
        alpha: ``chi_c / (2 L C^(1/L))``.
        applicable: ``value`` lies in the regime ``m < chi_c / (2 mu)`` and
            ``H(value, T) >= 1`` holds there.
        sufficient: ``C^(-1/L) exp(-qT chi_c / (2L))``, the smallest ``m``
            for which the regime argument gives ``H >= 1``.
        sufficient_applicable: ``sufficient`` lies in the regime.
    """

    value: float
    alpha: float
    applicable: bool
    sufficient: float
    sufficient_applicable: bool


def threshold_bound(bound: CircuitBound, T: float) -> ThresholdBound:
    """Upper bound on the smallest growth-inducing ``m`` at period ``T``.

    Inside the regime ``m < chi_c / (2 mu)`` one has
    ``H(m, T) >= C m^L exp(qT chi_c / 2)``, so any ``m`` making the right
    side at least 1 induces growth.  ``alpha = chi_c / (2 L C^(1/L))`` gives
    such an ``m`` only when ``C >= 1``; the returned flags check the
    conditions directly instead of assuming them.

    Raises:
        DomainError: ``chi_c <= 0``, ``L = 0`` or ``T`` below ``T_star``.
    """
    if not bound.chi_c > 0:
        raise DomainError(f"threshold bound needs chi_c > 0, got {bound.chi_c}")
    if bound.L < 1:
        raise DomainError("threshold bound needs a circuit with at least one link")
    _check_T(bound, T)
    tau = bound.q * T
    alpha = bound.chi_c / (2 * bound.L * bound.C ** (1.0 / bound.L))
    regime = bound.chi_c / (2 * bound.mu) if bound.mu > 0 else math.inf

    def ok(m):
        me = m * bound.m_scale
        lhs = math.log(bound.C) + bound.L * math.log(me) + tau * bound.chi_c / 2
        return me < regime and lhs >= -1e-12

    value = math.exp(-alpha * tau) / bound.m_scale
    suff = math.exp(-(math.log(bound.C) + tau * bound.chi_c / 2) / bound.L) / bound.m_scale
    return ThresholdBound(value, alpha, ok(value), suff, ok(suff))


def dead_end_paths(net: DynamicNetwork, season: int) -> list[Leg]:
    """Maximal simple paths of one season that end in a trap.

    A trap is a site with positive growth rate and no outgoing link during
    the season.  A path is maximal when no other site links into its head
    without repeating a site.  Paths have at least one link.
    """
    if not 0 <= season < net.p:
        raise InvalidArgumentError(f"season {season} out of range 0..{net.p - 1}")
    layer = net.layers[season]
    incoming = [sorted(a for a, b, _ in layer.links if b == i) for i in range(net.n)]
    traps = [i for i in range(net.n) if layer.growth[i] > 0 and not layer.out_neighbors(i)]
    found = []

    def back(path):
        ext = [a for a in incoming[path[0]] if a not in path]
        if not ext and len(path) > 1:
            found.append(Leg(season, tuple(path)))
        for a in ext:
            back([a] + path)

    for t in traps:
        back([t])
    return sorted(found, key=lambda leg: leg.sites)
