"""Random season durations.

Cycle ``j`` consists of ``p`` seasons of lengths ``T U[j, k]`` where the
vectors ``U[j]`` are i.i.d.  Here ``U[j, k] = (t_k - t_{k-1}) F[j, k]`` with
a positive random factor ``F`` of a chosen law, so the periodic system is
the case ``F = 1``.

Random streams use the counter-based Philox generator; a run is fully
determined by its integer seed.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import stats

from . import _kernels
from .bounds import leg_constants
from .circuits import Circuit, check_circuit, leg_rates
from .errors import DomainError, InvalidArgumentError
from .network import DynamicNetwork, SystemParams, assemble, relax


@dataclass(frozen=True)
class FactorDist:
    """Law of the multiplicative duration factor.

    ``kind`` is ``degenerate`` (always 1), ``uniform`` on ``[a, b]`` with
    ``0 < a < b``, or ``lognormal`` with log-mean ``a`` and log-sd ``b``.
    """

    kind: str = "degenerate"
    a: float = 1.0
    b: float = 1.0

    def __post_init__(self):
        kind = self.kind.lower()
        object.__setattr__(self, "kind", kind)
        if kind == "degenerate":
            return
        if kind == "uniform":
            if not (0 < self.a < self.b and math.isfinite(self.b)):
                raise InvalidArgumentError(f"uniform factor needs 0 < a < b, got ({self.a}, {self.b})")
        elif kind == "lognormal":
            if not (math.isfinite(self.a) and self.b > 0 and math.isfinite(self.b)):
                raise InvalidArgumentError(f"lognormal factor needs finite mu and sigma > 0, got ({self.a}, {self.b})")
        else:
            raise InvalidArgumentError(f"unknown distribution kind {self.kind!r}")

    @property
    def mean(self) -> float:
        if self.kind == "degenerate":
            return 1.0
        if self.kind == "uniform":
            return 0.5 * (self.a + self.b)
        return math.exp(self.a + 0.5 * self.b**2)

    def sample(self, rng: np.random.Generator, shape) -> np.ndarray:
        if self.kind == "degenerate":
            return np.ones(shape)
        if self.kind == "uniform":
            return rng.uniform(self.a, self.b, shape)
        return rng.lognormal(self.a, self.b, shape)

    def spec(self) -> str:
        return self.kind if self.kind == "degenerate" else f"{self.kind}:{self.a!r}:{self.b!r}"


def parse_dist(spec: str) -> FactorDist:
    """Read ``degenerate``, ``uniform:A:B`` or ``lognormal:MU:SIGMA``."""
    parts = spec.strip().split(":")
    try:
        if parts[0] == "degenerate" and len(parts) == 1:
            return FactorDist()
        if len(parts) == 3:
            return FactorDist(parts[0], float(parts[1]), float(parts[2]))
    except ValueError:
        pass
    raise InvalidArgumentError(
        f"bad distribution {spec!r}; use degenerate, uniform:A:B or lognormal:MU:SIGMA"
    )


@dataclass(frozen=True)
class DurationDistribution:
    """Season-length fractions ``U[k] = base[k] * F_k``.

    Attributes:
        base: Nominal fractions ``t_k - t_{k-1}``.
        factors: One factor law per season.
    """

    base: tuple[float, ...]
    factors: tuple[FactorDist, ...]

    def __post_init__(self):
        object.__setattr__(self, "base", tuple(float(x) for x in self.base))
        object.__setattr__(self, "factors", tuple(self.factors))
        if len(self.base) != len(self.factors):
            raise InvalidArgumentError("one factor law per season is required")
        if any(not x > 0 for x in self.base):
            raise InvalidArgumentError("base fractions must be > 0")

    @classmethod
    def jitter(cls, net: DynamicNetwork, factor: FactorDist | str = "degenerate") -> "DurationDistribution":
        """Same factor law on every season of ``net``."""
        if isinstance(factor, str):
            factor = parse_dist(factor)
        return cls(tuple(net.durations), (factor,) * net.p)

    @property
    def p(self) -> int:
        return len(self.base)

    @property
    def mean(self) -> np.ndarray:
        """``E(U[k])`` per season."""
        return np.array([b * f.mean for b, f in zip(self.base, self.factors)])

    def sample(self, rng: np.random.Generator, cycles: int) -> np.ndarray:
        """``(cycles, p)`` array of fractions."""
        cols = [b * f.sample(rng, cycles) for b, f in zip(self.base, self.factors)]
        return np.column_stack(cols)


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed))


def chi_stoc(
    net: DynamicNetwork, c: Circuit, dist: DurationDistribution
) -> tuple[Callable[[np.random.Generator, int], np.ndarray], float]:
    """Per-cycle random growth index sampler and its mean.

    The sampler returns ``sum_k U[j, k] r_k`` for ``size`` cycles, where
    ``r_k`` is the dominant rate of leg ``k``.
    """
    check_circuit(net, c)
    if c.q != 1:
        raise InvalidArgumentError("random growth indices are defined for one-period circuits")
    if dist.p != net.p:
        raise InvalidArgumentError(f"distribution has {dist.p} seasons, network has {net.p}")
    rates = leg_rates(net, c)

    def sampler(rng, size):
        return dist.sample(rng, size) @ rates

    return sampler, float(dist.mean @ rates)


@dataclass
class StochasticRun:
    """One Monte-Carlo run.

    Attributes:
        seed: Seed of the Philox stream.
        durations: ``(J, p)`` realized season lengths in time units.
        log_growth: Per-cycle log growth of the tracked site.
        site: Tracked site (0-based).
        mean: Mean per-cycle log growth after ``burn_in`` cycles.
        half_width: 95% half-width of ``mean`` from batch means.
        rate: ``mean`` divided by the mean cycle length (per unit time).
        log_bound: Per-cycle log of the circuit lower bound, if computed.
    """

    seed: int
    durations: np.ndarray
    log_growth: np.ndarray
    site: int
    burn_in: int
    mean: float
    half_width: float
    rate: float
    log_bound: np.ndarray | None = None
    notes: list[str] = field(default_factory=list)

    @property
    def cycles(self) -> int:
        return self.log_growth.size

    def bound_violations(self, slack: float = 1e-12) -> int:
        """Cycles where the realized growth falls below the lower bound."""
        if self.log_bound is None:
            return 0
        return int(np.sum(self.log_growth < self.log_bound - slack))

    def to_csv(self) -> str:
        p = self.durations.shape[1]
        buf = io.StringIO()
        buf.write("cycle," + ",".join(f"duration_{k + 1}" for k in range(p)) + ",log_growth\n")
        for j, (row, g) in enumerate(zip(self.durations, self.log_growth), start=1):
            buf.write(f"{j}," + ",".join(format(float(d), ".17g") for d in row) + f",{float(g):.17g}\n")
        return buf.getvalue()

    def summary(self) -> dict:
        return {
            "seed": self.seed,
            "rng": "Philox",
            "cycles": self.cycles,
            "burn_in": self.burn_in,
            "site": self.site + 1,
            "mean_log_growth_per_cycle": self.mean,
            "ci95_half_width": self.half_width,
            "rate_per_unit_time": self.rate,
            "bound_violations": self.bound_violations() if self.log_bound is not None else None,
            "notes": list(self.notes),
        }


def batch_means(values: np.ndarray, batches: int = 20) -> tuple[float, float]:
    """Mean and 95% half-width from non-overlapping batch means."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        return math.nan, math.nan
    b = min(batches, values.size)
    if b < 2:
        return float(values.mean()), math.inf
    chunks = np.array_split(values, b)
    means = np.array([c.mean() for c in chunks])
    sd = means.std(ddof=1)
    half = stats.t.ppf(0.975, b - 1) * sd / math.sqrt(b)
    return float(values.mean()), float(half)


def cycle_log_bounds(
    net: DynamicNetwork, c: Circuit, durations: np.ndarray, m: float
) -> np.ndarray:
    """Log of the per-cycle circuit bound for realized season lengths.

    Each leg's constant uses the whole realized leg duration as warm-up
    time.  The outflow penalty is ``max(n, mu)`` times ``m`` over the
    realized cycle length.
    """
    strict, ell = relax(net)
    mu = max(float(net.n), (net.n - 1) + strict.max_drain)
    me = m * ell
    rates = leg_rates(net, c)
    out = np.empty(durations.shape[0])
    for j, row in enumerate(durations):
        consts = leg_constants(strict, c, row, mu)
        log_c = sum(math.log(k.K) for k in consts)
        chi_j = float(row @ rates)
        out[j] = log_c + c.L * math.log(me) + chi_j - mu * me * float(row.sum())
    return out


def simulate_random(
    net: DynamicNetwork,
    dist: DurationDistribution,
    params: SystemParams,
    cycles: int,
    seed: int,
    *,
    circuit: Circuit | None = None,
    site: int | None = None,
    burn_in: int = 0,
    x0=None,
) -> StochasticRun:
    """Propagate the system through ``cycles`` cycles of random length.

    The tracked site is the circuit's start site when a circuit is given,
    else ``site`` (default 0).  The state is renormalized every cycle; the
    per-cycle log growth of the tracked site is recorded.  With a circuit,
    the per-cycle lower bound is recorded alongside.
    """
    if not isinstance(params, SystemParams):
        params = SystemParams(*params)
    cycles = int(cycles)
    if cycles < 1:
        raise InvalidArgumentError("cycles must be >= 1")
    if not 0 <= burn_in < cycles:
        raise InvalidArgumentError("burn_in must lie in [0, cycles)")
    if dist.p != net.p:
        raise InvalidArgumentError(f"distribution has {dist.p} seasons, network has {net.p}")
    if circuit is not None:
        check_circuit(net, circuit)
        site = circuit.start
    site = 0 if site is None else int(site)
    if not 0 <= site < net.n:
        raise InvalidArgumentError(f"site {site} out of range")

    rng = make_rng(seed)
    durations = params.T * dist.sample(rng, cycles)
    gens = assemble(net, params).generators
    x = np.ones(net.n) if x0 is None else np.array(x0, dtype=float)
    if x[site] <= 0:
        raise InvalidArgumentError("tracked site must start with a positive population")
    x = x / x.sum()
    log_growth = np.empty(cycles)
    for j in range(cycles):
        before = x[site]
        y = _kernels.switched_apply(durations[j], gens, x)
        after = y[site]
        log_growth[j] = math.log(after / before) if after > 0 else -math.inf
        total = y.sum()
        if total <= 0:
            log_growth[j + 1:] = -math.inf
            break
        x = y / total

    tail = log_growth[burn_in:]
    mean, half = batch_means(tail)
    rate = mean / float(durations[burn_in:].sum(axis=1).mean())
    log_bound = None
    notes = []
    if circuit is not None and params.m > 0:
        log_bound = cycle_log_bounds(net, circuit, durations, params.m)
        notes.append("bound exponent uses the realized cycle length in the outflow penalty")
    return StochasticRun(seed, durations, log_growth, site, burn_in, mean, half, rate, log_bound, notes)


def replicate_seeds(seed: int, count: int) -> list[int]:
    """Independent child seeds derived from one master seed."""
    children = np.random.SeedSequence(seed).spawn(count)
    return [int(c.generate_state(1, dtype=np.uint64)[0]) for c in children]


@dataclass(frozen=True)
class StochasticThreshold:
    """Exponentially small bound on the threshold under random durations.

    Attributes:
        value: ``exp(-(1 - eps) T chi_stoc / L)``.
        chi_stoc: Mean growth index of the circuit.
        regime_limit: ``(eps / 2) chi_stoc / (n - 1)``.
        in_regime: ``value < regime_limit``.
    """

    value: float
    chi_stoc: float
    epsilon: float
    regime_limit: float
    in_regime: bool


def stochastic_threshold_bound(
    net: DynamicNetwork,
    c: Circuit,
    dist: DurationDistribution,
    T: float,
    epsilon: float,
) -> StochasticThreshold:
    """Bound ``exp(-(1/L)(1 - eps) T chi_stoc)`` on the growth threshold.

    Raises:
        DomainError: ``chi_stoc <= 0``, ``eps`` outside (0, 1) or ``L = 0``.
    """
    if not 0 < epsilon < 1:
        raise DomainError("epsilon must lie in (0, 1)")
    _, mean = chi_stoc(net, c, dist)
    if not mean > 0:
        raise DomainError(f"need chi_stoc > 0, got {mean}")
    if c.L < 1:
        raise DomainError("need a circuit with at least one link")
    if not T > 0:
        raise DomainError("T must be > 0")
    value = math.exp(-(1.0 - epsilon) * T * mean / c.L)
    limit = (epsilon / 2) * mean / (net.n - 1) if net.n > 1 else math.inf
    return StochasticThreshold(value, mean, float(epsilon), limit, value < limit)
