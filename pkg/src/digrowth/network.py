"""Seasonal migration networks and the switched linear systems built on them.

A :class:`DynamicNetwork` holds ``n`` sites and ``p`` seasons.  Season ``k``
covers the fraction ``[t_{k-1}, t_k)`` of one period and carries per-site
growth rates, a directed link set and (optionally) per-site extra drains.
Sites are 0-based internally; labels exist only for I/O.

For intensity ``m`` and period ``T`` the population obeys, on season ``k``,

    dx_i/dt = (r_i - m a_i - m sum_{j != i} l_ji) x_i + m sum_{j != i} l_ij x_j

where ``l_ij`` is the weight of the link ``j -> i``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _kernels
from .errors import InvalidArgumentError, ValidationError

Link = tuple[int, int, float]  # (source, target, weight)


@dataclass(frozen=True)
class SeasonLayer:
    """Rates and links that hold during one season.

    Attributes:
        growth: Intrinsic growth rate per site.
        links: ``(source, target, weight)`` triples, sorted, no self-links.
        self_drain: Extra per-site loss multiplying ``m``; zero for strict nets.
    """

    growth: tuple[float, ...]
    links: tuple[Link, ...] = ()
    self_drain: tuple[float, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "growth", tuple(float(g) for g in self.growth))
        links = tuple(sorted((int(a), int(b), float(w)) for a, b, w in self.links))
        object.__setattr__(self, "links", links)
        if self.self_drain is None:
            object.__setattr__(self, "self_drain", (0.0,) * len(self.growth))
        else:
            object.__setattr__(self, "self_drain", tuple(float(a) for a in self.self_drain))

    @property
    def unit_weights(self) -> bool:
        return all(w == 1.0 for _, _, w in self.links)

    def out_neighbors(self, site: int) -> list[int]:
        return [b for a, b, _ in self.links if a == site]

    def has_link(self, src: int, dst: int) -> bool:
        return any(a == src and b == dst for a, b, _ in self.links)

    def link_matrix(self, n: int) -> np.ndarray:
        """``L[i, j]`` is the weight of the link ``j -> i``."""
        L = np.zeros((n, n))
        for a, b, w in self.links:
            L[b, a] = w
        return L


@dataclass(frozen=True)
class DynamicNetwork:
    """A p-periodic sequence of migration networks on ``n`` sites.

    Validation runs on construction and reports every problem at once.

    Attributes:
        n: Number of sites.
        breakpoints: ``0 = t_0 < t_1 < ... < t_p = 1`` as fractions of a period.
        layers: One :class:`SeasonLayer` per season.
        names: Site labels used in files and reports.
    """

    n: int
    breakpoints: tuple[float, ...]
    layers: tuple[SeasonLayer, ...]
    names: tuple[str, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "breakpoints", tuple(float(t) for t in self.breakpoints))
        object.__setattr__(self, "layers", tuple(self.layers))
        if not self.names:
            object.__setattr__(self, "names", tuple(str(i + 1) for i in range(self.n)))
        else:
            object.__setattr__(self, "names", tuple(str(x) for x in self.names))
        problems = _validate(self)
        if problems:
            raise ValidationError(problems)

    @property
    def p(self) -> int:
        return len(self.layers)

    @property
    def durations(self) -> np.ndarray:
        """Season lengths as fractions of the period."""
        return np.diff(np.asarray(self.breakpoints))

    @property
    def is_strict(self) -> bool:
        """All link weights 1 and no extra drains."""
        return all(
            layer.unit_weights and not any(layer.self_drain) for layer in self.layers
        )

    @property
    def max_drain(self) -> float:
        return max((max(layer.self_drain) for layer in self.layers), default=0.0)

    def growth_matrix(self) -> np.ndarray:
        """Rates as a ``(p, n)`` array."""
        return np.array([layer.growth for layer in self.layers])

    def site_index(self, label) -> int:
        """Resolve a 1-based index or a site name to a 0-based index."""
        if isinstance(label, str) and label in self.names:
            return self.names.index(label)
        try:
            i = int(label) - 1
        except (TypeError, ValueError):
            raise InvalidArgumentError(f"unknown site {label!r}") from None
        if not 0 <= i < self.n:
            raise InvalidArgumentError(f"site {label!r} out of range 1..{self.n}")
        return i

    def rotated(self, shift: int) -> "DynamicNetwork":
        """Same network with the period starting at season ``shift``."""
        shift %= self.p
        d = self.durations
        order = list(range(shift, self.p)) + list(range(shift))
        bps = np.concatenate([[0.0], np.cumsum(d[order])])
        bps[-1] = 1.0
        return DynamicNetwork(self.n, tuple(bps), tuple(self.layers[k] for k in order), self.names)


def _validate(net: DynamicNetwork) -> list[str]:
    problems = []
    if net.n < 1:
        problems.append(f"n: need at least one site, got {net.n}")
    if len(net.names) != net.n:
        problems.append(f"names: {len(net.names)} labels for {net.n} sites")
    elif len(set(net.names)) != net.n:
        problems.append("names: labels must be unique")
    bp = net.breakpoints
    if len(bp) != len(net.layers) + 1:
        problems.append(f"breakpoints: {len(bp)} values for {len(net.layers)} seasons")
    elif not net.layers:
        problems.append("layers: need at least one season")
    else:
        if bp[0] != 0.0 or bp[-1] != 1.0:
            problems.append("breakpoints: must start at 0 and end at 1")
        if any(not b > a for a, b in zip(bp, bp[1:])):
            problems.append("breakpoints: must be strictly increasing")
    for k, layer in enumerate(net.layers):
        tag = f"seasons[{k}]"
        if len(layer.growth) != net.n:
            problems.append(f"{tag}.growth: {len(layer.growth)} rates for {net.n} sites")
        elif not all(np.isfinite(layer.growth)):
            problems.append(f"{tag}.growth: non-finite rate")
        if len(layer.self_drain) != net.n:
            problems.append(f"{tag}.self_drain: {len(layer.self_drain)} values for {net.n} sites")
        elif any(not (a >= 0 and np.isfinite(a)) for a in layer.self_drain):
            problems.append(f"{tag}.self_drain: must be finite and >= 0")
        seen = set()
        for a, b, w in layer.links:
            if not (0 <= a < net.n and 0 <= b < net.n):
                problems.append(f"{tag}.links: endpoint out of range in {a + 1}->{b + 1}")
            elif a == b:
                problems.append(f"{tag}.links: self-link at site {a + 1}")
            if not (w > 0 and np.isfinite(w)):
                problems.append(f"{tag}.links: weight of {a + 1}->{b + 1} must be finite and > 0")
            if (a, b) in seen:
                problems.append(f"{tag}.links: duplicate link {a + 1}->{b + 1}")
            seen.add((a, b))
    return problems


@dataclass(frozen=True)
class SystemParams:
    """Migration intensity ``m >= 0`` and period ``T > 0``."""

    m: float
    T: float

    def __post_init__(self):
        m, T = float(self.m), float(self.T)
        problems = []
        if not (np.isfinite(m) and m >= 0):
            problems.append(f"m: must be finite and >= 0, got {m}")
        if not (np.isfinite(T) and T > 0):
            problems.append(f"T: must be finite and > 0, got {T}")
        if problems:
            raise ValidationError(problems)
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "T", T)


@dataclass(frozen=True)
class SwitchedLinearSystem:
    """One period of a piecewise-constant linear system.

    Attributes:
        durations: Segment lengths in time units, shape ``(p,)``.
        generators: Metzler generators, shape ``(p, n, n)``.
    """

    durations: np.ndarray
    generators: np.ndarray

    @property
    def n(self) -> int:
        return self.generators.shape[1]

    @property
    def segments(self) -> list[tuple[float, np.ndarray]]:
        return list(zip(self.durations.tolist(), self.generators))

    def monodromy(self) -> np.ndarray:
        """Product of the segment exponentials, later seasons on the left."""
        return _kernels.switched_product(self.durations, self.generators)

    def propagate(self, x0, periods: int = 1) -> np.ndarray:
        x = np.asarray(x0, dtype=float)
        for _ in range(periods):
            x = _kernels.switched_apply(self.durations, self.generators, x)
        return x


def generator(layer: SeasonLayer, n: int, m: float) -> np.ndarray:
    """Metzler generator of one season at intensity ``m``."""
    L = layer.link_matrix(n)
    A = m * L
    A[np.diag_indices(n)] = (
        np.asarray(layer.growth) - m * np.asarray(layer.self_drain) - m * L.sum(axis=0)
    )
    return A


def assemble(net: DynamicNetwork, params: SystemParams) -> SwitchedLinearSystem:
    """Build the per-season generators for intensity ``m`` and period ``T``."""
    if not isinstance(params, SystemParams):
        params = SystemParams(*params)
    gens = np.stack([generator(layer, net.n, params.m) for layer in net.layers])
    return SwitchedLinearSystem(params.T * net.durations, gens)


def relax(net: DynamicNetwork) -> tuple[DynamicNetwork, float]:
    """Minorize a weighted network by a unit-weight one.

    Returns ``(strict_net, ell)`` where ``ell`` is the smallest link weight,
    every link of ``strict_net`` has weight 1, and each site's outgoing
    surplus becomes a drain ``a_i = sum_j (l_ji - ell) / ell``.  Assembled
    at intensity ``m * ell`` the strict network has exactly the diagonal of
    the original at intensity ``m`` and smaller off-diagonal entries, so its
    solutions stay below the original ones for nonnegative data.
    """
    weights = [w for layer in net.layers for _, _, w in layer.links]
    if not weights:
        return net, 1.0
    ell = min(weights)
    layers = []
    for layer in net.layers:
        drain = np.asarray(layer.self_drain, dtype=float).copy()
        for a, _, w in layer.links:
            drain[a] += (w - ell) / ell
        drain += np.asarray(layer.self_drain) * (1.0 / ell - 1.0)
        layers.append(
            SeasonLayer(layer.growth, tuple((a, b, 1.0) for a, b, _ in layer.links), tuple(drain))
        )
    return DynamicNetwork(net.n, net.breakpoints, tuple(layers), net.names), ell


def average_growth(net: DynamicNetwork, site: int) -> float:
    """Period-averaged intrinsic rate of one site; positive means a source."""
    if not 0 <= site < net.n:
        raise InvalidArgumentError(f"site {site} out of range 0..{net.n - 1}")
    return float(net.durations @ net.growth_matrix()[:, site])


def build_network(
    growth: Sequence[Sequence[float]],
    links: Sequence[Sequence[tuple]],
    breakpoints: Sequence[float] | None = None,
    names: Sequence[str] = (),
) -> DynamicNetwork:
    """Convenience constructor from 0-based ``(src, dst[, weight])`` links.

    ``breakpoints`` defaults to equal seasons.
    """
    p = len(growth)
    if breakpoints is None:
        breakpoints = np.linspace(0.0, 1.0, p + 1)
    layers = tuple(
        SeasonLayer(tuple(g), tuple((l[0], l[1], l[2] if len(l) > 2 else 1.0) for l in lk))
        for g, lk in zip(growth, links)
    )
    n = len(growth[0]) if p else 0
    return DynamicNetwork(n, tuple(breakpoints), layers, tuple(names))
