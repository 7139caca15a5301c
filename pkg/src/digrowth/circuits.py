"""Season-respecting circuits on a dynamic network and their growth indices.

A circuit is a sequence of legs, one per season occurrence.  Each leg is a
path inside that season's link graph; consecutive legs share endpoints and
the last leg returns to the first site.  A T-circuit spans one period and
uses simple legs.  A qT-circuit spans ``q`` periods, may revisit sites
inside a leg, and must not pass through its start at any intermediate
period boundary.

A leg of length 0 (a single site) stands for staying put during a season.

Bar notation with 1-based labels is used for I/O, e.g. ``|1->3||3->1->2||2->3->1|``.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .errors import CircuitMismatch, InvalidArgumentError, NoCircuitFound
from .network import DynamicNetwork

SCORE_TOL = 1e-12


@dataclass(frozen=True)
class Leg:
    """A walk inside one season's link graph."""

    season: int
    sites: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "sites", tuple(int(s) for s in self.sites))
        if not self.sites:
            raise InvalidArgumentError("a leg needs at least one site")

    @property
    def length(self) -> int:
        return len(self.sites) - 1

    @property
    def start(self) -> int:
        return self.sites[0]

    @property
    def end(self) -> int:
        return self.sites[-1]

    @property
    def is_simple(self) -> bool:
        return len(set(self.sites)) == len(self.sites)


@dataclass(frozen=True)
class Circuit:
    """Closed season-respecting walk spanning ``q`` periods.

    Attributes:
        legs: ``q * p`` legs; leg ``j`` belongs to season ``j % p``.
        q: Number of periods before the walk closes.
    """

    legs: tuple[Leg, ...]
    q: int = 1

    def __post_init__(self):
        object.__setattr__(self, "legs", tuple(self.legs))
        if self.q < 1:
            raise InvalidArgumentError("q must be >= 1")
        if not self.legs or len(self.legs) % self.q:
            raise InvalidArgumentError(f"{len(self.legs)} legs cannot span {self.q} periods")

    @property
    def p(self) -> int:
        return len(self.legs) // self.q

    @property
    def L(self) -> int:
        """Total number of links travelled."""
        return sum(leg.length for leg in self.legs)

    @property
    def start(self) -> int:
        return self.legs[0].start

    @property
    def is_simple(self) -> bool:
        return all(leg.is_simple for leg in self.legs)

    @property
    def sites(self) -> tuple[tuple[int, ...], ...]:
        return tuple(leg.sites for leg in self.legs)

    def rotated(self, shift: int) -> "Circuit":
        """The circuit seen from a period that starts at season ``shift``.

        Only defined for one-period circuits, whose legs map one-to-one onto
        the seasons of :meth:`DynamicNetwork.rotated`.
        """
        if self.q != 1:
            raise InvalidArgumentError("rotation is defined for one-period circuits")
        p = self.p
        shift %= p
        legs = self.legs[shift:] + self.legs[:shift]
        return Circuit(tuple(Leg(j, leg.sites) for j, leg in enumerate(legs)), 1)

    def __str__(self) -> str:
        return format_circuit(self)


class CircuitList(list):
    """List of circuits that remembers whether enumeration was cut short."""

    def __init__(self, items=(), truncated: bool = False):
        super().__init__(items)
        self.truncated = truncated


# -- validation and growth indices -----------------------------------------


def check_circuit(net: DynamicNetwork, c: Circuit) -> None:
    """Raise :class:`CircuitMismatch` unless ``c`` is a circuit of ``net``."""
    problems = []
    p = net.p
    if len(c.legs) != c.q * p:
        raise CircuitMismatch(f"{len(c.legs)} legs for q={c.q} on a {p}-season network")
    for j, leg in enumerate(c.legs):
        if leg.season != j % p:
            problems.append(f"leg {j + 1}: season {leg.season + 1}, expected {j % p + 1}")
        if any(not 0 <= s < net.n for s in leg.sites):
            problems.append(f"leg {j + 1}: site out of range")
            continue
        layer = net.layers[j % p]
        for a, b in zip(leg.sites, leg.sites[1:]):
            if not layer.has_link(a, b):
                problems.append(f"leg {j + 1}: no link {a + 1}->{b + 1} in season {j % p + 1}")
        nxt = c.legs[(j + 1) % len(c.legs)]
        if leg.end != nxt.start:
            problems.append(f"leg {j + 1} ends at {leg.end + 1} but the next leg starts at {nxt.start + 1}")
    for j in range(1, c.q):
        if c.legs[j * p].start == c.start:
            problems.append(f"returns to its start after {j} period(s) with q={c.q}")
    if problems:
        raise CircuitMismatch("; ".join(problems))


def leg_rates(net: DynamicNetwork, c: Circuit) -> np.ndarray:
    """Dominant (largest) growth rate along each leg."""
    return np.array([max(net.layers[leg.season].growth[s] for s in leg.sites) for leg in c.legs])


def growth_index_system(net: DynamicNetwork) -> float:
    """Period average of the largest growth rate in each season."""
    return float(net.durations @ net.growth_matrix().max(axis=1))


def growth_index_qcircuit(net: DynamicNetwork, c: Circuit) -> float:
    """Per-period average of the legs' dominant rates."""
    check_circuit(net, c)
    d = np.tile(net.durations, c.q)
    return float(d @ leg_rates(net, c)) / c.q


def growth_index_circuit(net: DynamicNetwork, c: Circuit) -> float:
    """Growth index of a one-period circuit with simple legs."""
    if c.q != 1 or not c.is_simple:
        raise CircuitMismatch("expected a one-period circuit with loop-free legs")
    return growth_index_qcircuit(net, c)


# -- path enumeration --------------------------------------------------------


def _adjacency(net: DynamicNetwork) -> list[list[list[int]]]:
    return [[sorted(layer.out_neighbors(a)) for a in range(net.n)] for layer in net.layers]


def simple_paths(adj: Sequence[Sequence[int]], start: int) -> Iterator[tuple[int, ...]]:
    """Simple paths from ``start`` in lexicographic order, including ``(start,)``."""
    path = [start]
    on_path = {start}

    def rec():
        yield tuple(path)
        for b in adj[path[-1]]:
            if b not in on_path:
                path.append(b)
                on_path.add(b)
                yield from rec()
                on_path.discard(path.pop())

    yield from rec()


def walks(adj: Sequence[Sequence[int]], start: int, max_len: int) -> Iterator[tuple[int, ...]]:
    """Walks of at most ``max_len`` links from ``start``, lexicographic order."""
    path = [start]

    def rec():
        yield tuple(path)
        if len(path) <= max_len:
            for b in adj[path[-1]]:
                path.append(b)
                yield from rec()
                path.pop()

    yield from rec()


def _enumerate(net, q, leg_paths, max_count, include_trivial) -> CircuitList:
    p = net.p
    total = q * p
    out = CircuitList()
    cache: dict[tuple[int, int], list[tuple[int, ...]]] = {}

    def paths(k, a):
        if (k, a) not in cache:
            cache[(k, a)] = list(leg_paths(k, a))
        return cache[(k, a)]

    class _Full(Exception):
        pass

    def rec(j, a0, cur, legs, moved):
        if j == total:
            if cur == a0 and (moved or include_trivial):
                if len(out) >= max_count:
                    out.truncated = True
                    raise _Full
                out.append(Circuit(tuple(Leg(i % p, s) for i, s in enumerate(legs)), q))
            return
        if j and j % p == 0 and cur == a0:
            return
        for path in paths(j % p, cur):
            legs.append(path)
            rec(j + 1, a0, path[-1], legs, moved or len(path) > 1)
            legs.pop()

    try:
        for a0 in range(net.n):
            rec(0, a0, a0, [], False)
    except _Full:
        pass
    return out


def enumerate_tcircuits(
    net: DynamicNetwork, max_count: int = 10_000, include_trivial: bool = False
) -> CircuitList:
    """All one-period circuits with simple legs, lexicographically ordered.

    Stay-put legs are allowed, but a circuit that never moves is only
    listed when ``include_trivial`` is set.  If more than ``max_count``
    circuits exist the first ``max_count`` are returned with
    ``truncated=True``.
    """
    if max_count < 1:
        raise InvalidArgumentError("max_count must be >= 1")
    adj = _adjacency(net)
    return _enumerate(net, 1, lambda k, a: simple_paths(adj[k], a), max_count, include_trivial)


def enumerate_qtcircuits(
    net: DynamicNetwork,
    q: int,
    max_walk_len: int | None = None,
    max_count: int = 10_000,
    include_trivial: bool = False,
) -> CircuitList:
    """All ``q``-period circuits whose legs are walks of bounded length.

    ``max_walk_len`` defaults to ``2 n``.  Legs may revisit sites.
    """
    if q < 1:
        raise InvalidArgumentError("q must be >= 1")
    if max_count < 1:
        raise InvalidArgumentError("max_count must be >= 1")
    max_walk_len = 2 * net.n if max_walk_len is None else int(max_walk_len)
    if max_walk_len < 0:
        raise InvalidArgumentError("max_walk_len must be >= 0")
    adj = _adjacency(net)
    return _enumerate(net, q, lambda k, a: walks(adj[k], a, max_walk_len), max_count, include_trivial)


# -- best circuit --------------------------------------------------------------


def _bfs(adj, src) -> list[int]:
    dist = [-1] * len(adj)
    dist[src] = 0
    queue = deque([src])
    while queue:
        u = queue.popleft()
        for v in adj[u]:
            if dist[v] < 0:
                dist[v] = dist[u] + 1
                queue.append(v)
    return dist


def _lexmin_shortest(adj, dist_to, a, b) -> tuple[int, ...]:
    """Lexicographically smallest shortest walk from ``a`` to ``b``."""
    path = [a]
    while path[-1] != b:
        u = path[-1]
        path.append(min(v for v in adj[u] if dist_to[v] == dist_to[u] - 1))
    return tuple(path)


def _simple_leg_table(net, adj):
    """best[k][a][b] = lexmin (-rate, length, sites) over simple paths a -> b."""
    table = []
    for k, layer in enumerate(net.layers):
        rows = []
        for a in range(net.n):
            best: dict[int, tuple] = {}
            for path in simple_paths(adj[k], a):
                key = (-max(layer.growth[s] for s in path), len(path) - 1, path)
                b = path[-1]
                if b not in best or key < best[b]:
                    best[b] = key
            rows.append(best)
        table.append(rows)
    return table


def _walk_leg_table(net, adj, max_len):
    """Same as the simple table but over walks of at most ``max_len`` links.

    The best walk from a to b visits a top-rate site d on a shortest a->d
    walk followed by a shortest d->b walk.
    """
    n = net.n
    table = []
    for k, layer in enumerate(net.layers):
        dist = [_bfs(adj[k], a) for a in range(n)]
        # dist_to[b][v]: distance from v to b
        dist_to = [[dist[v][b] for v in range(n)] for b in range(n)]
        rows = []
        for a in range(n):
            best: dict[int, tuple] = {}
            for b in range(n):
                cands = []
                for d in range(n):
                    if dist[a][d] < 0 or dist[d][b] < 0:
                        continue
                    length = dist[a][d] + dist[d][b]
                    if length > max_len:
                        continue
                    cands.append((-layer.growth[d], length, d))
                if not cands:
                    continue
                top = min(cands)[:2]
                walks_ = [
                    _lexmin_shortest(adj[k], dist_to[d], a, d)
                    + _lexmin_shortest(adj[k], dist_to[b], d, b)[1:]
                    for (nr, length, d) in cands
                    if (nr, length) == top
                ]
                best[b] = (top[0], top[1], min(walks_))
            rows.append(best)
        table.append(rows)
    return table


def _better(x, y) -> bool:
    """Compare (score, L, legs) triples: higher score, then shorter, then lexmin."""
    if y is None:
        return True
    if x[0] > y[0] + SCORE_TOL:
        return True
    if x[0] < y[0] - SCORE_TOL:
        return False
    return (x[1], x[2]) < (y[1], y[2])


def _best_for_q(net, q, table, require_move):
    p = net.p
    dur = net.durations
    best_overall = None
    for a0 in range(net.n):
        # state: (site, moved) -> (score, L, legs)
        states = {(a0, False): (0.0, 0, ())}
        for j in range(q * p):
            k = j % p
            new: dict = {}
            for (a, moved), (score, L, legs) in states.items():
                for b, (neg_rate, length, path) in table[k][a].items():
                    cand = (score + dur[k] * -neg_rate, L + length, legs + (path,))
                    key = (b, moved or length > 0)
                    if _better(cand, new.get(key)):
                        new[key] = cand
            if (j + 1) % p == 0 and j + 1 < q * p:
                new = {s: v for s, v in new.items() if s[0] != a0}
            states = new
        for (b, moved), val in states.items():
            if b == a0 and (moved or not require_move):
                if _better(val, best_overall):
                    best_overall = val
    return best_overall


def best_circuit(
    net: DynamicNetwork,
    q_max: int | None = None,
    max_walk_len: int | None = None,
    loops: bool = False,
) -> tuple[Circuit, float]:
    """Circuit with the largest per-period growth index.

    One-period candidates use simple legs (or walks when ``loops`` is set);
    candidates spanning ``2..q_max`` periods use walks of at most
    ``max_walk_len`` links per leg.  Ties go to the smaller ``q``, then the
    shorter total length, then the lexicographically smaller leg sequence.
    The search is a dynamic programme over season occurrences, so its cost
    grows linearly in ``q_max`` rather than with the number of circuits.

    Args:
        q_max: Largest number of periods to consider; defaults to ``p``.
        max_walk_len: Longest walk per leg; defaults to ``2 n``.

    Raises:
        NoCircuitFound: the network has no circuit of the requested kinds.
    """
    q_max = net.p if q_max is None else int(q_max)
    if q_max < 1:
        raise InvalidArgumentError("q_max must be >= 1")
    max_walk_len = 2 * net.n if max_walk_len is None else int(max_walk_len)
    adj = _adjacency(net)
    simple_table = None if loops else _simple_leg_table(net, adj)
    walk_table = _walk_leg_table(net, adj, max_walk_len) if (loops or q_max > 1) else None

    best = None
    for q in range(1, q_max + 1):
        table = simple_table if (q == 1 and not loops) else walk_table
        found = _best_for_q(net, q, table, require_move=True)
        if found is None:
            continue
        index = found[0] / q
        if best is None or index > best[0] + SCORE_TOL:
            best = (index, q, found)
    if best is None:
        raise NoCircuitFound(f"no circuit with q <= {q_max}")
    index, q, (_, _, legs) = best
    p = net.p
    c = Circuit(tuple(Leg(j % p, s) for j, s in enumerate(legs)), q)
    return c, growth_index_qcircuit(net, c)


def circuit_sort_key(net: DynamicNetwork, c: Circuit) -> tuple:
    """Ordering used to rank circuits: index descending, then q, L, legs."""
    return (-round(growth_index_qcircuit(net, c), 12), c.q, c.L, c.sites)


# -- bar notation ---------------------------------------------------------------


def format_circuit(c: Circuit, names: Sequence[str] | None = None) -> str:
    """Bar notation, e.g. ``|1->3||3->1->2||2->3->1|``; stays print as ``|1|``."""

    def label(i):
        return names[i] if names else str(i + 1)

    return "".join("|" + "->".join(label(s) for s in leg.sites) + "|" for leg in c.legs)


def parse_circuit(text: str, p: int, names: Sequence[str] | None = None) -> Circuit:
    """Read bar notation; ``q`` is inferred as the number of legs over ``p``.

    A leg written ``|1->1|`` is read as staying at site 1.
    """
    body = text.strip().replace("→", "->")
    if not (body.startswith("|") and body.endswith("|")) or len(body) < 3:
        raise InvalidArgumentError(f"not a circuit in bar notation: {text!r}")
    chunks = body[1:-1].split("||")

    def index(label):
        label = label.strip()
        if names and label in names:
            return list(names).index(label)
        if label.isdigit() and int(label) >= 1:
            return int(label) - 1
        raise InvalidArgumentError(f"unknown site label {label!r} in {text!r}")

    legs = []
    for j, chunk in enumerate(chunks):
        if not chunk.strip() or "|" in chunk:
            raise InvalidArgumentError(f"malformed leg {chunk!r} in {text!r}")
        sites = [index(x) for x in chunk.split("->")]
        collapsed = [s for i, s in enumerate(sites) if i == 0 or s != sites[i - 1]]
        legs.append(Leg(j % p, tuple(collapsed)))
    if len(legs) % p:
        raise CircuitMismatch(f"{len(legs)} legs is not a multiple of {p} seasons")
    return Circuit(tuple(legs), len(legs) // p)
