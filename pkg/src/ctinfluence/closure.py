"""Blocked sets, closedness, and reachable state-space enumeration for one sink.

``blocked_set(net, n, B)`` is the set of nodes all of whose paths to ``n``
visit ``B``. A set is *closed* when it equals its own blocked set. Starting
from the blocked set of the sources, the disabled set of a cascade only ever
moves between closed sets; :func:`enumerate_states` lists the ones it can
reach.

Enumeration works on the *relevant region* of a sink: nodes reachable from the
sources that can also reach the sink. Every other node is either never
infected or irrelevant to the sink, so restricting to the region gives the
same chain with much smaller bit masks. Full-graph states are recovered on
demand by :attr:`StateSpace.states`.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .network import Network, members

__all__ = [
    "StateBudgetExceeded",
    "StateSpace",
    "blocked_set",
    "is_closed",
    "enumerate_states",
    "relevant_region",
    "hops_to",
    "hops_from",
    "DEFAULT_MAX_STATES",
]

DEFAULT_MAX_STATES = 100_000


class StateBudgetExceeded(RuntimeError):
    def __init__(self, sink: int, budget: int):
        self.sink = sink
        self.budget = budget
        super().__init__(
            f"state space for sink {sink} exceeds max_states={budget}; "
            "use the ltp/lsn approximations or the Monte-Carlo estimator"
        )


def _check_sink(net: Network, sink: int) -> int:
    sink = int(sink)
    if not 0 <= sink < net.node_count:
        raise ValueError(f"sink {sink} outside [0, {net.node_count})")
    return sink


def blocked_set(net: Network, sink: int, B: int, allowed: int | None = None) -> int:
    """Nodes whose every path to ``sink`` visits ``B``.

    ``allowed`` restricts the graph to the subgraph induced by those nodes;
    everything outside it counts as unable to reach the sink.
    """
    sink = _check_sink(net, sink)
    full = net.full_mask
    if B >> sink & 1:
        return full
    closed = B if allowed is None else B | (full & ~allowed)
    reached = 1 << sink
    stack = [sink]
    in_mask = net.in_mask
    while stack:
        new = in_mask[stack.pop()] & ~(reached | closed)
        if new:
            reached |= new
            stack.extend(members(new))
    return full & ~reached


def is_closed(net: Network, sink: int, X: int, allowed: int | None = None) -> bool:
    return blocked_set(net, sink, X, allowed) == X


def hops_to(net: Network, sink: int, allowed: int | None = None) -> np.ndarray:
    """Hop distance from every node to ``sink`` (-1 where unreachable)."""
    dist = np.full(net.node_count, -1, dtype=np.int64)
    dist[sink] = 0
    queue = deque([sink])
    while queue:
        x = queue.popleft()
        for u, _ in net.in_edges[x]:
            if dist[u] < 0 and (allowed is None or allowed >> u & 1):
                dist[u] = dist[x] + 1
                queue.append(u)
    return dist


def hops_from(net: Network, sources: int, allowed: int | None = None) -> np.ndarray:
    """Hop distance from the nearest source to every node (-1 where unreachable)."""
    dist = np.full(net.node_count, -1, dtype=np.int64)
    queue = deque()
    for a in members(sources):
        if allowed is None or allowed >> a & 1:
            dist[a] = 0
            queue.append(a)
    while queue:
        x = queue.popleft()
        for v, _ in net.out_edges[x]:
            if dist[v] < 0 and (allowed is None or allowed >> v & 1):
                dist[v] = dist[x] + 1
                queue.append(v)
    return dist


def _reach(adj_mask: list[int], start: int, allowed: int) -> int:
    seen = start
    stack = members(start)
    while stack:
        new = adj_mask[stack.pop()] & allowed & ~seen
        if new:
            seen |= new
            stack.extend(members(new))
    return seen


def relevant_region(net: Network, sink: int, A: int, allowed: int | None = None) -> int:
    """Nodes on some directed path from ``A`` to ``sink`` (0 if there is none)."""
    allowed = net.full_mask if allowed is None else allowed
    A &= allowed
    if not (allowed >> sink & 1) or not A:
        return 0
    down = _reach(net.out_mask, A, allowed)
    if not down >> sink & 1:
        return 0
    up = _reach(net.in_mask, 1 << sink, allowed)
    return down & up


class _Region:
    """The relevant region relabelled to local ids ``0..r-1`` (ascending global id)."""

    __slots__ = ("nodes", "pos", "in_mask", "out", "sink", "full")

    def __init__(self, net: Network, sink: int, region: int):
        self.nodes = members(region)
        self.pos = {g: i for i, g in enumerate(self.nodes)}
        self.in_mask = [0] * len(self.nodes)
        self.out = [[] for _ in self.nodes]
        for i, g in enumerate(self.nodes):
            for v, r in net.out_edges[g]:
                j = self.pos.get(v)
                if j is not None:
                    self.out[i].append((j, r))
                    self.in_mask[j] |= 1 << i
        self.sink = self.pos[sink]
        self.full = (1 << len(self.nodes)) - 1

    def to_local(self, mask: int) -> int:
        out = 0
        pos = self.pos
        for g in members(mask):
            i = pos.get(g)
            if i is not None:
                out |= 1 << i
        return out

    def to_global(self, mask: int) -> int:
        out = 0
        for i in members(mask):
            out |= 1 << self.nodes[i]
        return out

    def blocked(self, B: int) -> int:
        s = self.sink
        if B >> s & 1:
            return self.full
        reached = 1 << s
        stack = [s]
        in_mask = self.in_mask
        while stack:
            new = in_mask[stack.pop()] & ~(reached | B)
            if new:
                reached |= new
                while new:
                    low = new & -new
                    stack.append(low.bit_length() - 1)
                    new ^= low
        return self.full & ~reached

    def cut(self, D: int) -> dict[int, float]:
        """Total rate of edges leaving ``D``, keyed by head (local ids)."""
        heads: dict[int, float] = {}
        out = self.out
        m = D
        while m:
            low = m & -m
            for v, r in out[low.bit_length() - 1]:
                if not D >> v & 1:
                    heads[v] = heads.get(v, 0.0) + r
            m ^= low
        return heads


@dataclass
class StateSpace:
    """Closed sets reachable from the sources' blocked set, topologically ordered.

    ``local_states`` are masks over ``region`` (see module docstring); index 0
    is the initial state and the last index is the absorbing state (sink
    infected). ``successor[(i, v)]`` caches the closed set reached from state
    ``i`` when local node ``v`` gets infected.
    """

    net: Network
    sink: int
    sources: int
    allowed: int | None
    region: list[int]
    local_states: list[int]
    index_of: dict[int, int]
    successor: dict[tuple[int, int], int]
    _local: _Region = field(repr=False)
    _lifted: list[int] | None = field(default=None, repr=False)

    def __len__(self) -> int:
        return len(self.local_states)

    @property
    def initial_index(self) -> int:
        return 0

    @property
    def absorbing_index(self) -> int:
        return len(self.local_states) - 1

    @property
    def states(self) -> list[int]:
        """States as closed subsets of the whole node set."""
        if self._lifted is None:
            loc = self._local
            self._lifted = [
                blocked_set(self.net, self.sink, loc.to_global(x), self.allowed)
                for x in self.local_states
            ]
        return self._lifted

    def index(self, full_state: int) -> int:
        """Position of a full-graph closed set; ``KeyError`` if absent."""
        return self.index_of[self._local.to_local(full_state)]

    def local_cut(self, i: int) -> dict[int, float]:
        return self._local.cut(self.local_states[i])


def enumerate_states(
    net: Network,
    sink: int,
    A: int,
    max_states: int = DEFAULT_MAX_STATES,
    allowed: int | None = None,
) -> StateSpace:
    """Breadth-first enumeration of the closed sets reachable from ``blocked_set(A)``.

    Raises :class:`StateBudgetExceeded` when more than ``max_states`` states
    are found. ``allowed`` evaluates on the subgraph induced by those nodes.
    """
    sink = _check_sink(net, sink)
    if not A:
        raise ValueError("source set must be nonempty")
    region = relevant_region(net, sink, A, allowed)
    if not region:
        raise ValueError(f"sink {sink} is not reachable from the sources")
    loc = _Region(net, sink, region)
    start = loc.blocked(loc.to_local(A))
    found = {start}
    order = [start]
    succ_raw: dict[tuple[int, int], int] = {}
    closure_cache: dict[int, int] = {}
    queue = deque([start])
    while queue:
        D = queue.popleft()
        if D == loc.full:
            continue
        for v in sorted(loc.cut(D)):
            key = D | (1 << v)
            nxt = closure_cache.get(key)
            if nxt is None:
                nxt = loc.blocked(key)
                closure_cache[key] = nxt
            succ_raw[(D, v)] = nxt
            if nxt not in found:
                found.add(nxt)
                if len(found) > max_states:
                    raise StateBudgetExceeded(sink, max_states)
                order.append(nxt)
                queue.append(nxt)
    states = sorted(order, key=lambda x: (x.bit_count(), x))
    index_of = {x: i for i, x in enumerate(states)}
    successor = {(index_of[D], v): nxt for (D, v), nxt in succ_raw.items()}
    return StateSpace(
        net=net,
        sink=sink,
        sources=A,
        allowed=allowed,
        region=loc.nodes,
        local_states=states,
        index_of=index_of,
        successor=successor,
        _local=loc,
    )
