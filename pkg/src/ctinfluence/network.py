"""Diffusion network data model, TSV I/O, rate assignment and synthetic topologies.

Node sets are plain Python ``int`` bit masks (bit ``i`` set means node ``i``
is a member). They are canonical and hashable, which is what the state-space
code needs. See :func:`to_mask` and :func:`members`.
"""
from __future__ import annotations

import math
import re
from collections import deque
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "Network",
    "NetworkError",
    "NetworkFormatError",
    "RateDistribution",
    "to_mask",
    "as_mask",
    "members",
    "load_network",
    "save_network",
    "dumps_network",
    "load_name_map",
    "generate_kronecker",
    "generate_forest_fire",
    "assign_rates",
    "drop_isolated",
    "kronecker_seed_for_density",
    "KRONECKER_RANDOM",
    "KRONECKER_HIERARCHICAL",
    "KRONECKER_CORE_PERIPHERY",
]

KRONECKER_RANDOM = ((0.5, 0.5), (0.5, 0.5))
KRONECKER_HIERARCHICAL = ((0.9, 0.1), (0.1, 0.9))
KRONECKER_CORE_PERIPHERY = ((0.9, 0.5), (0.5, 0.3))

_HEADER = re.compile(r"^#\s*nodes\s*:\s*(\S+)\s*$")
_MASK64 = (1 << 64) - 1


class NetworkError(ValueError):
    """A network violates one of its structural invariants."""


class NetworkFormatError(NetworkError):
    """Malformed network file. ``line`` is the 1-based offending line."""

    def __init__(self, message: str, line: int | None = None, path=None):
        self.line = line
        self.path = path
        where = f"line {line}: " if line is not None else ""
        super().__init__(f"{where}{message}")


def to_mask(nodes: Iterable[int]) -> int:
    mask = 0
    for v in nodes:
        mask |= 1 << int(v)
    return mask


def as_mask(nodes, node_count: int | None = None) -> int:
    """Accept either a bit mask (``int``) or an iterable of node ids."""
    if isinstance(nodes, (int, np.integer)):
        mask = int(nodes)
        if mask < 0:
            raise ValueError("node mask must be nonnegative")
    else:
        mask = to_mask(nodes)
    if node_count is not None and mask >> node_count:
        raise ValueError(f"node id outside [0, {node_count})")
    return mask


def members(mask: int) -> list[int]:
    """Node ids in ``mask``, ascending."""
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return out


class Network:
    """Directed graph with an exponential transmission rate on every edge.

    Edges are stored sorted by ``(src, dst)``; the edge index used elsewhere
    (Monte-Carlo delays, rate seeding) refers to this canonical order.
    Instances are treated as immutable.
    """

    __slots__ = (
        "node_count", "edges", "src", "dst", "rate",
        "out_edges", "in_edges", "out_mask", "in_mask", "full_mask", "_edge_index",
    )

    def __init__(self, node_count: int, edges: Iterable[Sequence]):
        node_count = int(node_count)
        if node_count < 1:
            raise NetworkError(f"node_count must be positive, got {node_count}")
        canon = []
        seen = set()
        for e in edges:
            u, v, r = int(e[0]), int(e[1]), float(e[2])
            _check_edge(u, v, r, node_count)
            if (u, v) in seen:
                raise NetworkError(f"duplicate edge {u}->{v}")
            seen.add((u, v))
            canon.append((u, v, r))
        canon.sort(key=lambda t: (t[0], t[1]))
        self.node_count = node_count
        self.edges = tuple(canon)
        self.src = np.array([e[0] for e in canon], dtype=np.int64)
        self.dst = np.array([e[1] for e in canon], dtype=np.int64)
        self.rate = np.array([e[2] for e in canon], dtype=float)
        self.out_edges = [[] for _ in range(node_count)]
        self.in_edges = [[] for _ in range(node_count)]
        self.out_mask = [0] * node_count
        self.in_mask = [0] * node_count
        for u, v, r in canon:
            self.out_edges[u].append((v, r))
            self.in_edges[v].append((u, r))
            self.out_mask[u] |= 1 << v
            self.in_mask[v] |= 1 << u
        self.full_mask = (1 << node_count) - 1
        self._edge_index = {(u, v): i for i, (u, v, _) in enumerate(canon)}

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    def has_edge(self, u: int, v: int) -> bool:
        return (u, v) in self._edge_index

    def edge_rate(self, u: int, v: int) -> float:
        return self.edges[self._edge_index[(u, v)]][2]

    def out_degree(self) -> np.ndarray:
        return np.bincount(self.src, minlength=self.node_count)

    def with_rates(self, rates: Sequence[float]) -> "Network":
        if len(rates) != self.edge_count:
            raise NetworkError("one rate per edge required")
        return Network(self.node_count, [(u, v, r) for (u, v, _), r in zip(self.edges, rates)])

    def __eq__(self, other):
        if not isinstance(other, Network):
            return NotImplemented
        return self.node_count == other.node_count and self.edges == other.edges

    def __hash__(self):
        return hash((self.node_count, self.edges))

    def __repr__(self):
        return f"Network(node_count={self.node_count}, edges={self.edge_count})"


def _check_edge(u: int, v: int, r: float, n: int) -> None:
    if not (0 <= u < n and 0 <= v < n):
        raise NetworkError(f"edge {u}->{v} has a node id outside [0, {n})")
    if u == v:
        raise NetworkError(f"self-loop at node {u}")
    if not math.isfinite(r) or r <= 0.0:
        raise NetworkError(f"edge {u}->{v} has non-positive or non-finite rate {r!r}")


# ---------------------------------------------------------------------------
# File I/O
# ---------------------------------------------------------------------------

def load_network(path) -> Network:
    """Read a network from the tab-separated edge-list format.

    The file needs a ``# nodes: N`` header before the first data line; other
    ``#`` lines and blank lines are ignored. Data lines are
    ``src<TAB>dst<TAB>rate``.
    """
    path = Path(path)
    node_count = None
    edges = []
    seen = {}
    with path.open("r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\r\n")
            if not line.strip():
                continue
            if line.startswith("#"):
                m = _HEADER.match(line)
                if m:
                    if node_count is not None:
                        raise NetworkFormatError("repeated nodes header", lineno, path)
                    try:
                        node_count = int(m.group(1))
                    except ValueError:
                        raise NetworkFormatError(f"bad node count {m.group(1)!r}", lineno, path) from None
                    if node_count < 1:
                        raise NetworkFormatError("node count must be positive", lineno, path)
                continue
            if node_count is None:
                raise NetworkFormatError("data line before '# nodes: N' header", lineno, path)
            fields = line.split("\t")
            if len(fields) != 3:
                raise NetworkFormatError(f"expected 3 tab-separated fields, got {len(fields)}", lineno, path)
            try:
                u, v = int(fields[0]), int(fields[1])
                r = float(fields[2])
            except ValueError:
                raise NetworkFormatError(f"cannot parse {line!r}", lineno, path) from None
            try:
                _check_edge(u, v, r, node_count)
            except NetworkError as exc:
                raise NetworkFormatError(str(exc), lineno, path) from None
            if (u, v) in seen:
                raise NetworkFormatError(f"duplicate edge {u}->{v} (first at line {seen[(u, v)]})", lineno, path)
            seen[(u, v)] = lineno
            edges.append((u, v, r))
    if node_count is None:
        raise NetworkFormatError("missing '# nodes: N' header", None, path)
    return Network(node_count, edges)


def dumps_network(net: Network) -> str:
    """Canonical TSV text: header, then edges sorted by ``(src, dst)``."""
    lines = [f"# nodes: {net.node_count}"]
    lines += [f"{u}\t{v}\t{r:.17g}" for u, v, r in net.edges]
    return "\n".join(lines) + "\n"


def save_network(net: Network, path) -> None:
    Path(path).write_text(dumps_network(net), encoding="utf-8")


def load_name_map(path, node_count: int | None = None) -> list[str]:
    """Read an ``id<TAB>name`` sidecar; ids without a name map to ``str(id)``."""
    names = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not raw.strip() or raw.startswith("#"):
            continue
        parts = raw.split("\t", 1)
        if len(parts) != 2:
            raise NetworkFormatError("expected 'id<TAB>name'", lineno, path)
        try:
            names[int(parts[0])] = parts[1]
        except ValueError:
            raise NetworkFormatError(f"bad node id {parts[0]!r}", lineno, path) from None
    n = node_count if node_count is not None else (max(names) + 1 if names else 0)
    return [names.get(i, str(i)) for i in range(n)]


def drop_isolated(net: Network) -> Network:
    """Remove nodes with no incident edge; survivors keep their relative order."""
    touched = sorted(set(net.src.tolist()) | set(net.dst.tolist()))
    if not touched:
        return Network(1, [])
    relabel = {v: i for i, v in enumerate(touched)}
    return Network(len(touched), [(relabel[u], relabel[v], r) for u, v, r in net.edges])


# ---------------------------------------------------------------------------
# Rates
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RateDistribution:
    """Uniform rate distribution; samples lie in ``(lo, hi]``."""

    lo: float = 0.0
    hi: float = 5.0
    kind: str = "uniform"

    def __post_init__(self):
        if self.kind != "uniform":
            raise ValueError(f"unsupported rate distribution {self.kind!r}")
        if not (0.0 <= self.lo < self.hi) or not math.isfinite(self.hi):
            raise ValueError(f"need 0 <= lo < hi, got lo={self.lo}, hi={self.hi}")

    @classmethod
    def parse(cls, text: str) -> "RateDistribution":
        """Parse ``"uniform:LO,HI"``."""
        kind, _, rest = text.partition(":")
        try:
            lo, hi = (float(x) for x in rest.split(","))
        except ValueError:
            raise ValueError(f"bad rate distribution {text!r}, expected 'uniform:LO,HI'") from None
        return cls(lo=lo, hi=hi, kind=kind.strip())

    def sample(self, rng: np.random.Generator) -> float:
        while True:
            x = self.hi - (self.hi - self.lo) * rng.random()
            if x > 0.0:
                return x


def _edge_rng(seed: int, u: int, v: int) -> np.random.Generator:
    return np.random.default_rng([int(seed) & _MASK64, u, v])


def assign_rates(topology: Network, dist: RateDistribution, rng_seed: int) -> Network:
    """Draw an independent rate for every edge.

    The rate of edge ``(u, v)`` depends only on ``(rng_seed, u, v)``, so it
    does not change when other edges are added or removed.
    """
    rates = [dist.sample(_edge_rng(rng_seed, u, v)) for u, v, _ in topology.edges]
    return topology.with_rates(rates)


# ---------------------------------------------------------------------------
# Synthetic topologies (unit placeholder rates; pass through assign_rates)
# ---------------------------------------------------------------------------

def _as_seed_matrix(seed_matrix) -> np.ndarray:
    m = np.asarray(seed_matrix, dtype=float)
    if m.shape != (2, 2):
        raise ValueError(f"Kronecker seed matrix must be 2x2, got shape {m.shape}")
    if not np.all(np.isfinite(m)) or m.min() < 0.0 or m.max() > 1.0:
        raise ValueError("Kronecker seed matrix entries must lie in [0, 1]")
    return m


def generate_kronecker(seed_matrix, iterations: int, rng_seed: int, block_rows: int = 256) -> Network:
    """Stochastic Kronecker graph on ``2**iterations`` nodes.

    Pair ``(u, v)`` is an edge with probability ``prod_t seed[u_t][v_t]`` over
    the binary digits of ``u`` and ``v``. Self-loops are dropped. Rates are
    placeholders equal to 1.
    """
    m = _as_seed_matrix(seed_matrix)
    iterations = int(iterations)
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    n = 1 << iterations
    rng = np.random.default_rng(rng_seed)
    cols = np.arange(n)
    edges = []
    for start in range(0, n, block_rows):
        rows = np.arange(start, min(start + block_rows, n))
        prob = np.ones((rows.size, n))
        for t in range(iterations):
            prob *= m[((rows >> t) & 1)[:, None], ((cols >> t) & 1)[None, :]]
        hit = rng.random(prob.shape) < prob
        hit[np.arange(rows.size), rows] = False
        r, c = np.nonzero(hit)
        edges.extend(zip((rows[r]).tolist(), c.tolist(), [1.0] * r.size))
    return Network(n, edges)


def kronecker_seed_for_density(seed_matrix, iterations: int, edges_per_node: float) -> np.ndarray:
    """Rescale a seed matrix so the expected edge count is ``edges_per_node * 2**iterations``.

    Entries are multiplied by a common factor and clipped at 1; self-loop
    mass (dropped by the generator) is excluded from the count.
    """
    m = _as_seed_matrix(seed_matrix)
    target = edges_per_node * (1 << iterations)

    def scaled(c):
        return np.minimum(m * c, 1.0)

    def expected(c):
        s = scaled(c)
        return s.sum() ** iterations - np.trace(s) ** iterations

    positive = m[m > 0]
    if positive.size == 0:
        raise ValueError("seed matrix is all zeros")
    lo, hi = 0.0, 1.0 / positive.min()
    if expected(hi) < target:
        raise ValueError(f"density {edges_per_node} not reachable with this seed matrix")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if expected(mid) < target:
            lo = mid
        else:
            hi = mid
    return scaled(hi)


def _burn_count(rng: np.random.Generator, p: float) -> int:
    # geometric with mean p / (1 - p)
    if p <= 0.0:
        return 0
    return int(rng.geometric(1.0 - p)) - 1


def generate_forest_fire(n: int, p_fw: float, p_bw: float, rng_seed: int) -> Network:
    """Forest Fire growth model; edges point from each new node to the nodes it burns."""
    n = int(n)
    if n < 1:
        raise ValueError("n must be >= 1")
    if not (0.0 <= p_fw < 1.0 and 0.0 <= p_bw < 1.0):
        raise ValueError("burning probabilities must lie in [0, 1)")
    rng = np.random.default_rng(rng_seed)
    outs = [[] for _ in range(n)]
    ins = [[] for _ in range(n)]
    edges = []
    for v in range(1, n):
        ambassador = int(rng.integers(v))
        visited = {v, ambassador}
        linked = [ambassador]
        queue = deque([ambassador])
        while queue:
            w = queue.popleft()
            burned = []
            for pool, p in ((outs[w], p_fw), (ins[w], p_bw)):
                x = _burn_count(rng, p)
                cand = [u for u in pool if u not in visited]
                if x and cand:
                    pick = rng.choice(len(cand), size=min(x, len(cand)), replace=False)
                    for i in sorted(pick.tolist()):
                        visited.add(cand[i])
                        burned.append(cand[i])
            linked.extend(burned)
            queue.extend(burned)
        for u in linked:
            outs[v].append(u)
            ins[u].append(v)
            edges.append((v, u, 1.0))
    return Network(n, edges)
