"""Per-node infection probabilities and the influence sigma(A; T).

``sigma(A; T) = sum_n P(t_n <= T | A)``. Each sink's probability is the
absorption CDF of its disabled-set chain. Probabilities depend on the sources
only through ``A & ancestors(sink)``, so :class:`InfluenceEvaluator` caches
them under that key. Repeated evaluations of nearby source sets, as done by
the greedy and exhaustive optimizers, are then mostly cache hits.
"""
from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .closure import (
    DEFAULT_MAX_STATES,
    StateBudgetExceeded,
    blocked_set,
    enumerate_states,
    hops_from,
    hops_to,
)
from .ctmc import DEFAULT_TOL, absorption_cdfs, build_generator
from .network import Network, as_mask, members

__all__ = [
    "EvalOptions",
    "EvaluationError",
    "InfluenceEvaluator",
    "InfluenceReport",
    "infection_probability",
    "influence",
]

_MODES = ("exact", "ltp", "lsn")


@dataclass(frozen=True)
class EvalOptions:
    """How sink probabilities are computed.

    ``mode`` is ``"exact"``, ``"ltp"`` (drop nodes that are not on some path
    of at most ``m`` nodes from a source to the sink) or ``"lsn"`` (drop
    sources whose shortest path to the sink has more than ``m`` nodes).
    Path lengths count nodes, endpoints included.
    """

    mode: str = "exact"
    m: int | None = None
    max_states: int = DEFAULT_MAX_STATES
    tol: float = DEFAULT_TOL
    threads: int = 1

    def __post_init__(self):
        if self.mode not in _MODES:
            raise ValueError(f"mode must be one of {_MODES}, got {self.mode!r}")
        if self.mode == "exact":
            if self.m is not None:
                raise ValueError("m is only meaningful for ltp/lsn")
        elif self.m is None or int(self.m) < 2:
            raise ValueError(f"{self.mode} needs an integer m >= 2")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if int(self.max_states) < 1:
            raise ValueError("max_states must be positive")
        if int(self.threads) < 1:
            raise ValueError("threads must be >= 1")

    @property
    def label(self) -> str:
        return self.mode if self.mode == "exact" else f"{self.mode}({self.m})"


class EvaluationError(RuntimeError):
    """One or more sinks failed; ``errors`` maps sink id to the exception."""

    def __init__(self, errors: dict[int, Exception]):
        self.errors = dict(sorted(errors.items()))
        first = next(iter(self.errors.items()))
        super().__init__(f"{len(self.errors)} sink(s) failed; sink {first[0]}: {first[1]}")

    @property
    def budget_exceeded(self) -> bool:
        return all(isinstance(e, StateBudgetExceeded) for e in self.errors.values())


@dataclass
class InfluenceReport:
    per_node: np.ndarray
    sigma: float
    horizon: float
    sources: list[int]
    mode: str
    state_space_sizes: list[int] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "sigma": float(self.sigma),
            "horizon": float(self.horizon),
            "sources": list(self.sources),
            "mode": self.mode,
            "per_node": [float(p) for p in self.per_node],
            "state_space_sizes": [int(s) for s in self.state_space_sizes],
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


class InfluenceEvaluator:
    """Cached influence oracle for one network and a fixed tuple of horizons.

    All probability-returning methods give one value per horizon, in the
    order of ``horizons``.
    """

    def __init__(self, net: Network, horizons: float | Sequence[float], opts: EvalOptions | None = None):
        self.net = net
        self.horizons = tuple(float(t) for t in np.atleast_1d(horizons))
        if not self.horizons or any(not (t >= 0 and math.isfinite(t)) for t in self.horizons):
            raise ValueError("horizons must be finite and nonnegative")
        self.opts = opts or EvalOptions()
        self._anc: list[int | None] = [None] * net.node_count
        self._desc: list[int | None] = [None] * net.node_count
        self._hops_to: list[np.ndarray | None] = [None] * net.node_count
        self._cache: dict[tuple[int, int], np.ndarray] = {}
        self._sizes: dict[tuple[int, int], int] = {}
        self._chains: dict[tuple, tuple[np.ndarray, int]] = {}
        self._zeros = np.zeros(len(self.horizons))
        self._ones = np.ones(len(self.horizons))
        self.chains_solved = 0

    # -- reachability indices -------------------------------------------
    def ancestors(self, sink: int) -> int:
        """Nodes with a directed path to ``sink`` (``sink`` excluded)."""
        anc = self._anc[sink]
        if anc is None:
            anc = _reach(self.net.in_mask, sink)
            self._anc[sink] = anc
        return anc

    def descendants(self, node: int) -> int:
        desc = self._desc[node]
        if desc is None:
            desc = _reach(self.net.out_mask, node)
            self._desc[node] = desc
        return desc

    def _hops(self, sink: int) -> np.ndarray:
        h = self._hops_to[sink]
        if h is None:
            h = hops_to(self.net, sink)
            self._hops_to[sink] = h
        return h

    # -- per-sink evaluation --------------------------------------------
    def _key(self, sink: int, A: int) -> int:
        key = A & self.ancestors(sink)
        if key and self.opts.mode == "lsn":
            h = self._hops(sink)
            m = self.opts.m
            key = sum(1 << a for a in members(key) if h[a] + 1 <= m)
        return key

    def sink_probability(self, sink: int, A: int) -> np.ndarray:
        """``P(t_sink <= T | A)`` for every configured horizon."""
        if A >> sink & 1:
            return self._ones
        key = self._key(sink, A)
        if not key:
            return self._zeros
        hit = self._cache.get((sink, key))
        if hit is not None:
            return hit
        probs, size = self._solve(sink, key)
        self._cache[(sink, key)] = probs
        self._sizes[(sink, key)] = size
        return probs

    def state_space_size(self, sink: int, A: int) -> int:
        """Number of chain states used for ``sink`` (0 when no chain is needed)."""
        if A >> sink & 1:
            return 0
        key = self._key(sink, A)
        if not key:
            return 0
        self.sink_probability(sink, A)
        return self._sizes[(sink, key)]

    def _solve(self, sink: int, key: int) -> tuple[np.ndarray, int]:
        net, opts = self.net, self.opts
        allowed = None
        if opts.mode == "ltp":
            hf = hops_from(net, key)
            ht = self._hops(sink)
            ok = (hf >= 0) & (ht >= 0) & (hf + ht + 1 <= opts.m)
            allowed = sum(1 << int(v) for v in np.flatnonzero(ok))
            if not allowed >> sink & 1:
                return self._zeros, 0
        # the chain only depends on the initial closed set
        start = (sink, allowed, blocked_set(net, sink, key, allowed))
        hit = self._chains.get(start)
        if hit is not None:
            return hit
        try:
            space = enumerate_states(net, sink, key, opts.max_states, allowed)
        except StateBudgetExceeded:
            raise
        except ValueError:
            # sink cut off from every surviving source
            return self._zeros, 0
        gen = build_generator(net, space)
        self.chains_solved += 1
        probs = absorption_cdfs(gen, self.horizons, opts.tol)
        probs.setflags(write=False)
        self._chains[start] = (probs, len(space))
        return probs, len(space)

    # -- set-level quantities -------------------------------------------
    def per_node(self, A: int) -> np.ndarray:
        """Array of shape ``(len(horizons), node_count)``."""
        n = self.net.node_count
        errors: dict[int, Exception] = {}

        def one(v):
            try:
                return self.sink_probability(v, A)
            except StateBudgetExceeded as exc:
                errors[v] = exc
                return self._zeros

        if self.opts.threads > 1 and n > 1:
            with ThreadPoolExecutor(max_workers=self.opts.threads) as pool:
                cols = list(pool.map(one, range(n)))
        else:
            cols = [one(v) for v in range(n)]
        if errors:
            raise EvaluationError(errors)
        return np.stack(cols, axis=1)

    def sigma(self, A: int) -> np.ndarray:
        if not A:
            return self._zeros.copy()
        P = self.per_node(A)
        return np.array([math.fsum(row) for row in P])

    def gain(self, A: int, a: int) -> np.ndarray:
        """Marginal gain ``sigma(A + a) - sigma(A)``.

        Only ``a`` and its descendants can change, so the sum runs over those
        sinks in ascending id order.
        """
        if A >> a & 1:
            return self._zeros.copy()
        B = A | (1 << a)
        total = [0.0] * len(self.horizons)
        sinks = (self.descendants(a) | (1 << a)) & ~A
        errors: dict[int, Exception] = {}
        for n in members(sinks):
            try:
                d = self.sink_probability(n, B) - self.sink_probability(n, A)
            except StateBudgetExceeded as exc:
                errors[n] = exc
                continue
            for i, x in enumerate(d):
                total[i] += x
        if errors:
            raise EvaluationError(errors)
        return np.array(total)

    def report(self, A: int, horizon_index: int = 0) -> InfluenceReport:
        P = self.per_node(A)[horizon_index]
        return InfluenceReport(
            per_node=P,
            sigma=math.fsum(P) if A else 0.0,
            horizon=self.horizons[horizon_index],
            sources=members(A),
            mode=self.opts.label,
            state_space_sizes=[self.state_space_size(v, A) for v in range(self.net.node_count)],
        )


def _reach(adj_mask: list[int], start: int) -> int:
    seen = 1 << start
    stack = [start]
    while stack:
        new = adj_mask[stack.pop()] & ~seen
        if new:
            seen |= new
            stack.extend(members(new))
    return seen & ~(1 << start)


def infection_probability(net: Network, A, sink: int, T: float, opts: EvalOptions | None = None) -> float:
    """``P(t_sink <= T | A)``. ``A`` is a node mask or an iterable of ids."""
    A = as_mask(A, net.node_count)
    if not A:
        raise ValueError("source set must be nonempty")
    if not 0 <= sink < net.node_count:
        raise ValueError(f"sink {sink} outside [0, {net.node_count})")
    return float(InfluenceEvaluator(net, T, opts).sink_probability(int(sink), A)[0])


def influence(net: Network, A, T: float, opts: EvalOptions | None = None) -> InfluenceReport:
    """Per-node infection probabilities and their sum for source set ``A``."""
    A = as_mask(A, net.node_count)
    if not A:
        raise ValueError("source set must be nonempty")
    return InfluenceEvaluator(net, T, opts).report(A)
