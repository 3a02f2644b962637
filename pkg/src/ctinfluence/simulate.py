"""Monte-Carlo cascades: infection times as shortest paths over sampled delays.

A cascade draws an exponential delay for every edge; a node's infection time
is then its shortest-path distance from the sources. This is independent of
the Markov-chain machinery and is used to cross-check it.
"""
from __future__ import annotations

import heapq
import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .closure import hops_from
from .network import Network, as_mask, members

__all__ = ["CascadeSample", "MCEstimate", "sample_cascade", "mc_influence", "mc_influence_horizons"]

_CHUNK = 10_000
_MASK64 = (1 << 64) - 1


@dataclass
class CascadeSample:
    times: np.ndarray   # +inf where never infected
    delays: np.ndarray  # per edge, canonical edge order
    sources: list[int]

    def infected(self, t: float) -> int:
        return sum(1 << int(v) for v in np.flatnonzero(self.times <= t))


@dataclass
class MCEstimate:
    sigma_hat: float
    stderr: float
    per_node: np.ndarray
    runs: int
    horizon: float

    def per_node_stderr(self) -> np.ndarray:
        p = self.per_node
        return np.sqrt(p * (1.0 - p) / self.runs)

    def to_dict(self) -> dict:
        return {
            "sigma_hat": float(self.sigma_hat),
            "stderr": float(self.stderr),
            "horizon": float(self.horizon),
            "runs": int(self.runs),
            "per_node": [float(p) for p in self.per_node],
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def sample_cascade(net: Network, A, rng: np.random.Generator) -> CascadeSample:
    """One cascade from ``A``; multi-source Dijkstra over fresh exponential delays."""
    A = as_mask(A, net.node_count)
    if not A:
        raise ValueError("source set must be nonempty")
    delays = rng.exponential(size=net.edge_count) / net.rate
    times = np.full(net.node_count, math.inf)
    heap = []
    for a in members(A):
        times[a] = 0.0
        heap.append((0.0, a))
    heapq.heapify(heap)
    starts = np.searchsorted(net.src, np.arange(net.node_count + 1))
    done = np.zeros(net.node_count, dtype=bool)
    while heap:
        t, u = heapq.heappop(heap)
        if done[u]:
            continue
        done[u] = True
        for e in range(starts[u], starts[u + 1]):
            v = net.dst[e]
            cand = t + delays[e]
            if cand < times[v]:
                times[v] = cand
                heapq.heappush(heap, (cand, int(v)))
    return CascadeSample(times=times, delays=delays, sources=members(A))


def _batch_times(net: Network, A: int, delays: np.ndarray, order: np.ndarray) -> np.ndarray:
    runs = delays.shape[0]
    t = np.full((runs, net.node_count), np.inf)
    t[:, members(A)] = 0.0
    src, dst = net.src, net.dst
    for _ in range(net.node_count):
        changed = False
        for e in order:
            cand = t[:, src[e]] + delays[:, e]
            col = t[:, dst[e]]
            upd = cand < col
            if upd.any():
                col[upd] = cand[upd]
                changed = True
        if not changed:
            break
    return t


def mc_influence_horizons(
    net: Network, A, horizons: Sequence[float], runs: int, rng_seed: int
) -> list[MCEstimate]:
    """Monte-Carlo influence estimates for several horizons from the same cascades.

    Runs are processed in fixed-size chunks, each with its own generator keyed
    by ``(rng_seed, chunk index)``, so results depend only on the seed and the
    run count.
    """
    A = as_mask(A, net.node_count)
    runs = int(runs)
    if runs < 1:
        raise ValueError("runs must be >= 1")
    if not A:
        raise ValueError("source set must be nonempty")
    horizons = [float(t) for t in horizons]
    H, n = len(horizons), net.node_count
    node_counts = np.zeros((H, n), dtype=np.int64)
    total = np.zeros(H, dtype=np.int64)
    total_sq = np.zeros(H, dtype=np.int64)
    # relax edges roughly in cascade order so the sweep converges fast
    hop = hops_from(net, A)
    hop = np.where(hop < 0, n, hop)
    order = np.argsort(hop[net.src], kind="stable") if net.edge_count else np.zeros(0, dtype=np.int64)
    hz = np.asarray(horizons)
    for c, start in enumerate(range(0, runs, _CHUNK)):
        m = min(_CHUNK, runs - start)
        rng = np.random.default_rng([int(rng_seed) & _MASK64, c])
        delays = rng.exponential(size=(m, net.edge_count)) / net.rate
        t = _batch_times(net, A, delays, order)
        hit = t[None, :, :] <= hz[:, None, None]
        node_counts += hit.sum(axis=1)
        N = hit.sum(axis=2).astype(np.int64)
        total += N.sum(axis=1)
        total_sq += (N * N).sum(axis=1)
    out = []
    for h, T in enumerate(horizons):
        mean = total[h] / runs
        if runs > 1:
            var = max((total_sq[h] - total[h] * (total[h] / runs)) / (runs - 1), 0.0)
            se = math.sqrt(var / runs)
        else:
            se = 0.0
        out.append(MCEstimate(
            sigma_hat=float(mean), stderr=se, per_node=node_counts[h] / runs, runs=runs, horizon=T,
        ))
    return out


def mc_influence(net: Network, A, T: float, runs: int, rng_seed: int) -> MCEstimate:
    """Estimate ``sigma(A; T)`` as the mean number of nodes infected by ``T``."""
    return mc_influence_horizons(net, A, [T], runs, rng_seed)[0]
