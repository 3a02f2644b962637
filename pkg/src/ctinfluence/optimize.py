"""Source-set selection: greedy (naive and lazy), exhaustive search, baselines, online bound."""
from __future__ import annotations

import heapq
import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .influence import EvalOptions, InfluenceEvaluator
from .network import Network, as_mask

__all__ = [
    "Pick",
    "GreedyTrace",
    "ExhaustiveBudgetExceeded",
    "greedy",
    "online_bound",
    "exhaustive",
    "exhaustive_search",
    "baseline_select",
    "DEFAULT_EXHAUSTIVE_BUDGET",
]

DEFAULT_EXHAUSTIVE_BUDGET = 10**6


class ExhaustiveBudgetExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class Pick:
    node: int
    delta: float
    sigma: float


@dataclass
class GreedyTrace:
    picks: list[Pick] = field(default_factory=list)
    evaluations: int = 0
    bound: float | None = None
    step_bounds: list[float] | None = None

    @property
    def sources(self) -> int:
        return sum(1 << p.node for p in self.picks)

    @property
    def nodes(self) -> list[int]:
        return [p.node for p in self.picks]

    @property
    def sigma(self) -> float:
        return self.picks[-1].sigma if self.picks else 0.0

    def to_dict(self) -> dict:
        out = {
            "picks": [{"node": p.node, "delta": p.delta, "sigma": p.sigma} for p in self.picks],
            "bound": self.bound,
            "evaluations": self.evaluations,
        }
        if self.step_bounds is not None:
            out["step_bounds"] = list(self.step_bounds)
        return out

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def _evaluator(net, T, opts, evaluator) -> InfluenceEvaluator:
    if evaluator is not None:
        if evaluator.net is not net or len(evaluator.horizons) != 1 or evaluator.horizons[0] != float(T):
            raise ValueError("evaluator does not match network/horizon")
        return evaluator
    return InfluenceEvaluator(net, T, opts)


def greedy(
    net: Network,
    k: int,
    T: float,
    lazy: bool = True,
    opts: EvalOptions | None = None,
    *,
    bound: bool = False,
    step_bounds: bool = False,
    evaluator: InfluenceEvaluator | None = None,
) -> GreedyTrace:
    """Add, one at a time, the node with the largest marginal gain.

    Ties go to the lowest node id. With ``lazy`` a max-heap of stale gains is
    kept and a gain is recomputed only when it reaches the top. Submodularity
    makes stale gains upper bounds, so the picks are identical to the naive
    loop.
    """
    k = int(k)
    if not 0 <= k <= net.node_count:
        raise ValueError(f"k must lie in [0, {net.node_count}], got {k}")
    ev = _evaluator(net, T, opts, evaluator)
    trace = GreedyTrace(step_bounds=[] if step_bounds else None)
    A = 0
    sigma = 0.0
    heap: list[tuple[float, int, int]] = []
    for step in range(k):
        if lazy:
            if step == 0:
                for a in range(net.node_count):
                    heap.append((-float(ev.gain(0, a)[0]), a, 0))
                    trace.evaluations += 1
                heapq.heapify(heap)
            while True:
                neg, a, seen = heapq.heappop(heap)
                if seen == step:
                    best, best_gain = a, -neg
                    break
                heapq.heappush(heap, (-float(ev.gain(A, a)[0]), a, step))
                trace.evaluations += 1
        else:
            best, best_gain = -1, -math.inf
            for a in range(net.node_count):
                if A >> a & 1:
                    continue
                g = float(ev.gain(A, a)[0])
                trace.evaluations += 1
                if g > best_gain:
                    best, best_gain = a, g
        A |= 1 << best
        sigma = float(ev.sigma(A)[0])
        trace.picks.append(Pick(best, best_gain, sigma))
        if step_bounds:
            trace.step_bounds.append(online_bound(net, A, k, T, evaluator=ev))
    if bound:
        trace.bound = online_bound(net, A, max(k, 1), T, evaluator=ev)
    return trace


def online_bound(
    net: Network,
    A_hat,
    k: int,
    T: float,
    opts: EvalOptions | None = None,
    *,
    evaluator: InfluenceEvaluator | None = None,
) -> float:
    """Upper bound on the best size-``k`` influence: ``sigma(A_hat)`` plus the
    ``k`` largest marginal gains with respect to ``A_hat``."""
    k = int(k)
    if k < 1:
        raise ValueError("k must be >= 1")
    A = as_mask(A_hat, net.node_count)
    ev = _evaluator(net, T, opts, evaluator)
    deltas = sorted(
        (float(ev.gain(A, a)[0]) for a in range(net.node_count) if not A >> a & 1),
        reverse=True,
    )
    base = float(ev.sigma(A)[0])
    return base + math.fsum(max(d, 0.0) for d in deltas[:k])


def exhaustive_search(
    ev: InfluenceEvaluator,
    k: int,
    budget: int = DEFAULT_EXHAUSTIVE_BUDGET,
) -> list[tuple[int, float]]:
    """Best ``k``-subset for every horizon of ``ev``: one ``(mask, sigma)`` per horizon.

    Ties go to the lexicographically smallest subset.
    """
    net = ev.net
    n = net.node_count
    k = int(k)
    if not 1 <= k <= n:
        raise ValueError(f"k must lie in [1, {n}], got {k}")
    count = math.comb(n, k)
    if count > budget:
        raise ExhaustiveBudgetExceeded(f"C({n},{k}) = {count} subsets exceeds budget {budget}")
    H = len(ev.horizons)
    sinks = [v for v in range(n) if ev.ancestors(v)]
    best_val = np.full(H, -np.inf)
    best_set = [0] * H
    if n <= 62:
        chunks = _combo_masks(n, k)
    else:
        chunks = ([sum(1 << a for a in c) for c in _batched(itertools.combinations(range(n), k))])
    for masks in chunks:
        total = _subset_sigmas(ev, masks, k, sinks)
        for h in range(H):
            i = int(np.argmax(total[:, h]))
            if total[i, h] > best_val[h]:
                best_val[h] = total[i, h]
                best_set[h] = int(masks[i])
    return [(best_set[h], float(ev.sigma(best_set[h])[h])) for h in range(H)]


_CHUNK = 200_000


def _batched(it):
    while True:
        block = list(itertools.islice(it, _CHUNK))
        if not block:
            return
        yield block


def _combo_masks(n: int, k: int):
    """Lexicographic ``k``-subsets of ``range(n)`` as int64 masks, in chunks."""
    bits = np.left_shift(np.int64(1), np.arange(n, dtype=np.int64))
    for block in _batched(itertools.combinations(range(n), k)):
        idx = np.asarray(block, dtype=np.int64).reshape(len(block), k)
        yield np.bitwise_or.reduce(bits[idx], axis=1)


def _subset_sigmas(ev: InfluenceEvaluator, masks, k: int, sinks: list[int]) -> np.ndarray:
    """sigma for each mask, shape ``(len(masks), H)``; sinks summed in ascending order."""
    H = len(ev.horizons)
    total = np.full((len(masks), H), float(k))
    if isinstance(masks, np.ndarray):
        for v in sinks:
            keys = masks & np.int64(ev.ancestors(v))
            outside = (masks >> np.int64(v)) & 1 == 0
            uniq, inv = np.unique(keys[outside], return_inverse=True)
            table = np.stack([ev.sink_probability(v, int(u)) for u in uniq]) if uniq.size else np.zeros((0, H))
            total[outside] += table[inv.ravel()]
    else:
        for i, A in enumerate(masks):
            for v in sinks:
                if not A >> v & 1:
                    total[i] += ev.sink_probability(v, A)
    return total


def exhaustive(
    net: Network,
    k: int,
    T: float,
    opts: EvalOptions | None = None,
    budget: int = DEFAULT_EXHAUSTIVE_BUDGET,
) -> tuple[int, float]:
    """Optimal ``k``-subset by enumeration, as ``(mask, sigma)``."""
    return exhaustive_search(InfluenceEvaluator(net, T, opts), k, budget)[0]


def baseline_select(net: Network, k: int, method: str = "random", rng_seed: int = 0) -> int:
    """``random``: uniform ``k``-subset. ``out_degree``: top ``k`` by out-degree, ties to lowest id."""
    k = int(k)
    n = net.node_count
    if not 0 <= k <= n:
        raise ValueError(f"k must lie in [0, {n}], got {k}")
    if method == "random":
        rng = np.random.default_rng(rng_seed)
        picked = rng.choice(n, size=k, replace=False)
    elif method in ("out_degree", "degree"):
        deg = net.out_degree()
        picked = sorted(range(n), key=lambda v: (-deg[v], v))[:k]
    else:
        raise ValueError(f"unknown baseline {method!r}")
    return sum(1 << int(v) for v in picked)
