"""scikit-learn style wrappers.

``fit`` takes the network (anything :func:`check_network` accepts).
:class:`InfluenceEstimator` then predicts influence for source sets, and
:class:`InfluenceMaximizer` exposes the selected sources like a feature
selector (``get_support``).
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .closure import DEFAULT_MAX_STATES
from .ctmc import DEFAULT_TOL
from .influence import EvalOptions, InfluenceEvaluator
from .network import members
from .optimize import baseline_select, exhaustive_search, greedy, online_bound
from .validation import check_horizon, check_network, check_positive_int, check_source_set

__all__ = ["InfluenceEstimator", "InfluenceMaximizer"]


def _options(est) -> EvalOptions:
    return EvalOptions(
        mode=est.mode,
        m=est.m,
        max_states=check_positive_int(est.max_states, "max_states"),
        tol=est.tol,
        threads=check_positive_int(est.n_jobs, "n_jobs"),
    )


class InfluenceEstimator(BaseEstimator):
    """Exact (or ltp/lsn-approximate) influence of source sets on a fitted network.

    Parameters
    ----------
    horizon : float
        Time window ``T``.
    mode : {"exact", "ltp", "lsn"}
    m : int or None
        Path-length limit (in nodes) for ``ltp``/``lsn``.
    max_states : int
        Per-sink state-space budget.
    tol : float
        Absolute error per sink probability.
    n_jobs : int
        Number of threads used across sinks.
    """

    def __init__(self, horizon=1.0, mode="exact", m=None, max_states=DEFAULT_MAX_STATES,
                 tol=DEFAULT_TOL, n_jobs=1):
        self.horizon = horizon
        self.mode = mode
        self.m = m
        self.max_states = max_states
        self.tol = tol
        self.n_jobs = n_jobs

    def fit(self, X, y=None):
        net = check_network(X)
        self.network_ = net
        self.n_nodes_ = net.node_count
        self.evaluator_ = InfluenceEvaluator(net, check_horizon(self.horizon), _options(self))
        return self

    def _masks(self, source_sets):
        if isinstance(source_sets, (int, np.integer)) or (
            len(source_sets) and isinstance(next(iter(source_sets)), (int, np.integer))
            and not isinstance(source_sets, np.ndarray)
        ):
            raise TypeError("pass a list of source sets, e.g. [[0, 3], [5]]")
        return [check_source_set(A, self.n_nodes_, allow_empty=True) for A in source_sets]

    def predict(self, source_sets) -> np.ndarray:
        """Influence ``sigma(A; T)`` for each source set."""
        check_is_fitted(self, "evaluator_")
        return np.array([float(self.evaluator_.sigma(A)[0]) for A in self._masks(source_sets)])

    def predict_proba(self, source_sets) -> np.ndarray:
        """Per-node infection probabilities, shape ``(n_sets, n_nodes)``."""
        check_is_fitted(self, "evaluator_")
        rows = []
        for A in self._masks(source_sets):
            rows.append(self.evaluator_.per_node(A)[0] if A else np.zeros(self.n_nodes_))
        return np.vstack(rows) if rows else np.zeros((0, self.n_nodes_))

    def score(self, source_sets, y=None) -> float:
        """Mean influence over ``source_sets``."""
        return float(np.mean(self.predict(source_sets)))


class InfluenceMaximizer(BaseEstimator):
    """Pick ``n_sources`` nodes maximizing influence within ``horizon``.

    ``method`` is ``"greedy"`` (with ``lazy`` evaluation by default),
    ``"exhaustive"``, ``"random"`` or ``"degree"``. After ``fit``:
    ``sources_`` (sorted ids), ``sigma_``, ``bound_`` (if ``compute_bound``),
    and ``trace_`` for greedy.
    """

    _methods = ("greedy", "exhaustive", "random", "degree")

    def __init__(self, n_sources=10, horizon=1.0, method="greedy", lazy=True, mode="exact", m=None,
                 max_states=DEFAULT_MAX_STATES, tol=DEFAULT_TOL, compute_bound=False,
                 random_state=None, n_jobs=1):
        self.n_sources = n_sources
        self.horizon = horizon
        self.method = method
        self.lazy = lazy
        self.mode = mode
        self.m = m
        self.max_states = max_states
        self.tol = tol
        self.compute_bound = compute_bound
        self.random_state = random_state
        self.n_jobs = n_jobs

    def fit(self, X, y=None):
        net = check_network(X)
        T = check_horizon(self.horizon)
        k = check_positive_int(self.n_sources, "n_sources", minimum=0)
        if k > net.node_count:
            raise ValueError(f"n_sources={k} exceeds the {net.node_count} nodes")
        if self.method not in self._methods:
            raise ValueError(f"method must be one of {self._methods}, got {self.method!r}")
        ev = InfluenceEvaluator(net, T, _options(self))
        self.trace_ = None
        if self.method == "greedy":
            self.trace_ = greedy(net, k, T, lazy=bool(self.lazy), evaluator=ev)
            A = self.trace_.sources
        elif self.method == "exhaustive":
            A = exhaustive_search(ev, k)[0][0] if k else 0
        else:
            seed = 0 if self.random_state is None else self.random_state
            A = baseline_select(net, k, "random" if self.method == "random" else "out_degree", seed)
        self.network_ = net
        self.n_nodes_ = net.node_count
        self.support_mask_ = A
        self.sources_ = np.array(members(A), dtype=np.int64)
        self.sigma_ = float(ev.sigma(A)[0])
        self.bound_ = online_bound(net, A, max(k, 1), T, evaluator=ev) if self.compute_bound else None
        return self

    def get_support(self, indices=False):
        check_is_fitted(self, "sources_")
        if indices:
            return self.sources_.copy()
        support = np.zeros(self.n_nodes_, dtype=bool)
        support[self.sources_] = True
        return support

    def transform(self, X=None):
        """Boolean source indicator for the fitted network."""
        return self.get_support()

    def fit_transform(self, X, y=None):
        return self.fit(X, y).transform()
