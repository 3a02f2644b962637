"""Input coercion for the estimator API."""
from __future__ import annotations

import math
import os
from numbers import Integral, Real

import numpy as np
import scipy.sparse as sp

from .network import Network, NetworkError, as_mask, load_network


def check_network(X) -> Network:
    """Coerce ``X`` to a :class:`Network`.

    Accepted: a ``Network``; a path to a TSV edge list; an ``(m, 3)`` array of
    ``(src, dst, rate)`` rows; or a square (sparse or dense) matrix whose
    nonzero entry ``[u, v]`` is the rate of edge ``u -> v``. A dense array
    with three columns is always read as edge rows; pass a sparse matrix for
    a 3-node adjacency.
    """
    if isinstance(X, Network):
        return X
    if isinstance(X, (str, os.PathLike)):
        return load_network(X)
    if sp.issparse(X):
        M = sp.coo_matrix(X)
        if M.shape[0] != M.shape[1]:
            raise NetworkError(f"rate matrix must be square, got shape {M.shape}")
        keep = M.data != 0
        return Network(M.shape[0], zip(M.row[keep], M.col[keep], M.data[keep]))
    arr = np.asarray(X, dtype=float)
    if arr.ndim == 2 and arr.shape[0] == arr.shape[1] and arr.shape[1] != 3:
        u, v = np.nonzero(arr)
        return Network(arr.shape[0], zip(u, v, arr[u, v]))
    if arr.ndim == 2 and arr.shape[1] == 3:
        if arr.size == 0:
            raise NetworkError("edge array is empty; pass a Network to fix the node count")
        ids = arr[:, :2]
        if not np.all(ids == np.round(ids)):
            raise NetworkError("node ids must be integers")
        n = int(ids.max()) + 1
        return Network(n, [(int(a), int(b), r) for a, b, r in arr])
    raise NetworkError(f"cannot interpret input of shape {arr.shape} as a network")


def check_source_set(A, n_nodes: int, allow_empty: bool = False) -> int:
    """Coerce a source set (mask, iterable of ids, or boolean indicator) to a mask."""
    if isinstance(A, np.ndarray) and A.dtype == bool:
        if A.shape != (n_nodes,):
            raise ValueError(f"indicator must have shape ({n_nodes},)")
        A = np.flatnonzero(A)
    mask = as_mask(A, n_nodes)
    if not mask and not allow_empty:
        raise ValueError("source set must be nonempty")
    return mask


def check_horizon(T) -> float:
    if not isinstance(T, Real) or isinstance(T, bool):
        raise TypeError(f"horizon must be a real number, got {type(T).__name__}")
    T = float(T)
    if not (T >= 0 and math.isfinite(T)):
        raise ValueError(f"horizon must be finite and nonnegative, got {T}")
    return T


def check_positive_int(x, name: str, minimum: int = 1) -> int:
    if not isinstance(x, Integral) or isinstance(x, bool):
        raise TypeError(f"{name} must be an integer")
    if x < minimum:
        raise ValueError(f"{name} must be >= {minimum}, got {x}")
    return int(x)
