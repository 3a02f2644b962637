"""Generator of the disabled-set Markov chain and its absorption-time CDF.

The production CDF uses uniformization. A dense scaling-and-squaring matrix
exponential is kept alongside it as an independent reference.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.special import gammaln

from .closure import StateSpace
from .network import Network, members

__all__ = [
    "Generator",
    "GeneratorError",
    "cut_edges",
    "build_generator",
    "absorption_cdf",
    "absorption_cdfs",
    "dense_expm",
    "dense_absorption_cdf",
    "DEFAULT_TOL",
]

DEFAULT_TOL = 1e-10
DENSE_EXPM_MAX_DIM = 2000
_DENSE_PROPAGATE_DIM = 256


class GeneratorError(RuntimeError):
    """A successor state is missing from the state space."""


@dataclass(frozen=True)
class Generator:
    """Sparse infinitesimal generator, strictly upper-triangular off the diagonal.

    The last state is absorbing. ``rows``/``cols``/``rates`` hold the
    off-diagonal entries; ``diag`` the (non-positive) diagonal.
    """

    dim: int
    rows: np.ndarray
    cols: np.ndarray
    rates: np.ndarray
    diag: np.ndarray

    def to_sparse(self) -> sp.csr_matrix:
        n = self.dim
        r = np.concatenate([self.rows, np.arange(n)])
        c = np.concatenate([self.cols, np.arange(n)])
        v = np.concatenate([self.rates, self.diag])
        return sp.csr_matrix((v, (r, c)), shape=(n, n))

    def to_dense(self) -> np.ndarray:
        Q = np.zeros((self.dim, self.dim))
        np.add.at(Q, (self.rows, self.cols), self.rates)
        Q[np.diag_indices(self.dim)] = self.diag
        return Q

    def transient_block(self) -> np.ndarray:
        return self.to_dense()[:-1, :-1]

    def exit_vector(self) -> np.ndarray:
        return -self.transient_block().sum(axis=1)

    def uniformization_rate(self) -> float:
        return float(-self.diag.min()) if self.dim else 0.0


def cut_edges(net: Network, D: int) -> dict[int, list[tuple[int, float]]]:
    """Edges ``(u, v)`` with ``u`` in ``D`` and ``v`` outside, as ``{v: [(u, rate), ...]}``."""
    cut: dict[int, list[tuple[int, float]]] = {}
    for u in members(D):
        for v, r in net.out_edges[u]:
            if not D >> v & 1:
                cut.setdefault(v, []).append((u, r))
    return dict(sorted(cut.items()))


def build_generator(net: Network, space: StateSpace) -> Generator:
    """Generator over ``space``: each cut head ``v`` of state ``D`` moves the
    chain to the closure of ``D + v`` at the total rate of the edges into ``v``."""
    if space.net is not net and space.net != net:
        raise ValueError("state space was enumerated on a different network")
    n = len(space)
    rows, cols, rates = [], [], []
    diag = np.zeros(n)
    for i in range(n - 1):
        row: dict[int, float] = {}
        for v, rate in sorted(space.local_cut(i).items()):
            nxt = space.successor.get((i, v))
            j = space.index_of.get(nxt) if nxt is not None else None
            if j is None:
                raise GeneratorError(f"sink {space.sink}: successor of state {i} via node "
                                     f"{space.region[v]} missing from the state space")
            if j <= i:
                raise GeneratorError(f"sink {space.sink}: transition {i}->{j} is not upward")
            row[j] = row.get(j, 0.0) + rate
        total = 0.0
        for j, q in row.items():
            rows.append(i)
            cols.append(j)
            rates.append(q)
            total += q
        diag[i] = -total
    return Generator(
        dim=n,
        rows=np.asarray(rows, dtype=np.int64),
        cols=np.asarray(cols, dtype=np.int64),
        rates=np.asarray(rates, dtype=float),
        diag=diag,
    )


def absorption_cdf(gen: Generator, T: float, tol: float = DEFAULT_TOL) -> float:
    """P(absorbed by time ``T`` | start in state 0), within absolute error ``tol``.

    Uniformization: with ``lam = max |q_ii|`` and ``P = I + Q / lam``, the
    answer is ``sum_k Poisson(lam*T; k) * (e_0 P^k)[last]``, truncated once
    the neglected Poisson tail is below ``tol``.
    """
    return float(absorption_cdfs(gen, [T], tol)[0])


def _poisson_weights(lt: float, tol: float) -> np.ndarray:
    """Poisson(lt) pmf for k = 0..K, with K the first index past the mean whose tail is <= tol."""
    cap = int(lt + 12.0 * math.sqrt(lt) + 40)
    while True:
        k = np.arange(cap + 1)
        w = np.exp(-lt + k * math.log(lt) - gammaln(k + 1.0))
        tail = 1.0 - np.cumsum(w)
        ok = np.flatnonzero((tail <= tol) & (k >= lt))
        if ok.size:
            return w[: ok[0] + 1]
        if cap > 10 * lt + 10_000:
            return w
        cap *= 2


def absorption_cdfs(gen: Generator, horizons, tol: float = DEFAULT_TOL) -> np.ndarray:
    """:func:`absorption_cdf` for several horizons sharing one propagation pass."""
    if not tol > 0:
        raise ValueError("tol must be positive")
    Ts = np.asarray(horizons, dtype=float).ravel()
    if not np.all(Ts >= 0):
        raise ValueError("horizon must be nonnegative")
    n = gen.dim
    if n == 1:
        return np.ones(Ts.size)
    lam = gen.uniformization_rate()
    out = np.zeros(Ts.size)
    if lam == 0.0 or not np.any(Ts > 0):
        return out
    if not math.isfinite(lam * Ts.max()):
        raise ValueError("lam * T is not finite")
    weights = {i: _poisson_weights(lam * T, tol) for i, T in enumerate(Ts) if T > 0}
    K = max(w.size for w in weights.values())

    if n <= _DENSE_PROPAGATE_DIM:
        P = gen.to_dense() / lam
        P[np.diag_indices(n)] += 1.0
        step = lambda x: x @ P  # noqa: E731
    else:
        PT = (gen.to_sparse() / lam + sp.identity(n, format="csr")).T.tocsr()
        step = PT.dot

    absorbed = np.ones(K)
    pi = np.zeros(n)
    pi[0] = 1.0
    for k in range(K):
        absorbed[k] = pi[-1]
        if pi[-1] >= 1.0:
            break
        pi = step(pi)
    for i, w in weights.items():
        out[i] = min(max(float(w @ absorbed[: w.size]), 0.0), 1.0)
    return out


_PADE13 = (
    64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
    1187353796428800.0, 129060195264000.0, 10559470521600.0,
    670442572800.0, 33522128640.0, 1323241920.0, 40840800.0,
    960960.0, 16380.0, 182.0, 1.0,
)
_THETA13 = 5.371920351148152


def dense_expm(S: np.ndarray, T: float = 1.0) -> np.ndarray:
    """``exp(S * T)`` by scaling and squaring with the [13/13] Padé approximant."""
    A = np.asarray(S, dtype=float) * float(T)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("expected a square matrix")
    n = A.shape[0]
    if n > DENSE_EXPM_MAX_DIM:
        raise ValueError(f"dense_expm limited to dimension {DENSE_EXPM_MAX_DIM}, got {n}")
    if n == 0:
        return A.copy()
    norm = np.abs(A).sum(axis=0).max()
    s = 0
    if norm > _THETA13:
        s = int(math.ceil(math.log2(norm / _THETA13)))
        A = A / (2.0 ** s)
    b = _PADE13
    I = np.eye(n)
    A2 = A @ A
    A4 = A2 @ A2
    A6 = A4 @ A2
    U = A @ (A6 @ (b[13] * A6 + b[11] * A4 + b[9] * A2)
             + b[7] * A6 + b[5] * A4 + b[3] * A2 + b[1] * I)
    V = (A6 @ (b[12] * A6 + b[10] * A4 + b[8] * A2)
         + b[6] * A6 + b[4] * A4 + b[2] * A2 + b[0] * I)
    R = np.linalg.solve(V - U, V + U)
    for _ in range(s):
        R = R @ R
    return R


def dense_absorption_cdf(gen: Generator, T: float) -> float:
    """Reference CDF ``1 - (row 0 of exp(S T)) . 1`` via :func:`dense_expm`."""
    if gen.dim == 1:
        return 1.0
    E = dense_expm(gen.transient_block(), T)
    return float(1.0 - E[0].sum())
