import math

import numpy as np
import pytest

from ctinfluence.influence import InfluenceEvaluator
from ctinfluence.network import Network, to_mask
from ctinfluence.simulate import mc_influence, mc_influence_horizons, sample_cascade

from conftest import SIGMA_CHAIN, random_network


def test_sources_at_time_zero():
    net = random_network(1, 8, 10)
    s = sample_cascade(net, [0, 3], np.random.default_rng(0))
    assert s.times[0] == 0.0 and s.times[3] == 0.0
    assert s.infected(0.0) & to_mask([0, 3]) == to_mask([0, 3])


def test_single_edge_mean_delay():
    alpha = 2.5
    net = Network(2, [(0, 1, alpha)])
    rng = np.random.default_rng(7)
    t = np.array([sample_cascade(net, [0], rng).times[1] for _ in range(100_000)])
    se = t.std(ddof=1) / math.sqrt(t.size)
    assert abs(t.mean() - 1 / alpha) < 3 * se


@pytest.mark.parametrize("seed", range(10))
def test_times_are_shortest_paths(seed):
    net = random_network(seed, 5, 14)
    s = sample_cascade(net, [0], np.random.default_rng(seed))
    for e, (u, v, _) in enumerate(net.edges):
        assert s.times[v] <= s.times[u] + s.delays[e] + 1e-12
    for v in range(1, net.node_count):
        if math.isfinite(s.times[v]):
            assert any(
                s.times[v] == s.times[u] + s.delays[e]
                for e, (u, w, _) in enumerate(net.edges) if w == v
            )
        else:
            assert all(not math.isfinite(s.times[u]) for u, w, _ in net.edges if w == v)


def test_batched_matches_dijkstra():
    from ctinfluence.simulate import _batch_times
    net = random_network(3, 10, 14)
    A = to_mask([0, 1])
    rng = np.random.default_rng(5)
    samples = [sample_cascade(net, A, rng) for _ in range(50)]
    delays = np.stack([s.delays for s in samples])
    t = _batch_times(net, A, delays, np.arange(net.edge_count))
    np.testing.assert_allclose(t, np.stack([s.times for s in samples]))


def test_T_zero():
    net = random_network(2)
    est = mc_influence(net, [0, 1], 0.0, 500, 3)
    assert est.sigma_hat == 2.0 and est.stderr == 0.0


def test_chain_estimate(chain_net):
    est = mc_influence(chain_net, [0], 1.0, 100_000, 0)
    assert abs(est.sigma_hat - SIGMA_CHAIN) <= 4 * est.stderr
    assert np.all((est.per_node >= 0) & (est.per_node <= 1))


def test_reproducible_and_seed_sensitive():
    net = random_network(4, 8, 10)
    a = mc_influence(net, [0], 1.0, 25_000, 11)
    b = mc_influence(net, [0], 1.0, 25_000, 11)
    c = mc_influence(net, [0], 1.0, 25_000, 12)
    assert a.to_dict() == b.to_dict()
    assert a.sigma_hat != c.sigma_hat


def test_multi_horizon_consistent():
    net = random_network(6, 8, 10)
    ests = mc_influence_horizons(net, [0], [0.2, 1.0], 5000, 1)
    assert ests[0].sigma_hat <= ests[1].sigma_hat
    assert mc_influence(net, [0], 1.0, 5000, 1).to_dict() == ests[1].to_dict()


def test_rejects_bad_input(chain_net):
    with pytest.raises(ValueError):
        mc_influence(chain_net, [0], 1.0, 0, 0)
    with pytest.raises(ValueError):
        mc_influence(chain_net, [], 1.0, 10, 0)


def test_stderr_definition():
    net = random_network(9, 6, 8)
    est = mc_influence(net, [0], 0.7, 1, 0)
    assert est.stderr == 0.0 and est.runs == 1


@pytest.mark.slow
@pytest.mark.parametrize("seed", range(20))
def test_oracle_equivalence_per_node(seed):
    net = random_network(seed, 4, 20, density=2.0)
    rng = np.random.default_rng(seed)
    A = to_mask(rng.choice(net.node_count, size=int(rng.integers(1, 3)), replace=False).tolist())
    horizons = [0.1, 0.5, 1.0]
    exact = InfluenceEvaluator(net, horizons)
    P = exact.per_node(A)
    sig = exact.sigma(A)
    for h, est in enumerate(mc_influence_horizons(net, A, horizons, 100_000, seed)):
        assert abs(est.sigma_hat - sig[h]) <= 4 * max(est.stderr, 1e-5)
        # binomial standard error at the analytic probability
        se = np.sqrt(P[h] * (1 - P[h]) / est.runs)
        assert np.all(np.abs(est.per_node - P[h]) <= 4 * np.maximum(se, 1e-5))
