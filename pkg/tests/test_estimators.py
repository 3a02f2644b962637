import numpy as np
import pytest
import scipy.sparse as sp
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from ctinfluence import InfluenceEstimator, InfluenceMaximizer, Network, check_network, check_source_set
from ctinfluence.network import NetworkError

from conftest import SIGMA_CHAIN


def test_check_network_forms(chain_net, tmp_path):
    rows = np.array([[0, 1, 1.0], [1, 2, 1.0]])
    dense = np.zeros((3, 3))
    dense[0, 1] = dense[1, 2] = 1.0
    for X in (chain_net, rows, sp.csr_matrix(dense)):
        assert check_network(X) == chain_net
    # a dense 3x3 array reads as three edge rows, not as an adjacency matrix
    wide = np.zeros((4, 4))
    wide[0, 1] = wide[1, 2] = 1.0
    assert check_network(wide) == Network(4, chain_net.edges)
    from ctinfluence import save_network
    save_network(chain_net, tmp_path / "c.tsv")
    assert check_network(tmp_path / "c.tsv") == chain_net
    assert check_network(str(tmp_path / "c.tsv")) == chain_net


def test_check_network_rejects():
    with pytest.raises(NetworkError):
        check_network(np.zeros((0, 3)))
    with pytest.raises(NetworkError):
        check_network(np.array([[0.5, 1, 1.0]]))
    with pytest.raises(NetworkError):
        check_network(sp.csr_matrix(np.ones((2, 3))))
    with pytest.raises(NetworkError):
        check_network(np.ones(4))


def test_check_source_set():
    assert check_source_set([0, 2], 3) == 0b101
    assert check_source_set(np.array([True, False, True]), 3) == 0b101
    with pytest.raises(ValueError):
        check_source_set([], 3)
    with pytest.raises(ValueError):
        check_source_set(np.array([True]), 3)


def test_estimator_predict(chain_net):
    est = InfluenceEstimator(horizon=1.0).fit(chain_net)
    np.testing.assert_allclose(est.predict([[0], [2], [0, 1]]), [SIGMA_CHAIN, 1.0, 1 + (1 - np.exp(-1)) + 1],
                               atol=1e-9)
    proba = est.predict_proba([[0]])
    assert proba.shape == (1, 3) and proba[0, 0] == 1.0
    assert est.score([[0]]) == pytest.approx(SIGMA_CHAIN)
    with pytest.raises(TypeError):
        est.predict([0, 1])


def test_estimator_params_and_clone():
    est = InfluenceEstimator(horizon=0.5, mode="ltp", m=4, n_jobs=2)
    params = est.get_params()
    assert params["horizon"] == 0.5 and params["m"] == 4 and params["n_jobs"] == 2
    twin = clone(est).set_params(horizon=2.0)
    assert twin.horizon == 2.0 and est.horizon == 0.5


def test_not_fitted():
    with pytest.raises(NotFittedError):
        InfluenceEstimator().predict([[0]])
    with pytest.raises(NotFittedError):
        InfluenceMaximizer().get_support()


def test_bad_params(chain_net):
    with pytest.raises(ValueError):
        InfluenceEstimator(mode="bogus").fit(chain_net)
    with pytest.raises(ValueError):
        InfluenceEstimator(horizon=-1.0).fit(chain_net)
    with pytest.raises(ValueError):
        InfluenceMaximizer(n_sources=4).fit(chain_net)
    with pytest.raises(ValueError):
        InfluenceMaximizer(n_sources=1, method="pagerank").fit(chain_net)


def test_maximizer(star_net):
    sel = InfluenceMaximizer(n_sources=1, horizon=10.0, compute_bound=True).fit(star_net)
    assert sel.sources_.tolist() == [0]
    assert sel.get_support(indices=True).tolist() == [0]
    assert sel.transform().tolist() == [True] + [False] * 5
    assert sel.bound_ >= sel.sigma_
    assert [p.node for p in sel.trace_.picks] == [0]
    for method in ("exhaustive", "degree"):
        assert InfluenceMaximizer(n_sources=1, horizon=10.0, method=method).fit(star_net).sources_.tolist() == [0]
    r = InfluenceMaximizer(n_sources=2, method="random", random_state=3).fit(star_net)
    assert len(r.sources_) == 2 and r.trace_ is None


def test_maximizer_fit_transform_dense_input():
    dense = np.zeros((4, 4))
    dense[0, 1] = dense[0, 2] = dense[0, 3] = 2.0
    mask = InfluenceMaximizer(n_sources=1).fit_transform(dense)
    assert mask.tolist() == [True, False, False, False]


def test_maximizer_zero_sources(chain_net):
    sel = InfluenceMaximizer(n_sources=0).fit(chain_net)
    assert sel.sources_.size == 0 and sel.sigma_ == 0.0
