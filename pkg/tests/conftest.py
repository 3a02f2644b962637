import math

import numpy as np
import pytest

from ctinfluence import Network, fixture_path, load_network


def random_network(seed: int, n_lo: int = 4, n_hi: int = 12, density: float = 2.0, hi: float = 5.0) -> Network:
    """Random directed graph with at most ``density * n`` edges, rates U(0, hi]."""
    rng = np.random.default_rng(seed)
    n = int(rng.integers(n_lo, n_hi + 1))
    m = int(rng.integers(n, int(density * n) + 1))
    pairs = [(u, v) for u in range(n) for v in range(n) if u != v]
    pick = rng.choice(len(pairs), size=min(m, len(pairs)), replace=False)
    return Network(n, [(*pairs[i], hi - hi * rng.random()) for i in pick])


def chain(rates) -> Network:
    return Network(len(rates) + 1, [(i, i + 1, r) for i, r in enumerate(rates)])


E = math.exp(-1.0)
SIGMA_CHAIN = 1.0 + (1.0 - E) + (1.0 - 2.0 * E)


@pytest.fixture
def chain_net() -> Network:
    return load_network(fixture_path("chain"))


@pytest.fixture
def diamond_net() -> Network:
    return load_network(fixture_path("diamond"))


@pytest.fixture
def star_net() -> Network:
    return load_network(fixture_path("star"))


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
