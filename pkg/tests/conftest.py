import numpy as np
import pytest

from ifmidpoint import build_problem, make_backend, spd_from_dense


def fit_order(ns, values):
    """Least-squares convergence order of values against step counts ns."""
    slope = np.polyfit(np.log(np.asarray(ns, dtype=float)),
                       np.log(np.asarray(values, dtype=float)), 1)[0]
    return -slope


def pairwise_orders(ns, values):
    return [np.log(values[i] / values[i + 1]) / np.log(ns[i + 1] / ns[i])
            for i in range(len(values) - 1)]


def random_spd(rng, m, weight=1.0):
    b = rng.standard_normal((m, m))
    return spd_from_dense(b @ b.T + m * np.eye(m), weight=weight)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture(scope="session")
def ex1_small():
    """Ex1 on a small grid with its spectral backend, shared across tests."""
    _, system = build_problem("ex1", 50)
    return system, make_backend("spectral", system.op)
