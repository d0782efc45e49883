"""Shared pytest configuration and fixtures for all tests."""

import numpy as np
import pytest

from mdrsp.instance import CLASS_II, Instance


@pytest.fixture(scope="function", autouse=True)
def reset_logger_state(tmp_path, monkeypatch):
    """Reset logger globals between all tests and keep log files in a temporary directory."""
    # pylint: disable=import-outside-toplevel
    import mdrsp.logger as logger_module
    from mdrsp.logger import LOGGERS

    monkeypatch.setenv('MDRSP_LOG_DIR', str(tmp_path / 'log'))
    logger_module.MAIN_LOG_FILE = None
    LOGGERS.clear()

    yield

    for logger_inst in LOGGERS.values():
        handlers = logger_inst.handlers[:]
        for handler in handlers:
            try:
                handler.close()
                logger_inst.removeHandler(handler)
            except Exception:
                # cleanup best-effort only
                pass

    LOGGERS.clear()
    logger_module.MAIN_LOG_FILE = None


@pytest.fixture
def line_instance():
    """
    Three customers on a line next to one depot, a second depot far away, class I.

    customers 0, 1, 2 at x = 1, 2, 3; depots 3, 4 at x = 0 and x = 10.
    """
    customers = [[1.0, 0.0], [2.0, 0.0], [3.0, 0.0]]
    depots = [[0.0, 0.0], [10.0, 0.0]]
    return Instance.from_coordinates(customers, depots, name='line')


@pytest.fixture
def square_instance():
    """Four customers on a square, class II with alpha 3 (routing cheaper than assignment)."""
    customers = [[0.0, 0.0], [10.0, 0.0], [10.0, 10.0], [0.0, 10.0]]
    depots = [[5.0, -5.0], [40.0, 40.0]]
    return Instance.from_coordinates(customers, depots, CLASS_II, 3, name='square')


@pytest.fixture
def random_instance():
    """factory for seeded Euclidean instances"""
    def build(n_customers: int, n_depots: int, seed: int = 0, class_tag: str = 'I', alpha=None) -> Instance:
        rng = np.random.default_rng(seed)
        customers = np.round(rng.uniform(0, 100, size=(n_customers, 2)), 3)
        depots = np.round(rng.uniform(0, 100, size=(n_depots, 2)), 3)
        return Instance.from_coordinates(customers, depots, class_tag, alpha, name=f'rand-{seed}', seed=seed)
    return build


EUC_2D_TEXT = """NAME : tiny6
COMMENT : six customers for tests
TYPE : TSP
DIMENSION : 6
EDGE_WEIGHT_TYPE : EUC_2D
NODE_COORD_SECTION
1 0 0
2 10 0
3 20 0
4 20 10
5 10 10
6 0 10
EOF
"""


@pytest.fixture
def tsplib_text():
    """a small EUC_2D TSPLIB file"""
    return EUC_2D_TEXT


@pytest.fixture
def tsplib_file(tmp_path):
    """the small EUC_2D TSPLIB file on disk"""
    path = tmp_path / 'tiny6.tsp'
    path.write_text(EUC_2D_TEXT, encoding='utf-8')
    return str(path)
