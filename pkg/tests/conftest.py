import importlib
import os

import numpy as np
import pytest

from moranlif import lattice_rook, row_standardize, standardize

DATA = os.path.join(os.path.dirname(__file__), os.pardir, "src", "moranlif", "data")


def data_path(name):
    return os.path.abspath(os.path.join(DATA, name))


def compiled_kernels():
    try:
        return importlib.import_module("moranlif._kernels")
    except ImportError:
        return None


def checkerboard(rows, cols):
    r, c = np.divmod(np.arange(rows * cols), cols)
    return np.where((r + c) % 2 == 0, 1.0, -1.0)


def zero_site_field(rng, n, site):
    """Standardized vector holding exactly 0 at ``site``.

    The other n - 1 values are centered and scaled so that sum z^2 = n.
    """
    rest = rng.standard_normal(n - 1)
    rest -= rest.mean()
    rest *= np.sqrt(n / np.dot(rest, rest))
    return np.insert(rest, site, 0.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


@pytest.fixture(scope="session")
def rook10():
    return row_standardize(lattice_rook(10, 10))


@pytest.fixture
def random_obs(rng):
    def make(n):
        return standardize(rng.standard_normal(n))
    return make


ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE):
        ok, title, detail = ACCEPTANCE[num]
        terminalreporter.write_line(f"criterion {num:2d} {'PASS' if ok else 'FAIL'}  {title}: {detail}")
