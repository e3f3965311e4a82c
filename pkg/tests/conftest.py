import numpy as np
import pytest

from rcclimate.model import HygricParams, ThermalParams
from rcclimate.synthetic import make_climate


def random_thermal(rng, solar=True):
    g = 10.0 ** rng.uniform(0, 3, 5)
    c = 10.0 ** rng.uniform(5, 8, 3)
    f = tuple(rng.uniform(0, 5, 4)) if solar else (0.0, 0.0, 0.0, 0.0)
    return ThermalParams(*g, *c, f_irr=f, t_fixed=float(rng.uniform(-5, 20)))


def random_hygric(rng, fixed_node=True):
    g = 10.0 ** rng.uniform(-3, 0, 4)
    c = 10.0 ** rng.uniform(2, 5, 2)
    return HygricParams(g_w=g[0], g_i=g[1], g_fast=g[2], c_w=c[0], c_i=c[1],
                        g_f=g[3] if fixed_node else 0.0,
                        p_fixed=float(rng.uniform(0, 3000)) if fixed_node else 0.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture(scope="session")
def climate_year():
    return make_climate(8760, seed=0)


@pytest.fixture(scope="session")
def climate_month():
    return make_climate(720, seed=5)


ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def criterion(request):
    """Record one PASS/FAIL line per acceptance criterion; printed in the terminal summary."""
    lines = request.config.stash.setdefault(ACCEPTANCE, [])
    seen = []

    def record(number, title, ok, detail):
        line = f"criterion {number} [{'PASS' if ok else 'FAIL'}] {title}: {detail}"
        print(line)
        lines.append((number, line))
        seen.append(number)
        return ok

    yield record
    if not seen:
        num = request.node.get_closest_marker("criterion")
        lines.append((num.args[0] if num else 0,
                      f"criterion {num.args[0] if num else '?'} [FAIL] {request.node.name}: "
                      "raised before a verdict"))


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE, [])
    if lines:
        terminalreporter.write_sep("=", "acceptance criteria")
        for _, line in sorted(lines, key=lambda t: t[0]):
            terminalreporter.write_line(line)
