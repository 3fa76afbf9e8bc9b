import numpy as np
import pytest

from pdnr.config import load_preset
from pdnr.fock import basis, ket2dm
from pdnr.master import evolve_master


def run_preset_master(name, **changes):
    cfg = load_preset(name)
    if changes:
        cfg = cfg.updated(**changes)
    params = cfg.model_params()
    res = evolve_master(ket2dm(basis(params.dim, 0)), cfg.sample_schedule(), params,
                        check_truncation=cfg.check_truncation)
    return cfg, res


@pytest.fixture(scope="session")
def fig1b_master():
    return run_preset_master("fig1b")


@pytest.fixture(scope="session")
def fig1a_master():
    return run_preset_master("fig1a")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        terminalreporter.write_line(results[number])
