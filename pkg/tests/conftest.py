import warnings

import numpy as np
import pytest

from isingcat import config
from isingcat.chain import ChainSpec, NonGenericWarning, build_eigenstructure
from isingcat.partition import build_partition
from isingcat.solver import build_blocks, solve_driven_direct, solve_driven_perturbative


@pytest.fixture(autouse=True)
def _quiet_nongeneric():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NonGenericWarning)
        yield


@pytest.fixture(scope="session")
def fig2():
    return ChainSpec(2, 1.0, (0.2, 0.1))


@pytest.fixture(scope="session")
def fig2_es(fig2):
    return build_eigenstructure(fig2)


@pytest.fixture(scope="session")
def special():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NonGenericWarning)
        return ChainSpec(2, 1.0, (0.2, 0.0))


@pytest.fixture(scope="session")
def cat_cfg():
    return config.parse(config.preset("cat"))


@pytest.fixture(scope="session")
def cat_setup(cat_cfg):
    es = build_eigenstructure(cat_cfg.chain)
    part = build_partition(es, cat_cfg.bath.temperature)
    blocks = build_blocks(part, cat_cfg.coupling, cat_cfg.bath)
    return es, part, blocks


@pytest.fixture(scope="session")
def cat_direct(cat_setup, cat_cfg):
    return solve_driven_direct(cat_setup[2], dps=cat_cfg.solver["dps"])


@pytest.fixture(scope="session")
def cat_perturbative(cat_setup):
    return solve_driven_perturbative(cat_setup[2], cat_setup[1])


def ket(s):
    from isingcat.chain import from_string
    v = np.zeros(1 << len(s))
    v[from_string(s)] = 1.0
    return v


@pytest.fixture(scope="session")
def cat_oracle(cat_cfg, cat_setup):
    """Oracle runs on the cat setup from the maximally mixed state and from Scs+."""
    import time

    from isingcat import oracle

    es, part, _ = cat_setup
    oc = cat_cfg.oracle
    gen = oracle.redfield_superoperator(part, cat_cfg.coupling, cat_cfg.bath)
    period = 2 * np.pi / gen.omega
    scs = es.named["scs+"]
    runs = {}
    for name, rho0 in (("mixed", np.eye(16) / 16), ("scs+", np.outer(scs, scs))):
        job = oracle.EvolutionJob(rho0, t_step=period / oc["steps_per_period"],
                                  period=period, max_periods=oc["max_periods"],
                                  convergence_tol=oc["tol"], rtol=oc["rtol"], atol=oc["atol"])
        t0 = time.perf_counter()
        rho, hist, info = oracle.integrate(job, part, gen)
        runs[name] = {"rho": rho, "hist": hist, "info": info, "job": job,
                      "seconds": time.perf_counter() - t0}
    return runs


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def acceptance():
    """Record one pass/fail line per criterion and return the verdict."""
    def report(tag: str, ok: bool, detail: str) -> bool:
        line = f"criterion {tag:>3}: {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok
    return report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
