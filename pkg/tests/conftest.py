import json
import time
from importlib import resources

import pytest
from hypothesis import HealthCheck, settings

from nilzeta.lattice import validate

settings.register_profile(
    "repo", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("repo")


def corpus(name: str):
    text = (resources.files("nilzeta") / "corpus" / f"{name}.json").read_text(encoding="utf-8")
    return validate(json.loads(text))


@pytest.fixture(scope="session")
def heis():
    return corpus("heisenberg")


@pytest.fixture(scope="session")
def heis_z():
    return corpus("heisenberg_plus_abelian")


@pytest.fixture(scope="session")
def free3():
    return corpus("free_class2_3gen")


@pytest.fixture(scope="session")
def class3():
    return corpus("class3_example")


@pytest.fixture(scope="session")
def heis_global_q(heis):
    from nilzeta.arith import NumberField, euler_product

    start = time.perf_counter()
    g = euler_product(heis, NumberField(1), N_bound=10**5)
    g.build_seconds = time.perf_counter() - start
    return g


@pytest.fixture(scope="session")
def heis_global_qi(heis):
    from nilzeta.arith import NumberField, euler_product

    start = time.perf_counter()
    g = euler_product(heis, NumberField(-1), N_bound=10**5)
    g.build_seconds = time.perf_counter() - start
    return g


ACCEPTANCE: dict[int, tuple[str, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        verdict, line = ACCEPTANCE[number]
        terminalreporter.write_line(f"[{verdict}] criterion {number}: {line}")
