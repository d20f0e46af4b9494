import time

import numpy as np
import pytest

from chunkstream.encoder import EncoderConfig, init_encoder


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def small_config():
    return EncoderConfig(input_dim=6, d_model=16, n_heads=2, block_pairs=2, chunk_size=4, seed=7)


@pytest.fixture(scope="session")
def small_params(small_config):
    return init_encoder(small_config)


SUITE_BUDGET_S = 300.0


def pytest_sessionstart(session):
    session.config._suite_t0 = time.perf_counter()


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    elapsed = time.perf_counter() - config._suite_t0
    ok = elapsed < SUITE_BUDGET_S
    verdict = "PASS" if ok else "FAIL"
    terminalreporter.write_line(
        f"[criterion 8 runtime] {verdict}: full test session took {elapsed:.1f} s (budget {SUITE_BUDGET_S:.0f} s)"
    )


def pytest_sessionfinish(session, exitstatus):
    if time.perf_counter() - session.config._suite_t0 >= SUITE_BUDGET_S and exitstatus == 0:
        session.exitstatus = 1
