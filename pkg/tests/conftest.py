import numpy as np
import pytest

from prescient.network import CsiView, NetworkConfig, db_to_linear, draw_channels

# criterion id -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE: dict = {}


def make_view(cfg: NetworkConfig, seed, mode: str = "partial-instantaneous-F"):
    ch = draw_channels(cfg, seed)
    return ch, CsiView.from_channels(ch, cfg, mode)


@pytest.fixture
def small_cfg():
    return NetworkConfig(t_u=3, K_u=3, K=3, r_I=2, P=db_to_linear(15.0), sigma_d2=0.1)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: int(k.split()[0])):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  criterion {key}: {detail}")
