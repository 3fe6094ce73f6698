import numpy as np
import pytest

from activeris.channel import Geometry, PathLossParams, generate_channels
from activeris.system import SystemConfig


def random_channels(seed, M=4, K=4, L=16, beta=1.0):
    rng = np.random.default_rng(seed)
    return generate_channels(Geometry(), PathLossParams(), beta, M, K, L, rng)


def random_state(seed, M=4, K=4, L=16, gain=100.0):
    """Channels plus an arbitrary (not optimized) beamformer and reflection."""
    rng = np.random.default_rng(seed)
    ch = generate_channels(Geometry(), PathLossParams(), 1.0, M, K, L, rng)
    cfg = SystemConfig(M=M, K=K, L=L)
    w = (rng.standard_normal((K, M)) + 1j * rng.standard_normal((K, M))) * np.sqrt(cfg.p_bs / (2 * K * M))
    psi = np.sqrt(gain * rng.random(L)) * np.exp(2j * np.pi * rng.random(L))
    return ch, cfg, w, psi


def crandn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one line per acceptance criterion, printed in the terminal summary
ACCEPTANCE_LINES = []


def report(criterion, passed, detail):
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {criterion}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
