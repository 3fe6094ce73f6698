import numpy as np
import pytest

from activeris.amplifier import AmplifierModel
from activeris.system import (
    BeamformerState,
    ReflectionState,
    SystemConfig,
    check_constraints,
    effective_channel,
    effective_channel_cascade,
    incident_power,
    sinr,
    sum_rate,
    user_rates,
)

from conftest import random_state


def _sinr_loop(ch, w, psi, cfg):
    """Independent per-user evaluation with explicit matrices."""
    Psi = np.diag(psi)
    out = []
    for k in range(ch.K):
        hk = ch.h_ris_user[k].conj() @ Psi @ ch.h_bs_ris  # row vector
        sig = abs(hk @ w[k]) ** 2
        interf = sum(abs(hk @ w[i]) ** 2 for i in range(ch.K) if i != k)
        ris_noise = cfg.sigma_v2 * np.linalg.norm(ch.h_ris_user[k].conj() @ Psi) ** 2
        out.append(sig / (interf + ris_noise + cfg.sigma2))
    return np.array(out)


@pytest.mark.parametrize("seed", range(5))
def test_sinr_matches_direct_evaluation(seed):
    ch, cfg, w, psi = random_state(seed)
    np.testing.assert_allclose(sinr(ch, w, psi, cfg), _sinr_loop(ch, w, psi, cfg), rtol=1e-12)
    assert sinr(ch, w, psi, cfg, k=2) == pytest.approx(_sinr_loop(ch, w, psi, cfg)[2], rel=1e-12)
    assert sum_rate(ch, w, psi, cfg) == pytest.approx(np.sum(np.log2(1 + _sinr_loop(ch, w, psi, cfg))))


def test_effective_channel_forms_agree():
    ch, cfg, w, psi = random_state(0)
    for k in range(ch.K):
        np.testing.assert_allclose(effective_channel(ch, psi, k), effective_channel_cascade(ch, psi, k), rtol=1e-12)


def test_zero_reflection_gives_zero_rate():
    ch, cfg, w, _ = random_state(1)
    assert sum_rate(ch, w, np.zeros(ch.L), cfg) == 0.0


def test_single_user_no_interference():
    ch, cfg, w, psi = random_state(2, K=1)
    g = _sinr_loop(ch, w, psi, cfg)
    np.testing.assert_allclose(user_rates(ch, w, psi, cfg), np.log2(1 + g))


def test_incident_power():
    ch, cfg, w, _ = random_state(3)
    ref = [sum(abs(ch.h_bs_ris[l] @ w[k]) ** 2 for k in range(ch.K)) for l in range(ch.L)]
    np.testing.assert_allclose(incident_power(ch, w), ref, rtol=1e-12)


def test_constraint_report():
    ch, cfg, w, psi = random_state(4)
    amp = AmplifierModel()
    cfg = SystemConfig(L=16, amplifier=amp)
    w = w / np.linalg.norm(w) * np.sqrt(cfg.p_bs)
    p_in = incident_power(ch, w)
    psi = np.sqrt(cfg.p_elem / (p_in + cfg.sigma_v2)) * np.exp(1j * np.angle(psi))
    rep = check_constraints(ch, w, psi, cfg)
    assert abs(rep.bs_power) < 1e-10 * cfg.p_bs
    np.testing.assert_allclose(rep.element_power, 0.0, atol=1e-12 * cfg.p_elem)
    assert rep.feasible(interval=False)
    rep = check_constraints(ch, 1.01 * w, psi, cfg)
    assert rep.violations["bs_power"] and rep.violations["element_power"]
    assert not rep.feasible(interval=False)


def test_interval_violation_flags():
    ch, cfg, w, psi = random_state(5)
    low = check_constraints(ch, 1e-6 * w, psi, cfg)
    assert low.violations["incident_lower"] and not low.violations["incident_upper"]
    assert not low.feasible() and low.feasible(interval=False) is not None


def test_state_containers():
    r = ReflectionState.from_gain_phase([4.0, 1.0], [0.0, np.pi / 2])
    np.testing.assert_allclose(r.psi, [2.0, 1j], atol=1e-15)
    r2 = ReflectionState.from_psi(r.psi)
    np.testing.assert_allclose(r2.a, [4.0, 1.0])
    b = BeamformerState(np.array([[1.0, 1j], [0.0, 2.0]]))
    assert b.power == pytest.approx(6.0)
    assert b.stacked.shape == (4,)


def test_config_validation():
    with pytest.raises(ValueError):
        SystemConfig(L=0)
    with pytest.raises(ValueError):
        SystemConfig(p_bs=0.0)
    cfg = SystemConfig.from_dbm(p_bs_dbm=20.0)
    assert cfg.p_bs == pytest.approx(100.0)
