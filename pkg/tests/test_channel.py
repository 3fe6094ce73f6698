import numpy as np
import pytest

from activeris.channel import (
    ChannelSet,
    Geometry,
    PathLossParams,
    gen_bs_ris_channel,
    gen_ris_user_channels,
    generate_channels,
    los_bs_ris,
    path_loss,
)

GEO = Geometry()
PL = PathLossParams()


def test_path_loss_examples():
    assert path_loss(1.0, 3.2, -30.0) == pytest.approx(1e-3, rel=1e-15)
    # log-domain check: -30 - 32 log10(400) dB
    ref = 10 ** ((-30.0 - 32.0 * np.log10(400.0)) / 10.0)
    assert path_loss(400.0, 3.2, -30.0) == pytest.approx(ref, rel=1e-12)
    assert path_loss(400.0, 3.2, -30.0) == pytest.approx(4.7e-12, rel=0.02)
    assert path_loss(10.0, 2.7, -30.0) == pytest.approx(10 ** -5.7, rel=1e-12)


@pytest.mark.parametrize("d", [0.0, -1.0])
def test_path_loss_rejects_nonpositive_distance(d):
    with pytest.raises(ValueError):
        path_loss(d, 3.2)


def test_geometry_distances():
    assert GEO.bs_ris_distance() == pytest.approx(np.hypot(400.0, 55.0))
    g = Geometry(user_positions=[[400.0, 0.0], [403.0, 19.0]])
    np.testing.assert_allclose(g.ris_user_distances(), [15.0, 5.0])
    with pytest.raises(ValueError):
        Geometry().ris_user_distances()


def test_users_inside_disk(rng):
    g = GEO.draw_users(2000, rng)
    r = np.linalg.norm(g.user_positions - np.asarray(GEO.user_center), axis=1)
    assert r.max() <= GEO.user_radius
    # uniform over the disk: P(r < R/2) = 1/4
    assert np.mean(r < GEO.user_radius / 2) == pytest.approx(0.25, abs=0.04)


def test_los_is_rank_one_unit_modulus():
    H = los_bs_ris(GEO, 4, 16)
    assert H.shape == (16, 4)
    np.testing.assert_allclose(np.abs(H), 1.0, atol=1e-12)
    s = np.linalg.svd(H, compute_uv=False)
    assert s[1] < 1e-10 * s[0]


def test_pure_los_limit():
    H = gen_bs_ris_channel(GEO, PL, 1e12, 4, 16, np.random.default_rng(0))
    pl = path_loss(GEO.bs_ris_distance(), PL.alpha_bs_ris, PL.c0_db)
    np.testing.assert_allclose(np.abs(H), np.sqrt(pl), rtol=1e-5)
    H_inf = gen_bs_ris_channel(GEO, PL, np.inf, 4, 16, np.random.default_rng(0))
    np.testing.assert_allclose(np.abs(H_inf), np.sqrt(pl), rtol=1e-12)


def test_rayleigh_variance_beta_zero():
    rng = np.random.default_rng(1)
    pl = path_loss(GEO.bs_ris_distance(), PL.alpha_bs_ris, PL.c0_db)
    draws = np.concatenate([gen_bs_ris_channel(GEO, PL, 0.0, 10, 100, rng).ravel() for _ in range(100)])
    assert draws.size == 10**5
    assert np.mean(np.abs(draws) ** 2) == pytest.approx(pl, rel=0.02)


def test_unit_rayleigh_user_channel():
    rng = np.random.default_rng(2)
    g = Geometry(user_positions=[[400.0, 0.0]])
    draws = np.concatenate([gen_ris_user_channels(g, PL, 1, 1000, rng, gains=1.0).ravel() for _ in range(100)])
    assert np.mean(np.abs(draws) ** 2) == pytest.approx(1.0, rel=0.02)


def test_zero_gain_gives_zero_vector():
    g = Geometry(user_positions=[[400.0, 0.0]])
    h = gen_ris_user_channels(g, PL, 1, 8, np.random.default_rng(0), gains=0.0)
    assert np.all(h == 0)


def test_seeded_determinism():
    a = generate_channels(GEO, PL, 1.0, 4, 4, 16, np.random.default_rng(7))
    b = generate_channels(GEO, PL, 1.0, 4, 4, 16, np.random.default_rng(7))
    assert np.array_equal(a.h_bs_ris, b.h_bs_ris)
    assert np.array_equal(a.h_ris_user, b.h_ris_user)
    assert np.array_equal(a.geometry.user_positions, b.geometry.user_positions)


def test_user_channel_uses_distance_path_loss():
    g = Geometry(user_positions=[[400.0, 5.0], [400.0, -5.0]])
    rng = np.random.default_rng(3)
    h = np.stack([gen_ris_user_channels(g, PL, 2, 500, rng) for _ in range(40)])
    emp = np.mean(np.abs(h) ** 2, axis=(0, 2))
    ref = path_loss(np.array([10.0, 20.0]), PL.alpha_ris_user, PL.c0_db)
    np.testing.assert_allclose(emp, ref, rtol=0.03)


def test_channel_set_validation():
    with pytest.raises(ValueError):
        ChannelSet(np.ones((4, 2)), np.ones((3, 5)))
    with pytest.raises(ValueError):
        ChannelSet(np.full((2, 2), np.nan), np.ones((1, 2)))
    cs = ChannelSet(np.ones((5, 2)), np.ones((3, 5)))
    assert (cs.L, cs.M, cs.K) == (5, 2, 3)


def test_invalid_parameters():
    with pytest.raises(ValueError):
        gen_bs_ris_channel(GEO, PL, -1.0, 2, 2, np.random.default_rng(0))
    with pytest.raises(ValueError):
        PathLossParams(alpha_bs_ris=-1.0)
    with pytest.raises(ValueError):
        gen_ris_user_channels(GEO.draw_users(1, np.random.default_rng(0)), PL, 0, 4, np.random.default_rng(0))
