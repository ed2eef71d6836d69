import math

import numpy as np
import pytest

import cssm


def test_gaussian_density_closed_form():
    rho = math.sin(math.pi * 0.3 / 2)
    # at u = v = 0.5 the normal scores vanish
    assert cssm.density("gaussian", 0.3, 0.5, 0.5) == pytest.approx(1 / math.sqrt(1 - rho**2), rel=1e-12)


def test_hinv_inverts_hfunc():
    for fam in ("gaussian", "t4", "clayton", "gumbel", "clayton@180"):
        h = cssm.hfunc(fam, 0.4, 0.3, 0.7)
        assert cssm.hinv(fam, 0.4, h, 0.7) == pytest.approx(0.3, abs=1e-8)


def test_unknown_family_raises():
    with pytest.raises(ValueError):
        cssm.density("frank", 0.3, 0.5, 0.5)


def test_crps_hand_value():
    assert cssm.crps([1.0, 3.0], 2.0) == pytest.approx(0.5, abs=1e-15)


def test_boxcox_round_trip():
    assert cssm.boxcox(2.0, 2.0) == pytest.approx(1.5)
    assert cssm.inv_boxcox(cssm.boxcox(3.7, -0.5), -0.5) == pytest.approx(3.7, rel=1e-12)


def test_kalman_handles_missing_cells():
    z = np.array([[0.1, np.nan], [0.3, -0.2]])
    full = cssm.kalman_loglik(np.array([0.6, 0.4]), 0.5, np.nan_to_num(z))
    part = cssm.kalman_loglik(np.array([0.6, 0.4]), 0.5, z)
    assert math.isfinite(part) and part != full


def test_fit_and_predict_small():
    u, v = cssm.simulate(["gaussian", "gumbel"], np.array([0.6, 0.5]), "gaussian", 0.6, T=60, seed=3)
    assert u.shape == (60, 2) and v.shape == (60,)
    u = u.copy()
    u[10, 1] = np.nan
    draws = cssm.fit(u, ["gaussian", "gumbel"], iterations=120, warmup=60, chains=2, seed=5)
    assert len(draws) == 120
    assert draws.tau_obs.shape == (120, 2)
    assert (draws.tau_obs[:, 0] > 0).all()
    ins = cssm.predict_insample(draws, 1, 10, seed=2)
    oos = cssm.predict_oos(draws, 0, 61, seed=2)
    assert ins.shape == (120,) and oos.shape == (120,)
    assert ((ins > 0) & (ins < 1)).all()
    with pytest.raises(IndexError):
        cssm.predict_oos(draws, 0, 10)
    again = cssm.fit(u, ["gaussian", "gumbel"], iterations=120, warmup=60, chains=2, seed=5, threads=1)
    assert np.array_equal(draws.tau_obs, again.tau_obs)


def test_run_pipeline(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(
        "[run]\nseed = 4\n[model]\nfamilies = gaussian,clayton\ntau_obs = 0.5,0.4\n"
        "latent_family = gaussian\ntau_lat = 0.5\n[simulate]\nT = 40\n"
    )
    cssm.run("simulate", cfg, tmp_path)
    assert (tmp_path / "data.csv").read_text().splitlines()[0] == "u_1,u_2"
    bad = tmp_path / "bad.cfg"
    bad.write_text("[simulate]\nrows = 3\n")
    with pytest.raises(ValueError):
        cssm.run("simulate", bad, tmp_path)
