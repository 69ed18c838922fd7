import warnings

import numpy as np
import pytest

from fragstoch import asymptotics as asy
from fragstoch.errors import ParameterError
from fragstoch.fragmentation import haas_transform
from fragstoch.harness.stats import empirical_laplace, z_score
from fragstoch.paths import GridPath, Seed, sample_normalized_excursions

R = [0.5, 1.0, 2.0]


def grid_excursions(n, knots, seed):
    return [GridPath(0.0, 1.0 / (knots - 1), r) for r in sample_normalized_excursions(knots, n, Seed(seed))]


def test_laplace_targets():
    assert asy.laplace_target_H(0.0) == 1.0
    assert asy.laplace_target_M(0.0) == 1.0
    x = np.sqrt(2.0)
    assert asy.laplace_target_H(1.0) == pytest.approx((x / np.sinh(x)) ** 2)
    assert asy.laplace_target_M(1.0) == pytest.approx(1 / np.cosh(x) ** 2)
    # H is a subset of M, so its transform dominates
    q = np.linspace(0.1, 5, 20)
    assert np.all(asy.laplace_target_H(q) > asy.laplace_target_M(q))


def test_r_zero_gives_empty_frame():
    f = asy.sample_limit_frames([0.0, 1.0], 3, Seed(1))
    for fr in f:
        assert len(fr.snapshots[0]) == 0
        assert np.all(asy.statistics_HML(fr)[0] == 0)
    e = grid_excursions(1, 4097, 1)[0]
    ef = asy.extinction_frame(e, 0.05, [0.0, 1.0])
    if ef is not None:
        assert len(ef.snapshots[0]) == 0


def test_r_grid_validation():
    with pytest.raises(ParameterError):
        asy.sample_limit_frames([1.0, 0.5], 1, Seed(0))
    with pytest.raises(ParameterError):
        asy.sample_limit_frames([-1.0], 1, Seed(0))


def test_frames_monotone_and_ordered():
    fin, _ = asy.sample_extinction_frames(0.05, R, 20, Seed(2))
    lim = asy.sample_limit_frames(R, 20, Seed(3))
    for fr in fin + lim:
        for a, b in zip(fr.snapshots[:-1], fr.snapshots[1:]):
            assert b.contains_set(a, tol=1e-12)
        s = asy.statistics_HML(fr)
        assert np.all(s[:, 0] <= s[:, 1] + 1e-12) and np.all(s[:, 1] <= s[:, 2] + 1e-12)
        assert np.all(np.diff(s, axis=0) >= -1e-12)
        assert np.all(s[:, 2] <= 2 * fr.window_n)


def test_extinction_frame_rejects_near_edge():
    e = GridPath(0.0, 0.25, [0.0, 3.0, 2.0, 1.0, 0.0])
    assert asy.extinction_frame(e, 0.5, R) is None
    with pytest.raises(ParameterError):
        asy.extinction_frame(e, 0.0, R)


def test_haas_identity_direct_vs_preimage():
    t = 0.05
    checked = 0
    for e in grid_excursions(30, 4097, 4):
        f = asy.extinction_frame(e, t, R)
        if f is None:
            continue
        g = asy.frame_from_haas(haas_transform(e), t, R)
        for a, b in zip(f.snapshots, g):
            assert a.components.shape == b.components.shape
            assert np.max(np.abs(a.components - b.components), initial=0.0) < 1e-9
        checked += 1
    assert checked > 20


def test_limit_frame_window_check():
    short = GridPath(0.0, 0.5, [0.0, 1.0, 2.0])
    with pytest.raises(ParameterError):
        asy.limit_frame(short, short, R, window_n=4)


def test_limit_H_laplace():
    frames = asy.sample_limit_frames([1.0], 400, Seed(5))
    H = np.array([asy.statistics_HML(f)[0, 0] for f in frames])
    for q in (0.5, 1.0, 2.0):
        est, se = empirical_laplace(H, q)
        assert abs(z_score(est, se, float(asy.laplace_target_H(q)))) < 4


def test_occupation_laplace():
    Z = asy.sample_limit_occupation(1.0, 1000, Seed(6))
    assert np.all(Z > 0)
    for q in (0.5, 1.0, 2.0):
        est, se = empirical_laplace(Z, q)
        assert abs(z_score(est, se, float(asy.laplace_target_M(q)))) < 4
    with pytest.raises(ParameterError):
        asy.sample_limit_occupation(0.0, 10, Seed(6))


def test_occupation_scaling():
    # Brownian scaling: time below level c is c^2 times time below 1
    a = asy.sample_limit_occupation(0.5, 800, Seed(7))
    b = asy.sample_limit_occupation(1.0, 800, Seed(8))
    se = np.hypot(a.std(), 0.25 * b.std()) / np.sqrt(800)
    assert abs(a.mean() - 0.25 * b.mean()) < 4 * se


def test_jeulin_long_excursion_passes():
    rep = asy.jeulin_fixed_time_check(400.0, [0.25, 1.0, 4.0], 2000, Seed(9))
    assert rep.passed
    assert rep.to_dict()["passed"] is True


def test_jeulin_negative_control():
    # at v = 8 the bridge pull is visible at s = 4, so the check must fail
    rep = asy.jeulin_fixed_time_check(8.0, [0.25, 1.0, 4.0], 2000, Seed(10))
    assert not rep.passed
    assert rep.p_front[-1] < 1e-3
    with pytest.raises(ParameterError):
        asy.jeulin_fixed_time_check(1.0, [2.0], 200, Seed(10))


def test_lil_g():
    assert asy.lil_g(np.exp(-np.e)) == pytest.approx(1.0 / (2 * np.exp(-2 * np.e)))


def test_lil_diagnostic_running_minima_and_warning():
    t = np.array([0.3, 0.2, 0.1])
    paths = asy.sample_lil_excursions(5, t, Seed(11))
    with pytest.warns(RuntimeWarning):
        cur = asy.lil_diagnostic(paths, t)
    assert cur.scaled.shape == (5, 3, 3)
    assert np.all(np.diff(cur.running_min, axis=1) <= 0)
    assert np.all(cur.scaled[:, :, 0] <= cur.scaled[:, :, 1] + 1e-9)
    assert np.all(cur.scaled[:, :, 1] <= cur.scaled[:, :, 2] + 1e-9)
    t2 = 2.0 ** -np.arange(4, 8)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        asy.lil_diagnostic(asy.sample_lil_excursions(3, t2, Seed(12)), t2)
    with pytest.raises(ParameterError):
        asy.lil_diagnostic(paths, t[::-1])


def test_subordinator_lil():
    cur = asy.subordinator_lil(2000, 4, 40, Seed(13))
    assert np.all(np.diff(cur.running_min[:, :, 2], axis=1) <= 0)
    med = cur.median_at_finest()[2]
    assert 0.5 <= med <= 2.0
    # the exact L at t = 1/16 has Laplace transform exp(-2 t sqrt(2 q))
    L = cur.scaled[:, 0, 2] / asy.lil_g(1 / 16)
    est, se = empirical_laplace(L, 1.0)
    assert abs(z_score(est, se, np.exp(-2 / 16 * np.sqrt(2)))) < 4
    with pytest.raises(ParameterError):
        asy.subordinator_lil(10, 5, 5, Seed(0))
