import json
import pathlib

import numpy as np
import pytest
from scipy import integrate, stats

from fragstoch.errors import ParameterError, StateError
from fragstoch.fragmentation import (bertoin_pitman, bertoin_pitman_excursions,
                                     eval_binary_dislocation_density, haas_transform,
                                     initial_obliteration_state, obliterate, obliteration_chain,
                                     poisson_obliteration, ranked_jumps, size_biased_first_pick,
                                     tagged_fragment)
from fragstoch.harness.stats import ks_one_sample, ks_two_sample
from fragstoch.opensets import component_containing, level_set, ranked_lengths
from fragstoch.paths import GridPath, KnotPath, Seed, sample_normalized_excursions

GOLDEN = pathlib.Path(__file__).parent / "golden"
SMALL = GridPath(0.0, 0.25, [0.0, 2.0, 1.0, 3.0, 0.0])


def excursions(n, knots, seed):
    return [GridPath(0.0, 1.0 / (knots - 1), r) for r in sample_normalized_excursions(knots, n, Seed(seed))]


def test_small_path_golden():
    tf = tagged_fragment(SMALL, 0.625, level_grid=[0.5, 1.5], jump_threshold=0.0)
    gold = json.loads((GOLDEN / "tagged_fragment_small.json").read_text())
    got = json.loads(tf.to_json())
    assert got.keys() == gold.keys()
    for k in gold:
        assert np.allclose(got[k], gold[k], rtol=0, atol=1e-15), k
    # hand values: the local minimum at height 1 removes (1/8, 1/2)
    assert np.allclose(tf.jump_intervals, [[0.125, 0.5], [0.625, 5 / 6]])


def test_small_path_bertoin_pitman():
    b, K = bertoin_pitman(SMALL, 0.625)
    assert np.allclose(K.values, [0, 1, 1, 2, 0])
    assert np.allclose(b.values, [0, 1, 0, 1, 0])
    assert np.allclose(bertoin_pitman_excursions(SMALL, 0.625).components, [[0.125, 0.5], [0.625, 5 / 6]])


def test_tagged_fragment_basic_invariants():
    for e in excursions(20, 1025, 1):
        u = 0.377
        tf = tagged_fragment(e, u, level_grid=64)
        assert tf.masses[0] == pytest.approx(1.0)
        assert tf.death_level == pytest.approx(e(u))
        assert np.all(np.diff(tf.masses) <= 1e-15)
        assert tf.masses[-1] == 0.0
        assert tf.jump_sizes.sum() + tf.unresolved == pytest.approx(tf.start_mass, rel=1e-12)
        # brute-force comparison with the level sets
        for lv, m in zip(tf.levels[:-1], tf.masses[:-1]):
            c = component_containing(level_set(e, lv), tf.u)
            assert c[1] - c[0] == pytest.approx(m, abs=1e-12)


def test_tagged_fragment_node_shift():
    e = excursions(1, 9, 2)[0]
    tf = tagged_fragment(e, 0.25)
    assert tf.u == pytest.approx(0.25 + 1 / 16)
    tf = tagged_fragment(e, 0.75)
    assert tf.u == pytest.approx(0.75 - 1 / 16)
    with pytest.raises(ParameterError):
        tagged_fragment(e, 1.0)


def test_jumps_sum_to_one_on_fine_grids():
    # unresolved mass is grid drift and shrinks with the step
    un = [np.mean([tagged_fragment(e, 0.41).unresolved for e in excursions(30, k, 3)]) for k in (1025, 16385)]
    assert un[1] < un[0]
    assert un[1] < 0.05


def test_ranked_jumps_normalized_and_state_errors():
    tf = tagged_fragment(excursions(1, 4097, 4)[0], 0.5)
    rm = ranked_jumps(tf)
    assert rm.total == pytest.approx(1.0, abs=1e-12)
    assert np.all(np.diff(rm.masses) <= 0)
    alive = tf.__class__(**{**tf.__dict__, "dead": False})
    with pytest.raises(StateError):
        ranked_jumps(alive)
    empty = tf.__class__(**{**tf.__dict__, "jump_sizes": np.empty(0)})
    with pytest.raises(StateError):
        ranked_jumps(empty)


def test_mean_death_level():
    z = [tagged_fragment(e, u).death_level
         for e, u in zip(excursions(3000, 2049, 5), Seed(5).generator(9).random(3000))]
    z = np.asarray(z)
    assert abs(z.mean() - np.sqrt(np.pi / 8)) < 4 * z.std() / np.sqrt(z.size) + 0.01


def test_first_pick_beta_half_one():
    rng = Seed(6).generator(1)
    us = Seed(6).generator(2).random(1500)
    picks = [size_biased_first_pick(ranked_jumps(tagged_fragment(e, u)), rng)
             for e, u in zip(excursions(1500, 16385, 6), us)]
    assert ks_one_sample(picks, stats.beta(0.5, 1).cdf)[1] > 1e-3
    assert np.mean(picks) == pytest.approx(1 / 3, abs=0.03)


def test_size_biased_first_pick_frequencies():
    rng = np.random.default_rng(0)
    picks = np.array([size_biased_first_pick([2 / 3, 1 / 3], rng) for _ in range(20000)])
    f = np.mean(picks == 2 / 3)
    assert abs(f - 2 / 3) < 4 * np.sqrt(2 / 9 / picks.size)


def test_bertoin_pitman_shape():
    for e in excursions(20, 1025, 7):
        u = 0.6
        b, K = bertoin_pitman(e, u)
        assert np.all(b.values >= 0)
        assert b.values[0] == 0 and b.values[-1] == 0
        assert np.allclose(b.values + K.values, e.values, rtol=0, atol=1e-14)
    kp = KnotPath(SMALL.times, SMALL.values)
    assert isinstance(bertoin_pitman(kp, 0.625)[0], KnotPath)


def test_bertoin_pitman_bijection_exact():
    us = Seed(8).generator().random(200)
    for e, u in zip(excursions(200, 4097, 8), us):
        tf = tagged_fragment(e, u, jump_threshold=0.0)
        ints = tf.jump_intervals[np.argsort(tf.jump_intervals[:, 0])]
        comps = bertoin_pitman_excursions(e, u).components
        assert np.array_equal(ints, comps)


def test_bertoin_pitman_midpoint_half_normal():
    # running minima between knots are missed, which biases b toward 0 by O(sqrt(dt))
    us = Seed(9).generator().random(4000)
    ex = sample_normalized_excursions(16385, 4000, Seed(9))
    vals = np.array([bertoin_pitman(GridPath(0, 1 / 16384, r), u)[0].values[8192] for r, u in zip(ex, us)])
    assert ks_one_sample(vals, stats.halfnorm(scale=0.5).cdf)[1] > 1e-3


def test_haas_transform_structure():
    for e in excursions(10, 1025, 10):
        h = haas_transform(e)
        assert h.values[0] == 0 and h.values[-1] == 0
        assert np.all(h.values >= 0)
        assert h.values.max() == pytest.approx(e.values.max())
    kp = KnotPath(np.array([0, 0.3, 0.5, 1.0]), np.array([0, 2.0, 1.0, 0]))
    hk = haas_transform(kp)
    assert np.allclose(hk.times, [0, 0.2, 0.7, 1.0]) and np.allclose(hk.values, [0, 1, 2, 0])


def test_haas_marginal_invariance():
    a = sample_normalized_excursions(513, 20000, Seed(11))[:, 256]
    b = np.array([haas_transform(GridPath(0, 1 / 512, r)).values[256]
                  for r in sample_normalized_excursions(513, 20000, Seed(12))])
    assert ks_two_sample(a, b)[1] > 1e-3


def test_obliteration_first_step_is_bertoin_pitman():
    e = excursions(1, 2049, 13)[0]
    st = obliterate(initial_obliteration_state(e), 0.3)
    b, _ = bertoin_pitman(e, 0.3)
    assert np.array_equal(st.b.values, b.values)
    assert st.n == 1


def test_obliteration_shrinks_and_errors():
    e = excursions(1, 2049, 14)[0]
    chain = obliteration_chain(e, 4, Seed(14))
    prev = initial_obliteration_state(e)
    for s in chain:
        assert np.all(s.b.values >= 0)
        assert prev.V.contains_set(s.V, tol=1e-12)
        assert np.array_equal(s.V.components, level_set(s.b, 0.0).components)
        prev = s
    with pytest.raises(ParameterError):
        obliterate(chain[0], 1.5)
    V = chain[0].V
    gaps = V.lefts[1:] - V.rights[:-1]
    i = int(np.argmax(gaps))
    assert gaps[i] > 0
    with pytest.raises(StateError):
        obliterate(chain[0], float(V.rights[i] + 0.3 * gaps[i]))


def test_obliteration_masses_beta():
    picks = {1: [], 2: []}
    rng = Seed(15).generator(1)
    for e in excursions(1500, 2049, 15):
        ch = obliteration_chain(e, 2, rng)
        for k in picks:
            picks[k].append(size_biased_first_pick(ranked_lengths(ch[k - 1].V), rng))
    for k in picks:
        assert ks_one_sample(picks[k], stats.beta(0.5, k).cdf)[1] > 1e-3
        assert np.mean(picks[k]) == pytest.approx(1 / (2 * k + 1), abs=0.03)


def test_poisson_obliteration_counts():
    e = excursions(1, 1025, 16)[0]
    states = poisson_obliteration(e, [0.0, 1.0, 3.0], Seed(16))
    assert len(states) == 3
    assert np.array_equal(states[0].components, [[0.0, 1.0]])
    assert states[0].contains_set(states[1]) and states[1].contains_set(states[2])


def test_binary_dislocation_density():
    assert eval_binary_dislocation_density(0.75) == pytest.approx(2 / np.sqrt(2 * np.pi * (27 / 64) * (1 / 64)))
    assert eval_binary_dislocation_density(0.75) == pytest.approx(9.827, abs=1e-3)
    assert eval_binary_dislocation_density(0.4) == 0.0
    f = lambda x: (1 - x) * eval_binary_dislocation_density(x)
    coarse = integrate.quad(f, 0.5, 1, limit=50)[0]
    fine = integrate.quad(f, 0.5, 1, limit=400, epsabs=1e-13)[0]
    assert np.isfinite(fine) and abs(coarse - fine) < 1e-6
