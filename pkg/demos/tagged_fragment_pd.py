"""Tagged fragment of the Brownian height fragmentation and its jump law.

Draws normalized excursions, follows the interval of {e > t} that contains
a uniform point, and compares the first size-biased pick of the ranked
jumps with Beta(1/2, 1) and with PD(1/2, 1/2) stick breaking. The same
jump intervals are recovered from the Bertoin-Pitman bridge.

    python demos/tagged_fragment_pd.py [n_paths]
"""
import sys

import numpy as np
from scipy import stats

from fragstoch.fragmentation import (bertoin_pitman_excursions, ranked_jumps, size_biased_first_pick,
                                     tagged_fragment)
from fragstoch.harness.stats import ks_one_sample, ks_two_sample
from fragstoch.paths import GridPath, Seed, sample_normalized_excursions
from fragstoch.stable_pd import PDParams, sample_pd

n = int(sys.argv[1]) if len(sys.argv) > 1 else 1000
knots = 2**14 + 1
seed = Seed(2024)
rng = seed.generator(1)

picks, deaths, same = [], [], 0
for row, u in zip(sample_normalized_excursions(knots, n, seed), rng.random(n)):
    e = GridPath(0.0, 1.0 / (knots - 1), row)
    tf = tagged_fragment(e, float(u), jump_threshold=0.0)
    picks.append(size_biased_first_pick(ranked_jumps(tf), rng))
    deaths.append(tf.death_level)
    ints = tf.jump_intervals[np.argsort(tf.jump_intervals[:, 0])]
    same += np.array_equal(ints, bertoin_pitman_excursions(e, tf.u).components)

pd = sample_pd(PDParams(0.5, 0.5), 5000, seed.child(2), size=n)
pd_picks = [size_biased_first_pick(m, rng) for m in pd]

print(f"{n} excursions on {knots} knots")
print(f"mean death level    {np.mean(deaths):.4f}  (sqrt(pi/8) = {np.sqrt(np.pi / 8):.4f})")
print(f"mean first pick     {np.mean(picks):.4f}  (Beta(1/2,1) mean = {1 / 3:.4f})")
print("KS vs Beta(1/2,1)   D=%.4f p=%.3g" % ks_one_sample(picks, stats.beta(0.5, 1).cdf))
print("KS vs PD(1/2,1/2)   D=%.4f p=%.3g" % ks_two_sample(picks, pd_picks))
print(f"Bertoin-Pitman intervals identical on {same}/{n} paths")
