"""Near-extinction picture of the height fragmentation.

Close to the maximum M of the excursion, {e > M - rt} rescaled by t^2
around the argmax looks like {Z < r} for a two-sided BES(3) process Z.
This script compares the component at 0 at t = 0.01 with the limit,
checks the Laplace transforms of the limit H and M, and prints the
iterated-logarithm curve of the exact L process.

    python demos/extinction_asymptotics.py [n_frames]
"""
import sys

import numpy as np

from fragstoch import asymptotics as asy
from fragstoch.harness.stats import empirical_laplace, ks_two_sample
from fragstoch.paths import Seed

n = int(sys.argv[1]) if len(sys.argv) > 1 else 500
seed = Seed(11)
r = [0.5, 1.0, 2.0]

fin, rej = asy.sample_extinction_frames(1e-2, r, n, seed.child(0))
lim = asy.sample_limit_frames(r, n, seed.child(1))
hf = np.stack([asy.statistics_HML(f) for f in fin])
hl = np.stack([asy.statistics_HML(f) for f in lim])
print(f"{n} frames at t=0.01 ({rej} rejected near the boundary)")
for j, rj in enumerate(r):
    print(f"H at r={rj}: mean finite {hf[:, j, 0].mean():.4f}, limit {hl[:, j, 0].mean():.4f}, "
          "KS p=%.3g" % ks_two_sample(hf[:, j, 0], hl[:, j, 0])[1])

M = asy.sample_limit_occupation(1.0, n, seed.child(2))
for q in (0.5, 1.0, 2.0):
    h, hs = empirical_laplace(hl[:, 1, 0], q)
    m, ms = empirical_laplace(M, q)
    print(f"q={q}: E e^(-qH) {h:.4f}+-{hs:.4f} (target {float(asy.laplace_target_H(q)):.5f})   "
          f"E e^(-qM) {m:.4f}+-{ms:.4f} (target {float(asy.laplace_target_M(q)):.5f})")

cur = asy.subordinator_lil(4000, 4, 40, seed.child(3))
med = np.median(cur.running_min[:, :, 2], axis=0)
print("median running minimum of g(t) L_t")
for k in (4, 10, 20, 30, 40):
    print(f"  t=2^-{k:<3d} {med[k - 4]:.3f}")
