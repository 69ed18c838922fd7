"""Two constructions of the 1/2-stable subordinator conditioned to die at 0.

The bridge method draws the death time from 4a exp(-2a^2) and fills in a
stable bridge; the Lamperti method time-changes the Levy process xi. Both
are compared on death times, on the mass at fixed times, and on the death
time moments k!/prod phi(k/2).

    python demos/conditioned_subordinator.py [n_paths]
"""
import math
import sys

import numpy as np

from fragstoch.harness.stats import ks_one_sample, ks_two_sample
from fragstoch.paths import Seed
from fragstoch.stable_pd import (BROWNIAN, death_time_cdf, moments_of_death_time,
                                 sample_conditioned_bridge_method, sample_conditioned_lamperti_method,
                                 xi_laplace_exponent_quad)

n = int(sys.argv[1]) if len(sys.argv) > 1 else 2000
seed = Seed(7)
br = sample_conditioned_bridge_method(1.0, BROWNIAN, seed.child(0), depth=12, n_paths=n)
la = sample_conditioned_lamperti_method(BROWNIAN, seed.child(1), n_paths=n)
zb = np.array([s.death_time for s in br])
zl = np.array([s.death_time for s in la])

cdf = lambda a: death_time_cdf(a, 1.0, BROWNIAN)
print(f"{n} paths per method")
print("death, bridge vs density    D=%.4f p=%.3g" % ks_one_sample(zb, cdf))
print("death, Lamperti vs density  D=%.4f p=%.3g" % ks_one_sample(zl, cdf))
print("death, two-sample           D=%.4f p=%.3g" % ks_two_sample(zb, zl))
for t in (0.2, 0.4):
    mb = [s.mass_at(t) for s in br]
    ml = [s.mass_at(t) for s in la]
    print(f"mass at t={t}, two-sample   D=%.4f p=%.3g" % ks_two_sample(mb, ml))

print(f"phi(1/2) by quadrature = {xi_laplace_exponent_quad(0.5, BROWNIAN):.8f}, "
      f"sqrt(8/pi) = {math.sqrt(8 / math.pi):.8f}")
for k in range(1, 4):
    target = moments_of_death_time(k, BROWNIAN)
    print(f"E[zeta^{k}]  formula {target:.4f}   bridge {np.mean(zb**k):.4f}   Lamperti {np.mean(zl**k):.4f}")
