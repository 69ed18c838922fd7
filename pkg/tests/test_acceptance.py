"""The eleven acceptance criteria at their stated sample sizes and tolerances.

Each criterion runs as a registry case with the default parameters and
master seed 0; the cases run once per session and in parallel when more
than one CPU is available.
"""
import math
import os

import numpy as np
import pytest

from fragstoch.harness.registry import run_registry
from fragstoch.paths import Seed
from fragstoch.stable_pd import BROWNIAN, sample_conditioned_lamperti_method, xi_laplace_exponent_quad

from .conftest import ACCEPTANCE_LINES

CRITERIA = {
    1: "thm1-beta-half",
    2: "prop2-samplers",
    3: "lemma7-moments",
    4: "bp-bijection",
    5: "prop6-haas",
    6: "prop3-zero-set",
    7: "thm4-frames",
    8: "cor5-laplace",
    9: "obliteration",
    10: "thm6-lil",
    11: "general-beta",
}

pytestmark = pytest.mark.slow


@pytest.fixture(scope="module")
def reports():
    workers = min(len(CRITERIA), os.cpu_count() or 1)
    out = run_registry(",".join(CRITERIA.values()), 0, workers)
    return {r.case_id: r for r in out}


def _summary(r):
    parts = [f"{k} p={v:.3g}" for k, v in r.p_values.items()]
    parts += [f"{k} z={v:+.2f}" for k, v in r.z_scores.items()]
    parts += [f"{k}={'ok' if v else 'FAILED'}" for k, v in r.checks.items()]
    return "; ".join(parts)


@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(reports, number):
    r = reports[CRITERIA[number]]
    line = f"criterion {number:2d} [{r.verdict.upper()}] {r.case_id} (N={r.N}): {_summary(r)}"
    if number == 3:
        line += (f" | literal argument 2: phi(2)={r.details['literal_phi(2)']:.6f} vs sqrt(8/pi)="
                 f"{math.sqrt(8 / math.pi):.6f} -> {'PASS' if r.details['literal_phi(2)_matches'] else 'FAIL'}")
    ACCEPTANCE_LINES[number] = line
    assert r.error is None, r.error
    assert r.verdict == "pass", line


@pytest.mark.xfail(strict=True, reason="the exponent of xi at 2 is 3.7599, so the literal reading of "
                                       "criterion 3 cannot hold; the gate uses the argument 1/2")
def test_criterion_3_literal_reading():
    phi2 = xi_laplace_exponent_quad(2.0, BROWNIAN)
    phi4 = xi_laplace_exponent_quad(4.0, BROWNIAN)
    assert abs(phi2 - math.sqrt(8 / math.pi)) <= 1e-4
    z = np.array([s.death_time for s in sample_conditioned_lamperti_method(BROWNIAN, Seed(0, 3), n_paths=10_000)])
    se = np.std(z**2, ddof=1) / math.sqrt(z.size)
    assert abs(np.mean(z**2) - 2 / (phi2 * phi4)) <= 3 * se
