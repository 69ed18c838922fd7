"""Case bodies for the verification registry.

Each body takes ``(seed, params)`` and returns a :class:`CaseOutcome`.
Statistical tests are recorded as p-values or z-scores; exact checks as
booleans. The verdict is computed later from those numbers alone.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, stats

from .. import asymptotics as asy
from ..fragmentation import (bertoin_pitman_excursions, obliteration_chain, ranked_jumps,
                             size_biased_first_pick, tagged_fragment, haas_transform)
from ..opensets import nonzero_set, ranked_lengths
from ..paths import GridPath, Seed, sample_brownian_bridges, sample_normalized_excursions
from ..stable_pd import (BROWNIAN, PDParams, StableParams, death_time_cdf, moments_of_death_time,
                         sample_conditioned_bridge_method, sample_conditioned_lamperti_method,
                         sample_pd, stable_density, stable_f1, xi_laplace_exponent,
                         xi_laplace_exponent_quad)
from .stats import empirical_laplace, ks_one_sample, ks_two_sample, z_score


@dataclass
class CaseOutcome:
    statistics: dict = field(default_factory=dict)
    p_values: dict = field(default_factory=dict)
    z_scores: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)

    def ks(self, name, result):
        self.statistics[name] = float(result[0])
        self.p_values[name] = float(result[1])


def _blocks(n, size):
    for b, lo in enumerate(range(0, int(n), int(size))):
        yield b, min(int(size), int(n) - lo)


def _lamperti_reduced(params, seed: Seed, n, eps, reduce, block=500):
    """Apply ``reduce`` to Lamperti paths drawn block by block, so that full paths are not retained."""
    out = []
    for b, m in _blocks(n, block):
        out += [reduce(s) for s in sample_conditioned_lamperti_method(params, seed.child(b), n_paths=m, eps=eps)]
    return np.array(out)


def _pd_reduced(pd: PDParams, n_sticks, seed: Seed, n, reduce, block=500):
    """Apply ``reduce`` to ranked PD samples drawn block by block."""
    out = []
    for b, m in _blocks(n, block):
        out += [reduce(r) for r in sample_pd(pd, n_sticks, seed.child(b), size=m)]
    return np.array(out)


def _beta_cdf(a, b):
    return stats.beta(a, b).cdf


# --------------------------------------------------------------------------
# tagged fragment, beta = 1/2

def thm1_beta_half(seed: Seed, p) -> CaseOutcome:
    """First size-biased pick of the ranked tagged-fragment jumps against Beta(1/2, 1)."""
    out = CaseOutcome()
    n, knots = int(p["N"]), int(p["knots"])
    pick_rng = seed.generator(10**6)
    picks, largest, zetas = [], [], []
    for b, m in _blocks(n, p["block"]):
        ex = sample_normalized_excursions(knots, m, seed.child(b))
        u = seed.generator(b).random(m)
        for row, ui in zip(ex, u):
            tf = tagged_fragment(GridPath(0.0, 1.0 / (knots - 1), row), float(ui))
            rm = ranked_jumps(tf)
            picks.append(size_biased_first_pick(rm, pick_rng))
            largest.append(rm.masses[0])
            zetas.append(tf.death_level)
    pd_rng = seed.generator(10**6 + 1)
    pd = _pd_reduced(PDParams(0.5, 0.5), int(p["n_sticks"]), seed.child(10**6), n,
                     lambda r: (size_biased_first_pick(r, pd_rng), r.masses[0]))
    pd_picks, pd_largest = pd[:, 0], pd[:, 1]
    out.ks("pick_vs_beta", ks_one_sample(picks, _beta_cdf(0.5, 1.0)))
    out.ks("pick_vs_pd", ks_two_sample(picks, pd_picks))
    out.ks("largest_vs_pd", ks_two_sample(largest, pd_largest))
    out.details["mean_pick"] = float(np.mean(picks))
    out.details["mean_death_level"] = float(np.mean(zetas))
    return out


# --------------------------------------------------------------------------
# conditioned subordinator: two constructions

def prop2_samplers(seed: Seed, p) -> CaseOutcome:
    out = CaseOutcome()
    n = int(p["N"])
    times = list(p["times"])
    # paths are reduced to death time and masses at the test times block by block
    br, la = [], []
    for b, m in _blocks(n, p.get("block", 500)):
        for s in sample_conditioned_bridge_method(1.0, BROWNIAN, seed.child(0).child(b), depth=int(p["depth"]),
                                                  n_paths=m):
            br.append([s.death_time, *s.mass_at(times)])
        for s in sample_conditioned_lamperti_method(BROWNIAN, seed.child(1).child(b), n_paths=m,
                                                    eps=float(p["eps"])):
            la.append([s.death_time, *s.mass_at(times)])
    br, la = np.array(br), np.array(la)
    cdf = lambda a: death_time_cdf(a, 1.0, BROWNIAN)
    out.ks("death_bridge_vs_density", ks_one_sample(br[:, 0], cdf))
    out.ks("death_lamperti_vs_density", ks_one_sample(la[:, 0], cdf))
    out.ks("death_two_sample", ks_two_sample(br[:, 0], la[:, 0]))
    for j, t in enumerate(times, start=1):
        out.ks(f"mass_at_{t:g}", ks_two_sample(br[:, j], la[:, j]))
    return out


def lemma7_moments(seed: Seed, p) -> CaseOutcome:
    """Death-time moments from the Laplace exponent of ``xi`` at ``-delta k``.

    The literal value of the exponent at 2 is recorded for comparison with
    the closed form but does not gate.
    """
    out = CaseOutcome()
    d = -BROWNIAN.delta
    phi1 = xi_laplace_exponent_quad(d, BROWNIAN)
    phi2 = xi_laplace_exponent_quad(2 * d, BROWNIAN)
    target = math.sqrt(8.0 / math.pi)
    out.statistics["phi_quad(-delta)"] = phi1
    out.statistics["phi_quad(-2 delta)"] = phi2
    out.checks["phi(-delta)=sqrt(8/pi)"] = abs(phi1 - target) <= float(p["phi_tol"])
    m2 = 2.0 / (phi1 * phi2)
    out.statistics["E[zeta^2] target"] = m2
    z = _lamperti_reduced(BROWNIAN, seed, int(p["N"]), float(p["eps"]), lambda s: s.death_time)
    est, se = float(np.mean(z**2)), float(np.std(z**2, ddof=1) / np.sqrt(z.size))
    out.statistics["E[zeta^2] mc"] = est
    out.z_scores["second_moment"] = z_score(est, se, m2)
    out.checks["moment_formula_k1"] = abs(moments_of_death_time(1, BROWNIAN) - math.sqrt(math.pi / 8)) < 1e-8
    lit = xi_laplace_exponent_quad(2.0, BROWNIAN)
    out.details["literal_phi(2)"] = lit
    out.details["literal_phi(2)_matches"] = bool(abs(lit - target) <= float(p["phi_tol"]))
    out.details["literal_second_moment_target"] = 2.0 / (lit * xi_laplace_exponent_quad(4.0, BROWNIAN))
    return out


# --------------------------------------------------------------------------
# structural and path-transform cases

def bp_bijection(seed: Seed, p) -> CaseOutcome:
    """Excursion intervals of the Bertoin-Pitman bridge equal the tagged-fragment jump intervals."""
    out = CaseOutcome()
    knots = int(p["knots"])
    ex = sample_normalized_excursions(knots, int(p["N"]), seed)
    u = seed.generator(1).random(int(p["N"]))
    bad = 0
    for row, ui in zip(ex, u):
        e = GridPath(0.0, 1.0 / (knots - 1), row)
        tf = tagged_fragment(e, float(ui), jump_threshold=0.0)
        ints = np.asarray(tf.jump_intervals, dtype=float).reshape(-1, 2)
        ints = ints[np.lexsort((ints[:, 1], ints[:, 0]))]
        comps = bertoin_pitman_excursions(e, float(ui)).components
        if ints.shape != comps.shape or not np.array_equal(ints, comps):
            bad += 1
    out.statistics["mismatched_paths"] = bad
    out.checks["all_paths_identical"] = bad == 0
    return out


def haas_invariance(seed: Seed, p) -> CaseOutcome:
    """Marginals of ``e`` and ``e^S`` from independent batches.

    On the grid ``e^S`` of a Vervaat excursion is the Vervaat excursion of
    the negated bridge, so the comparison is exact in law at every knot.
    """
    out = CaseOutcome()
    knots, n = int(p["knots"]), int(p["N"])
    idx = [int(round(s * (knots - 1))) for s in p["s"]]
    a, b = [], []
    for blk, m in _blocks(n, p["block"]):
        a.append(sample_normalized_excursions(knots, m, seed.child(2 * blk))[:, idx])
        ex = sample_normalized_excursions(knots, m, seed.child(2 * blk + 1))
        dt = 1.0 / (knots - 1)
        b.append(np.stack([haas_transform(GridPath(0.0, dt, r)).values[idx] for r in ex]))
    a, b = np.concatenate(a), np.concatenate(b)
    for j, s in enumerate(p["s"]):
        out.ks(f"s={s:g}", ks_two_sample(a[:, j], b[:, j]))
    return out


def prop3_zero_set(seed: Seed, p) -> CaseOutcome:
    """Ranked jumps of the conditioned subordinator vs ranked excursion lengths of a bridge."""
    out = CaseOutcome()
    knots, n = int(p["knots"]), int(p["N"])
    vb = []
    for blk, m in _blocks(n, p["block"]):
        for row in sample_brownian_bridges(knots, m, 1.0, seed.child(blk)):
            r = ranked_lengths(nonzero_set(GridPath(0.0, 1.0 / (knots - 1), row))).masses
            r = r / r.sum()
            vb.append(np.pad(r[:2], (0, max(0, 2 - r.size))))
    vb = np.array(vb)
    vs = _lamperti_reduced(BROWNIAN, seed.child(10**6), n, float(p["eps"]),
                           lambda s: np.pad(s.normalized_jumps().masses[:2], (0, 2))[:2])
    for j in range(2):
        out.ks(f"V{j + 1}", ks_two_sample(vb[:, j], vs[:, j]))
    out.details["mean_V1_bridge"] = float(vb[:, 0].mean())
    out.details["mean_V1_subordinator"] = float(vs[:, 0].mean())
    return out


def obliteration_masses(seed: Seed, p) -> CaseOutcome:
    """First size-biased pick of ``m_n`` against Beta(1/2, n)."""
    out = CaseOutcome()
    knots, n = int(p["knots"]), int(p["N"])
    cuts = int(max(p["n"]))
    picks = {k: [] for k in p["n"]}
    for blk, m in _blocks(n, p["block"]):
        rng = seed.generator(blk)
        for row in sample_normalized_excursions(knots, m, seed.child(blk)):
            chain = obliteration_chain(GridPath(0.0, 1.0 / (knots - 1), row), cuts, rng)
            for k in p["n"]:
                rm = ranked_lengths(chain[k - 1].V)
                picks[k].append(size_biased_first_pick(rm, rng))
    for k in p["n"]:
        out.ks(f"n={k}", ks_one_sample(picks[k], _beta_cdf(0.5, k)))
    return out


# --------------------------------------------------------------------------
# near extinction

def thm4_frames(seed: Seed, p) -> CaseOutcome:
    """``H_{rt}/t^2`` at small ``t`` against the two-sided BES(3) component."""
    out = CaseOutcome()
    r = np.asarray(p["r"], dtype=float)
    n, t = int(p["N"]), float(p["t"])
    fin, rej = asy.sample_extinction_frames(t, r, n, seed.child(0), window_n=int(p["window_n"]))
    lim = asy.sample_limit_frames(r, n, seed.child(1), window_n=int(p["window_n"]))
    hf = np.stack([asy.statistics_HML(f) for f in fin])
    hl = np.stack([asy.statistics_HML(f) for f in lim])
    for j, rj in enumerate(r):
        out.ks(f"H r={rj:g}", ks_two_sample(hf[:, j, 0], hl[:, j, 0]))
    out.statistics["rejected_frames"] = rej
    out.details["rejection_rate"] = rej / (n + rej)
    out.checks["H<=M<=L"] = bool(np.all(hf[..., 0] <= hf[..., 1] + 1e-12) and np.all(hf[..., 1] <= hf[..., 2] + 1e-12)
                                 and np.all(hl[..., 0] <= hl[..., 1] + 1e-12) and np.all(hl[..., 1] <= hl[..., 2] + 1e-12))
    out.details["samples_finite"] = hf[:, :, 0].tolist() if p.get("keep_samples") else None
    return out


def cor5_laplace(seed: Seed, p) -> CaseOutcome:
    out = CaseOutcome()
    n = int(p["N"])
    frames = asy.sample_limit_frames([1.0], n, seed.child(0), window_n=int(p["window_n"]))
    H = np.array([asy.statistics_HML(f)[0, 0] for f in frames])
    M = asy.sample_limit_occupation(1.0, n, seed.child(1))
    for q in p["q"]:
        est, se = empirical_laplace(H, q)
        out.statistics[f"H q={q:g}"] = est
        out.z_scores[f"H q={q:g}"] = z_score(est, se, float(asy.laplace_target_H(q)))
        est, se = empirical_laplace(M, q)
        out.statistics[f"M q={q:g}"] = est
        out.z_scores[f"M q={q:g}"] = z_score(est, se, float(asy.laplace_target_M(q)))
    return out


def thm6_lil(seed: Seed, p) -> CaseOutcome:
    """Running minima of ``g(t) L_t`` at the finest ``t`` inside the calibrated band.

    ``H`` and ``M`` are reported but do not gate.
    """
    out = CaseOutcome()
    lo, hi = p["band"]
    sub = asy.subordinator_lil(int(p["N_subordinator"]), int(p["k_min"]), int(p["k_max"]), seed.child(0))
    med_sub = float(sub.median_at_finest()[2])
    t_grid = 2.0 ** -np.arange(int(p["k_min"]), int(p["k_path_max"]) + 1)
    paths = asy.sample_lil_excursions(int(p["N_paths"]), t_grid, seed.child(1))
    cur = asy.lil_diagnostic(paths, t_grid)
    med = cur.median_at_finest()
    out.statistics["median gL subordinator"] = med_sub
    out.statistics["median gL paths"] = float(med[2])
    out.checks["subordinator L in band"] = lo <= med_sub <= hi
    out.checks["path L in band"] = lo <= float(med[2]) <= hi
    out.checks["gH<=gM<=gL"] = bool(np.all(cur.scaled[..., 0] <= cur.scaled[..., 1] + 1e-9)
                                     and np.all(cur.scaled[..., 1] <= cur.scaled[..., 2] + 1e-9))
    out.details["median gH paths"] = float(med[0])
    out.details["median gM paths"] = float(med[1])
    out.details["curves"] = {
        "t": t_grid.tolist(),
        "median_running_min": np.median(cur.running_min, axis=0).tolist(),
        "subordinator_t": sub.t_grid.tolist(),
        "subordinator_median": np.median(sub.running_min[:, :, 2], axis=0).tolist(),
    }
    return out


def jeulin_fixed_time(seed: Seed, p) -> CaseOutcome:
    out = CaseOutcome()
    rep = asy.jeulin_fixed_time_check(float(p["v"]), p["s"], int(p["N"]), seed)
    for s, a, b, c, d in zip(rep.s_grid, rep.ks_front, rep.p_front, rep.ks_back, rep.p_back):
        out.statistics[f"front s={s:g}"], out.p_values[f"front s={s:g}"] = float(a), float(b)
        out.statistics[f"back s={s:g}"], out.p_values[f"back s={s:g}"] = float(c), float(d)
    out.statistics["correlation"] = rep.correlation
    out.checks["correlation within band"] = abs(rep.correlation) < rep.corr_band
    return out


# --------------------------------------------------------------------------
# general beta

def general_beta(seed: Seed, p) -> CaseOutcome:
    out = CaseOutcome()
    rng = seed.generator(0)
    for k, b in enumerate(p["beta"]):
        params = StableParams.stable_tree(1.0 / (1.0 - b))
        i1 = integrate.quad(lambda x: stable_f1(x, b), 0.0, 1.0, epsabs=1e-13, limit=200)[0]
        i2 = integrate.quad(lambda x: stable_f1(x, b), 1.0, np.inf, epsabs=1e-13, limit=200)[0]
        out.statistics[f"beta={b:g} normalization error"] = abs(i1 + i2 - 1.0)
        out.checks[f"beta={b:g} normalization"] = abs(i1 + i2 - 1.0) <= float(p["norm_tol"])
        t = rng.uniform(0.1, 3.0, 20)
        y = rng.uniform(0.1, 3.0, 20)
        lhs = stable_density(t, y, params)
        rhs = stable_density(t * y ** -b, 1.0, params) / y
        rel = float(np.max(np.abs(lhs - rhs) / np.abs(rhs)))
        out.statistics[f"beta={b:g} scaling error"] = rel
        out.checks[f"beta={b:g} scaling"] = rel <= float(p["scaling_tol"])
        pr = seed.generator(10 + k)
        picks = _pd_reduced(PDParams(b, b), int(p["n_sticks"]), seed.child(10 + k), int(p["N"]),
                            lambda r: size_biased_first_pick(r, pr))
        out.ks(f"beta={b:g} PD first pick", ks_one_sample(picks, _beta_cdf(1 - b, 2 * b)))
        picks = _lamperti_reduced(params, seed.child(20 + k), int(p["N_subordinator"]), 1e-4,
                                  lambda s: size_biased_first_pick(s.normalized_jumps(), pr))
        out.ks(f"beta={b:g} subordinator first pick", ks_one_sample(picks, _beta_cdf(1 - b, 2 * b)))
        out.details[f"beta={b:g} xi exponent closed vs quad"] = abs(
            xi_laplace_exponent(1.0, params) - xi_laplace_exponent_quad(1.0, params))
    return out
