"""Behaviour of the height fragmentation near its extinction level.

``F-hat_t = {s : e_s > M - t}`` shrinks to the argmax ``S`` as ``t -> 0``.
Rescaled by ``t**2`` around ``S`` it converges to ``{s : Z_s < r}`` for a
two-sided BES(3) process ``Z``. Frames hold these sets for a grid of ratios
``r``, restricted to the window ``(-n, n)``.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import special, stats

from .errors import ParameterError
from .fragmentation import haas_transform
from .opensets import LINE, OpenSet, component_containing, level_set, sublevel_set
from .paths import Bessel3Knots, KnotPath, as_seed, refine_bes3_knots, sample_bes3_knots, _half_stable_draws

__all__ = [
    "WINDOW_N",
    "ExtinctionFrame",
    "LimitFrame",
    "extinction_frame",
    "frame_from_haas",
    "limit_frame",
    "statistics_HML",
    "laplace_target_H",
    "laplace_target_M",
    "sample_extinction_frames",
    "sample_limit_frames",
    "sample_limit_occupation",
    "JeulinReport",
    "jeulin_fixed_time_check",
    "lil_g",
    "hml_curves",
    "LilCurves",
    "lil_diagnostic",
    "sample_lil_excursions",
    "subordinator_lil",
]

WINDOW_N = 4


def laplace_target_H(q):
    """``(sqrt(2q) / sinh sqrt(2q))**2``."""
    x = np.sqrt(2.0 * np.asarray(q, dtype=float))
    return np.where(x > 0, (x / np.sinh(np.where(x > 0, x, 1.0))) ** 2, 1.0)


def laplace_target_M(q):
    """``(1 / cosh sqrt(2q))**2``."""
    return 1.0 / np.cosh(np.sqrt(2.0 * np.asarray(q, dtype=float))) ** 2


@dataclass(frozen=True)
class ExtinctionFrame:
    M: float
    S: float
    t: float
    window_n: int
    r_grid: np.ndarray = field(repr=False)
    snapshots: tuple = field(repr=False)


@dataclass(frozen=True)
class LimitFrame:
    window_n: int
    r_grid: np.ndarray = field(repr=False)
    snapshots: tuple = field(repr=False)


def _check_r(r_grid):
    r = np.atleast_1d(np.asarray(r_grid, dtype=float))
    if np.any(r < 0) or np.any(np.diff(r) <= 0):
        raise ParameterError("r_grid must be nonnegative and increasing")
    return r


def _window_set(right, left, n):
    """Line set on ``(-n, n)`` from components on ``[0, n)`` and mirrored ones on ``(-n, 0]``.

    A component ending at 0 and one starting at 0 are joined, since 0 itself
    belongs to the set.
    """
    c = np.concatenate([left, right]).reshape(-1, 2)
    c = c[np.argsort(c[:, 0], kind="stable")]
    if c.shape[0] >= 2:
        j = np.flatnonzero((c[:-1, 1] == 0.0) & (c[1:, 0] == 0.0))
        if j.size:
            i = int(j[0])
            c = np.concatenate([c[:i], [[c[i, 0], c[i + 1, 1]]], c[i + 2:]])
    return OpenSet((-float(n), float(n)), c)


def _clip(c, lo, hi):
    c = c[(c[:, 1] > lo) & (c[:, 0] < hi)]
    return np.column_stack([np.maximum(c[:, 0], lo), np.minimum(c[:, 1], hi)])


def extinction_frame(e, t: float, r_grid, window_n: int = WINDOW_N):
    """Sets ``(F-hat_{rt} - S) / t**2`` restricted to ``(-n, n)``, computed directly from ``e``.

    Returns ``None`` when ``n t**2 < S < 1 - n t**2`` fails, so that callers
    can count rejections.
    """
    r = _check_r(r_grid)
    if not t > 0:
        raise ParameterError("t must be positive")
    times = np.asarray(e.times, dtype=float)
    values = np.asarray(e.values, dtype=float)
    k = int(np.argmax(values))
    M, S = float(values[k]), float(times[k])
    span = window_n * t * t
    if not (times[0] + span < S < times[-1] - span):
        return None
    snaps = []
    for ri in r:
        V = level_set(e, M - ri * t)
        c = _clip((V.components - S) / (t * t), -float(window_n), float(window_n))
        snaps.append(OpenSet((-float(window_n), float(window_n)), c))
    return ExtinctionFrame(M, S, float(t), int(window_n), r, tuple(snaps))


def frame_from_haas(eS, t: float, r_grid, window_n: int = WINDOW_N):
    """The same sets read off the Haas transform ``e^S``.

    ``(F-hat_{rt} - S)/t**2`` equals ``{s >= 0 : e^S(s t^2) < rt}`` joined
    with the mirror image of ``{s >= 0 : e^S(1 - s t^2) < rt}``.
    """
    r = _check_r(r_grid)
    times = np.asarray(eS.times, dtype=float)
    t0, t1 = times[0], times[-1]
    n = float(window_n)
    snaps = []
    for ri in r:
        U = sublevel_set(eS, ri * t).components
        right = _clip((U - t0) / (t * t), 0.0, n)
        left = _clip((U - t1) / (t * t), -n, 0.0)
        snaps.append(_window_set(right, left, n))
    return tuple(snaps)


def limit_frame(R, Rp, r_grid, window_n: int = WINDOW_N) -> LimitFrame:
    """``{s : Z_s < r}`` on ``(-n, n)`` with ``Z_s = R_s`` for ``s >= 0`` and ``Rp_{-s}`` otherwise."""
    r = _check_r(r_grid)
    n = float(window_n)
    for P in (R, Rp):
        if P.times[-1] < n:
            raise ParameterError("paths must cover the window")
    snaps = []
    for ri in r:
        right = _clip(sublevel_set(R, ri).components, 0.0, n)
        left = _clip(-sublevel_set(Rp, ri).components[::-1, ::-1], -n, 0.0)
        snaps.append(_window_set(right, left, n))
    return LimitFrame(int(window_n), r, tuple(snaps))


def statistics_HML(frame) -> np.ndarray:
    """Rows ``(H, M_leb, L_span)`` per ratio: the component at 0, total length, and span."""
    out = np.zeros((len(frame.snapshots), 3))
    for i, V in enumerate(frame.snapshots):
        c = component_containing(V, 0.0)
        out[i, 0] = 0.0 if c is None else c[1] - c[0]
        out[i, 1] = V.measure()
        out[i, 2] = V.span()
    return out


# --------------------------------------------------------------------------
# samplers for finite t and for the limit

def _reverse(kn: Bessel3Knots) -> Bessel3Knots:
    v = kn.times[-1]
    return Bessel3Knots(v - kn.times[::-1], kn.xyz[::-1].copy())


def _refine_both_ends(kn, levels, min_dt, rng, kappa=4.5):
    kn = refine_bes3_knots(kn, levels, min_dt, rng, kappa=kappa, first_passage=True)
    kn = refine_bes3_knots(_reverse(kn), levels, min_dt, rng, kappa=kappa, first_passage=True)
    return _reverse(kn)


def _excursion_knots_uniform_ends(t, window_n, fine, coarse):
    w = window_n * t * t
    dt = fine * t * t
    near = np.arange(0, int(np.ceil(w / dt)) + 1) * dt
    mid = np.linspace(near[-1], 1.0 - near[-1], coarse)[1:-1]
    far = 1.0 - near[::-1]
    return np.concatenate([near, mid, far])


def sample_extinction_frames(t: float, r_grid, n_frames: int, seed, window_n: int = WINDOW_N,
                             fine: float = 1e-3, min_fine: float = 1e-6, coarse: int = 2000):
    """Frames of normalized excursions with knots of size ``fine * t**2`` near the maximum.

    The excursion is drawn as ``X^S`` for an excursion ``X`` sampled as a
    Bessel(3) bridge, which has the law of ``e``. The maximum of ``X^S``
    sits where ``X`` is zero, so fine knots at the ends of ``X`` become fine
    knots around ``S``; exact 3-d bridge infill refines them near every
    level ``rt`` until the first passage, down to ``min_fine * t**2``.

    Returns ``(frames, n_rejected)``.
    """
    r = _check_r(r_grid)
    rng = as_seed(seed).generator()
    times = _excursion_knots_uniform_ends(t, window_n, fine, coarse)
    levels = r[r > 0] * t
    frames, rejected = [], 0
    while len(frames) < n_frames:
        kn = sample_bes3_knots(times, rng, bridge_to=1.0)
        kn = _refine_both_ends(kn, levels, min_fine * t * t, rng)
        f = extinction_frame(haas_transform(kn.path()), t, r, window_n)
        if f is None:
            rejected += 1
            continue
        frames.append(f)
    return frames, rejected


def sample_limit_frames(r_grid, n_frames: int, seed, window_n: int = WINDOW_N,
                        dt: float = 1e-3, min_dt: float = 1e-6):
    """Frames of the two-sided BES(3) limit, refined near each level up to its first passage."""
    r = _check_r(r_grid)
    rng = as_seed(seed).generator()
    times = np.arange(0, int(np.ceil(window_n / dt)) + 1) * dt
    levels = r[r > 0]
    out = []
    for _ in range(n_frames):
        sides = []
        for _side in range(2):
            kn = sample_bes3_knots(times, rng)
            kn = refine_bes3_knots(kn, levels, min_dt, rng, first_passage=True)
            sides.append(kn.path())
        out.append(limit_frame(sides[0], sides[1], r, window_n))
    return out


_GL_S, _GL_W = np.polynomial.legendre.leggauss(16)


def _ball_prob(mu, sig, level):
    """``P(|W| <= level)`` for ``W ~ N(m, sig**2 I_3)`` with ``|m| = mu``."""
    mu = np.maximum(mu, 1e-300)
    z = (level - mu) / sig
    w = (level + mu) / sig
    pdf = (np.exp(-0.5 * z * z) - np.exp(-0.5 * w * w)) / np.sqrt(2.0 * np.pi)
    return special.ndtr(z) - special.ndtr(-w) - (sig / mu) * pdf


def _segment_occupation(x0, x1, h, level):
    """Expected time below ``level`` of the 3-d Brownian bridge norm on each segment.

    ``x0`` and ``x1`` have shape (m, 3). The chord norm is convex, so it
    stays below the larger endpoint norm and above the smaller one minus
    the chord length; segments more than eight bridge deviations from the
    level contribute 0 or ``h`` outright. The rest integrate the ball
    probability of the bridge marginal by Gauss-Legendre.
    """
    r0 = np.linalg.norm(x0, axis=1)
    r1 = np.linalg.norm(x1, axis=1)
    pad = 4.0 * np.sqrt(h)
    hi = np.maximum(r0, r1)
    lo = np.minimum(r0, r1) - np.linalg.norm(x1 - x0, axis=1)
    out = np.where(hi < level, h, 0.0)
    idx = np.flatnonzero((hi > level - pad) & (lo < level + pad))
    if idx.size:
        u = 0.5 * (_GL_S + 1.0)
        m = x0[idx, None, :] + (x1 - x0)[idx, None, :] * u[None, :, None]
        sig = np.sqrt(h * u * (1.0 - u))
        pr = _ball_prob(np.linalg.norm(m, axis=2), sig[None, :], level)
        out[idx] = 0.5 * h * pr @ _GL_W
    return out


def _occupation_runs(level, top, start, rng, dt, n_steps):
    """Occupation below ``level`` of BES(3) runs from ``start`` (shape (m, 3)).

    Each run stops at its first knot at or above ``top``; the occupation is
    the conditional expectation given the knots, so the skeleton error
    enters only through its variance, which is of order ``dt**1.5``.
    Returns the occupations and the radii at the stopping knots.
    """
    pos = np.array(start, dtype=float)
    m = pos.shape[0]
    occ = np.zeros(m)
    xstop = np.zeros(m)
    live = np.arange(m)
    while live.size:
        k = live.size
        w = np.empty((k, n_steps + 1, 3))
        w[:, 0] = pos[live]
        w[:, 1:] = pos[live, None, :] + np.cumsum(
            rng.standard_normal((k, n_steps, 3)) * np.sqrt(dt), axis=1)
        nr = np.sqrt(np.einsum("ijk,ijk->ij", w, w))
        above = nr >= top
        hit = above.any(axis=1)
        stop = np.where(hit, above.argmax(axis=1), n_steps)
        seg = np.arange(n_steps)[None, :] < stop[:, None]
        ii, jj = np.nonzero(seg)
        contrib = _segment_occupation(w[ii, jj], w[ii, jj + 1], dt, level)
        occ[live] += np.bincount(ii, weights=contrib, minlength=k)
        xstop[live[hit]] = nr[hit, stop[hit]]
        pos[live[~hit]] = w[~hit, -1]
        live = live[~hit]
    return occ, xstop


def sample_limit_occupation(level: float, n: int, seed, dt: float = 1e-3, sides: int = 2, horizon: float = 0.5,
                            batch: int = 512) -> np.ndarray:
    """Total time ``Z`` spends below ``level`` over the whole line.

    Each side runs until it first reaches ``2*level``. From a point at
    radius ``x`` BES(3) returns to ``level`` with probability ``level/x``,
    after which it is restarted at radius ``level``; time above ``level``
    does not count, so the total is a finite sum of such runs. Within a
    run the time below ``level`` between knots is replaced by its exact
    conditional mean given the two knots.
    """
    if level <= 0 or dt <= 0:
        raise ParameterError("level and dt must be positive")
    rng = as_seed(seed).generator()
    n = int(n)
    out = np.zeros(n)
    h = dt * level * level
    n_steps = int(round(horizon / dt))
    for s0 in range(0, n, batch):
        b = min(batch, n - s0)
        idx = np.repeat(np.arange(b), sides)
        start = np.zeros((idx.size, 3))
        while idx.size:
            occ, x = _occupation_runs(level, 2.0 * level, start, rng, h, n_steps)
            np.add.at(out, s0 + idx, occ)
            back = rng.random(idx.size) < level / x
            idx = idx[back]
            start = np.zeros((idx.size, 3))
            start[:, 0] = level
    return out


# --------------------------------------------------------------------------
# fixed-time check

@dataclass(frozen=True)
class JeulinReport:
    v: float
    s_grid: np.ndarray
    n: int
    ks_front: np.ndarray
    p_front: np.ndarray
    ks_back: np.ndarray
    p_back: np.ndarray
    correlation: float
    corr_band: float
    alpha: float

    @property
    def passed(self) -> bool:
        return bool(np.all(self.p_front > self.alpha) and np.all(self.p_back > self.alpha)
                    and abs(self.correlation) < self.corr_band)

    def to_dict(self):
        return {
            "v": self.v, "s_grid": self.s_grid.tolist(), "n": self.n,
            "ks_front": self.ks_front.tolist(), "p_front": self.p_front.tolist(),
            "ks_back": self.ks_back.tolist(), "p_back": self.p_back.tolist(),
            "correlation": self.correlation, "corr_band": self.corr_band, "passed": self.passed,
        }


def jeulin_fixed_time_check(v: float, s_grid, N: int, seed, alpha: float = 1e-3) -> JeulinReport:
    """Front and back of an excursion of length ``v`` at fixed times against BES(3).

    The excursion is a 3-d Brownian bridge norm sampled exactly at ``s`` and
    ``v - s``. Each marginal is tested against the chi(3) law with scale
    ``sqrt(s)``; the correlation of the front and back values at the largest
    ``s`` should vanish.
    """
    from .harness.stats import ks_one_sample

    s = np.sort(np.atleast_1d(np.asarray(s_grid, dtype=float)))
    if not (s[0] > 0 and s[-1] <= v):
        raise ParameterError("s_grid must lie in (0, v]")
    knots = np.unique(np.concatenate([[0.0], s, v - s, [float(v)]]))
    rng = as_seed(seed).generator()
    dt = np.diff(knots)
    w = np.zeros((int(N), knots.size, 3))
    w[:, 1:] = np.cumsum(rng.standard_normal((int(N), knots.size - 1, 3)) * np.sqrt(dt)[None, :, None], axis=1)
    w -= (knots / v)[None, :, None] * w[:, -1:, :]
    norms = np.sqrt(np.einsum("ijk,ijk->ij", w, w))
    fi = np.searchsorted(knots, s)
    bi = np.searchsorted(knots, v - s)
    ksf, pf, ksb, pb = [], [], [], []
    for j, sj in enumerate(s):
        cdf = stats.chi(3, scale=np.sqrt(sj)).cdf
        a, b = ks_one_sample(norms[:, fi[j]], cdf)
        ksf.append(a), pf.append(b)
        a, b = ks_one_sample(norms[:, bi[j]], cdf)
        ksb.append(a), pb.append(b)
    x, y = norms[:, fi[-1]], norms[:, bi[-1]]
    corr = float(np.corrcoef(x, y)[0, 1]) if np.std(x) > 0 and np.std(y) > 0 else float("nan")
    return JeulinReport(float(v), s, int(N), np.array(ksf), np.array(pf), np.array(ksb), np.array(pb),
                        corr, 3.0 / np.sqrt(N), alpha)


# --------------------------------------------------------------------------
# iterated logarithm diagnostics

def lil_g(t):
    """``g(t) = log log(1/t) / (2 t**2)``."""
    t = np.asarray(t, dtype=float)
    return np.log(np.log(1.0 / t)) / (2.0 * t * t)


def hml_curves(e, t_grid) -> np.ndarray:
    """Rows ``(H_t, M_t, L_t)`` of ``F-hat_t`` for each ``t`` in ``t_grid``."""
    times = np.asarray(e.times, dtype=float)
    values = np.asarray(e.values, dtype=float)
    k = int(np.argmax(values))
    M, S = values[k], times[k]
    out = np.zeros((len(t_grid), 3))
    for i, t in enumerate(t_grid):
        V = level_set(e, M - t)
        c = component_containing(V, S)
        out[i] = (0.0 if c is None else c[1] - c[0], V.measure(), V.span())
    return out


@dataclass(frozen=True)
class LilCurves:
    t_grid: np.ndarray
    scaled: np.ndarray = field(repr=False)          # (paths, len(t), 3): g*H, g*M, g*L
    running_min: np.ndarray = field(repr=False)     # running minima along decreasing t
    quantiles: dict = field(repr=False)

    def median_at_finest(self) -> np.ndarray:
        return np.median(self.running_min[:, -1, :], axis=0)


def _running_stats(t_grid, scaled):
    rm = np.minimum.accumulate(scaled, axis=1)
    qs = {q: np.quantile(rm, q, axis=0) for q in (0.1, 0.5, 0.9)}
    return LilCurves(np.asarray(t_grid, dtype=float), scaled, rm, qs)


def lil_diagnostic(paths, t_grid) -> LilCurves:
    """Running minima of ``g(t) H_t``, ``g(t) M_t`` and ``g(t) L_t`` along decreasing ``t``."""
    t = np.asarray(t_grid, dtype=float)
    if np.any(np.diff(t) >= 0) or np.any(t <= 0) or np.any(t >= 1):
        raise ParameterError("t_grid must decrease inside (0, 1)")
    if np.log(np.log(1.0 / t[-1])) < 1.0:
        warnings.warn("t_grid stops before log log(1/t) exceeds 1; the iterated-logarithm regime is not visible",
                      RuntimeWarning, stacklevel=2)
    g = lil_g(t)
    scaled = np.stack([hml_curves(e, t) * g[:, None] for e in paths])
    return _running_stats(t, scaled)


def sample_lil_excursions(n_paths: int, t_grid, seed, rel_fine: float = 1e-3, rel_min: float = 1e-5,
                          n_geom: int = 400):
    """Excursions with geometric knots around the maximum, refined near every ``M - t``.

    Built as in :func:`sample_extinction_frames` from a Bessel(3) bridge
    with geometrically spaced knots at both ends.
    """
    t = np.asarray(t_grid, dtype=float)
    rng = as_seed(seed).generator()
    g = np.geomspace(rel_fine * t.min() ** 2, 0.25, n_geom)
    mid = np.linspace(0.25, 0.75, 200)[1:-1]
    times = np.concatenate([[0.0], g, mid, 1.0 - g[::-1], [1.0]])
    out = []
    for _ in range(int(n_paths)):
        kn = sample_bes3_knots(times, rng, bridge_to=1.0)
        kn = refine_bes3_knots(kn, t, rel_min * t * t, rng)
        out.append(haas_transform(kn.path()))
    return out


def subordinator_lil(n_paths: int, k_min: int, k_max: int, seed) -> LilCurves:
    """``g(t) L_t`` for ``L`` the sum of two independent BES(3) last-exit processes.

    ``(L_t)`` is a stable subordinator with Laplace exponent ``2 sqrt(2q)``,
    sampled exactly at ``t_k = 2**-k`` from independent increments.
    """
    if not 1 <= k_min < k_max:
        raise ParameterError("need 1 <= k_min < k_max")
    rng = as_seed(seed).generator()
    k = np.arange(k_min, k_max + 1)
    t = 2.0 ** -k.astype(float)
    widths = np.append(t[:-1] - t[1:], t[-1])
    inc = _half_stable_draws(widths[None, :], rng, (int(n_paths), widths.size))
    L = np.cumsum(inc[:, ::-1], axis=1)[:, ::-1]
    scaled = np.zeros((int(n_paths), k.size, 3))
    scaled[:, :, 2] = L * lil_g(t)[None, :]
    scaled[:, :, :2] = np.nan
    curves = _running_stats(t, scaled)
    return curves
