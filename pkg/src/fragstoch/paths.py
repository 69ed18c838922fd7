"""Seeded samplers for the continuous-path ingredients.

Every sampler is a pure function of its parameters and a :class:`Seed`.
Paths live on explicit time grids and are read by linear interpolation
between knots.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError, UnsupportedParameterError

__all__ = [
    "Seed",
    "as_seed",
    "GridPath",
    "KnotPath",
    "sample_brownian_bridge",
    "sample_brownian_bridges",
    "sample_normalized_excursion",
    "sample_normalized_excursions",
    "vervaat",
    "sample_bes3",
    "sample_two_sided_bes3",
    "sample_half_stable_increment",
    "sample_half_stable_increments",
    "Bessel3Knots",
    "sample_bes3_knots",
    "refine_bes3_knots",
]


@dataclass(frozen=True)
class Seed:
    """Deterministic RNG handle.

    ``(master, stream)`` maps to ``PCG64(SeedSequence(entropy=master,
    spawn_key=(stream, *sub)))``. SeedSequence hashes the entropy and the
    spawn key separately, so distinct pairs give distinct, independent
    states; the same pair always gives the same bits.
    """

    master: int
    stream: int = 0

    def __post_init__(self):
        for name in ("master", "stream"):
            v = getattr(self, name)
            if not (0 <= int(v) < 2**64):
                raise ParameterError(f"{name} must be a 64-bit unsigned integer, got {v}")

    def generator(self, *sub: int) -> np.random.Generator:
        ss = np.random.SeedSequence(entropy=int(self.master), spawn_key=(int(self.stream), *map(int, sub)))
        return np.random.Generator(np.random.PCG64(ss))

    def child(self, k: int) -> "Seed":
        """A seed on a different stream, derived by mixing ``k`` into the stream id."""
        ss = np.random.SeedSequence(entropy=int(self.master), spawn_key=(int(self.stream), int(k)))
        return Seed(self.master, int(ss.generate_state(1, dtype=np.uint64)[0]))


def as_seed(seed) -> Seed:
    if isinstance(seed, Seed):
        return seed
    if isinstance(seed, (tuple, list)) and len(seed) == 2:
        return Seed(int(seed[0]), int(seed[1]))
    if isinstance(seed, (int, np.integer)):
        return Seed(int(seed), 0)
    raise ParameterError(f"cannot interpret {seed!r} as a Seed")


@dataclass(frozen=True)
class GridPath:
    """Real path on the uniform grid ``t0 + k*dt``."""

    t0: float
    dt: float
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or v.size == 0:
            raise ParameterError("values must be a nonempty 1-d sequence")
        if not self.dt > 0:
            raise ParameterError("dt must be positive")
        object.__setattr__(self, "values", v)

    def __len__(self):
        return self.values.size

    @property
    def times(self) -> np.ndarray:
        # t0 + k*dt per knot, never a running sum
        return self.t0 + np.arange(self.values.size) * self.dt

    @property
    def duration(self) -> float:
        return (self.values.size - 1) * self.dt

    @property
    def t_end(self) -> float:
        return self.t0 + (self.values.size - 1) * self.dt

    def __call__(self, s):
        return np.interp(s, self.times, self.values)


@dataclass(frozen=True)
class KnotPath:
    """Piecewise-linear path on an arbitrary increasing knot sequence."""

    times: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if t.shape != v.shape or t.ndim != 1 or t.size == 0:
            raise ParameterError("times and values must be matching nonempty 1-d arrays")
        if t.size > 1 and not np.all(np.diff(t) > 0):
            raise ParameterError("knot times must be strictly increasing")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    def __len__(self):
        return self.values.size

    @property
    def t0(self) -> float:
        return float(self.times[0])

    @property
    def t_end(self) -> float:
        return float(self.times[-1])

    @property
    def duration(self) -> float:
        return self.t_end - self.t0

    def __call__(self, s):
        return np.interp(s, self.times, self.values)


def _check_knots(n_steps, minimum):
    if int(n_steps) != n_steps or n_steps < minimum:
        raise ParameterError(f"n_steps must be an integer >= {minimum}, got {n_steps}")
    return int(n_steps)


# --------------------------------------------------------------------------
# Brownian bridge and excursion

def sample_brownian_bridges(n_steps: int, n_paths: int, length: float, seed) -> np.ndarray:
    """Array ``(n_paths, n_steps)`` of Brownian bridges 0 -> 0 on ``[0, length]``.

    ``n_steps`` counts grid knots, endpoints included.
    """
    n = _check_knots(n_steps, 2)
    if not length > 0:
        raise ParameterError("length must be positive")
    rng = as_seed(seed).generator()
    out = np.zeros((int(n_paths), n))
    if n == 2:
        return out
    dt = length / (n - 1)
    w = np.cumsum(rng.standard_normal((int(n_paths), n - 1)) * np.sqrt(dt), axis=1)
    frac = np.arange(1, n) / (n - 1)
    out[:, 1:] = w - frac * w[:, -1:]
    out[:, -1] = 0.0
    return out


def sample_brownian_bridge(n_steps: int, length: float, seed) -> GridPath:
    """Brownian bridge from 0 to 0 over ``[0, length]``; endpoints are exactly 0."""
    v = sample_brownian_bridges(n_steps, 1, length, seed)[0]
    return GridPath(0.0, length / (_check_knots(n_steps, 2) - 1), v)


def vervaat(bridges: np.ndarray) -> np.ndarray:
    """Cyclic shift of each bridge row at its (first) argmin.

    The last knot duplicates the first, so the cycle has ``n - 1`` points.
    """
    b = np.atleast_2d(bridges)
    m = b.shape[1] - 1
    core = b[:, :m]
    k = np.argmin(core, axis=1)
    idx = (k[:, None] + np.arange(m)[None, :]) % m
    shifted = np.take_along_axis(core, idx, axis=1) - core[np.arange(core.shape[0]), k][:, None]
    out = np.empty_like(b)
    out[:, :m] = shifted
    out[:, 0] = 0.0
    out[:, m] = 0.0
    return out


def sample_normalized_excursions(n_steps: int, n_paths: int, seed) -> np.ndarray:
    """Array ``(n_paths, n_steps)`` of normalized excursions on ``[0, 1]``.

    Vervaat transform of a Gaussian random-walk bridge; by the cyclic lemma
    the result has exactly the law of the grid bridge conditioned to be
    positive at every interior knot.
    """
    n = _check_knots(n_steps, 3)
    return vervaat(sample_brownian_bridges(n, n_paths, 1.0, seed))


def sample_normalized_excursion(n_steps: int, seed) -> GridPath:
    n = _check_knots(n_steps, 3)
    return GridPath(0.0, 1.0 / (n - 1), sample_normalized_excursions(n, 1, seed)[0])


# --------------------------------------------------------------------------
# Bessel(3)

def _bes3_norms(n, n_paths, horizon, rng):
    dt = horizon / (n - 1)
    z = rng.standard_normal((int(n_paths), n - 1, 3)) * np.sqrt(dt)
    w = np.cumsum(z, axis=1)
    out = np.zeros((int(n_paths), n))
    out[:, 1:] = np.sqrt(np.einsum("ijk,ijk->ij", w, w))
    return out


def sample_bes3(n_steps: int, horizon: float, seed, n_paths: int | None = None):
    """BES(3) from 0 as the norm of a 3-d Brownian motion.

    Returns a :class:`GridPath`, or an ``(n_paths, n_steps)`` array when
    ``n_paths`` is given.
    """
    n = _check_knots(n_steps, 2)
    if not horizon > 0:
        raise ParameterError("horizon must be positive")
    rng = as_seed(seed).generator()
    if n_paths is None:
        return GridPath(0.0, horizon / (n - 1), _bes3_norms(n, 1, horizon, rng)[0])
    return _bes3_norms(n, n_paths, horizon, rng)


def sample_two_sided_bes3(n_steps_per_side: int, horizon: float, seed, n_paths: int | None = None):
    """Two independent BES(3) paths (R, R'), each on its own RNG substream."""
    n = _check_knots(n_steps_per_side, 2)
    if not horizon > 0:
        raise ParameterError("horizon must be positive")
    s = as_seed(seed)
    m = 1 if n_paths is None else n_paths
    right = _bes3_norms(n, m, horizon, s.generator(0))
    left = _bes3_norms(n, m, horizon, s.generator(1))
    if n_paths is None:
        dt = horizon / (n - 1)
        return GridPath(0.0, dt, right[0]), GridPath(0.0, dt, left[0])
    return right, left


# --------------------------------------------------------------------------
# 1/2-stable subordinator with Laplace exponent q -> 2*sqrt(2q)

_HALF_STABLE_C = 2.0 * np.sqrt(2.0)


def _require_brownian_params(params):
    beta, c = params.beta, params.C
    if not (np.isclose(beta, 0.5, rtol=0, atol=1e-15) and np.isclose(c, _HALF_STABLE_C, rtol=1e-15, atol=0)):
        raise UnsupportedParameterError(
            "first-passage sampling needs beta=1/2, C=2*sqrt(2); use stable_pd for other parameters")


def _half_stable_draws(t, rng, size):
    # first passage of a Brownian motion above 2t is 4t^2/N^2
    z = rng.standard_normal(size)
    return 4.0 * np.asarray(t) ** 2 / (z * z)


def sample_half_stable_increments(t: float, params, seed, size: int) -> np.ndarray:
    """``size`` draws of T_t, the first passage of a Brownian motion above 2t."""
    _require_brownian_params(params)
    if not t > 0:
        raise ParameterError("t must be positive")
    return _half_stable_draws(t, as_seed(seed).generator(), int(size))


def sample_half_stable_increment(t: float, params, seed) -> float:
    return float(sample_half_stable_increments(t, params, seed, 1)[0])


# --------------------------------------------------------------------------
# Knot-based BES(3) with exact Brownian-bridge infill

@dataclass
class Bessel3Knots:
    """3-d Brownian motion (or bridge) sampled at explicit knots.

    Keeping the three coordinates allows exact midpoint infill: given
    neighbouring knots, the path in between is a 3-d Brownian bridge no
    matter how the outer process was pinned.
    """

    times: np.ndarray
    xyz: np.ndarray

    @property
    def norms(self) -> np.ndarray:
        return np.sqrt(np.einsum("ij,ij->i", self.xyz, self.xyz))

    def path(self) -> KnotPath:
        return KnotPath(self.times, self.norms)


def sample_bes3_knots(times, rng: np.random.Generator, bridge_to: float | None = None,
                      start=None) -> Bessel3Knots:
    """3-d Brownian motion at ``times`` (first entry must be 0).

    The motion starts at the origin, or at the point ``start``. With
    ``bridge_to = v`` it is pinned back to the origin at time ``v``
    (``times[-1] == v`` required), so the norm is a Bessel(3) bridge, i.e. a
    Brownian excursion of length ``v``.
    """
    t = np.asarray(times, dtype=float)
    if t[0] != 0.0 or np.any(np.diff(t) <= 0):
        raise ParameterError("times must start at 0 and increase strictly")
    dt = np.diff(t)
    w = np.zeros((t.size, 3))
    w[1:] = np.cumsum(rng.standard_normal((t.size - 1, 3)) * np.sqrt(dt)[:, None], axis=0)
    if bridge_to is not None:
        if t[-1] != bridge_to:
            raise ParameterError("bridge knots must end at the pinning time")
        w -= (t / bridge_to)[:, None] * w[-1]
        w[-1] = 0.0
    if start is not None:
        w += np.asarray(start, dtype=float).reshape(1, 3)
    return Bessel3Knots(t, w)


def refine_bes3_knots(path: Bessel3Knots, levels, min_dt: float, rng: np.random.Generator,
                      kappa: float = 4.5, first_passage: bool = False, max_rounds: int = 60) -> Bessel3Knots:
    """Bisect segments whose norm could come within reach of any of ``levels``.

    ``min_dt`` is a scalar or one value per level. A segment of length
    ``h`` is refined while ``h > min_dt`` and some level
    lies in ``[min - kappa*sqrt(h), max + kappa*sqrt(h)]`` of its endpoint
    norms (the chance of a 3-d bridge excursion past that band is below
    ``exp(-2*kappa**2)``). With ``first_passage`` only segments up to the
    first linear crossing above each level are considered.
    """
    levels = np.atleast_1d(np.asarray(levels, dtype=float))
    floors = np.broadcast_to(np.asarray(min_dt, dtype=float), levels.shape)
    t, x = path.times, path.xyz
    for _ in range(max_rounds):
        r = np.sqrt(np.einsum("ij,ij->i", x, x))
        h = np.diff(t)
        band = kappa * np.sqrt(h)
        lo = np.minimum(r[:-1], r[1:]) - band
        hi = np.maximum(r[:-1], r[1:]) + band
        near = np.zeros(h.size, dtype=bool)
        for lev, floor in zip(levels, floors):
            hit = (lo < lev) & (lev < hi) & (h > floor)
            if first_passage:
                above = np.flatnonzero(r > lev)
                stop = above[0] if above.size else h.size
                hit[stop:] = False
            near |= hit
        idx = np.flatnonzero(near)
        if idx.size == 0:
            break
        tm = 0.5 * (t[idx] + t[idx + 1])
        xm = 0.5 * (x[idx] + x[idx + 1]) + rng.standard_normal((idx.size, 3)) * np.sqrt(h[idx] / 4.0)[:, None]
        t = np.insert(t, idx + 1, tm)
        x = np.insert(x, idx + 1, xm, axis=0)
    return Bessel3Knots(t, x)
