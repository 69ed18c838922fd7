"""Height fragmentation of an excursion and its path transformations.

The fragmentation of a path ``e`` is ``F_t = {s : e_s > t}``. Paths are
read by linear interpolation between knots, and every crossing point is
computed with :func:`fragstoch.opensets.crossing`.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError, StateError
from .opensets import (
    OpenSet,
    RankedMasses,
    component_containing,
    crossing,
    level_set,
)
from .paths import GridPath, KnotPath, as_seed

__all__ = [
    "TaggedFragmentPath",
    "tagged_fragment",
    "ranked_jumps",
    "size_biased_first_pick",
    "bertoin_pitman",
    "bertoin_pitman_excursions",
    "haas_transform",
    "ObliterationState",
    "initial_obliteration_state",
    "obliterate",
    "obliteration_chain",
    "poisson_obliteration",
    "eval_binary_dislocation_density",
]


def _node_safe(times, u):
    """Index ``j`` with ``times[j] < u < times[j+1]``; knots are dodged by half a step."""
    n = times.size
    if not (times[0] < u < times[-1]):
        raise ParameterError(f"u={u} must lie strictly inside ({times[0]}, {times[-1]})")
    j = int(np.searchsorted(times, u, side="right")) - 1
    if times[j] == u:
        # shift toward the interior of the domain
        if u <= 0.5 * (times[0] + times[-1]):
            u = 0.5 * (times[j] + times[j + 1])
        else:
            j -= 1
            u = 0.5 * (times[j] + times[j + 1])
    j = min(max(j, 0), n - 2)
    return j, u


def _value_at(times, values, j, u):
    return values[j] + (u - times[j]) / (times[j + 1] - times[j]) * (values[j + 1] - values[j])


def _left_records(values, j, zeta):
    """Vertices ``<= j`` that are strict running minima when scanning left from ``u``."""
    seq = values[j::-1]
    prev = np.minimum.accumulate(np.concatenate([[zeta], seq]))[:-1]
    k = np.flatnonzero(seq < prev)
    return j - k


def _right_records(values, j, zeta):
    seq = values[j + 1:]
    prev = np.minimum.accumulate(np.concatenate([[zeta], seq]))[:-1]
    return j + 1 + np.flatnonzero(seq < prev)


# --------------------------------------------------------------------------
# tagged fragment

@dataclass(frozen=True)
class TaggedFragmentPath:
    """Mass of the fragment containing a tagged point, as a function of level.

    ``levels``/``masses`` are right-continuous samples of the mass; jumps
    carry the level, the removed interval and its length. Drops smaller than
    ``jump_threshold`` and the grid-induced continuous decrease are pooled in
    ``unresolved`` so that ``sum(jump_sizes) + unresolved == start_mass``.
    """

    start_mass: float
    u: float
    death_level: float
    levels: np.ndarray = field(repr=False)
    masses: np.ndarray = field(repr=False)
    jump_levels: np.ndarray = field(repr=False)
    jump_sizes: np.ndarray = field(repr=False)
    jump_intervals: np.ndarray = field(repr=False)
    unresolved: float = 0.0
    n_merged: int = 0
    jump_threshold: float = 0.0
    dead: bool = True

    def mass_at(self, level):
        i = np.searchsorted(self.levels, level, side="right") - 1
        return np.where(np.asarray(level) >= self.death_level, 0.0, self.masses[np.clip(i, 0, None)])

    def to_dict(self) -> dict:
        return {
            "start_mass": self.start_mass,
            "u": self.u,
            "death_level": self.death_level,
            "levels": self.levels.tolist(),
            "masses": self.masses.tolist(),
            "jumps": [[float(a), float(b)] for a, b in zip(self.jump_levels, self.jump_sizes)],
            "unresolved": self.unresolved,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def _end_positions(times, values, recs, rec_vals, u, t, side):
    """Endpoint of the component containing ``u`` at each level in ``t``."""
    # rec_vals strictly decreasing; level t in [rec_vals[m+1], rec_vals[m]) uses record m+1
    m1 = np.searchsorted(-rec_vals, -t, side="left")
    seg = recs[np.clip(m1 - 1, 0, recs.size - 1)]
    if side == "left":
        return crossing(times, values, seg, t)
    return crossing(times, values, seg - 1, t)


def tagged_fragment(e, u: float, level_grid=None, jump_threshold: float | None = None) -> TaggedFragmentPath:
    """Tagged fragment of the height fragmentation of ``e`` at the point ``u``.

    Jumps happen exactly at the heights of the running minima of ``e`` seen
    from ``u``; each removes the interval between the previous crossing of
    that height and the minimum itself. ``level_grid`` adds extra levels
    (an int gives that many uniform levels on ``[0, e(u))``).
    """
    times = np.asarray(e.times, dtype=float)
    values = np.asarray(e.values, dtype=float)
    j, u = _node_safe(times, u)
    zeta = float(_value_at(times, values, j, u))
    dt = float(np.min(np.diff(times)))
    thr = 2.0 * dt if jump_threshold is None else float(jump_threshold)

    lrec = _left_records(values, j, zeta)
    rrec = _right_records(values, j, zeta)

    jl, js, ji = [], [], []
    # left side: pairs (c_m, c_{m+1}) with c_0 = u
    if lrec.size:
        near = np.concatenate([[-1], lrec[:-1]])  # -1 stands for u
        far = lrec
        lev = np.concatenate([[zeta], values[lrec[:-1]]])
        ok = np.where(near < 0, far < j, far + 1 < near)
        near, far, lev = near[ok], far[ok], lev[ok]
        a = crossing(times, values, far, lev)
        c = np.where(near < 0, u, times[np.clip(near, 0, None)])
        jl.append(lev), js.append(c - a), ji.append(np.column_stack([a, c]))
    if rrec.size:
        near = np.concatenate([[-1], rrec[:-1]])
        far = rrec
        lev = np.concatenate([[zeta], values[rrec[:-1]]])
        ok = np.where(near < 0, far > j + 1, far - 1 > near)
        near, far, lev = near[ok], far[ok], lev[ok]
        c = crossing(times, values, far - 1, lev)
        a = np.where(near < 0, u, times[np.clip(near, 0, None)])
        jl.append(lev), js.append(c - a), ji.append(np.column_stack([a, c]))

    jump_levels = np.concatenate(jl) if jl else np.empty(0)
    jump_sizes = np.concatenate(js) if js else np.empty(0)
    jump_int = np.concatenate(ji) if ji else np.empty((0, 2))
    order = np.lexsort((jump_int[:, 0], jump_levels))
    jump_levels, jump_sizes, jump_int = jump_levels[order], jump_sizes[order], jump_int[order]

    keep = jump_sizes >= thr
    start = float(times[-1] - times[0])
    resolved = jump_sizes[keep]

    # mass profile at jump levels (and extra levels), right-continuous
    lv = [np.array([0.0]), jump_levels[jump_levels < zeta]]
    if level_grid is not None:
        extra = np.linspace(0.0, zeta, int(level_grid), endpoint=False) if np.isscalar(level_grid) \
            else np.asarray(level_grid, dtype=float)
        lv.append(extra[(extra >= 0) & (extra < zeta)])
    levels = np.unique(np.concatenate(lv))
    lvals = np.concatenate([[zeta], values[lrec]])
    rvals = np.concatenate([[zeta], values[rrec]])
    left = _end_positions(times, values, lrec, lvals, u, levels, "left")
    right = _end_positions(times, values, rrec, rvals, u, levels, "right")
    masses = right - left
    levels = np.append(levels, zeta)
    masses = np.append(masses, 0.0)

    return TaggedFragmentPath(
        start_mass=start,
        u=float(u),
        death_level=zeta,
        levels=levels,
        masses=masses,
        jump_levels=jump_levels[keep],
        jump_sizes=resolved,
        jump_intervals=jump_int[keep],
        unresolved=float(start - resolved.sum()),
        n_merged=int((~keep).sum()),
        jump_threshold=thr,
    )


def ranked_jumps(tf: TaggedFragmentPath) -> RankedMasses:
    """Resolved jump sizes, normalized to sum to one, in decreasing order."""
    if not tf.dead:
        raise StateError("tagged fragment has not died yet")
    s = tf.jump_sizes
    if s.size == 0:
        raise StateError("no resolved jumps")
    return RankedMasses.from_unsorted(s / s.sum())


def size_biased_first_pick(masses, rng) -> float:
    """First element of a size-biased permutation of ``masses`` (normalized)."""
    m = np.asarray(getattr(masses, "masses", masses), dtype=float)
    p = m / m.sum()
    return float(p[min(np.searchsorted(np.cumsum(p), rng.random() * 1.0, side="right"), p.size - 1)])


# --------------------------------------------------------------------------
# Bertoin-Pitman

def _two_sided_min(values, j, zeta, lo=0, hi=None):
    """Vertex values of the running minimum toward ``u`` over vertices ``lo..hi``."""
    hi = values.size - 1 if hi is None else hi
    K = np.zeros_like(values)
    if j >= lo:
        K[lo:j + 1] = np.minimum.accumulate(np.concatenate([[zeta], values[j:lo - 1 if lo > 0 else None:-1]]))[1:][::-1]
    if j + 1 <= hi:
        K[j + 1:hi + 1] = np.minimum.accumulate(np.concatenate([[zeta], values[j + 1:hi + 1]]))[1:]
    return K


def bertoin_pitman(e, u: float):
    """``(b, K)`` with ``K`` the two-sided running minimum of ``e`` toward ``u``.

    Both are returned on the knots of ``e``; ``b = e - K >= 0`` vanishes at
    the ends and at every running-minimum knot.
    """
    times = np.asarray(e.times, dtype=float)
    values = np.asarray(e.values, dtype=float)
    j, u = _node_safe(times, u)
    zeta = _value_at(times, values, j, u)
    K = _two_sided_min(values, j, zeta)
    b = values - K
    if isinstance(e, GridPath):
        return GridPath(e.t0, e.dt, b), GridPath(e.t0, e.dt, K)
    return KnotPath(times, b), KnotPath(times, K)


def bertoin_pitman_excursions(e, u: float) -> OpenSet:
    """Exact positivity set of ``e - K`` for the interpolated path.

    Between knots ``K`` is the minimum of a linear piece and a constant, so
    ``e - K`` vanishes on ``[t_i, x]`` where ``x`` is the crossing of the
    level ``K(t_{i+1})`` whenever knot ``i`` is a running minimum and knot
    ``i+1`` is not; the excursions fill the gaps between such pieces.
    """
    times = np.asarray(e.times, dtype=float)
    values = np.asarray(e.values, dtype=float)
    j, u = _node_safe(times, u)
    zeta = _value_at(times, values, j, u)
    K = _two_sided_min(values, j, zeta)
    n = values.size
    comps = []

    # left of u: knot i is a record iff values[i] == K[i] and it is a strict new minimum
    Kn = np.append(K[1:j + 1], zeta)  # K just to the right of knot i, i <= j
    rec = values[:j + 1] < Kn
    rec_idx = np.flatnonzero(rec)
    starts = np.flatnonzero(rec & ~np.append(rec[1:], True))  # record i followed by non-record i+1
    if starts.size:
        a = crossing(times, values, starts, Kn[starts])
        nxt = np.searchsorted(rec_idx, starts, side="right")
        c = np.where(nxt < rec_idx.size, times[rec_idx[np.clip(nxt, 0, rec_idx.size - 1)]], u)
        comps.append(np.column_stack([a, c]))

    # right of u, mirrored
    Kp = np.concatenate([[zeta], K[j + 1:n - 1]])  # K just to the left of knot i, i >= j+1
    rec = values[j + 1:] < Kp
    rec_idx = np.flatnonzero(rec) + j + 1
    ends = np.flatnonzero(rec & ~np.concatenate([[True], rec[:-1]])) + j + 1
    if ends.size:
        c = crossing(times, values, ends - 1, Kp[ends - j - 1])
        prv = np.searchsorted(rec_idx, ends, side="left") - 1
        a = np.where(prv >= 0, times[rec_idx[np.clip(prv, 0, None)]], u)
        comps.append(np.column_stack([a, c]))

    c = np.concatenate(comps) if comps else np.empty((0, 2))
    c = c[c[:, 1] > c[:, 0]]
    c = c[np.argsort(c[:, 0], kind="stable")]
    return OpenSet((times[0], times[-1]), c)


# --------------------------------------------------------------------------
# Haas root change

def haas_transform(e):
    """``M - e((S + t) mod 1)`` with ``S`` the first knot of the maximum."""
    values = np.asarray(e.values, dtype=float)
    n = values.size
    s = int(np.argmax(values[:-1]))
    M = values[s]
    if isinstance(e, GridPath):
        core = values[:-1]
        out = np.empty(n)
        out[:-1] = M - np.roll(core, -s)
        out[0] = 0.0
        out[-1] = 0.0
        return GridPath(e.t0, e.dt, out)
    times = np.asarray(e.times, dtype=float)
    t0, t1 = times[0], times[-1]
    L = t1 - t0
    after_t = times[s:-1] - times[s]
    before_t = times[:s] - times[s] + L
    new_t = np.concatenate([after_t, before_t, [L]]) + t0
    new_v = M - np.concatenate([values[s:-1], values[:s], [values[s]]])
    new_v[0] = 0.0
    new_v[-1] = 0.0
    return KnotPath(new_t, new_v)


# --------------------------------------------------------------------------
# ancestral line obliteration

@dataclass(frozen=True)
class ObliterationState:
    b: GridPath
    V: OpenSet
    n: int = 0


def initial_obliteration_state(e) -> ObliterationState:
    return ObliterationState(e, level_set(e, 0.0), 0)


def obliterate(state: ObliterationState, u: float) -> ObliterationState:
    """Cut the ancestral line of ``u`` inside its component of ``V``."""
    b = state.b
    times = np.asarray(b.times, dtype=float)
    values = np.asarray(b.values, dtype=float)
    if not (times[0] < u < times[-1]):
        raise ParameterError(f"u={u} outside the domain")
    j, u = _node_safe(times, u)
    comp = component_containing(state.V, u)
    if comp is None:
        raise StateError(f"u={u} does not lie in the current positivity set")
    lo = int(np.searchsorted(times, comp[0], side="left"))
    hi = int(np.searchsorted(times, comp[1], side="right")) - 1
    z = _value_at(times, values, j, u)
    K = _two_sided_min(values, j, z, lo, hi)
    nb = values - K
    nb[nb < 0] = 0.0
    path = GridPath(b.t0, b.dt, nb) if isinstance(b, GridPath) else KnotPath(times, nb)
    return ObliterationState(path, level_set(path, 0.0), state.n + 1)


def obliteration_chain(e, n_cuts: int, seed):
    """States ``V_1..V_n`` with cut points uniform on the current positivity set."""
    rng = as_seed(seed).generator() if not isinstance(seed, np.random.Generator) else seed
    state = initial_obliteration_state(e)
    out = []
    for _ in range(int(n_cuts)):
        if not state.V:
            break
        while True:
            u = rng.random()
            if u in state.V:
                break
        state = obliterate(state, u)
        out.append(state)
    return out


def poisson_obliteration(e, t_grid, seed):
    """Fragmentation ``V_{N_t}`` driven by a rate-one Poisson clock."""
    rng = as_seed(seed).generator()
    t_grid = np.asarray(t_grid, dtype=float)
    horizon = float(t_grid.max()) if t_grid.size else 0.0
    arrivals = []
    t = rng.exponential()
    while t <= horizon:
        arrivals.append(t)
        t += rng.exponential()
    chain = obliteration_chain(e, len(arrivals), rng)
    states = [initial_obliteration_state(e).V] + [s.V for s in chain]
    counts = np.searchsorted(np.asarray(arrivals), t_grid, side="right")
    return [states[min(k, len(states) - 1)] for k in counts]


def eval_binary_dislocation_density(x):
    """Density of the largest piece under the Brownian dislocation measure."""
    x = np.asarray(x, dtype=float)
    inside = (x >= 0.5) & (x < 1.0)
    xs = np.where(inside, x, 0.75)
    out = np.where(inside, 2.0 / np.sqrt(2.0 * np.pi * xs**3 * (1.0 - xs) ** 3), 0.0)
    return out if out.ndim else float(out)
