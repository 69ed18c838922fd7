"""Open subsets of an interval or of the line.

An :class:`OpenSet` is a sorted list of disjoint open intervals. Level sets
of piecewise-linear paths, the sup-norm metric on distance-to-complement
functions, restriction to windows and ranked component lengths live here.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, ParameterError

__all__ = [
    "MIN_COMPONENT",
    "OpenSet",
    "RankedMasses",
    "crossing",
    "level_set",
    "sublevel_set",
    "nonzero_set",
    "hausdorff_distance",
    "line_distance",
    "line_weight",
    "component_containing",
    "ranked_lengths",
    "restrict",
]

MIN_COMPONENT = 1e-15
LINE = "line"


@dataclass(frozen=True)
class RankedMasses:
    """Nonincreasing sequence of nonnegative masses."""

    masses: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = np.asarray(self.masses, dtype=float).ravel()
        if np.any(m < 0) or np.any(np.diff(m) > 0):
            raise ParameterError("masses must be nonnegative and nonincreasing")
        object.__setattr__(self, "masses", m)

    @classmethod
    def from_unsorted(cls, values) -> "RankedMasses":
        v = np.asarray(values, dtype=float).ravel()
        return cls(-np.sort(-v))

    def __len__(self):
        return self.masses.size

    def __getitem__(self, k):
        return self.masses[k]

    def __iter__(self):
        return iter(self.masses)

    @property
    def total(self) -> float:
        return float(self.masses.sum())

    def in_simplex(self, eps: float = 1e-12) -> bool:
        """Membership in S-down: positive entries summing to at most 1."""
        return bool(np.all(self.masses > 0) and self.total <= 1 + eps)

    def normalized(self) -> "RankedMasses":
        return RankedMasses(self.masses / self.total)


@dataclass(frozen=True)
class OpenSet:
    """Finite union of disjoint open intervals inside ``domain``.

    ``domain`` is a closed interval ``(a, b)`` or the string ``"line"``.
    """

    domain: tuple | str
    components: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.asarray(self.components, dtype=float).reshape(-1, 2)
        if c.size:
            keep = (c[:, 1] - c[:, 0]) > MIN_COMPONENT
            c = c[keep]
        if c.size:
            if np.any(c[:, 1] <= c[:, 0]):
                raise ParameterError("components must be nonempty")
            if np.any(c[1:, 0] < c[:-1, 1]):
                raise ParameterError("components must be sorted and disjoint")
        dom = self.domain
        if dom != LINE:
            a, b = float(dom[0]), float(dom[1])
            if not a < b:
                raise ParameterError("domain must be a nondegenerate interval")
            if c.size and (c[0, 0] < a or c[-1, 1] > b):
                raise ParameterError("components must lie inside the domain")
            dom = (a, b)
        object.__setattr__(self, "domain", dom)
        object.__setattr__(self, "components", c)

    @classmethod
    def empty(cls, domain=(0.0, 1.0)) -> "OpenSet":
        return cls(domain, np.empty((0, 2)))

    @property
    def lefts(self) -> np.ndarray:
        return self.components[:, 0]

    @property
    def rights(self) -> np.ndarray:
        return self.components[:, 1]

    @property
    def lengths(self) -> np.ndarray:
        return self.components[:, 1] - self.components[:, 0]

    @property
    def bounded(self) -> bool:
        return self.domain != LINE

    def __len__(self):
        return self.components.shape[0]

    def __bool__(self):
        return len(self) > 0

    def __contains__(self, x) -> bool:
        return component_containing(self, x) is not None

    def measure(self) -> float:
        return float(self.lengths.sum())

    def span(self) -> float:
        """Length of the smallest closed interval containing the set."""
        return float(self.components[-1, 1] - self.components[0, 0]) if len(self) else 0.0

    def contains_set(self, other: "OpenSet", tol: float = 0.0) -> bool:
        """True when every component of ``other`` sits inside a component of ``self``."""
        if not len(other):
            return True
        if not len(self):
            return False
        mid = 0.5 * (other.lefts + other.rights)
        i = np.searchsorted(self.lefts, mid, side="right") - 1
        if np.any(i < 0):
            return False
        return bool(np.all(self.lefts[i] <= other.lefts + tol) and np.all(other.rights <= self.rights[i] + tol))

    def affine(self, shift: float, scale: float, domain=LINE) -> "OpenSet":
        """Image under ``x -> (x - shift) * scale`` with ``scale > 0``."""
        return OpenSet(domain, (self.components - shift) * scale)

    def reflect(self) -> "OpenSet":
        dom = self.domain if self.domain == LINE else (-self.domain[1], -self.domain[0])
        return OpenSet(dom, -self.components[::-1, ::-1])

    def union(self, other: "OpenSet") -> "OpenSet":
        """Union of two sets with disjoint components (touching ends allowed)."""
        if self.domain != other.domain:
            raise DomainError("union of sets on different domains")
        c = np.concatenate([self.components, other.components])
        c = c[np.argsort(c[:, 0], kind="stable")]
        return OpenSet(self.domain, c)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    def to_dict(self) -> dict:
        dom = self.domain if self.domain == LINE else list(self.domain)
        return {"domain": dom, "components": self.components.tolist()}

    @classmethod
    def from_dict(cls, d) -> "OpenSet":
        dom = d["domain"]
        return cls(dom if dom == LINE else tuple(dom), np.asarray(d["components"], dtype=float).reshape(-1, 2))

    @classmethod
    def from_json(cls, s: str) -> "OpenSet":
        return cls.from_dict(json.loads(s))


def crossing(times, values, i, level):
    """Time in knot segment ``[i, i+1]`` where the interpolant equals ``level``.

    Every level crossing in the package goes through this one formula so that
    sets computed by different routes agree bit for bit.
    """
    v0 = values[i]
    t0 = times[i]
    return t0 + (level - v0) / (values[i + 1] - v0) * (times[i + 1] - t0)


def _runs(mask):
    m = mask.astype(np.int8)
    d = np.diff(m)
    starts = np.flatnonzero(d == 1) + 1
    ends = np.flatnonzero(d == -1)
    if m[0]:
        starts = np.concatenate([[0], starts])
    if m[-1]:
        ends = np.concatenate([ends, [m.size - 1]])
    return starts, ends


def _path_arrays(path):
    return np.asarray(path.times, dtype=float), np.asarray(path.values, dtype=float)


def level_set(path, level: float, domain=None) -> OpenSet:
    """Maximal open intervals where the interpolated path is strictly above ``level``."""
    times, values = _path_arrays(path)
    dom = (times[0], times[-1]) if domain is None else domain
    above = values > level
    if not above.any():
        return OpenSet.empty(dom)
    starts, ends = _runs(above)
    left = np.empty(starts.size)
    inner = starts > 0
    left[~inner] = times[0]
    left[inner] = crossing(times, values, starts[inner] - 1, level)
    right = np.empty(ends.size)
    inner = ends < values.size - 1
    right[~inner] = times[-1]
    right[inner] = crossing(times, values, ends[inner], level)
    return OpenSet(dom, np.column_stack([left, right]))


def sublevel_set(path, level: float, domain=None) -> OpenSet:
    """Maximal open intervals where the interpolated path is strictly below ``level``."""
    times, values = _path_arrays(path)
    flipped = type("_P", (), {"times": times, "values": -values})
    return level_set(flipped, -level, domain=domain)


def nonzero_set(path, domain=None) -> OpenSet:
    """Open set where the interpolated path is nonzero (its excursion intervals)."""
    up = level_set(path, 0.0, domain)
    down = sublevel_set(path, 0.0, domain)
    return up.union(down)


def component_containing(V: OpenSet, u: float):
    """The component ``(l, r)`` of ``V`` with ``l < u < r``, or ``None``."""
    if not len(V):
        return None
    i = int(np.searchsorted(V.lefts, u, side="right")) - 1
    if i < 0:
        return None
    l, r = V.components[i]
    if l < u < r:
        return float(l), float(r)
    return None


def ranked_lengths(V: OpenSet) -> RankedMasses:
    if not V.bounded:
        raise DomainError("ranked_lengths needs a bounded domain")
    return RankedMasses.from_unsorted(V.lengths)


def _distance_to_complement(V: OpenSet, x: np.ndarray) -> np.ndarray:
    if not len(V):
        return np.zeros_like(x)
    i = np.searchsorted(V.lefts, x, side="right") - 1
    ii = np.clip(i, 0, None)
    l, r = V.lefts[ii], V.rights[ii]
    inside = (i >= 0) & (x > l) & (x < r)
    return np.where(inside, np.minimum(x - l, r - x), 0.0)


def hausdorff_distance(V1: OpenSet, V2: OpenSet) -> float:
    """``sup |d(x, V1^c) - d(x, V2^c)|`` over the common bounded domain.

    Both distance functions are piecewise linear with kinks at component
    ends and midpoints, so the supremum is attained on those points.
    """
    if V1.domain != V2.domain:
        raise DomainError(f"domains differ: {V1.domain} vs {V2.domain}")
    if not V1.bounded:
        raise DomainError("hausdorff_distance needs a bounded domain; use line_distance")
    pts = [np.asarray(V1.domain, dtype=float)]
    for V in (V1, V2):
        if len(V):
            pts += [V.lefts, V.rights, 0.5 * (V.lefts + V.rights)]
    x = np.concatenate(pts)
    return float(np.max(np.abs(_distance_to_complement(V1, x) - _distance_to_complement(V2, x))))


def restrict(V: OpenSet, window) -> OpenSet:
    """``V`` intersected with the open window ``(w0, w1)``; the window becomes the domain."""
    w0, w1 = float(window[0]), float(window[1])
    if not w0 < w1:
        raise ParameterError("window must be a nondegenerate interval")
    if not len(V):
        return OpenSet.empty((w0, w1))
    c = V.components
    c = c[(c[:, 1] > w0) & (c[:, 0] < w1)]
    c = np.column_stack([np.maximum(c[:, 0], w0), np.minimum(c[:, 1], w1)])
    return OpenSet((w0, w1), c)


def line_weight(n: int) -> float:
    return 2.0 ** (-abs(n)) / 4.0


def line_distance(V1: OpenSet, V2: OpenSet, n_max: int) -> float:
    """Truncated window sum ``sum_n 2**-|n| / 4 * d_(n, n+1)`` for ``-n_max <= n < n_max``."""
    if n_max < 1:
        raise ParameterError("n_max must be at least 1")
    total = 0.0
    for n in range(-n_max, n_max):
        w = (float(n), float(n + 1))
        total += line_weight(n) * hausdorff_distance(restrict(V1, w), restrict(V2, w))
    return total
