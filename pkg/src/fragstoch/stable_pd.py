"""Stable subordinators, their h-transform and Poisson-Dirichlet laws.

``StableParams(beta, C)`` fixes the Laplace exponent ``q -> C q**beta`` of a
subordinator ``sigma``. The process ``-sigma`` conditioned to die at zero
(Doob transform by the potential density ``h``) is the tagged-fragment mass.
Two samplers build it: a bridge of ``sigma`` over a death time drawn from
``f_a(x)/h(x)``, and a Lamperti time change of the subordinator ``xi``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, special

from .errors import NumericError, ParameterError
from .opensets import RankedMasses
from .paths import as_seed

__all__ = [
    "StableParams",
    "PDParams",
    "ConditionedSubPath",
    "BROWNIAN",
    "stable_density",
    "stable_f1",
    "potential_h",
    "death_time_density",
    "death_time_cdf",
    "sample_death_times",
    "transition_density",
    "sample_stable",
    "sample_conditioned_bridge_method",
    "sample_conditioned_lamperti_method",
    "xi_levy_density",
    "xi_laplace_exponent",
    "xi_laplace_exponent_quad",
    "moments_of_death_time",
    "sample_pd",
    "sample_gem",
    "size_biased_permutation",
    "stick_residuals",
    "eval_ppy_joint_density",
    "sample_nu_minus",
]

SERIES_TOL = 1e-12


@dataclass(frozen=True)
class StableParams:
    """Laplace exponent ``q -> C q**beta`` with ``0 < beta < 1``."""

    beta: float
    C: float

    def __post_init__(self):
        if not 0.0 < self.beta < 1.0:
            raise ParameterError(f"beta must lie in (0, 1), got {self.beta}")
        if not self.C > 0:
            raise ParameterError(f"C must be positive, got {self.C}")

    @classmethod
    def brownian(cls) -> "StableParams":
        return cls(0.5, 2.0 * math.sqrt(2.0))

    @classmethod
    def stable_tree(cls, alpha: float) -> "StableParams":
        """Preset for the alpha-stable height fragmentation, ``1 < alpha < 2``."""
        if not 1.0 < alpha < 2.0:
            raise ParameterError("alpha must lie in (1, 2)")
        b = 1.0 - 1.0 / alpha
        return cls(b, math.gamma(1.0 - b) / math.gamma(2.0 - b))

    @property
    def is_brownian(self) -> bool:
        return self.beta == 0.5

    @property
    def delta(self) -> float:
        """Exponent of the exponential functional ``zeta = int exp(delta*xi)``.

        Under the Lamperti map ``T(int exp(beta*xi)) = exp(xi)`` the mass
        process is the dual with index ``-beta``, hence ``delta = -beta``.
        """
        return -self.beta

    def laplace_exponent(self, q):
        return self.C * np.asarray(q, dtype=float) ** self.beta

    def levy_density(self, x):
        """``rho(x) = beta C / (Gamma(1-beta) x**(1+beta))``."""
        x = np.asarray(x, dtype=float)
        return self.beta * self.C / math.gamma(1.0 - self.beta) * x ** (-1.0 - self.beta)

    def theta(self, x):
        """``Theta(x) = x rho(x)``."""
        x = np.asarray(x, dtype=float)
        return x * self.levy_density(x)

    def to_dict(self):
        return {"beta": self.beta, "C": self.C}


BROWNIAN = StableParams.brownian()


@dataclass(frozen=True)
class PDParams:
    beta: float
    theta: float

    def __post_init__(self):
        if not 0.0 <= self.beta < 1.0:
            raise ParameterError("beta must lie in [0, 1)")
        if not self.theta > -self.beta:
            raise ParameterError("theta must exceed -beta")

    def stick_law(self, k: int):
        """Beta parameters of the k-th stick, k >= 1."""
        return 1.0 - self.beta, self.theta + k * self.beta


# --------------------------------------------------------------------------
# densities

def _zolotarev_A(u, beta):
    u = np.asarray(u, dtype=float)
    p = np.pi * u
    return np.sin((1.0 - beta) * p) * np.sin(beta * p) ** (beta / (1.0 - beta)) / np.sin(p) ** (1.0 / (1.0 - beta))


def _A0(beta):
    return (1.0 - beta) * beta ** (beta / (1.0 - beta))


def _series_f1(x, beta, kmax=600):
    """Series for the density of ``S`` with ``E exp(-qS) = exp(-q**beta)``.

    Returns ``(value, ok)``; ``ok`` is False where the series cancels badly
    or has not met the term-ratio tolerance by ``kmax`` terms.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    k = np.arange(1, kmax + 1, dtype=float)
    lx = np.log(x)[:, None]
    logmag = special.gammaln(k * beta + 1) - special.gammaln(k + 1) - k * beta * lx
    sgn = np.where(k % 2 == 1, 1.0, -1.0) * np.sin(k * np.pi * beta)
    with np.errstate(over="ignore", invalid="ignore"):
        terms = np.exp(logmag) * sgn
        total = terms.sum(axis=1)
        # stopping rule: the tail beyond the last retained term is below tol * |sum|
        absmax = np.exp(logmag.max(axis=1))
        last = np.exp(logmag[:, -8:]).max(axis=1)
        ok = (absmax < 1e3 * np.abs(total)) & (last < SERIES_TOL * np.abs(total)) & np.isfinite(total)
        return total / (np.pi * x), ok


_GL_U, _GL_W = np.polynomial.legendre.leggauss(400)
_GL_U = 0.5 * (_GL_U + 1.0)
_GL_W = 0.5 * _GL_W


def _kanter_f1_fixed(x, beta):
    x = np.atleast_1d(np.asarray(x, dtype=float))
    A = _zolotarev_A(_GL_U, beta)
    z = x ** (-beta / (1.0 - beta))
    integ = (A[None, :] * np.exp(-A[None, :] * z[:, None])) @ _GL_W
    return beta / (1.0 - beta) * x ** (-1.0 / (1.0 - beta)) * integ


def _kanter_f1_quad(x, beta):
    z = x ** (-beta / (1.0 - beta))
    val, err = integrate.quad(lambda u: _zolotarev_A(u, beta) * math.exp(-_zolotarev_A(u, beta) * z),
                              0.0, 1.0, epsabs=0.0, epsrel=1e-13, limit=400)
    out = beta / (1.0 - beta) * x ** (-1.0 / (1.0 - beta)) * val
    return out, abs(err) <= 1e-10 * abs(val) + 1e-300


def stable_f1(x, beta: float, exact: bool = True):
    """Density of the stable law with Laplace transform ``exp(-q**beta)``.

    Alternating series where it converges cleanly, otherwise Kanter's
    integral representation (adaptive quadrature when ``exact``).
    """
    x = np.asarray(x, dtype=float)
    flat = np.atleast_1d(x).astype(float)
    out = np.zeros_like(flat)
    pos = flat > 0
    if beta == 0.5:
        xp = flat[pos]
        out[pos] = 0.5 / math.sqrt(math.pi) * xp**-1.5 * np.exp(-0.25 / xp)
        return out.reshape(x.shape) if x.ndim else float(out[0])
    if pos.any():
        val, ok = _series_f1(flat[pos], beta)
        res = val
        bad = np.flatnonzero(~ok)
        if bad.size:
            xb = flat[pos][bad]
            if exact:
                for i, xv in zip(bad, xb):
                    v, good = _kanter_f1_quad(float(xv), beta)
                    if not good:
                        raise NumericError("stable density did not converge", x=float(xv), beta=beta)
                    res[i] = v
            else:
                res[bad] = _kanter_f1_fixed(xb, beta)
        out[pos] = res
    return out.reshape(x.shape) if x.ndim else float(out[0])


def stable_density(t, x, params: StableParams, exact: bool = True):
    """Density ``f_t(x)`` of ``sigma_t``."""
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    if np.any(t <= 0):
        raise ParameterError("t must be positive")
    b, C = params.beta, params.C
    if b == 0.5:
        xs = np.where(x > 0, x, 1.0)
        val = C * t / (2.0 * math.sqrt(math.pi)) * xs**-1.5 * np.exp(-(C * t) ** 2 / (4.0 * xs))
        out = np.where(x > 0, val, 0.0)
        return out if out.ndim else float(out)
    scale = (C * t) ** (1.0 / b)
    out = stable_f1(x / scale, b, exact=exact) / scale
    return out if np.ndim(out) else float(out)


def potential_h(x, params: StableParams):
    """``h(x) = 1 / (C Gamma(beta) x**(1-beta))``, the potential density at ``x``."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise ParameterError("x must be positive")
    out = 1.0 / (params.C * math.gamma(params.beta) * x ** (1.0 - params.beta))
    return out if out.ndim else float(out)


def death_time_density(a, x, params: StableParams, exact: bool = True):
    """Density ``a -> f_a(x)/h(x)`` of the death time from ``x``."""
    a = np.asarray(a, dtype=float)
    pos = a > 0
    out = np.zeros(a.shape)
    if np.any(pos):
        out[pos] = stable_density(a[pos], x, params, exact=exact) / potential_h(x, params)
    return out if out.ndim else float(out)


def death_time_cdf(a, x, params: StableParams):
    a = np.asarray(a, dtype=float)
    if params.beta == 0.5:
        out = np.where(a > 0, -np.expm1(-(params.C * np.clip(a, 0, None)) ** 2 / (4.0 * x)), 0.0)
        return out if out.ndim else float(out)
    flat = np.atleast_1d(a)
    res = np.array([integrate.quad(lambda s: death_time_density(s, x, params), 0.0, v, limit=200)[0]
                    if v > 0 else 0.0 for v in flat])
    return res.reshape(a.shape) if a.ndim else float(res[0])


def transition_density(s, x, y, params: StableParams):
    """``p_s(x, y) = f_s(x - y) h(y) / h(x)`` for ``0 < y < x``, else 0."""
    y = np.asarray(y, dtype=float)
    inside = (y > 0) & (y < x)
    ys = np.where(inside, y, 0.5 * x)
    val = stable_density(s, x - ys, params) * potential_h(ys, params) / potential_h(x, params)
    out = np.where(inside, val, 0.0)
    return out if out.ndim else float(out)


# --------------------------------------------------------------------------
# exact samplers for sigma_t and the death time

def _kanter_u_tilted(beta, size, rng):
    """``U`` on (0,1) with density proportional to ``A(u)**-(1-beta)``."""
    out = np.empty(size)
    bound = _A0(beta) ** -(1.0 - beta)
    filled = 0
    while filled < size:
        m = max(2 * (size - filled), 64)
        u = rng.random(m)
        keep = u[rng.random(m) * bound < _zolotarev_A(u, beta) ** -(1.0 - beta)]
        take = min(keep.size, size - filled)
        out[filled:filled + take] = keep[:take]
        filled += take
    return out


def sample_stable(t, params: StableParams, size, rng) -> np.ndarray:
    """Draws of ``sigma_t`` (Kanter's representation; first passage at beta=1/2)."""
    b, C = params.beta, params.C
    if b == 0.5:
        z = rng.standard_normal(size)
        return (C * t) ** 2 / (2.0 * z * z)
    u = rng.random(size)
    e = rng.standard_exponential(size)
    return (C * t) ** (1.0 / b) * (_zolotarev_A(u, b) / e) ** ((1.0 - b) / b)


def sample_death_times(x, params: StableParams, size, rng) -> np.ndarray:
    """Exact draws from ``f_a(x)/h(x)``.

    With ``Y = (C zeta)**(-1/beta)`` the death time law is the stable law
    tilted by ``y**-beta``; in Kanter's representation the tilt factorizes
    into a Gamma(2-beta) variable and a tilted angle.
    """
    b, C = params.beta, params.C
    if b == 0.5:
        return np.sqrt(4.0 * x * rng.standard_exponential(size)) / C
    e = rng.standard_gamma(2.0 - b, size)
    u = _kanter_u_tilted(b, size, rng)
    return x**b * (e / _zolotarev_A(u, b)) ** (1.0 - b) / C


# --------------------------------------------------------------------------
# conditioned subordinator paths

@dataclass(frozen=True)
class ConditionedSubPath:
    """Path of ``-sigma^h`` from ``start`` to 0 over ``[0, death_time]``.

    ``knot_times``/``knot_masses`` give the right-continuous mass at knots;
    ``jump_times``/``jump_sizes`` are the resolved jumps and ``unresolved``
    the mass lost below the jump resolution.
    """

    start: float
    death_time: float
    jump_times: np.ndarray = field(repr=False)
    jump_sizes: np.ndarray = field(repr=False)
    knot_times: np.ndarray = field(repr=False)
    knot_masses: np.ndarray = field(repr=False)
    unresolved: float = 0.0
    method: str = ""

    def mass_at(self, t):
        t = np.asarray(t, dtype=float)
        i = np.searchsorted(self.knot_times, t, side="right") - 1
        m = np.where(i >= 0, self.knot_masses[np.clip(i, 0, None)], self.start)
        out = np.where(t >= self.death_time, 0.0, m)
        return out if out.ndim else float(out)

    def normalized_jumps(self) -> RankedMasses:
        return RankedMasses.from_unsorted(self.jump_sizes / self.jump_sizes.sum())

    def to_dict(self):
        return {
            "start": self.start,
            "death_time": self.death_time,
            "jumps": [[float(a), float(b)] for a, b in zip(self.jump_times, self.jump_sizes)],
            "unresolved": self.unresolved,
            "method": self.method,
        }

    def to_json(self):
        return json.dumps(self.to_dict())


def _split_half_stable(delta, s, C, rng):
    """Split increments ``delta`` of a 1/2-stable bridge over ``2s`` at the midpoint.

    The left share ``w`` satisfies ``1/(w(1-w)) - 4 ~ Gamma(1/2, rate C^2 s^2/(4 delta))``;
    the smaller share is computed without cancellation.
    """
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        rate = (C * s) ** 2 / (4.0 * delta)
        y = rng.standard_gamma(0.5, delta.shape) / rate
        y = np.where(np.isfinite(y), y, 0.0)
        r = np.sqrt(y / (y + 4.0))
        small_w = 2.0 / ((y + 4.0) * (1.0 + r))
    small = delta * small_w
    big = delta - small
    left_small = rng.random(delta.shape) < 0.5
    return np.where(left_small, small, big), np.where(left_small, big, small)


def _midpoint_grid(n=2048):
    h = np.geomspace(1e-13, 0.5, n)
    return np.concatenate([h, 1.0 - h[-2::-1]])


_W_GRID = _midpoint_grid()


def _split_general(delta, s, params, rng):
    """Inverse-CDF midpoint split for general beta on a two-sided geometric grid."""
    b, C = params.beta, params.C
    u = delta / (C * s) ** (1.0 / b)
    flat_u = u.ravel()
    w = _W_GRID
    out = np.empty_like(flat_u)
    v = rng.random(flat_u.size)
    for i, ui in enumerate(flat_u):
        if not ui > 0:
            out[i] = 0.5
            continue
        dens = stable_f1(ui * w, b, exact=False) * stable_f1(ui * (1.0 - w), b, exact=False)
        cdf = np.concatenate([[0.0], np.cumsum(0.5 * (dens[1:] + dens[:-1]) * np.diff(w))])
        if not (np.isfinite(cdf[-1]) and cdf[-1] > 0):
            raise NumericError("midpoint density could not be normalized", u=float(ui), beta=b)
        out[i] = np.interp(v[i] * cdf[-1], cdf, w)
    left = delta * out.reshape(delta.shape)
    return left, delta - left


def _bridge_increments(x, a, params, depth, rng):
    """Dyadic increments of ``sigma`` bridges 0 -> x over ``[0, a_i]``."""
    inc = np.full((a.size, 1), float(x))
    for level in range(depth):
        s = (a / 2.0 ** (level + 1))[:, None]
        if params.beta == 0.5:
            left, right = _split_half_stable(inc, s, params.C, rng)
        else:
            left, right = _split_general(inc, np.broadcast_to(s, inc.shape), params, rng)
        nxt = np.empty((a.size, inc.shape[1] * 2))
        nxt[:, 0::2] = left
        nxt[:, 1::2] = right
        inc = nxt
    return inc


def sample_conditioned_bridge_method(x, params: StableParams, seed, depth: int = 14,
                                     n_paths: int | None = None, jump_threshold: float | None = None,
                                     batch: int = 256):
    """Conditioned subordinator from ``x`` via a death time and a sigma-bridge.

    Returns one :class:`ConditionedSubPath`, or a list when ``n_paths`` is set.
    Increments of the depth-``depth`` dyadic bridge above ``jump_threshold``
    (default ``2**-depth * x``) are reported as jumps.
    """
    if not x > 0:
        raise ParameterError("x must be positive")
    if depth < 1:
        raise ParameterError("depth must be at least 1")
    rng = as_seed(seed).generator()
    m = 1 if n_paths is None else int(n_paths)
    thr = 2.0**-depth * x if jump_threshold is None else float(jump_threshold)
    zeta = sample_death_times(x, params, m, rng)
    out = []
    for lo in range(0, m, batch):
        a = zeta[lo:lo + batch]
        inc = _bridge_increments(x, a, params, depth, rng)
        k = inc.shape[1]
        frac = np.arange(1, k + 1) / k
        for i in range(a.size):
            ai = float(a[i])
            row = inc[i]
            masses = x - np.cumsum(row)
            masses[-1] = 0.0
            big = row > thr
            out.append(ConditionedSubPath(
                start=float(x), death_time=ai,
                jump_times=((np.flatnonzero(big) + 0.5) / k) * ai,
                jump_sizes=row[big],
                knot_times=frac * ai,
                knot_masses=np.clip(masses, 0.0, None),
                unresolved=float(row[~big].sum()),
                method="bridge",
            ))
    return out[0] if n_paths is None else out


def _xi_kernel(x, b):
    # e^x / (e^x - 1)^(1+b) written to avoid overflow
    return math.exp(-b * x) / (-math.expm1(-x)) ** (1.0 + b)


def xi_levy_density(x, params: StableParams):
    """Levy density ``beta C / Gamma(1-beta) * e^x / (e^x - 1)**(1+beta)`` of ``xi``."""
    x = np.asarray(x, dtype=float)
    b = params.beta
    c = b * params.C / math.gamma(1.0 - b)
    return c * np.exp(-b * x) / (-np.expm1(-x)) ** (1.0 + b)


def xi_laplace_exponent(q, params: StableParams):
    """Closed form ``C Gamma(q + beta) / Gamma(q)``."""
    q = np.asarray(q, dtype=float)
    out = params.C * np.exp(special.gammaln(q + params.beta) - special.gammaln(q))
    return out if out.ndim else float(out)


def xi_laplace_exponent_quad(q: float, params: StableParams) -> float:
    """``int (1 - e^{-qx}) xi_levy_density(x) dx`` by adaptive quadrature."""
    b = params.beta
    c = b * params.C / math.gamma(1.0 - b)

    # substitute x = v**(1/(1-b)) on (0, 1] to remove the x**-b singularity
    def near(v):
        xx = v ** (1.0 / (1.0 - b))
        jac = xx / ((1.0 - b) * v) if v > 0 else 0.0
        return -math.expm1(-q * xx) * _xi_kernel(xx, b) * c * jac

    def far(xx):
        return -math.expm1(-q * xx) * _xi_kernel(xx, b) * c

    v1, e1 = integrate.quad(near, 0.0, 1.0, epsabs=0.0, epsrel=1e-13, limit=200)
    v2, e2 = integrate.quad(far, 1.0, np.inf, epsabs=0.0, epsrel=1e-13, limit=200)
    total = v1 + v2
    if abs(e1) + abs(e2) > 1e-9 * abs(total):
        raise NumericError("quadrature of the Laplace exponent did not converge", q=q, err=abs(e1) + abs(e2))
    return total


def moments_of_death_time(k: int, params: StableParams, quadrature: bool = True) -> float:
    """``E[zeta**k] = k! / prod_{i<=k} phi(-delta i)`` for the death time from 1."""
    if int(k) != k or k < 1:
        raise ParameterError("k must be a positive integer")
    phi = (lambda q: xi_laplace_exponent_quad(q, params)) if quadrature else \
        (lambda q: xi_laplace_exponent(q, params))
    prod = 1.0
    for i in range(1, int(k) + 1):
        prod *= phi(-params.delta * i)
    return math.factorial(int(k)) / prod


def sample_conditioned_lamperti_method(params: StableParams, seed, n_paths: int | None = None,
                                       eps: float = 1e-4, stop_mass: float = 1e-14,
                                       chunk: int = 4096):
    """Conditioned subordinator from 1 as a Lamperti time change of ``xi``.

    Jumps of ``xi`` above ``eps`` are drawn exactly from the tail
    ``(c/beta)(e^x - 1)**-beta``; smaller ones are replaced by their mean
    drift. Real time is ``int exp(-beta xi_s) ds``, integrated in closed
    form between jumps. The path stops once the mass is below ``stop_mass``
    and the remaining time is filled with its mean ``m**beta E[zeta]``.
    """
    b = params.beta
    c = b * params.C / math.gamma(1.0 - b)
    tail_eps = c / b * math.expm1(eps) ** -b
    drift, err = integrate.quad(lambda v: v * c * _xi_kernel(v, b), 0.0, eps,
                                epsrel=1e-10, limit=200)
    if not np.isfinite(drift) or err > 1e-6 * max(drift, 1e-300):
        raise NumericError("small-jump drift quadrature failed", eps=eps)
    mean_zeta = 1.0 / xi_laplace_exponent(b, params)
    rng = as_seed(seed).generator()
    xi_stop = -math.log(stop_mass)
    m = 1 if n_paths is None else int(n_paths)
    out = []
    for _ in range(m):
        xi0, clock = 0.0, 0.0
        times, sizes, post = [], [], []
        while xi0 < xi_stop:
            tau = rng.standard_exponential(chunk) / tail_eps
            jumps = np.log1p(math.expm1(eps) * rng.random(chunk) ** (-1.0 / b))
            pre = xi0 + np.concatenate([[0.0], np.cumsum(jumps[:-1])]) + drift * np.cumsum(tau)
            after = pre + jumps
            start = np.concatenate([[xi0], after[:-1]])
            if drift > 0:
                seg = np.exp(-b * start) * -np.expm1(-b * drift * tau) / (b * drift)
            else:
                seg = np.exp(-b * start) * tau
            t_jump = clock + np.cumsum(seg)
            done = np.flatnonzero(after >= xi_stop)
            n_take = done[0] + 1 if done.size else chunk
            times.append(t_jump[:n_take])
            sizes.append(np.exp(-pre[:n_take]) - np.exp(-after[:n_take]))
            post.append(np.exp(-after[:n_take]))
            xi0 = float(after[n_take - 1])
            clock = float(t_jump[n_take - 1])
        jt = np.concatenate(times)
        js = np.concatenate(sizes)
        km = np.concatenate(post)
        final = float(km[-1])
        death = clock + final**b * mean_zeta
        km[-1] = 0.0
        out.append(ConditionedSubPath(
            start=1.0, death_time=death, jump_times=jt, jump_sizes=js,
            knot_times=jt, knot_masses=km, unresolved=float(1.0 - js.sum()),
            method="lamperti",
        ))
    return out[0] if n_paths is None else out


# --------------------------------------------------------------------------
# Poisson-Dirichlet

def sample_gem(pd: PDParams, n_sticks: int, size: int, rng) -> np.ndarray:
    """``(size, n_sticks)`` GEM stick lengths in size-biased order."""
    k = np.arange(1, int(n_sticks) + 1)
    a, bb = pd.stick_law(k)
    y = rng.beta(np.broadcast_to(a, (size, k.size)), np.broadcast_to(bb, (size, k.size)))
    rest = np.cumprod(1.0 - y, axis=1)
    prev = np.concatenate([np.ones((size, 1)), rest[:, :-1]], axis=1)
    return prev * y


def sample_pd(pd: PDParams, n_sticks: int, seed, size: int | None = None):
    """Ranked PD(beta, theta) masses by stick breaking.

    The leftover mass after ``n_sticks`` sticks is appended as a last stick,
    so each sample sums to one.
    """
    if n_sticks < 1:
        raise ParameterError("n_sticks must be positive")
    rng = as_seed(seed).generator()
    m = 1 if size is None else int(size)
    sticks = sample_gem(pd, n_sticks, m, rng)
    resid = np.clip(1.0 - sticks.sum(axis=1, keepdims=True), 0.0, None)
    full = -np.sort(-np.concatenate([sticks, resid], axis=1), axis=1)
    if size is None:
        return RankedMasses(full[0])
    return [RankedMasses(r) for r in full]


def size_biased_permutation(m, seed) -> np.ndarray:
    """Size-biased order of ``m`` via exponential clocks ``E_i / m_i``."""
    masses = np.asarray(getattr(m, "masses", m), dtype=float)
    if not masses.sum() > 0:
        raise ParameterError("masses must have positive sum")
    rng = seed if isinstance(seed, np.random.Generator) else as_seed(seed).generator()
    with np.errstate(divide="ignore"):
        keys = rng.standard_exponential(masses.size) / masses
    return masses[np.argsort(keys, kind="stable")]


def stick_residuals(perm) -> np.ndarray:
    """``Y_n = V_n / (1 - V_1 - ... - V_{n-1})`` for a size-biased sequence."""
    v = np.asarray(perm, dtype=float)
    v = v / v.sum()
    left = 1.0 - np.concatenate([[0.0], np.cumsum(v)[:-1]])
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(left > 0, v / left, 1.0)


def eval_ppy_joint_density(y, a, params: StableParams, exact: bool = True):
    """Joint density of the first ``n`` stick ratios ``Y`` and the death time.

    ``a**n Theta(y1) Theta(ybar1 y2) ... f_a(ybar1...ybarn) / h(1)``.
    """
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if np.any((y <= 0) | (y >= 1)):
        raise ParameterError("stick ratios must lie in (0, 1)")
    if not a > 0:
        raise ParameterError("a must be positive")
    rest = np.concatenate([[1.0], np.cumprod(1.0 - y)])
    val = a ** y.size * np.prod(params.theta(rest[:-1] * y))
    return float(val * stable_density(a, rest[-1], params, exact=exact) / potential_h(1.0, params))


def sample_nu_minus(params, n_jumps: int, seed, size: int | None = None):
    """Importance sample of the stable dislocation measure.

    Jumps of ``T`` (Laplace exponent ``q**(1/alpha)``) on [0,1] in decreasing
    order are ``(Gamma_k Gamma(1-g))**(-1/g)`` for Poisson arrivals
    ``Gamma_k`` and ``g = 1/alpha``. The ``n_jumps`` largest are kept; the
    mean of the rest is added to ``T_1``. The weight is
    ``alpha**2 Gamma(2-1/alpha)/Gamma(2-alpha) * T_1``.

    Returns ``(RankedMasses, weight)`` or, with ``size``, a list of masses
    and an array of weights. The first ``n`` arrivals are shared between
    calls with the same seed and different ``n_jumps``.
    """
    if isinstance(params, StableParams):
        alpha = 1.0 / (1.0 - params.beta)
    else:
        alpha = float(params)
    if not 1.0 < alpha < 2.0:
        raise ParameterError("alpha must lie in (1, 2)")
    g = 1.0 / alpha
    rng = as_seed(seed).generator()
    m = 1 if size is None else int(size)
    arrivals = np.cumsum(rng.standard_exponential((int(n_jumps), m)), axis=0).T
    jumps = (arrivals * math.gamma(1.0 - g)) ** (-1.0 / g)
    smallest = jumps[:, -1]
    resid = g / (math.gamma(1.0 - g) * (1.0 - g)) * smallest ** (1.0 - g)
    total = jumps.sum(axis=1) + resid
    const = alpha**2 * math.gamma(2.0 - g) / math.gamma(2.0 - alpha)
    weights = const * total
    ranked = jumps / jumps.sum(axis=1, keepdims=True)
    if size is None:
        return RankedMasses(ranked[0]), float(weights[0])
    return [RankedMasses(r) for r in ranked], weights
