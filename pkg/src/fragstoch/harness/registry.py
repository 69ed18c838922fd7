"""Verification registry: each case binds a statement to a seeded pass/fail test."""
from __future__ import annotations

import copy
import hashlib
import time
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from ..errors import FragstochError, ParameterError
from ..paths import Seed
from . import cases

REPORT_SCHEMA = "fragstoch.report/1"
DEFAULT_ALPHA = 1e-3
DEFAULT_Z_MAX = 3.0


@dataclass(frozen=True)
class VerificationCase:
    id: str
    suite: str
    anchor: str
    body: Callable = field(repr=False)
    params: dict = field(default_factory=dict, repr=False)
    significance: float = DEFAULT_ALPHA     # per test, already Bonferroni-corrected
    z_max: float = DEFAULT_Z_MAX
    hard: bool = True

    def __post_init__(self):
        if not 0 < self.significance <= 0.1:
            raise ParameterError("significance must lie in (0, 0.1]")

    @property
    def N(self):
        return self.params.get("N")

    def stream(self) -> int:
        return int.from_bytes(hashlib.sha256(self.id.encode()).digest()[:8], "little")

    def seed(self, master: int) -> Seed:
        return Seed(int(master), self.stream())


@dataclass
class StatReport:
    case_id: str
    suite: str
    anchor: str
    hard: bool
    seed: list
    N: int | None
    significance: float
    suite_budget: float
    z_max: float
    statistics: dict
    p_values: dict
    z_scores: dict
    checks: dict
    details: dict
    verdict: str
    runtime: float
    error: str | None = None

    def to_dict(self):
        return _plain(asdict(self))


def verdict_of(p_values: dict, z_scores: dict, checks: dict, significance: float, z_max: float,
               error: str | None = None) -> str:
    """``pass`` iff every p-value exceeds ``significance``, every |z| is at most ``z_max``
    and every exact check holds."""
    if error is not None:
        return "error"
    ok = all(p > significance for p in p_values.values())
    ok &= all(abs(z) <= z_max for z in z_scores.values())
    ok &= all(bool(c) for c in checks.values())
    return "pass" if ok else "fail"


def _plain(x):
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return _plain(x.tolist())
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        return float(x)
    return x


# --------------------------------------------------------------------------
# the registry

def _case(id, suite, anchor, body, params, **kw):
    return VerificationCase(id, suite, anchor, body, params, **kw)


def default_cases():
    return [
        _case("thm1-beta-half", "thm1", "tagged fragment jumps are PD(1/2,1/2)", cases.thm1_beta_half,
              {"N": 10_000, "knots": 2**16 + 1, "block": 50, "n_sticks": 10_000}),
        _case("prop2-samplers", "prop2", "bridge and Lamperti constructions agree", cases.prop2_samplers,
              {"N": 10_000, "depth": 14, "eps": 1e-4, "times": [0.2, 0.4], "block": 500}),
        _case("lemma7-moments", "lemma7", "death-time moments from the xi Laplace exponent",
              cases.lemma7_moments, {"N": 10_000, "eps": 1e-4, "phi_tol": 1e-4}),
        _case("bp-bijection", "bp", "Bertoin-Pitman excursions equal tagged-fragment jumps",
              cases.bp_bijection, {"N": 200, "knots": 2**14 + 1}),
        _case("prop6-haas", "prop6", "Haas root change preserves the law", cases.haas_invariance,
              {"N": 100_000, "knots": 2**12 + 1, "block": 2_000, "s": [0.25, 0.5, 0.75]}),
        _case("prop3-zero-set", "prop3", "subordinator range gaps vs bridge excursions",
              cases.prop3_zero_set, {"N": 10_000, "knots": 2**16 + 1, "block": 100, "eps": 1e-4}),
        _case("thm4-frames", "thm4", "rescaled extinction frames converge to the BES(3) picture",
              cases.thm4_frames, {"N": 10_000, "t": 1e-2, "r": [0.5, 1.0, 2.0], "window_n": 4}),
        _case("cor5-laplace", "cor5", "Laplace transforms of limit H and M", cases.cor5_laplace,
              {"N": 10_000, "q": [0.5, 1.0, 2.0], "window_n": 4}),
        _case("obliteration", "oblit", "obliteration masses are PD(1/2, n-1/2)", cases.obliteration_masses,
              {"N": 10_000, "knots": 2**18 + 1, "block": 50, "n": [1, 2, 3]}),
        _case("thm6-lil", "thm6", "iterated logarithm diagnostic for L", cases.thm6_lil,
              {"N_subordinator": 10_000, "N_paths": 200, "k_min": 4, "k_max": 40, "k_path_max": 10,
               "band": [0.5, 2.0]}),
        _case("jeulin-fixed-time", "jeulin", "long excursion ends look like BES(3)", cases.jeulin_fixed_time,
              {"N": 10_000, "v": 400.0, "s": [0.25, 1.0, 4.0]}),
        _case("general-beta", "general", "general beta densities and PD(beta,beta)", cases.general_beta,
              {"N": 10_000, "N_subordinator": 10_000, "beta": [0.3, 0.4], "n_sticks": 10_000,
               "norm_tol": 1e-8, "scaling_tol": 1e-10}),
    ]


def select(registry, filter: str | None):
    """Cases whose id or suite starts with ``filter`` (comma separated); all when empty."""
    if not filter:
        return list(registry)
    keys = [f.strip() for f in filter.split(",") if f.strip()]
    return [c for c in registry if any(c.id.startswith(k) or c.suite == k for k in keys)]


def apply_overrides(registry, overrides: dict | None):
    """Return copies of the cases with ``{case_id_or_suite: {param: value}}`` merged in."""
    if not overrides:
        return list(registry)
    out = []
    for c in registry:
        params = copy.deepcopy(c.params)
        kw = {}
        for key in ("*", c.suite, c.id):
            for k, v in overrides.get(key, {}).items():
                if k in ("significance", "z_max"):
                    kw[k] = float(v)
                elif k == "hard":
                    kw[k] = bool(v)
                elif key == "*" and k not in params:
                    continue
                else:
                    params[k] = v
        out.append(VerificationCase(c.id, c.suite, c.anchor, c.body, params,
                                    kw.get("significance", c.significance),
                                    kw.get("z_max", c.z_max), kw.get("hard", c.hard)))
    return out


def run_case(case: VerificationCase, master_seed: int) -> StatReport:
    seed = case.seed(master_seed)
    t0 = time.perf_counter()
    err = None
    try:
        res = case.body(seed, case.params)
    except (FragstochError, ArithmeticError, ValueError, RuntimeError, FloatingPointError) as exc:
        res = cases.CaseOutcome(details={"traceback": traceback.format_exc()})
        diag = getattr(exc, "diagnostics", None)
        if diag:
            res.details["diagnostics"] = diag
        err = f"{type(exc).__name__}: {exc}"
    runtime = time.perf_counter() - t0
    n_tests = len(res.p_values) + len(res.z_scores)
    return StatReport(
        case_id=case.id, suite=case.suite, anchor=case.anchor, hard=case.hard,
        seed=[seed.master, seed.stream], N=case.N, significance=case.significance,
        suite_budget=case.significance * max(n_tests, 1), z_max=case.z_max,
        statistics=_plain(res.statistics), p_values=_plain(res.p_values), z_scores=_plain(res.z_scores),
        checks=_plain(res.checks), details=_plain(res.details),
        verdict=verdict_of(res.p_values, res.z_scores, res.checks, case.significance, case.z_max, err),
        runtime=runtime, error=err,
    )


def _run_one(args):
    case, master = args
    return run_case(case, master)


def run_registry(filter: str | None = None, master_seed: int = 0, workers: int = 1,
                 overrides: dict | None = None, registry=None):
    """Run the matching cases, each on its own derived seed, in registry order."""
    reg = apply_overrides(default_cases() if registry is None else registry, overrides)
    chosen = select(reg, filter)
    if workers > 1 and len(chosen) > 1:
        with ProcessPoolExecutor(max_workers=int(workers)) as ex:
            return list(ex.map(_run_one, [(c, master_seed) for c in chosen]))
    return [run_case(c, master_seed) for c in chosen]


def exit_code(reports) -> int:
    return int(any(r.hard and r.verdict != "pass" for r in reports))
