"""Command line entry point: ``fragstoch simulate | verify | report``."""
from __future__ import annotations

import argparse
import sys

import numpy as np

from .. import asymptotics as asy
from ..errors import FragstochError
from ..fragmentation import tagged_fragment
from ..paths import GridPath, Seed, sample_brownian_bridges, sample_normalized_excursions
from ..stable_pd import (BROWNIAN, PDParams, StableParams, sample_conditioned_bridge_method,
                         sample_conditioned_lamperti_method, sample_death_times, sample_nu_minus,
                         sample_pd)
from . import report as rep
from .config import load_config
from .registry import default_cases, exit_code, run_registry


def _params(args):
    if args.beta is None or args.beta == 0.5:
        return BROWNIAN
    return StableParams.stable_tree(1.0 / (1.0 - args.beta))


def _paths(values_fn, n, knots, seed):
    v = values_fn(knots, n, seed)
    t = np.linspace(0.0, 1.0, knots)
    return (("path", "t", "value"),
            [(i, tj, x) for i in range(n) for tj, x in zip(t, v[i])])


def _sim_tagged(args, seed):
    ex = sample_normalized_excursions(args.knots, args.n, seed)
    u = seed.generator(1).random(args.n)
    rows = []
    for i, (row, ui) in enumerate(zip(ex, u)):
        tf = tagged_fragment(GridPath(0.0, 1.0 / (args.knots - 1), row), float(ui))
        rows += [(i, lv, s) for lv, s in zip(tf.jump_levels, tf.jump_sizes)]
    return ("path", "level", "jump"), rows


def _sim_conditioned(method):
    def run(args, seed):
        p = _params(args)
        if method == "bridge":
            paths = sample_conditioned_bridge_method(1.0, p, seed, n_paths=args.n)
        else:
            paths = sample_conditioned_lamperti_method(p, seed, n_paths=args.n)
        rows = []
        for i, s in enumerate(paths):
            rows += [(i, s.death_time, t, j) for t, j in zip(s.jump_times, s.jump_sizes)]
        return ("path", "death_time", "jump_time", "jump"), rows
    return run


def _sim_pd(args, seed):
    b = 0.5 if args.beta is None else args.beta
    th = b if args.theta is None else args.theta
    ms = sample_pd(PDParams(b, th), args.sticks, seed, size=args.n)
    return ("path", "rank", "mass"), [(i, k, x) for i, m in enumerate(ms) for k, x in enumerate(m.masses[:args.keep])]


def _sim_nu_minus(args, seed):
    p = _params(args)
    ms, w = sample_nu_minus(p, args.sticks, seed, size=args.n)
    return (("path", "weight", "rank", "mass"),
            [(i, w[i], k, x) for i, m in enumerate(ms) for k, x in enumerate(m.masses[:args.keep])])


def _sim_frames(limit):
    def run(args, seed):
        r = np.asarray(args.r, dtype=float)
        if limit:
            frames = asy.sample_limit_frames(r, args.n, seed)
        else:
            frames, _ = asy.sample_extinction_frames(args.t, r, args.n, seed)
        rows = []
        for i, f in enumerate(frames):
            s = asy.statistics_HML(f)
            rows += [(i, rj, *s[j]) for j, rj in enumerate(r)]
        return ("frame", "r", "H", "M_leb", "L_span"), rows
    return run


TARGETS = {
    "excursion": lambda a, s: _paths(sample_normalized_excursions, a.n, a.knots, s),
    "bridge": lambda a, s: _paths(lambda k, n, sd: sample_brownian_bridges(k, n, 1.0, sd), a.n, a.knots, s),
    "tagged-fragment": _sim_tagged,
    "death-times": lambda a, s: (("death_time",), [(x,) for x in sample_death_times(1.0, _params(a), a.n, s.generator())]),
    "conditioned-bridge": _sim_conditioned("bridge"),
    "conditioned-lamperti": _sim_conditioned("lamperti"),
    "pd": _sim_pd,
    "nu-minus": _sim_nu_minus,
    "extinction-frames": _sim_frames(False),
    "limit-frames": _sim_frames(True),
    "occupation": lambda a, s: (("Z",), [(x,) for x in asy.sample_limit_occupation(1.0, a.n, s)]),
    "lil-subordinator": lambda a, s: (
        ("path", "t", "gL"),
        [(i, t, v) for c in [asy.subordinator_lil(a.n, 4, 40, s)]
         for i in range(a.n) for t, v in zip(c.t_grid, c.scaled[i, :, 2])]),
}


def cmd_simulate(args) -> int:
    seed = Seed(args.seed, args.stream)
    header, rows = TARGETS[args.target](args, seed)
    text = rep.write_csv(rows, header, args.out)
    if args.out is None:
        sys.stdout.write(text)
    return 0


def cmd_verify(args) -> int:
    overrides, run = ({}, {}) if args.config is None else load_config(args.config)
    seed = args.seed if args.seed is not None else int(run.get("seed", 0))
    workers = args.workers if args.workers is not None else int(run.get("workers", 1))
    if args.list:
        for c in default_cases():
            print(f"{c.id:20s} {c.suite:8s} {c.anchor}")
        return 0
    reports = run_registry(args.filter, seed, workers, overrides)
    if not reports:
        print(f"no case matches {args.filter!r}", file=sys.stderr)
        return 2
    doc = rep.report_document(reports, seed, args.filter)
    for line in rep.summary_lines(doc):
        print(line)
    if args.report:
        rep.write_report(doc, args.report)
    return exit_code(reports)


def cmd_report(args) -> int:
    doc = rep.read_report(args.inp)
    for line in rep.summary_lines(doc):
        print(line)
    if args.plots:
        for path in rep.write_plots(doc, args.plots):
            print(f"wrote {path}")
    return int(doc.get("exit_code", 0))


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fragstoch", description="Brownian and stable fragmentation simulation")
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="draw samples and write them as CSV")
    s.add_argument("target", choices=sorted(TARGETS))
    s.add_argument("--n", type=int, default=10)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--stream", type=int, default=0)
    s.add_argument("--out", default=None, help="CSV path (stdout if omitted)")
    s.add_argument("--knots", type=int, default=1025)
    s.add_argument("--beta", type=float, default=None)
    s.add_argument("--theta", type=float, default=None)
    s.add_argument("--sticks", type=int, default=1000)
    s.add_argument("--keep", type=int, default=20, help="ranked masses kept per sample")
    s.add_argument("--t", type=float, default=1e-2)
    s.add_argument("--r", type=float, nargs="+", default=[0.5, 1.0, 2.0])
    s.set_defaults(func=cmd_simulate)

    v = sub.add_parser("verify", help="run the verification registry")
    v.add_argument("--filter", default=None, help="case id prefix or suite name, comma separated")
    v.add_argument("--seed", type=int, default=None)
    v.add_argument("--workers", type=int, default=None)
    v.add_argument("--report", default=None, help="JSON report path")
    v.add_argument("--config", default=None, help="INI file overriding case parameters")
    v.add_argument("--list", action="store_true", help="list cases and exit")
    v.set_defaults(func=cmd_verify)

    r = sub.add_parser("report", help="summarize a JSON report and emit plot scripts")
    r.add_argument("--in", dest="inp", required=True)
    r.add_argument("--plots", default=None, help="directory for plot scripts")
    r.set_defaults(func=cmd_report)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except FragstochError as exc:
        print(f"fragstoch: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
