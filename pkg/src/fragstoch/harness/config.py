"""INI configuration that overrides case parameters.

Each section names a case id, a suite, or ``*`` (all cases that already
have the key). Values are Python literals; anything that does not parse
is kept as a string::

    [*]
    N = 2000

    [thm1-beta-half]
    knots = 16385
    significance = 1e-3

    [run]
    seed = 7
    workers = 2
"""
from __future__ import annotations

import ast
import configparser

from ..errors import ParameterError

RUN_SECTION = "run"


def _value(raw: str):
    try:
        return ast.literal_eval(raw)
    except (ValueError, SyntaxError):
        return raw


def parse_config(text: str):
    """Return ``(overrides, run_options)`` from INI text."""
    cp = configparser.ConfigParser(default_section="__none__", interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ParameterError(f"bad config: {exc}") from exc
    overrides, run = {}, {}
    for sec in cp.sections():
        vals = {k: _value(v) for k, v in cp.items(sec)}
        if sec == RUN_SECTION:
            run.update(vals)
        else:
            overrides[sec] = vals
    return overrides, run


def load_config(path):
    with open(path) as fh:
        return parse_config(fh.read())
