"""Report emission: versioned JSON, sample CSV and renderer-agnostic plot scripts.

A plot script is plain text: ``# key: value`` header lines (title, x, y,
scale) followed by one block per series, introduced by ``# series: name``
and holding whitespace-separated ``x y`` rows.
"""
from __future__ import annotations

import csv
import io
import json
import os

import numpy as np

from ..errors import ParameterError
from .registry import REPORT_SCHEMA, StatReport, exit_code

TIMING_FIELDS = ("runtime",)


def report_document(reports, master_seed: int, filter: str | None = None) -> dict:
    return {
        "schema": REPORT_SCHEMA,
        "master_seed": int(master_seed),
        "filter": filter or "",
        "exit_code": exit_code(reports),
        "cases": [r.to_dict() if isinstance(r, StatReport) else dict(r) for r in reports],
    }


def dumps(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=True) + "\n"


def write_report(doc: dict, path) -> None:
    with open(path, "w") as fh:
        fh.write(dumps(doc))


def read_report(path) -> dict:
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("schema") != REPORT_SCHEMA:
        raise ParameterError(f"unsupported report schema {doc.get('schema')!r}")
    return doc


def without_timing(doc: dict) -> dict:
    out = dict(doc)
    out["cases"] = [{k: v for k, v in c.items() if k not in TIMING_FIELDS} for c in doc["cases"]]
    return out


def summary_lines(doc: dict):
    for c in doc["cases"]:
        tag = "" if c["hard"] else " (diagnostic)"
        ps = ", ".join(f"{k} p={v:.3g}" for k, v in c["p_values"].items())
        zs = ", ".join(f"{k} z={v:+.2f}" for k, v in c["z_scores"].items())
        ck = ", ".join(f"{k}={'ok' if v else 'FAILED'}" for k, v in c["checks"].items())
        body = "; ".join(x for x in (ps, zs, ck) if x)
        err = f" [{c['error']}]" if c.get("error") else ""
        yield f"{c['verdict'].upper():5s} {c['case_id']}{tag}: {body}{err}"


# --------------------------------------------------------------------------
# samples

def write_csv(rows, header, path=None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in r])
    text = buf.getvalue()
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)
    return text


# --------------------------------------------------------------------------
# plot scripts

def plot_script(title: str, xlabel: str, ylabel: str, series: dict, scale: str = "linear") -> str:
    lines = [f"# title: {title}", f"# x: {xlabel}", f"# y: {ylabel}", f"# scale: {scale}"]
    for name, (x, y) in series.items():
        lines.append(f"# series: {name}")
        for a, b in zip(np.asarray(x, dtype=float), np.asarray(y, dtype=float)):
            lines.append(f"{a:.10g} {b:.10g}")
    return "\n".join(lines) + "\n"


def plots_for_case(case: dict) -> dict:
    """``{filename: script}`` for one case dictionary."""
    out = {}
    cid = case["case_id"]
    if case["p_values"]:
        names = list(case["p_values"])
        out[f"{cid}-pvalues.plot"] = plot_script(
            f"{cid}: p-values", "test index", "p-value",
            {"p": (np.arange(len(names)), [case["p_values"][k] for k in names]),
             "threshold": ([0, max(len(names) - 1, 1)], [case["significance"]] * 2)},
            scale="logy")
    if case["z_scores"]:
        names = list(case["z_scores"])
        out[f"{cid}-zscores.plot"] = plot_script(
            f"{cid}: z-scores against closed forms", "test index", "z",
            {"z": (np.arange(len(names)), [case["z_scores"][k] for k in names]),
             "upper": ([0, max(len(names) - 1, 1)], [case["z_max"]] * 2),
             "lower": ([0, max(len(names) - 1, 1)], [-case["z_max"]] * 2)})
    curves = case.get("details", {}).get("curves")
    if curves:
        med = np.asarray(curves["median_running_min"], dtype=float)
        t = np.asarray(curves["t"], dtype=float)
        series = {name: (np.log2(1 / t), med[:, j]) for j, name in enumerate(("gH", "gM", "gL"))}
        st = np.asarray(curves["subordinator_t"], dtype=float)
        series["gL subordinator"] = (np.log2(1 / st), curves["subordinator_median"])
        out[f"{cid}-lil.plot"] = plot_script(
            "median running minimum of g(t) X_t", "log2(1/t)", "g(t) X_t", series)
    return out


def write_plots(doc: dict, directory) -> list:
    os.makedirs(directory, exist_ok=True)
    written = []
    for case in doc["cases"]:
        for name, text in plots_for_case(case).items():
            path = os.path.join(directory, name)
            with open(path, "w") as fh:
                fh.write(text)
            written.append(path)
    return written
