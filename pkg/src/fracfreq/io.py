"""File formats: TF/controller JSON, response CSV and measured-data CSV."""

from __future__ import annotations

import csv
import json
import os

import numpy as np

from .identify import MeasuredResponse
from .model import FactoredController, FractionalTF, PilDController
from .parsing import parse_tf_text

__all__ = [
    "RESPONSE_HEADER",
    "load_tf",
    "load_controller",
    "tf_to_json",
    "tf_from_json",
    "write_response_csv",
    "write_curve_csv",
    "read_measured_csv",
]

RESPONSE_HEADER = ("omega", "re", "im", "mag_db", "phase_deg")


def _fmt(x) -> str:
    return "%.17g" % x


def _read_source(source: str) -> str:
    if os.path.isfile(source):
        with open(source) as fh:
            return fh.read()
    return source


def tf_to_json(g: FractionalTF, **extra) -> str:
    d = g.to_dict()
    d.update(extra)
    return json.dumps(d, indent=2)


def tf_from_json(text: str) -> FractionalTF:
    return FractionalTF.from_dict(json.loads(text))


def load_tf(source: str) -> FractionalTF:
    """Transfer function from a file path, a JSON object or ``s``-notation text."""
    text = _read_source(source).strip()
    if text.startswith("{"):
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValueError("invalid transfer-function JSON: %s" % exc) from exc
        return FractionalTF.from_dict(d)
    return parse_tf_text(text)


def load_controller(source: str):
    """Controller from JSON (PI^lambda D^delta or factored keys) or TF text.

    ``{"K", "Ti", "Td", "lambda", "delta"}`` gives a :class:`PilDController`
    (missing orders default to 1, missing gains to 0);
    ``{"C", "xi", "omega_n", ...}`` a :class:`FactoredController`; a JSON
    object with ``num``/``den`` or plain text is read as a transfer function.
    """
    text = _read_source(source).strip()
    if not text.startswith("{"):
        return parse_tf_text(text)
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValueError("invalid controller JSON: %s" % exc) from exc
    if "num" in d:
        return FractionalTF.from_dict(d)
    if "C" in d:
        return FactoredController.from_dict(d)
    if {"K", "Ti", "Td"} & d.keys():
        return PilDController.from_dict(d)
    raise ValueError("unrecognised controller JSON keys: %s" % sorted(d))


def write_response_csv(resp, fh) -> None:
    """One row per sample: omega, re, im, mag_db, phase_deg (17 significant digits)."""
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(RESPONSE_HEADER)
    for w, v, m, p in zip(resp.omegas, resp.values, resp.mag_db, resp.phase_deg):
        writer.writerow([_fmt(w), _fmt(v.real), _fmt(v.imag), _fmt(m), _fmt(p)])


def write_curve_csv(curve, fh) -> None:
    """Nyquist contour rows ``omega,re,im``; the mirrored branch has omega < 0."""
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(("omega", "re", "im"))
    for w, v in zip(curve.signed_omegas, curve.points):
        writer.writerow([_fmt(w), _fmt(v.real), _fmt(v.imag)])


def read_measured_csv(fh) -> MeasuredResponse:
    """Read ``omega,re,im[,weight]``; other columns are ignored, weight defaults to 1."""
    reader = csv.DictReader(fh)
    fields = reader.fieldnames or []
    missing = [c for c in ("omega", "re", "im") if c not in fields]
    if missing:
        raise ValueError("measured-data CSV lacks column(s): %s" % ", ".join(missing))
    rows = list(reader)
    if not rows:
        raise ValueError("measured-data CSV has no rows")
    try:
        w = np.array([float(r["omega"]) for r in rows])
        f = np.array([complex(float(r["re"]), float(r["im"])) for r in rows])
        wt = None
        if "weight" in fields:
            wt = np.array([float(r["weight"]) for r in rows])
    except (TypeError, ValueError) as exc:
        raise ValueError("bad number in measured-data CSV: %s" % exc) from exc
    return MeasuredResponse(w, f, wt)
