"""Closed-loop stability from the open-loop Nyquist curve.

The positive-frequency branch ``G_o(j*omega)`` is mirrored into its complex
conjugate to form a closed contour, and the net encirclements of the critical
point ``-1 + 0j`` decide stability (the open loop is assumed to have no
right-half-plane singularities).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import minimize_scalar

from .model import EXPONENT_TOL, FractionalTF, SingularEvaluationError, freqresp
from .response import FrequencySweep

__all__ = [
    "NyquistCurve",
    "StabilityVerdict",
    "CriticalPointOnCurve",
    "IndeterminateWinding",
    "CRITICAL_POINT",
    "MARGINAL_TOL",
    "ON_CURVE_TOL",
    "OPEN_LOOP_ASSUMPTION",
    "nyquist_curve",
    "winding_number",
    "branch_winding",
    "assess_stability",
]

CRITICAL_POINT = -1.0 + 0.0j
MARGINAL_TOL = 1e-6
ON_CURVE_TOL = 1e-9
MAX_FRACTION = 0.1
# |G_o| at a sweep edge must be outside [EDGE_LOW, EDGE_HIGH] (critical magnitude 1)
EDGE_LOW = 0.1
EDGE_HIGH = 10.0
ARC_POINTS = 256

OPEN_LOOP_ASSUMPTION = "open loop has no right-half-plane singularities"


class CriticalPointOnCurve(ValueError):
    """The winding centre lies on the contour."""


class IndeterminateWinding(ValueError):
    """Angle accumulation is not close to a whole number of turns."""


@dataclass(frozen=True)
class NyquistCurve:
    """Nyquist contour.

    ``omegas`` and the first ``len(omegas)`` entries of ``points`` are the
    positive branch in ascending frequency.  When ``mirrored`` the conjugate
    branch follows in descending ``|omega|``, so the contour runs continuously
    from ``omega_min`` through ``omega_max`` and back.  ``closure`` holds the
    points of a low-frequency arc used to close the contour around an
    integrator-like singularity at ``omega = 0`` (empty: a straight chord).
    """

    omegas: np.ndarray
    points: np.ndarray
    mirrored: bool
    closure: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=complex))
    excluded: tuple = ()

    @property
    def positive(self) -> np.ndarray:
        return self.points[:len(self.omegas)]

    @property
    def contour(self) -> np.ndarray:
        return np.concatenate([self.points, self.closure])

    @property
    def signed_omegas(self) -> np.ndarray:
        if not self.mirrored:
            return self.omegas
        return np.concatenate([self.omegas, -self.omegas[::-1]])

    @classmethod
    def from_branch(cls, omegas, points, mirror=True, closure=()) -> "NyquistCurve":
        omegas = np.asarray(omegas, dtype=float)
        points = np.asarray(points, dtype=complex)
        if omegas.shape != points.shape:
            raise ValueError("omegas and points differ in length")
        if mirror:
            points = np.concatenate([points, np.conj(points[::-1])])
        return cls(omegas, points, bool(mirror), np.asarray(closure, dtype=complex))


@dataclass(frozen=True)
class StabilityVerdict:
    verdict: str
    winding_number: int
    min_distance_to_critical: float
    critical_omega: float
    warnings: tuple = ()

    @property
    def is_stable(self) -> bool:
        return self.verdict == "stable"

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "winding_number": self.winding_number,
            "min_distance": self.min_distance_to_critical,
            "critical_omega": self.critical_omega,
            "assumptions": [OPEN_LOOP_ASSUMPTION],
            "warnings": list(self.warnings),
        }


def _low_frequency_arc(g: FractionalTF, end: complex) -> np.ndarray:
    """Arc from ``G(-j*omega_min)`` to ``G(j*omega_min)`` around ``s = 0``.

    Near zero ``G(s) ~ c*s**d``; following ``s = eps*exp(i*theta)`` for
    ``theta`` from ``-pi/2`` to ``pi/2`` rotates the value by ``d*pi``.
    """
    d = g.low_frequency_exponent
    r = abs(end)
    phi_end = math.atan2(end.imag, end.real)
    t = np.linspace(-math.pi / 2, math.pi / 2, ARC_POINTS + 2)[1:-1]
    return r * np.exp(1j * (phi_end + d * (t - math.pi / 2)))


def nyquist_curve(g_open: FractionalTF, s: FrequencySweep = FrequencySweep(),
                  mirror: bool = True) -> NyquistCurve:
    """Sample the open loop over ``s`` and (optionally) mirror it.

    Singular samples are dropped with a warning and listed in ``excluded``.
    """
    w = s.omegas()
    excluded = ()
    try:
        pts = freqresp(g_open, w)
    except SingularEvaluationError as exc:
        warnings.warn(str(exc), RuntimeWarning, stacklevel=2)
        bad = np.isin(w, exc.omegas)
        excluded = tuple(float(x) for x in w[bad])
        w = w[~bad]
        pts = freqresp(g_open, w)
    closure = np.zeros(0, dtype=complex)
    if mirror and not g_open.num.is_zero() and g_open.low_frequency_exponent < -EXPONENT_TOL:
        closure = _low_frequency_arc(g_open, pts[0])
    curve = NyquistCurve.from_branch(w, pts, mirror, closure)
    return NyquistCurve(curve.omegas, curve.points, curve.mirrored, curve.closure, excluded)


def _angle_steps(z: np.ndarray, center: complex) -> np.ndarray:
    v = z - center
    return np.angle(v[1:] / v[:-1])


def winding_number(curve: NyquistCurve, center: complex = CRITICAL_POINT) -> int:
    """Net counter-clockwise encirclements of ``center`` by the closed contour.

    Principal-value angle steps of ``point - center`` are summed along the
    contour without the wrap-around step from the last point back to the
    first, so the fractional part measures the gap left open; more than 0.1
    turn means the contour does not close and the count is rejected.

    Raises
    ------
    CriticalPointOnCurve
        ``center`` is within :data:`ON_CURVE_TOL` of a contour point.
    IndeterminateWinding
        The accumulated angle is more than 0.1 turn from an integer.
    """
    if not curve.mirrored:
        raise ValueError("winding number needs a mirrored (closed) curve")
    z = curve.contour
    dist = np.abs(z - center)
    if np.min(dist) < ON_CURVE_TOL:
        raise CriticalPointOnCurve("centre %r lies on the curve" % (center,))
    turns = float(np.sum(_angle_steps(z, center))) / (2.0 * math.pi)
    n = round(turns)
    if abs(turns - n) > MAX_FRACTION:
        raise IndeterminateWinding("angle accumulation %.4f turns is not integral" % turns)
    return int(n)


def branch_winding(curve: NyquistCurve, center: complex = CRITICAL_POINT) -> float:
    """Turns swept around ``center`` by the positive branch alone."""
    return float(np.sum(_angle_steps(curve.positive, center))) / (2.0 * math.pi)


def _edge_warnings(g: FractionalTF, curve: NyquistCurve) -> list:
    out = []
    if g.num.is_zero() or len(curve.omegas) == 0:
        return out
    pos = curve.positive
    checks = (
        ("omega_max", float(curve.omegas[-1]), pos[-1], g.high_frequency_exponent),
        ("omega_min", float(curve.omegas[0]), pos[0], -g.low_frequency_exponent),
    )
    for name, w, value, growth in checks:
        mag = abs(value)
        if abs(growth) <= EXPONENT_TOL:
            continue
        if growth < 0.0 and mag < EDGE_LOW:
            continue
        if growth > 0.0 and name == "omega_min" and mag > EDGE_HIGH:
            continue
        if growth > 0.0 and name == "omega_max":
            out.append("open loop is not proper (|G_o| grows as omega -> inf); "
                       "contour cannot be closed at infinity")
            continue
        out.append("|G_o(j%s)| = %.3g at %s = %.3g: truncated sweep may hide "
                   "encirclements" % (name, mag, name, w))
    return out


def _distance(g: FractionalTF, w: float) -> float:
    return abs(complex(freqresp(g, [w])[0]) - CRITICAL_POINT)


def _min_distance(g: FractionalTF, curve: NyquistCurve):
    w, pos = curve.omegas, curve.positive
    d = np.abs(pos - CRITICAL_POINT)
    k = int(np.argmin(d))
    best_w, best_d = float(w[k]), float(d[k])
    lo, hi = float(w[max(k - 1, 0)]), float(w[min(k + 1, len(w) - 1)])
    if hi > lo:
        res = minimize_scalar(lambda x: _distance(g, x), bounds=(lo, hi),
                              method="bounded", options={"xatol": 1e-9 * best_w})
        if res.fun < best_d:
            best_w, best_d = float(res.x), float(res.fun)
    return best_d, best_w


def assess_stability(g_open: FractionalTF,
                     s: FrequencySweep = FrequencySweep()) -> StabilityVerdict:
    """Closed-loop stability verdict for unity feedback around ``g_open``.

    ``marginal`` when the curve passes within :data:`MARGINAL_TOL` of
    ``-1``; otherwise ``stable`` for zero net encirclements and ``unstable``
    for any other count.  ``indeterminate`` is returned when the sweep edges
    leave the contour open to doubt or the angle count is not integral.
    """
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        curve = nyquist_curve(g_open, s, mirror=True)
    notes = [str(c.message) for c in caught]
    notes += _edge_warnings(g_open, curve)

    min_d, crit_w = _min_distance(g_open, curve)
    if min_d <= MARGINAL_TOL:
        return StabilityVerdict("marginal", 0, min_d, crit_w, tuple(notes))
    try:
        n = winding_number(curve, CRITICAL_POINT)
    except CriticalPointOnCurve:
        return StabilityVerdict("marginal", 0, min_d, crit_w, tuple(notes))
    except IndeterminateWinding as exc:
        notes.append(str(exc))
        return StabilityVerdict("indeterminate", 0, min_d, crit_w, tuple(notes))
    if len(notes) > len(caught):
        return StabilityVerdict("indeterminate", n, min_d, crit_w, tuple(notes))
    verdict = "stable" if n == 0 else "unstable"
    return StabilityVerdict(verdict, n, min_d, crit_w, tuple(notes))
