"""Frequency sweeps, Bode data and gain/phase margins."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from .model import FractionalTF, SingularEvaluationError, freqresp

__all__ = [
    "FrequencySweep",
    "FrequencyResponseSet",
    "Margins",
    "DEFAULT_OMEGA_MIN",
    "DEFAULT_OMEGA_MAX",
    "DEFAULT_POINTS_PER_DECADE",
    "sweep",
    "unwrap_phase",
    "margins",
]

DEFAULT_OMEGA_MIN = 1e-3
DEFAULT_OMEGA_MAX = 1e3
DEFAULT_POINTS_PER_DECADE = 64


@dataclass(frozen=True)
class FrequencySweep:
    """Logarithmically spaced grid ``omega_min .. omega_max`` (rad/s)."""

    omega_min: float = DEFAULT_OMEGA_MIN
    omega_max: float = DEFAULT_OMEGA_MAX
    points_per_decade: int = DEFAULT_POINTS_PER_DECADE

    def __post_init__(self):
        lo, hi = float(self.omega_min), float(self.omega_max)
        if not (math.isfinite(lo) and math.isfinite(hi)) or lo <= 0.0:
            raise ValueError("omega_min must be finite and > 0")
        if not math.log10(hi / lo) > 1e-6:
            raise ValueError("omega_max must exceed omega_min")
        if int(self.points_per_decade) != self.points_per_decade or self.points_per_decade < 8:
            raise ValueError("points_per_decade must be an integer >= 8")
        object.__setattr__(self, "omega_min", lo)
        object.__setattr__(self, "omega_max", hi)
        object.__setattr__(self, "points_per_decade", int(self.points_per_decade))

    @property
    def decades(self) -> float:
        return math.log10(self.omega_max / self.omega_min)

    def omegas(self) -> np.ndarray:
        n = int(math.ceil(self.decades * self.points_per_decade - 1e-9)) + 1
        w = np.logspace(math.log10(self.omega_min), math.log10(self.omega_max), n)
        # pin the end points exactly
        w[0], w[-1] = self.omega_min, self.omega_max
        return w

    def doubled(self) -> "FrequencySweep":
        return FrequencySweep(self.omega_min, self.omega_max, 2 * self.points_per_decade)

    def to_dict(self) -> dict:
        return {"omega_min": self.omega_min, "omega_max": self.omega_max,
                "points_per_decade": self.points_per_decade}


@dataclass(frozen=True)
class FrequencyResponseSet:
    """Sampled response with magnitude (dB) and unwrapped phase (rad).

    ``excluded`` lists frequencies dropped because the evaluation was
    singular there.  ``system`` keeps the generating model so that crossover
    frequencies can be refined on the continuous response.
    """

    omegas: np.ndarray
    values: np.ndarray
    mag_db: np.ndarray
    phase_rad: np.ndarray
    excluded: tuple = ()
    system: Optional[FractionalTF] = field(default=None, compare=False)

    @property
    def phase_deg(self) -> np.ndarray:
        return np.degrees(self.phase_rad)

    def __len__(self):
        return len(self.omegas)


def unwrap_phase(raw) -> np.ndarray:
    """Remove 2*pi jumps from a sequence of principal-value angles.

    The first value is kept; every later one is shifted by a multiple of
    2*pi so that the step from its predecessor is at most pi.
    """
    raw = np.asarray(raw, dtype=float)
    if raw.size == 0:
        raise ValueError("cannot unwrap an empty phase sequence")
    return np.unwrap(raw)


def _magnitude_db(values: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return 20.0 * np.log10(np.abs(values))


def sweep(g: FractionalTF, s: FrequencySweep = FrequencySweep()) -> FrequencyResponseSet:
    """Sample ``g`` on the grid of ``s``.

    The phase is unwrapped along the grid; its 2*pi branch is fixed at the
    first sample, picking the branch nearest to the low-frequency asymptote
    ``arg(b0/a0) + (alpha0 - beta0)*pi/2`` (for most systems this is simply
    the principal value).
    """
    w = s.omegas()
    try:
        values = freqresp(g, w)
        excluded = ()
    except SingularEvaluationError as exc:
        bad = np.isin(w, exc.omegas)
        excluded = tuple(float(x) for x in w[bad])
        w = w[~bad]
        values = freqresp(g, w)
    phase = unwrap_phase(np.angle(values))
    if not g.num.is_zero():
        target = g.low_frequency_phase()
        phase = phase + 2.0 * math.pi * round((target - phase[0]) / (2.0 * math.pi))
    return FrequencyResponseSet(
        omegas=w,
        values=values,
        mag_db=_magnitude_db(values),
        phase_rad=phase,
        excluded=excluded,
        system=g,
    )


@dataclass(frozen=True)
class Margins:
    """Gain/phase margins; a margin is ``None`` when its crossover is absent.

    ``phase_crossings``/``gain_crossings`` count every crossing in the swept
    range; the reported margins belong to the lowest-frequency one.
    """

    gain_margin_db: Optional[float] = None
    phase_crossover_omega: Optional[float] = None
    phase_margin_deg: Optional[float] = None
    gain_crossover_omega: Optional[float] = None
    phase_crossings: int = 0
    gain_crossings: int = 0

    @property
    def multiple_crossings(self) -> bool:
        return self.phase_crossings > 1 or self.gain_crossings > 1

    @property
    def gain_margin(self) -> Optional[float]:
        """Linear gain margin (``10**(gm_db/20)``)."""
        if self.gain_margin_db is None:
            return None
        return 10.0 ** (self.gain_margin_db / 20.0)

    def to_dict(self) -> dict:
        return {
            "gain_margin_db": self.gain_margin_db,
            "phase_crossover_omega": self.phase_crossover_omega,
            "phase_margin_deg": self.phase_margin_deg,
            "gain_crossover_omega": self.gain_crossover_omega,
            "phase_crossings": self.phase_crossings,
            "gain_crossings": self.gain_crossings,
        }


def _crossings(y: np.ndarray) -> np.ndarray:
    """Indices k with a sign change of ``y`` on ``[k, k+1]``."""
    sy = np.sign(y)
    straddle = np.nonzero(sy[:-1] * sy[1:] < 0)[0]
    on_sample = np.nonzero(sy == 0)[0]
    return np.union1d(straddle, on_sample).astype(int)


def _refine(f, a: float, b: float) -> float:
    fa, fb = f(a), f(b)
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    return brentq(f, a, b, xtol=1e-15 * a, rtol=4 * np.finfo(float).eps, maxiter=200)


def _continuous_phase(g: FractionalTF, ref: float):
    """Phase of ``g`` on the branch nearest to ``ref``."""
    def phase(w):
        v = complex(freqresp(g, [w])[0])
        return ref + math.remainder(math.atan2(v.imag, v.real) - ref, 2.0 * math.pi)
    return phase


def margins(resp: FrequencyResponseSet) -> Margins:
    """Gain and phase margins of an open-loop response.

    The phase crossover is where the unwrapped phase crosses ``-pi``; the
    gain crossover is where the magnitude crosses 0 dB.  Both are bracketed
    on the samples and then solved on the continuous model (when
    ``resp.system`` is known) so the result does not depend on grid density.
    """
    w, g = resp.omegas, resp.system
    mag_db, phase = resp.mag_db, resp.phase_rad
    if len(w) < 2:
        return Margins()

    pc = _crossings(phase + math.pi)
    gc = _crossings(mag_db)

    gm_db = w_pc = pm = w_gc = None
    if len(pc):
        k = int(pc[0])
        if k == len(w) - 1:
            w_pc = float(w[k])
        elif g is not None:
            ph = _continuous_phase(g, 0.5 * (phase[k] + phase[k + 1]))
            w_pc = _refine(lambda x: ph(x) + math.pi, float(w[k]), float(w[k + 1]))
        else:
            w_pc = _interp_root(w, phase + math.pi, k)
        gm_db = -_mag_db_at(resp, w_pc, k)
    if len(gc):
        k = int(gc[0])
        if k == len(w) - 1:
            w_gc = float(w[k])
        elif g is not None:
            w_gc = _refine(lambda x: 20.0 * math.log10(abs(complex(freqresp(g, [x])[0]))),
                           float(w[k]), float(w[k + 1]))
        else:
            w_gc = _interp_root(w, mag_db, k)
        pm = 180.0 + math.degrees(_phase_at(resp, w_gc, k))
    return Margins(gm_db, w_pc, pm, w_gc, len(pc), len(gc))


def _interp_root(w, y, k) -> float:
    if k == len(w) - 1 or y[k] == 0.0:
        return float(w[k])
    lw = np.log10(w[k:k + 2])
    t = y[k] / (y[k] - y[k + 1])
    return float(10.0 ** (lw[0] + t * (lw[1] - lw[0])))


def _mag_db_at(resp, x, k) -> float:
    if resp.system is not None:
        return 20.0 * math.log10(abs(complex(freqresp(resp.system, [x])[0])))
    return float(np.interp(math.log10(x), np.log10(resp.omegas), resp.mag_db))


def _phase_at(resp, x, k) -> float:
    if resp.system is not None:
        j = min(k + 1, len(resp.omegas) - 1)
        ref = 0.5 * (resp.phase_rad[k] + resp.phase_rad[j])
        return _continuous_phase(resp.system, ref)(x)
    return float(np.interp(math.log10(x), np.log10(resp.omegas), resp.phase_rad))
