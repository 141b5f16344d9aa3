"""Fractional-order transfer functions and PI^lambda D^delta controllers.

A fractional transfer function is a ratio of two sums of terms
``c * (j*omega)**e`` with arbitrary real exponents ``e``.  Everything here is
immutable and evaluated exactly (no rational approximation) on the principal
branch ``j = exp(i*pi/2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

import numpy as np

__all__ = [
    "FractionalTerm",
    "FractionalPolynomial",
    "FractionalTF",
    "PilDController",
    "FactoredController",
    "SingularEvaluationError",
    "EXPONENT_TOL",
    "SINGULAR_FLOOR",
    "eval_power",
    "eval_polynomial",
    "eval_tf",
    "freqresp",
    "dc_gain",
    "controller_to_tf",
    "factored_to_pild",
    "compose_open_loop",
]

#: Exponents closer than this are treated as equal and merged.
EXPONENT_TOL = 1e-12
#: Denominator magnitudes below this flag a singular evaluation.
SINGULAR_FLOOR = 1e-300


class SingularEvaluationError(ArithmeticError):
    """Denominator magnitude fell below :data:`SINGULAR_FLOOR` (or overflowed)."""

    def __init__(self, omegas):
        self.omegas = tuple(float(w) for w in np.atleast_1d(omegas))
        super().__init__(
            "singular evaluation (|denominator| < %g or overflow) at omega = %s"
            % (SINGULAR_FLOOR, ", ".join("%.17g" % w for w in self.omegas)))


def _unit_phasor(alpha: float) -> complex:
    """Return ``exp(i*alpha*pi/2)`` with exact values on quarter turns."""
    r = math.fmod(alpha, 4.0)
    if r < 0.0:
        r += 4.0
    if r == int(r):
        return (1.0 + 0.0j, 1.0j, -1.0 + 0.0j, -1.0j)[int(r) % 4]
    if r > 2.0:
        r -= 4.0
    theta = r * math.pi / 2.0
    return complex(math.cos(theta), math.sin(theta))


def _check_omegas(omega) -> np.ndarray:
    w = np.asarray(omega, dtype=float)
    if not np.all(np.isfinite(w)) or np.any(w <= 0.0):
        raise ValueError("omega must be finite and > 0 (got %r)" % (omega,))
    return w


@dataclass(frozen=True)
class FractionalTerm:
    """One ``coefficient * (j*omega)**exponent`` term."""

    coefficient: float
    exponent: float

    def __post_init__(self):
        c, e = float(self.coefficient), float(self.exponent)
        if not (math.isfinite(c) and math.isfinite(e)):
            raise ValueError("term coefficient and exponent must be finite")
        object.__setattr__(self, "coefficient", c)
        object.__setattr__(self, "exponent", e)


TermLike = Union[FractionalTerm, Sequence[float]]


def _as_term(t: TermLike) -> FractionalTerm:
    if isinstance(t, FractionalTerm):
        return t
    c, e = t
    return FractionalTerm(c, e)


def _canonical_terms(terms: Iterable[TermLike]) -> tuple:
    items = sorted((_as_term(t) for t in terms), key=lambda t: t.exponent)
    if not items:
        raise ValueError("a fractional polynomial needs at least one term")
    merged = []
    for t in items:
        if merged and t.exponent - merged[-1][1] <= EXPONENT_TOL:
            merged[-1][0] += t.coefficient
        else:
            merged.append([t.coefficient, t.exponent])
    out = tuple(FractionalTerm(c, e) for c, e in merged if c != 0.0)
    if not out:
        # The zero polynomial keeps a single zero term.
        out = (FractionalTerm(0.0, 0.0),)
    return out


@dataclass(frozen=True)
class FractionalPolynomial:
    """Sum of fractional terms in canonical form.

    Terms are sorted by ascending exponent, exponents within
    :data:`EXPONENT_TOL` are merged by adding coefficients, and terms with a
    zero coefficient are dropped (the zero polynomial keeps ``0 * s**0``).
    Plain ``(coefficient, exponent)`` pairs are accepted in place of
    :class:`FractionalTerm`.
    """

    terms: tuple

    def __post_init__(self):
        object.__setattr__(self, "terms", _canonical_terms(self.terms))

    @classmethod
    def from_pairs(cls, coefficients, exponents) -> "FractionalPolynomial":
        coefficients, exponents = list(coefficients), list(exponents)
        if len(coefficients) != len(exponents):
            raise ValueError("coefficients and exponents differ in length")
        return cls(tuple(zip(coefficients, exponents)))

    @property
    def coefficients(self) -> tuple:
        return tuple(t.coefficient for t in self.terms)

    @property
    def exponents(self) -> tuple:
        return tuple(t.exponent for t in self.terms)

    def is_zero(self) -> bool:
        return all(t.coefficient == 0.0 for t in self.terms)

    def scaled(self, factor: float) -> "FractionalPolynomial":
        return FractionalPolynomial(
            tuple((t.coefficient * factor, t.exponent) for t in self.terms))

    def __mul__(self, other: "FractionalPolynomial") -> "FractionalPolynomial":
        if not isinstance(other, FractionalPolynomial):
            return NotImplemented
        return FractionalPolynomial(tuple(
            (a.coefficient * b.coefficient, a.exponent + b.exponent)
            for a in self.terms for b in other.terms))

    def __call__(self, omega):
        return freqresp_poly(self, omega)

    def to_list(self) -> list:
        return [{"c": t.coefficient, "e": t.exponent} for t in self.terms]

    @classmethod
    def from_list(cls, items) -> "FractionalPolynomial":
        try:
            return cls(tuple((float(d["c"]), float(d["e"])) for d in items))
        except (KeyError, TypeError) as exc:
            raise ValueError("malformed term list: %r" % (items,)) from exc

    def __str__(self):
        parts = []
        for t in self.terms:
            if t.exponent == 0.0:
                parts.append("%.12g" % t.coefficient)
            else:
                parts.append("%.12g s^%.12g" % (t.coefficient, t.exponent))
        return " + ".join(parts).replace("+ -", "- ")


def freqresp_poly(p: FractionalPolynomial, omega) -> np.ndarray:
    """Vectorised evaluation of ``p`` at ``j*omega`` (``omega > 0``)."""
    w = _check_omegas(omega)
    out = np.zeros(w.shape, dtype=complex)
    # overflow shows up as inf/nan and is flagged by the caller
    with np.errstate(over="ignore", invalid="ignore"):
        for t in p.terms:
            if t.coefficient == 0.0:
                continue
            out = out + (t.coefficient * _unit_phasor(t.exponent)) * np.power(w, t.exponent)
    return out


@dataclass(frozen=True)
class FractionalTF:
    """Ratio of two fractional polynomials, ``G(j*omega) = N / D``."""

    num: FractionalPolynomial
    den: FractionalPolynomial = field(
        default_factory=lambda: FractionalPolynomial(((1.0, 0.0),)))

    def __post_init__(self):
        if not isinstance(self.num, FractionalPolynomial):
            object.__setattr__(self, "num", FractionalPolynomial(tuple(self.num)))
        if not isinstance(self.den, FractionalPolynomial):
            object.__setattr__(self, "den", FractionalPolynomial(tuple(self.den)))
        if self.den.is_zero():
            raise ValueError("denominator has no nonzero coefficient")

    @classmethod
    def gain(cls, k: float) -> "FractionalTF":
        return cls(FractionalPolynomial(((k, 0.0),)))

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return self.scaled(float(other))
        if not isinstance(other, FractionalTF):
            return NotImplemented
        return FractionalTF(self.num * other.num, self.den * other.den)

    __rmul__ = __mul__

    def scaled(self, k: float) -> "FractionalTF":
        """Return ``k * G`` (numerator coefficients multiplied by ``k``)."""
        return FractionalTF(self.num.scaled(k), self.den)

    def __call__(self, omega):
        return freqresp(self, omega)

    @property
    def high_frequency_exponent(self) -> float:
        """Exponent of the leading-term ratio as omega -> infinity."""
        return self.num.terms[-1].exponent - self.den.terms[-1].exponent

    @property
    def low_frequency_exponent(self) -> float:
        """Exponent of the lowest-term ratio as omega -> 0."""
        return self.num.terms[0].exponent - self.den.terms[0].exponent

    def low_frequency_phase(self) -> float:
        """Asymptotic phase (rad) as omega -> 0+ on the principal branch."""
        c = self.num.terms[0].coefficient / self.den.terms[0].coefficient
        base = 0.0 if c >= 0.0 else math.pi
        return base + self.low_frequency_exponent * math.pi / 2.0

    def is_strictly_proper(self) -> bool:
        return self.high_frequency_exponent < -EXPONENT_TOL

    def to_dict(self) -> dict:
        return {"num": self.num.to_list(), "den": self.den.to_list()}

    @classmethod
    def from_dict(cls, d: dict) -> "FractionalTF":
        if "num" not in d or "den" not in d:
            raise ValueError("transfer-function JSON needs 'num' and 'den'")
        return cls(FractionalPolynomial.from_list(d["num"]),
                   FractionalPolynomial.from_list(d["den"]))

    def __str__(self):
        return "(%s) / (%s)" % (self.num, self.den)


def eval_power(omega: float, alpha: float) -> complex:
    """Principal value of ``(j*omega)**alpha`` for ``omega > 0``.

    Equals ``omega**alpha * exp(i*alpha*pi/2)``; the phase is exactly
    ``alpha*pi/2`` (mod 2*pi) whatever the magnitude.
    """
    omega, alpha = float(omega), float(alpha)
    if not (omega > 0.0 and math.isfinite(omega)):
        raise ValueError("omega must be finite and > 0 (got %r)" % omega)
    if not math.isfinite(alpha):
        raise ValueError("alpha must be finite")
    return _unit_phasor(alpha) * omega ** alpha


def eval_polynomial(p: FractionalPolynomial, omega: float) -> complex:
    return complex(freqresp_poly(p, [omega])[0])


def freqresp(g: FractionalTF, omega) -> np.ndarray:
    """Evaluate ``g`` at every frequency in ``omega``.

    Raises
    ------
    SingularEvaluationError
        If the denominator magnitude is below :data:`SINGULAR_FLOOR` at any
        frequency, or either polynomial overflows; ``omegas`` on the
        exception lists the offending points.
    """
    w = _check_omegas(omega)
    d = freqresp_poly(g.den, w)
    n = freqresp_poly(g.num, w)
    bad = ~(np.abs(d) >= SINGULAR_FLOOR) | ~np.isfinite(d) | ~np.isfinite(n)
    if np.any(bad):
        raise SingularEvaluationError(w[bad])
    return n / d


def eval_tf(g: FractionalTF, omega: float) -> complex:
    return complex(freqresp(g, [omega])[0])


def dc_gain(g: FractionalTF) -> float:
    """Limit of ``g(j*omega)`` as ``omega -> 0+``.

    Only the lowest-exponent terms of numerator and denominator matter.  The
    limit is their coefficient ratio when the exponents agree, zero when the
    numerator vanishes faster, and a ``ValueError`` when it is unbounded.
    """
    if g.num.is_zero():
        return 0.0
    d = g.low_frequency_exponent
    if abs(d) <= EXPONENT_TOL:
        return g.num.terms[0].coefficient / g.den.terms[0].coefficient
    if d > 0.0:
        return 0.0
    raise ValueError("dc gain is unbounded: low-frequency behaviour ~ s^%g" % d)


@dataclass(frozen=True)
class PilDController:
    """``K + Ti/(j*omega)**lam + Td*(j*omega)**delta``.

    ``lam = delta = 1`` is the classic PID; ``Ti = 0`` gives a PD^delta
    controller whose ``lam`` is ignored.
    """

    K: float
    Ti: float = 0.0
    Td: float = 0.0
    lam: float = 1.0
    delta: float = 1.0

    def __post_init__(self):
        for name in ("K", "Ti", "Td", "lam", "delta"):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise ValueError("controller parameter %s must be finite" % name)
            object.__setattr__(self, name, v)
        if self.Ti < 0.0 or self.Td < 0.0:
            raise ValueError("Ti and Td must be >= 0")
        if self.lam < 0.0 or self.delta < 0.0:
            raise ValueError("orders lambda and delta must be >= 0")

    def to_dict(self) -> dict:
        return {"K": self.K, "Ti": self.Ti, "Td": self.Td,
                "lambda": self.lam, "delta": self.delta}

    @classmethod
    def from_dict(cls, d: dict) -> "PilDController":
        return cls(K=d.get("K", 0.0), Ti=d.get("Ti", 0.0), Td=d.get("Td", 0.0),
                   lam=d.get("lambda", 1.0), delta=d.get("delta", 1.0))


@dataclass(frozen=True)
class FactoredController:
    """``C * ((s/omega_n)**(delta+lam) + 2*xi*s**lam/omega_n + 1) / s**lam``."""

    C: float
    xi: float
    omega_n: float
    lam: float = 1.0
    delta: float = 1.0

    def __post_init__(self):
        for name in ("C", "xi", "omega_n", "lam", "delta"):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise ValueError("controller parameter %s must be finite" % name)
            object.__setattr__(self, name, v)
        if self.omega_n <= 0.0:
            raise ValueError("omega_n must be > 0")
        if self.lam < 0.0 or self.delta < 0.0:
            raise ValueError("orders lambda and delta must be >= 0")

    def to_dict(self) -> dict:
        return {"C": self.C, "xi": self.xi, "omega_n": self.omega_n,
                "lambda": self.lam, "delta": self.delta}

    @classmethod
    def from_dict(cls, d: dict) -> "FactoredController":
        return cls(C=d["C"], xi=d["xi"], omega_n=d["omega_n"],
                   lam=d.get("lambda", 1.0), delta=d.get("delta", 1.0))


def factored_to_pild(f: FactoredController) -> PilDController:
    """Expand the factored form into ``K + Ti/s**lam + Td*s**delta``."""
    if f.omega_n <= 0.0:
        raise ValueError("omega_n must be > 0")
    return PilDController(
        K=2.0 * f.C * f.xi / f.omega_n,
        Ti=f.C,
        Td=f.C / f.omega_n ** (f.delta + f.lam),
        lam=f.lam,
        delta=f.delta,
    )


def controller_to_tf(c) -> FractionalTF:
    """Controller as a single fraction over ``(j*omega)**lam``.

    With ``Ti == 0`` the common denominator is dropped so PD^delta controllers
    carry no removable singularity at ``omega -> 0``.
    """
    if isinstance(c, FactoredController):
        c = factored_to_pild(c)
    if c.Ti == 0.0:
        num = FractionalPolynomial(((c.K, 0.0), (c.Td, c.delta)))
        return FractionalTF(num, FractionalPolynomial(((1.0, 0.0),)))
    num = FractionalPolynomial(
        ((c.Ti, 0.0), (c.K, c.lam), (c.Td, c.delta + c.lam)))
    return FractionalTF(num, FractionalPolynomial(((1.0, c.lam),)))


def compose_open_loop(c, g: FractionalTF) -> FractionalTF:
    """Series connection controller -> plant.

    ``c`` may be a :class:`PilDController`, a :class:`FactoredController` or
    a :class:`FractionalTF`.
    """
    if not isinstance(c, FractionalTF):
        c = controller_to_tf(c)
    return c * g
