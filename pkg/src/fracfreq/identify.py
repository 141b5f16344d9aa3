"""Fit fractional transfer functions to measured frequency responses.

The objective is the weighted quadratic criterion

    Q = sum_m W(omega_m)**2 * |F(omega_m) - G(j*omega_m)|**2

Coefficients for fixed exponents come from the equation-error (Levy)
linearisation ``|F*D - N|**2`` with optional Sanathanan-Koerner reweighting;
free exponents are searched with Nelder-Mead, each trial solving the linear
problem for its coefficients.  ``Q`` reported on a result is always the true
criterion above, never the linearised one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import scipy.linalg
from scipy.optimize import minimize

from .model import FractionalPolynomial, FractionalTF, SingularEvaluationError, freqresp
from .model import _unit_phasor

__all__ = [
    "MeasuredResponse",
    "ModelStructure",
    "FitResult",
    "RankDeficientError",
    "criterion",
    "fit_linear",
    "fit_nonlinear",
    "relative_weights",
]

SK_MAX_PASSES = 20
SK_TOL = 1e-10
EXPONENT_BOUNDS = (0.0, 5.0)
SIMPLEX_SPREAD = 0.25
SIMPLEX_DIAMETER = 1e-6
MAX_EVALUATIONS = 2000


class RankDeficientError(ValueError):
    """The least-squares system does not determine all free coefficients."""


@dataclass(frozen=True)
class MeasuredResponse:
    """Measured samples ``F(omega_m)`` with weights ``W(omega_m)``."""

    omegas: np.ndarray
    values: np.ndarray
    weights: Optional[np.ndarray] = None

    def __post_init__(self):
        w = np.asarray(self.omegas, dtype=float).ravel()
        f = np.asarray(self.values, dtype=complex).ravel()
        wt = np.ones_like(w) if self.weights is None else np.asarray(self.weights, dtype=float).ravel()
        if not (len(w) == len(f) == len(wt)):
            raise ValueError("omegas, values and weights must have equal length")
        if len(w) == 0:
            raise ValueError("no measured samples")
        if np.any(w <= 0.0) or not np.all(np.isfinite(w)):
            raise ValueError("measured frequencies must be finite and > 0")
        if np.any(np.diff(w) <= 0.0):
            raise ValueError("measured frequencies must be strictly ascending")
        if not np.all(np.isfinite(f)):
            raise ValueError("measured values must be finite")
        if np.any(wt < 0.0) or not np.all(np.isfinite(wt)):
            raise ValueError("weights must be finite and >= 0")
        if not np.any(wt > 0.0):
            raise ValueError("at least one weight must be positive")
        for name, arr in (("omegas", w), ("values", f), ("weights", wt)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def from_model(cls, g: FractionalTF, omegas, weights=None) -> "MeasuredResponse":
        """Noise-free 'measurement' of ``g``."""
        omegas = np.asarray(omegas, dtype=float)
        return cls(omegas, freqresp(g, omegas), weights)

    def with_weights(self, weights) -> "MeasuredResponse":
        return MeasuredResponse(self.omegas, self.values, weights)

    def active(self) -> "MeasuredResponse":
        """Copy without the zero-weight samples."""
        keep = self.weights > 0.0
        return MeasuredResponse(self.omegas[keep], self.values[keep], self.weights[keep])

    def __len__(self):
        return len(self.omegas)


def relative_weights(data: MeasuredResponse) -> np.ndarray:
    """``W = 1/|F|``; samples with ``F == 0`` get weight 0."""
    mag = np.abs(data.values)
    out = np.zeros_like(mag)
    np.divide(1.0, mag, out=out, where=mag > 0.0)
    return out


@dataclass(frozen=True)
class ModelStructure:
    """Exponent layout of the model to be fitted.

    ``num_free``/``den_free`` mark which exponents the nonlinear fit may move
    (default: none).  ``pinned`` is the denominator index whose coefficient
    is fixed to 1 to remove the common-scaling freedom of ``N/D``; ``None``
    selects the lowest denominator exponent.
    """

    num_exponents: tuple
    den_exponents: tuple
    num_free: Optional[tuple] = None
    den_free: Optional[tuple] = None
    pinned: Optional[int] = None

    def __post_init__(self):
        ne = tuple(float(e) for e in self.num_exponents)
        de = tuple(float(e) for e in self.den_exponents)
        if not ne:
            raise ValueError("structure needs at least one numerator exponent")
        if not de:
            raise ValueError("structure needs at least one denominator exponent")
        if not all(math.isfinite(e) for e in ne + de):
            raise ValueError("exponents must be finite")
        nf = tuple(bool(x) for x in (self.num_free or (False,) * len(ne)))
        df = tuple(bool(x) for x in (self.den_free or (False,) * len(de)))
        if len(nf) != len(ne) or len(df) != len(de):
            raise ValueError("free flags must match the exponent lists")
        pinned = self.pinned
        if pinned is None:
            pinned = int(np.argmin(de))
        if not 0 <= pinned < len(de):
            raise ValueError("pinned coefficient must belong to the denominator")
        object.__setattr__(self, "num_exponents", ne)
        object.__setattr__(self, "den_exponents", de)
        object.__setattr__(self, "num_free", nf)
        object.__setattr__(self, "den_free", df)
        object.__setattr__(self, "pinned", int(pinned))

    @classmethod
    def with_free_exponents(cls, num_exponents, den_exponents, pinned=None) -> "ModelStructure":
        """All nonzero exponents free, exponent-0 terms fixed."""
        ne, de = tuple(num_exponents), tuple(den_exponents)
        return cls(ne, de, tuple(e != 0 for e in ne), tuple(e != 0 for e in de), pinned)

    @property
    def n_coefficients(self) -> int:
        return len(self.num_exponents) + len(self.den_exponents) - 1

    @property
    def n_free_exponents(self) -> int:
        return sum(self.num_free) + sum(self.den_free)

    def free_values(self) -> np.ndarray:
        vals = [e for e, f in zip(self.num_exponents, self.num_free) if f]
        vals += [e for e, f in zip(self.den_exponents, self.den_free) if f]
        return np.array(vals, dtype=float)

    def with_free_values(self, x) -> "ModelStructure":
        it = iter(float(v) for v in x)
        ne = tuple(next(it) if f else e for e, f in zip(self.num_exponents, self.num_free))
        de = tuple(next(it) if f else e for e, f in zip(self.den_exponents, self.den_free))
        return ModelStructure(ne, de, self.num_free, self.den_free, self.pinned)

    def to_dict(self) -> dict:
        return {"num_exponents": list(self.num_exponents),
                "den_exponents": list(self.den_exponents),
                "num_free": list(self.num_free), "den_free": list(self.den_free),
                "pinned_den_index": self.pinned}


@dataclass(frozen=True)
class FitResult:
    model: FractionalTF
    q_value: float
    iterations: int
    converged: bool
    evaluations: int = 0
    structure: Optional[ModelStructure] = None

    def to_dict(self) -> dict:
        out = {"model": self.model.to_dict(), "q_value": self.q_value,
               "iterations": self.iterations, "converged": self.converged,
               "evaluations": self.evaluations}
        if self.structure is not None:
            out["structure"] = self.structure.to_dict()
        return out


def criterion(g: FractionalTF, data: MeasuredResponse) -> float:
    """Weighted sum of squared complex residuals ``W**2 * |F - G|**2``.

    Summed with :func:`math.fsum`, so zero-weight samples contribute nothing
    and dropping them leaves the value bit-identical.
    """
    resid = data.values - freqresp(g, data.omegas)
    terms = (data.weights ** 2) * (resid.real ** 2 + resid.imag ** 2)
    return math.fsum(terms.tolist())


def _basis(omegas: np.ndarray, exponents: Sequence[float]) -> np.ndarray:
    """Columns ``(j*omega)**e`` for each exponent."""
    return np.column_stack([_unit_phasor(e) * np.power(omegas, e) for e in exponents])


def _equation_error_system(data: MeasuredResponse, structure: ModelStructure, row_weights):
    """Real least-squares system ``A x ~ b`` of the Levy linearisation.

    Unknowns are the numerator coefficients followed by the denominator
    coefficients without the pinned one.
    """
    w, f = data.omegas, data.values
    p = structure.pinned
    num_basis = _basis(w, structure.num_exponents)
    den_basis = _basis(w, structure.den_exponents)
    free_den = [k for k in range(len(structure.den_exponents)) if k != p]
    # W * (F*D - N) = 0  ->  F*sum(a_k phi_k) - sum(b_k psi_k) = -F*phi_p
    cols = np.hstack([-num_basis, f[:, None] * den_basis[:, free_den]])
    rhs = -f * den_basis[:, p]
    cols = row_weights[:, None] * cols
    rhs = row_weights * rhs
    A = np.vstack([cols.real, cols.imag])
    b = np.concatenate([rhs.real, rhs.imag])
    return A, b


def _column_labels(structure: ModelStructure):
    labels = ["numerator s^%g" % e for e in structure.num_exponents]
    labels += ["denominator s^%g" % e for k, e in enumerate(structure.den_exponents)
               if k != structure.pinned]
    return labels


def _solve(A: np.ndarray, b: np.ndarray, structure: ModelStructure) -> np.ndarray:
    """Least squares via column-pivoted QR on a column-equilibrated matrix."""
    scale = np.linalg.norm(A, axis=0)
    if np.any(scale == 0.0) or not np.all(np.isfinite(scale)):
        bad = [lab for lab, s in zip(_column_labels(structure), scale) if not (s > 0 and np.isfinite(s))]
        raise RankDeficientError("no information on coefficient(s): %s" % ", ".join(bad))
    As = A / scale
    Q, R, perm = scipy.linalg.qr(As, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    tol = diag[0] * max(As.shape) * np.finfo(float).eps * 10
    rank = int(np.sum(diag > tol))
    if rank < A.shape[1]:
        labels = _column_labels(structure)
        dependent = [labels[i] for i in perm[rank:]]
        raise RankDeficientError(
            "collinear terms, cannot separate: %s" % ", ".join(dependent))
    y = scipy.linalg.solve_triangular(R, Q.T @ b)
    x = np.empty_like(y)
    x[perm] = y
    return x / scale


def _assemble(x: np.ndarray, structure: ModelStructure) -> FractionalTF:
    nn = len(structure.num_exponents)
    b = x[:nn]
    a = list(x[nn:])
    a.insert(structure.pinned, 1.0)
    num = FractionalPolynomial(tuple(zip(b, structure.num_exponents)))
    den = FractionalPolynomial(tuple(zip(a, structure.den_exponents)))
    return FractionalTF(num, den)


def fit_linear(data: MeasuredResponse, structure: ModelStructure,
               reweight: bool = True, max_passes: int = SK_MAX_PASSES) -> FitResult:
    """Coefficients for fixed exponents.

    The first pass minimises ``sum W**2 |F*D - N|**2``.  With ``reweight``
    each further pass divides the row weights by ``|D|`` from the previous
    pass (Sanathanan-Koerner), stopping when the coefficients change by less
    than 1e-10 relative or after ``max_passes`` passes.

    Raises
    ------
    RankDeficientError
        Fewer (real) equations than unknowns, or collinear basis columns.
    """
    data = data.active()
    if len(data) < structure.n_coefficients:
        raise RankDeficientError(
            "%d samples cannot determine %d free coefficients"
            % (len(data), structure.n_coefficients))
    den_basis = _basis(data.omegas, structure.den_exponents)
    row_w = data.weights.copy()
    x = _solve(*_equation_error_system(data, structure, row_w), structure)
    passes, converged = 1, not reweight
    while reweight and passes < max_passes:
        a = list(x[len(structure.num_exponents):])
        a.insert(structure.pinned, 1.0)
        dmag = np.abs(den_basis @ np.asarray(a))
        if np.any(dmag == 0.0) or not np.all(np.isfinite(dmag)):
            break
        x_new = _solve(*_equation_error_system(data, structure, data.weights / dmag), structure)
        passes += 1
        change = np.max(np.abs(x_new - x) / np.maximum(np.abs(x_new), np.finfo(float).tiny))
        x = x_new
        if change < SK_TOL:
            converged = True
            break
    model = _assemble(x, structure)
    return FitResult(model, criterion(model, data), passes, converged, 1, structure)


def _initial_simplex(x0: np.ndarray, bounds) -> np.ndarray:
    lo, hi = bounds
    n = len(x0)
    simplex = np.tile(x0, (n + 1, 1))
    for i in range(n):
        step = SIMPLEX_SPREAD if x0[i] + SIMPLEX_SPREAD <= hi else -SIMPLEX_SPREAD
        simplex[i + 1, i] = x0[i] + step
    return np.clip(simplex, lo, hi)


def fit_nonlinear(data: MeasuredResponse, structure: ModelStructure, init=None,
                  bounds=EXPONENT_BOUNDS, reweight: bool = True,
                  max_evaluations: int = MAX_EVALUATIONS) -> FitResult:
    """Fit coefficients and the free exponents of ``structure``.

    ``init`` gives starting values for the free exponents (numerator ones
    first, in structure order); by default the exponents in ``structure``
    are used.  Nelder-Mead moves the exponents inside ``bounds``; every
    trial point solves :func:`fit_linear` and scores the true criterion.
    The search stops when the simplex is smaller than 1e-6 in every
    exponent or after ``max_evaluations`` criterion evaluations, whichever
    comes first; ``converged`` tells which.
    """
    n = structure.n_free_exponents
    if n == 0:
        return fit_linear(data, structure, reweight=reweight)
    x0 = structure.free_values() if init is None else np.asarray(init, dtype=float)
    if x0.shape != (n,):
        raise ValueError("init must give %d exponent values" % n)
    lo, hi = bounds
    x0 = np.clip(x0, lo, hi)
    data = data.active()

    cache = {}

    def objective(x):
        key = tuple(float(v) for v in x)
        if key not in cache:
            try:
                cache[key] = fit_linear(data, structure.with_free_values(key), reweight=reweight)
            except (RankDeficientError, SingularEvaluationError, np.linalg.LinAlgError):
                cache[key] = None
        fit = cache[key]
        return math.inf if fit is None else fit.q_value

    simplex = _initial_simplex(x0, bounds)
    if not any(math.isfinite(objective(v)) for v in simplex):
        raise ValueError("every vertex of the initial simplex gives a singular fit")
    # an iteration may spend up to n + 1 evaluations past scipy's budget check
    res = minimize(
        objective, x0, method="Nelder-Mead", bounds=[bounds] * n,
        options={"initial_simplex": simplex, "xatol": 0.5 * SIMPLEX_DIAMETER,
                 "fatol": math.inf, "maxfev": max_evaluations - (n + 1),
                 "maxiter": 10 ** 9})
    objective(res.x)
    best = cache[tuple(float(v) for v in res.x)]
    return FitResult(best.model, best.q_value, int(res.nit), bool(res.success),
                     len(cache), best.structure)
