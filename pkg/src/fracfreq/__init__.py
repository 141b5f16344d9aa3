"""Frequency-domain modelling, analysis and identification of fractional-order
control systems."""

from .model import (
    FactoredController,
    FractionalPolynomial,
    FractionalTerm,
    FractionalTF,
    PilDController,
    SingularEvaluationError,
    compose_open_loop,
    controller_to_tf,
    dc_gain,
    eval_polynomial,
    eval_power,
    eval_tf,
    factored_to_pild,
    freqresp,
)
from .response import FrequencyResponseSet, FrequencySweep, Margins, margins, sweep, unwrap_phase
from .stability import (
    NyquistCurve,
    StabilityVerdict,
    assess_stability,
    nyquist_curve,
    winding_number,
)

__version__ = "0.1.0"
