"""``fracfreq`` command-line front end.

Exit status: 0 on success, 1 on any input or analysis error (one-line
diagnostic on stderr), 2 when a stability verdict is indeterminate.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import math
import os
import sys

import numpy as np

from . import identify, io
from .model import compose_open_loop
from .response import (DEFAULT_OMEGA_MAX, DEFAULT_OMEGA_MIN, DEFAULT_POINTS_PER_DECADE,
                       FrequencySweep, margins, sweep)
from .stability import assess_stability, nyquist_curve

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_INDETERMINATE = 2

PPD_ENV = "FRACFREQ_POINTS_PER_DECADE"


def _default_ppd() -> int:
    raw = os.environ.get(PPD_ENV)
    if raw is None:
        return DEFAULT_POINTS_PER_DECADE
    try:
        return int(raw)
    except ValueError:
        raise ValueError("%s must be an integer (got %r)" % (PPD_ENV, raw)) from None


def _jsonable(x):
    if isinstance(x, float) and not math.isfinite(x):
        return None
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.generic):
        return _jsonable(x.item())
    return x


@contextlib.contextmanager
def _output(path):
    if path in (None, "-"):
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def _emit_json(payload: dict, path) -> None:
    with _output(path) as fh:
        json.dump(_jsonable(payload), fh, indent=2)
        fh.write("\n")


def _sweep_from(args) -> FrequencySweep:
    ppd = args.points_per_decade if args.points_per_decade is not None else _default_ppd()
    return FrequencySweep(args.omega_min, args.omega_max, ppd)


def _system_from(args):
    """Open loop: the plant alone, or controller * plant when a controller is given."""
    plant = io.load_tf(args.plant)
    if getattr(args, "controller", None):
        return compose_open_loop(io.load_controller(args.controller), plant)
    return plant


def _config(args, s=None, **extra) -> dict:
    cfg = {"command": args.command}
    for name in ("plant", "controller"):
        if getattr(args, name, None):
            cfg[name] = getattr(args, name)
    if s is not None:
        cfg.update(s.to_dict())
    cfg.update(extra)
    return cfg


def cmd_bode(args) -> int:
    g = _system_from(args)
    s = _sweep_from(args)
    resp = sweep(g, s)
    with _output(args.output) as fh:
        if args.format == "json":
            json.dump(_jsonable({
                "omega": resp.omegas.tolist(), "re": resp.values.real.tolist(),
                "im": resp.values.imag.tolist(), "mag_db": resp.mag_db.tolist(),
                "phase_deg": resp.phase_deg.tolist(), "excluded": list(resp.excluded),
                "config": _config(args, s)}), fh, indent=2)
            fh.write("\n")
        else:
            io.write_response_csv(resp, fh)
    if args.svg:
        from .plotting import bode_svg
        bode_svg(resp, args.svg, margins(resp), title=str(g))
    return EXIT_OK


def cmd_nyquist(args) -> int:
    g = _system_from(args)
    s = _sweep_from(args)
    curve = nyquist_curve(g, s, mirror=args.mirror)
    with _output(args.output) as fh:
        if args.format == "json":
            json.dump(_jsonable({
                "omega": curve.signed_omegas.tolist(), "re": curve.points.real.tolist(),
                "im": curve.points.imag.tolist(), "mirrored": curve.mirrored,
                "excluded": list(curve.excluded), "config": _config(args, s)}), fh, indent=2)
            fh.write("\n")
        else:
            io.write_curve_csv(curve, fh)
    if args.svg:
        from .plotting import nyquist_svg
        nyquist_svg(curve, args.svg, title=str(g), zoom=args.zoom)
    return EXIT_OK


def cmd_margins(args) -> int:
    g = _system_from(args)
    s = _sweep_from(args)
    m = margins(sweep(g, s))
    payload = m.to_dict()
    payload["gain_margin"] = m.gain_margin
    payload["multiple_crossings"] = m.multiple_crossings
    payload["config"] = _config(args, s)
    _emit_json(payload, args.output)
    return EXIT_OK


def cmd_stability(args) -> int:
    g = _system_from(args)
    s = _sweep_from(args)
    v = assess_stability(g, s)
    payload = v.to_dict()
    payload["config"] = _config(args, s, marginal_tolerance=1e-6)
    _emit_json(payload, args.output)
    return EXIT_INDETERMINATE if v.verdict == "indeterminate" else EXIT_OK


def cmd_compose(args) -> int:
    g = _system_from(args)
    payload = g.to_dict()
    payload["config"] = _config(args)
    _emit_json(payload, args.output)
    return EXIT_OK


def _float_list(text: str):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError("expected comma-separated numbers, got %r" % text)


def cmd_fit(args) -> int:
    with open(args.data, newline="") as fh:
        data = io.read_measured_csv(fh)
    weighting = args.weighting
    if weighting == "unit":
        data = data.with_weights(np.ones(len(data)))
    elif weighting == "relative":
        data = data.with_weights(identify.relative_weights(data))

    if args.free_exponents:
        structure = identify.ModelStructure.with_free_exponents(
            args.num_exponents, args.den_exponents, args.pinned)
        result = identify.fit_nonlinear(data, structure, bounds=(args.exponent_min, args.exponent_max),
                                        reweight=not args.no_reweight,
                                        max_evaluations=args.max_evaluations)
    else:
        structure = identify.ModelStructure(args.num_exponents, args.den_exponents,
                                            pinned=args.pinned)
        result = identify.fit_linear(data, structure, reweight=not args.no_reweight)

    payload = result.to_dict()
    payload["config"] = _config(
        args, data=args.data, weighting=weighting, reweight=not args.no_reweight,
        free_exponents=args.free_exponents, exponent_bounds=[args.exponent_min, args.exponent_max],
        simplex_spread=identify.SIMPLEX_SPREAD, max_evaluations=args.max_evaluations,
        pinned_den_index=structure.pinned, samples=len(data))
    _emit_json(payload, args.output)
    if args.model_out:
        with open(args.model_out, "w") as fh:
            fh.write(io.tf_to_json(result.model) + "\n")
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    # usage errors are input errors (status 1); 2 is reserved for indeterminate verdicts
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, "%s: error: %s\n" % (self.prog, message))


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(
        prog="fracfreq",
        description="Frequency-domain analysis and identification of fractional-order "
                    "control systems.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, with_sweep=True, fmt=None):
        sp.add_argument("--plant", required=True,
                        help="plant TF: text like '1/(0.8 s^2.2 + 0.5 s^0.9 + 1)', "
                             "TF JSON, or a file containing either")
        sp.add_argument("--controller",
                        help="controller JSON {K,Ti,Td,lambda,delta} or {C,xi,omega_n,...}, "
                             "TF text, or a file; composed in series with the plant")
        sp.add_argument("-o", "--output", help="output file (default: stdout)")
        if with_sweep:
            sp.add_argument("--omega-min", type=float, default=DEFAULT_OMEGA_MIN)
            sp.add_argument("--omega-max", type=float, default=DEFAULT_OMEGA_MAX)
            sp.add_argument("--points-per-decade", type=int, default=None,
                            help="default %d or $%s" % (DEFAULT_POINTS_PER_DECADE, PPD_ENV))
        if fmt:
            sp.add_argument("--format", choices=fmt, default=fmt[0])

    sp = sub.add_parser("bode", help="Bode data (CSV) and optional SVG")
    common(sp, fmt=["csv", "json"])
    sp.add_argument("--svg", help="also write a Bode plot to this SVG file")
    sp.set_defaults(func=cmd_bode)

    sp = sub.add_parser("nyquist", help="Nyquist curve (CSV) and optional SVG")
    common(sp, fmt=["csv", "json"])
    sp.add_argument("--mirror", action="store_true", help="append the conjugate branch")
    sp.add_argument("--svg", help="also write a Nyquist plot to this SVG file")
    sp.add_argument("--zoom", type=float, help="SVG axis half-width around the origin")
    sp.set_defaults(func=cmd_nyquist)

    sp = sub.add_parser("margins", help="gain and phase margins (JSON)")
    common(sp)
    sp.set_defaults(func=cmd_margins)

    sp = sub.add_parser("stability", help="closed-loop stability verdict (JSON)")
    common(sp)
    sp.set_defaults(func=cmd_stability)

    sp = sub.add_parser("compose", help="controller * plant as canonical TF JSON")
    common(sp, with_sweep=False)
    sp.set_defaults(func=cmd_compose)

    sp = sub.add_parser("fit", help="fit a fractional model to measured data (JSON)")
    sp.add_argument("--data", required=True, help="CSV with columns omega,re,im[,weight]")
    sp.add_argument("--num-exponents", type=_float_list, required=True)
    sp.add_argument("--den-exponents", type=_float_list, required=True)
    sp.add_argument("--free-exponents", action="store_true",
                    help="also fit all nonzero exponents (Nelder-Mead), using the given "
                         "ones as the initial guess")
    sp.add_argument("--pinned", type=int, default=None,
                    help="index of the denominator coefficient fixed to 1 "
                         "(default: lowest exponent)")
    sp.add_argument("--weighting", choices=["file", "unit", "relative"], default="file",
                    help="file: weight column if present else 1; relative: 1/|F|")
    sp.add_argument("--no-reweight", action="store_true",
                    help="single equation-error pass, no Sanathanan-Koerner iterations")
    sp.add_argument("--exponent-min", type=float, default=identify.EXPONENT_BOUNDS[0])
    sp.add_argument("--exponent-max", type=float, default=identify.EXPONENT_BOUNDS[1])
    sp.add_argument("--max-evaluations", type=int, default=identify.MAX_EVALUATIONS)
    sp.add_argument("-o", "--output", help="result JSON (default: stdout)")
    sp.add_argument("--model-out", help="also write the fitted model as TF JSON")
    sp.set_defaults(func=cmd_fit)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, ArithmeticError, OSError, KeyError, TypeError) as exc:
        msg = " ".join(str(exc).split()) or exc.__class__.__name__
        print("fracfreq: error: %s" % msg, file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
