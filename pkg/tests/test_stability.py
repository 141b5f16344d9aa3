import math

import numpy as np
import pytest

from fracfreq.model import FractionalTF, eval_tf
from fracfreq.response import FrequencySweep, margins, sweep
from fracfreq.stability import (
    CriticalPointOnCurve,
    IndeterminateWinding,
    NyquistCurve,
    assess_stability,
    branch_winding,
    nyquist_curve,
    winding_number,
)

from oracles import marginal_gain, np_tf

CTRL_NUM = [(50.0, 0.0), (5.326, 1.286)]
PLANT_DEN = [(0.8, 2.2), (0.5, 0.9), (1.0, 0.0)]


def circle(n=200, radius=1.0, center=0.0):
    t = np.linspace(0.0, math.pi, n)
    return NyquistCurve.from_branch(np.linspace(1.0, 2.0, n), center + radius * np.exp(1j * t))


def oracle_winding(num, den, ppd=1024, lo=1e-3, hi=1e3):
    """Angle accumulation about -1 on a dense, explicitly mirrored contour."""
    w = np.logspace(math.log10(lo), math.log10(hi), int(ppd * math.log10(hi / lo)) + 1)
    g = np_tf(num, den, w)
    z = np.concatenate([g, np.conj(g[::-1]), g[:1]]) + 1.0
    return np.sum(np.angle(z[1:] / z[:-1])) / (2 * math.pi)


class TestCurve:
    def test_unit_gain_is_a_point(self):
        c = nyquist_curve(FractionalTF.gain(1.0), FrequencySweep(0.1, 10, 8))
        assert np.all(c.points == 1.0)

    def test_loop_starts_at_fifty(self, open_loop):
        c = nyquist_curve(open_loop, FrequencySweep(1e-6, 1e2, 16))
        assert abs(c.points[0] - 50.0) < 1e-3

    def test_loop_at_one(self, open_loop):
        expected = complex(47.686981849482500715, 4.797522593524350149) * complex(
            1.9645236724435417554, -1.526636164479842364)
        c = nyquist_curve(open_loop, FrequencySweep(0.1, 10.0, 8))
        k = int(np.argmin(np.abs(c.omegas - 1.0)))
        assert c.omegas[k] == pytest.approx(1.0, rel=1e-14)
        assert abs(c.points[k] - expected) < 1e-12 * abs(expected)

    def test_mirror_is_exact_conjugate(self, open_loop):
        c = nyquist_curve(open_loop, FrequencySweep(1e-2, 1e2, 16), mirror=True)
        n = len(c.omegas)
        assert len(c.points) == 2 * n
        assert np.array_equal(c.points[n:], np.conj(c.points[:n][::-1]))
        assert np.array_equal(c.signed_omegas[n:], -c.omegas[::-1])

    def test_unmirrored(self, open_loop):
        c = nyquist_curve(open_loop, FrequencySweep(1e-2, 1e2, 16), mirror=False)
        assert len(c.points) == len(c.omegas)
        with pytest.raises(ValueError):
            winding_number(c)

    def test_excluded_points_warn(self):
        g = FractionalTF([(1.0, 0.0)], [(1.0, 400.0)])
        with pytest.warns(RuntimeWarning):
            c = nyquist_curve(g, FrequencySweep(0.1, 1.0, 8))
        assert len(c.excluded) > 0


class TestWinding:
    def test_unit_circle_around_origin(self):
        assert winding_number(circle(), 0.0) == 1

    def test_center_outside(self):
        assert winding_number(circle(), 3.0) == 0

    def test_clockwise(self):
        c = circle()
        rev = NyquistCurve.from_branch(c.omegas, np.conj(c.positive))
        assert winding_number(rev, 0.0) == -1

    def test_center_on_curve(self):
        with pytest.raises(CriticalPointOnCurve):
            winding_number(circle(), 1.0)

    def test_fractional_accumulation_rejected(self):
        # open spiral: the end is 0.75 turn away from the start
        t = np.linspace(0, 1.5 * math.pi, 50)
        c = NyquistCurve(np.arange(50.0), np.exp(1j * t) * np.linspace(1, 3, 50), True)
        with pytest.raises(IndeterminateWinding):
            winding_number(c, 0.0)

    def test_loop_dense_oracle(self, open_loop):
        assert round(oracle_winding(CTRL_NUM, PLANT_DEN)) == 0
        assert winding_number(nyquist_curve(open_loop)) == 0

    def test_conjugate_closure(self, open_loop, plant):
        for g in (open_loop, plant, plant.scaled(2.0), plant.scaled(0.5)):
            c = nyquist_curve(g)
            for center in (-1.0, -0.5, -3.0, 0.25):
                try:
                    n = winding_number(c, center)
                except CriticalPointOnCurve:
                    continue
                assert n == round(2 * branch_winding(c, center))


class TestVerdict:
    def test_static_gain(self):
        v = assess_stability(FractionalTF.gain(0.5))
        assert v.verdict == "stable" and v.winding_number == 0
        assert v.min_distance_to_critical == pytest.approx(1.5, abs=1e-15)

    def test_loop_stable(self, open_loop):
        v = assess_stability(open_loop)
        assert v.verdict == "stable" and v.winding_number == 0
        assert v.min_distance_to_critical > 0.9
        assert abs(eval_tf(open_loop, v.critical_omega) + 1) == pytest.approx(
            v.min_distance_to_critical, rel=1e-15)

    def test_min_distance_refined(self, open_loop):
        coarse = assess_stability(open_loop, FrequencySweep(1e-3, 1e3, 8))
        fine = assess_stability(open_loop, FrequencySweep(1e-3, 1e3, 512))
        assert coarse.min_distance_to_critical == pytest.approx(fine.min_distance_to_critical, rel=1e-9)
        assert coarse.critical_omega == pytest.approx(fine.critical_omega, rel=1e-4)

    def test_plant_scaled_by_gain_margin_is_marginal(self, plant):
        m = margins(sweep(plant))
        assert m.gain_margin_db > 0
        v = assess_stability(plant.scaled(m.gain_margin))
        assert v.verdict == "marginal"
        assert v.min_distance_to_critical < 1e-6
        # independent: bisection on the gain until k*|G(w_pc)| = 1 at the oracle crossover
        k = marginal_gain([(1, 0)], PLANT_DEN, 0.1, 10.0)
        assert abs(k - m.gain_margin) < 1e-4 * m.gain_margin

    def test_negative_gain_margin_is_unstable(self, plant):
        g = plant.scaled(2.0)
        m = margins(sweep(g))
        assert m.gain_margin_db < 0
        v = assess_stability(g)
        assert v.verdict == "unstable" and v.winding_number == -2

    def test_positive_margins_are_stable(self, plant, open_loop):
        for g in (plant, plant.scaled(0.9), open_loop, open_loop.scaled(3.0)):
            m = margins(sweep(g))
            if m.phase_margin_deg is not None and m.phase_margin_deg > 0 and (
                    m.gain_margin_db is None or m.gain_margin_db > 0):
                assert assess_stability(g).verdict == "stable"

    @pytest.mark.parametrize("order,verdict,n", [(0.5, "stable", 0), (1.0, "stable", 0),
                                                 (1.5, "stable", 0), (2.5, "unstable", -2)])
    def test_fractional_integrators(self, order, verdict, n):
        # s^q + 1 = 0 has roots at arg s = +-pi/q, in the right half-plane iff q > 2
        v = assess_stability(FractionalTF([(1.0, 0.0)], [(1.0, order)]))
        assert (v.verdict, v.winding_number) == (verdict, n)

    def test_type_one_integer_loop(self):
        # 1/(s(s+1)): closed loop s^2 + s + 1 is stable
        v = assess_stability(FractionalTF([(1.0, 0.0)], [(1.0, 1.0), (1.0, 2.0)]))
        assert v.verdict == "stable"

    def test_integer_unstable_loop(self):
        # 10/(s+1)^3 -> closed loop s^3 + 3s^2 + 3s + 11 has two RHP roots
        g = FractionalTF([(10.0, 0.0)], [(1.0, 3.0), (3.0, 2.0), (3.0, 1.0), (1.0, 0.0)])
        v = assess_stability(g)
        assert v.verdict == "unstable" and v.winding_number == -2

    def test_truncated_sweep_is_indeterminate(self, plant):
        v = assess_stability(plant, FrequencySweep(1e-3, 2.0, 64))
        assert v.verdict == "indeterminate" and v.warnings

    def test_improper_open_loop_is_indeterminate(self):
        v = assess_stability(FractionalTF([(1.0, 0.0), (1.0, 1.5)], [(1.0, 0.0), (1.0, 1.0)]))
        assert v.verdict == "indeterminate"

    def test_density_robustness(self, open_loop, plant):
        systems = [open_loop, plant, plant.scaled(2.0), FractionalTF([(1.0, 0.0)], [(1.0, 1.5)])]
        for g in systems:
            s = FrequencySweep(1e-3, 1e3, 16)
            a, b = assess_stability(g, s), assess_stability(g, s.doubled())
            if "indeterminate" not in (a.verdict, b.verdict):
                assert a.verdict == b.verdict

    def test_report_json(self, open_loop):
        d = assess_stability(open_loop).to_dict()
        assert d["verdict"] == "stable"
        assert d["assumptions"] == ["open loop has no right-half-plane singularities"]
        assert set(d) >= {"winding_number", "min_distance", "critical_omega"}
