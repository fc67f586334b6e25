import math
from fractions import Fraction
from types import SimpleNamespace

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from draws import BASELINE_PROCESS, baseline_scenario, draws
from epq_learning.errors import DomainError, InfeasibleError, InvalidRunTimeError
from epq_learning.model import (
    CostParams,
    ProcessParams,
    ScenarioParams,
    consumption_time,
    cycle_length,
    defective_rate,
    derive,
    feasibility_margin,
    feasible_lower_bound,
    inventory_levels,
    is_feasible,
    pre_learning_times,
    rework_setup_time,
    rework_time,
    rework_time_from_levels,
)


def _margin_exact(P, D, P1, x, theta):
    P, D, P1, x, theta = map(Fraction, (P, D, P1, x, theta))
    return P * (1 - theta * x) / D - 1 - P * x * (1 - theta) / P1


def _process(**kw):
    base = dict(P=12000, P1=8000, D=6000, x=0.2, theta=0.1)
    base.update(kw)
    return ProcessParams(**base)


class TestDefectiveRate:
    def test_baseline(self):
        assert defective_rate(BASELINE_PROCESS) == 2400

    def test_no_defects(self):
        assert defective_rate(_process(x=0)) == 0

    def test_other(self):
        assert defective_rate(SimpleNamespace(P=8000, x=0.25)) == 2000

    @given(st.floats(0, 0.4))
    def test_linear_in_fraction(self, x):
        p1 = SimpleNamespace(P=12000, x=x)
        p2 = SimpleNamespace(P=12000, x=2 * x)
        assert defective_rate(p2) == 2 * defective_rate(p1)


class TestFeasibilityMargin:
    def test_baseline_is_069(self):
        assert _margin_exact(12000, 6000, 8000, "0.2", "0.1") == Fraction(69, 100)
        assert feasibility_margin(BASELINE_PROCESS) == pytest.approx(0.69, abs=1e-15)

    def test_break_even(self):
        p = SimpleNamespace(P=5000, D=5000, P1=3000, x=0.0, theta=0.0)
        assert feasibility_margin(p) == 0.0

    def test_other_parameters(self):
        p = _process(P=10000, D=4000, P1=6000, x=0.1, theta=0.5)
        assert p.lam == 1000
        expected = _margin_exact(10000, 4000, 6000, "0.1", "0.5")
        assert expected == Fraction(31, 24)
        assert feasibility_margin(p) == pytest.approx(float(expected), rel=1e-15)

    def test_negative_margin_is_returned(self):
        p = _process(P=10000, D=7000, P1=2500, x=0.2, theta=0.0)
        assert feasibility_margin(p) == pytest.approx(float(_margin_exact(10000, 7000, 2500, "0.2", 0)))
        assert feasibility_margin(p) < 0


class TestStructuralChecks:
    @pytest.mark.parametrize("kw", [
        dict(P=0), dict(D=0), dict(P1=0), dict(D=13000),
        dict(x=0.5),            # P - D - lambda <= 0
        dict(P1=2000),          # P1 <= lambda
        dict(x=1.0), dict(theta=1.5), dict(x=-0.1),
    ])
    def test_process_rejected(self, kw):
        with pytest.raises(DomainError):
            _process(**kw)

    @pytest.mark.parametrize("kw", [dict(h=0), dict(c=-1), dict(h1=-0.1), dict(K=-5)])
    def test_costs_rejected(self, kw):
        base = dict(c=4, cr=1, cs=0.5, h=1, h1=1.2, M=600, K=500)
        base.update(kw)
        with pytest.raises(DomainError):
            CostParams(**base)

    def test_negative_setup_rejected(self):
        with pytest.raises(DomainError):
            baseline_scenario(ts1=-0.01)

    def test_coefficient_outside_bounds(self):
        with pytest.raises(DomainError, match="bp2"):
            baseline_scenario(0.6, 0.3, 0.6)  # b = 1.74
        with pytest.raises(DomainError, match="bs"):
            baseline_scenario(0.6, 0.6, 1.0)  # b = 0 < b_min

    def test_configurable_bounds(self):
        s = ScenarioParams(BASELINE_PROCESS, baseline_scenario().costs, 0.6, 0.6, 1.0, 0.02, b_min=0.0)
        assert s.bs == 0.0
        assert "bs at b_min" in s.boundary_flags()

    def test_immutable(self):
        s = baseline_scenario()
        with pytest.raises(AttributeError):
            s.ts1 = 1.0


class TestCycleGeometry:
    def test_cycle_length(self):
        assert cycle_length(BASELINE_PROCESS, 1) == pytest.approx(1.96, rel=1e-15)
        assert cycle_length(BASELINE_PROCESS, 2.95) == pytest.approx(5.782, rel=1e-15)

    def test_cycle_length_identity(self):
        p = SimpleNamespace(P=5000, D=5000, x=0.3, theta=0.0)
        assert cycle_length(p, 0.7) == 0.7

    @pytest.mark.parametrize("tp1", [0, -1, math.nan])
    def test_bad_run_time(self, tp1):
        with pytest.raises(InvalidRunTimeError):
            cycle_length(BASELINE_PROCESS, tp1)

    def test_rework_time(self):
        assert rework_time(BASELINE_PROCESS, 1) == pytest.approx(0.27, rel=1e-15)
        assert rework_time(_process(theta=1.0), 1) == 0
        assert rework_time(_process(x=0), 1) == 0

    def test_rework_setup_time(self):
        assert rework_setup_time(0.02, 1.0) == 0.01
        assert rework_setup_time(0.0, 0.37) == 0
        bs = -math.log2(0.6)
        assert rework_setup_time(0.02, bs) == pytest.approx(0.012, rel=1e-14)
        with pytest.raises(DomainError):
            rework_setup_time(-1, 0.3)

    def test_consumption_time(self):
        s = baseline_scenario()
        assert consumption_time(s, 1) == pytest.approx(1.96 - 0.032 - 1.27, rel=1e-13)
        assert consumption_time(s, 1) == pytest.approx(0.658, rel=1e-13)

    def test_consumption_time_degenerate(self):
        s = SimpleNamespace(process=SimpleNamespace(P=4000, D=4000, P1=100, x=0.0, theta=0.0),
                            ts1=0.0, bs=0.5)
        assert consumption_time(s, 2.0) == 0.0

    def test_consumption_time_tiny_run(self):
        s = baseline_scenario()
        T = cycle_length(s.process, 0.001)
        brackets = 0.02 + 0.012 + 0.001 + rework_time(s.process, 0.001)
        assert brackets > T
        with pytest.raises(InfeasibleError):
            consumption_time(s, 0.001)
        assert consumption_time(s, 0.001, check=False) == pytest.approx(T - brackets)

    @given(st.floats(0.01, 1e4))
    def test_rework_time_linear(self, tp1):
        assert rework_time(BASELINE_PROCESS, 2 * tp1) == pytest.approx(2 * rework_time(BASELINE_PROCESS, tp1), rel=1e-15)


class TestInventoryLevels:
    def test_levels_formula(self):
        s = baseline_scenario()
        tp1 = 900.0
        b1, b2 = s.bp1, s.bp2
        H1 = (tp1 * (1 - b1)) ** (1 / (2 - b1))
        H3 = H1 - 6000 * 0.012
        H2 = H3 + (0.27 * tp1 * (1 - b2)) ** (1 / (2 - b2))
        assert inventory_levels(s, tp1) == pytest.approx((H1, H2, H3), rel=1e-13)

    def test_no_repair_delay(self):
        s = baseline_scenario(ts1=0.0)
        H1, H2, H3 = inventory_levels(s, 2.0)
        assert H3 == H1

    def test_no_rework(self):
        s = ScenarioParams(_process(theta=1.0), baseline_scenario().costs, 0.6, 0.6, 0.6, 0.02)
        H1, H2, H3 = inventory_levels(s, 900.0)
        assert H2 == H3

    def test_stockout_during_repair(self):
        with pytest.raises(InfeasibleError, match="H3"):
            inventory_levels(baseline_scenario(), 2.95)

    def test_pinned_at_lower_coefficient_bound(self):
        # alpha = 2**-0.01 puts bp1 on b_min; values from the radical evaluated in 40-digit arithmetic
        a = 2.0 ** -0.01
        s = ScenarioParams(BASELINE_PROCESS, baseline_scenario().costs, a, 0.6, 0.6, 0.0)
        assert s.bp1 == pytest.approx(0.01, abs=1e-15)
        assert inventory_levels(s, 1.0)[0] == pytest.approx(0.9949623119014590761822, rel=1e-13)
        assert inventory_levels(s, 10.0)[0] == pytest.approx(3.164602692595617067199, rel=1e-13)
        assert "bp1 at b_min" in s.boundary_flags()

    @settings(max_examples=50)
    @given(st.floats(1e-3, 1e5), st.floats(1.0001, 3.0))
    def test_breakdown_level_increasing(self, tp1, factor):
        s = baseline_scenario()
        assert inventory_levels(s, tp1 * factor, check=False)[0] > inventory_levels(s, tp1, check=False)[0]

    def test_breakdown_level_vanishes_at_origin(self):
        s = baseline_scenario()
        assert inventory_levels(s, 1e-12, check=False)[0] < 1e-5


class TestPreLearningTimes:
    def test_zero_stock(self):
        assert pre_learning_times(baseline_scenario(), 0.0, 5.0, 5.0) == (0.0, 0.0)

    def test_baseline_denominator(self):
        s = baseline_scenario()
        H1, H2, H3 = inventory_levels(s, 1.0, check=False)
        t1, t2 = pre_learning_times(s, H1, H2, H3)
        assert t1 == pytest.approx(H1 / 3600, rel=1e-15)
        assert t2 == pytest.approx((H2 - H3) / 2000, rel=1e-15)

    def test_slow_rework_rejected(self):
        s = ScenarioParams(_process(P1=5000), baseline_scenario().costs, 0.6, 0.6, 0.6, 0.02)
        with pytest.raises(DomainError):
            pre_learning_times(s, 1.0, 2.0, 1.0)


class TestFeasibleSet:
    def test_baseline_bound(self):
        s = baseline_scenario()
        bound = feasible_lower_bound(s)
        assert bound == pytest.approx((6000 * 0.012) ** (2 - s.bp1) / (1 - s.bp1), rel=1e-14)
        assert is_feasible(s, bound * (1 + 1e-9))
        assert not is_feasible(s, bound * (1 - 1e-9))

    def test_setup_bound_dominates_without_repair_drawdown(self):
        # slow demand and a short setup: the td root controls the bound
        s = ScenarioParams(_process(D=100), baseline_scenario().costs, 2 ** -0.01, 0.6, 0.6, 1e-6)
        bound = feasible_lower_bound(s)
        assert bound == pytest.approx(1.6e-6 / feasibility_margin(s.process), rel=1e-12)
        assert consumption_time(s, bound * (1 + 1e-9)) >= 0

    def test_negative_margin_infeasible(self):
        s = ScenarioParams(_process(P=10000, D=7000, P1=2500, theta=0.0), baseline_scenario().costs,
                           0.6, 0.6, 0.6, 0.02)
        assert math.isinf(feasible_lower_bound(s))

    @pytest.mark.parametrize("case", range(30))
    def test_bound_is_tight(self, case):
        (s, _), = draws(1, 1000 + case)
        bound = feasible_lower_bound(s)
        assert is_feasible(s, bound * (1 + 1e-9))
        if bound > 0:
            assert not is_feasible(s, bound * (1 - 1e-6))


class TestDerive:
    def test_baseline_values(self):
        dq = derive(baseline_scenario(), 900.0)
        assert dq.lam == 2400
        assert dq.T == pytest.approx(1764.0)
        assert dq.tp2 == pytest.approx(243.0)
        assert dq.ts2 == pytest.approx(0.012)
        assert dq.H1 > dq.H3
        assert dq.H2 >= dq.H3

    def test_rework_time_from_levels_inverts_levels(self):
        # both rework-time relations agree because H2 - H3 is built from tp2
        s = baseline_scenario(0.8, 0.7, 0.6)
        dq = derive(s, 4000.0)
        assert rework_time_from_levels(s, dq.H2, dq.H3) == pytest.approx(dq.tp2, rel=1e-12)

    @pytest.mark.parametrize("case", range(40))
    def test_cycle_closure(self, case):
        (s, tp1), = draws(1, case)
        dq = derive(s, tp1)
        total = math.fsum([s.ts1, dq.ts2, tp1, dq.tp2, dq.td])
        assert abs(total - dq.T) <= 1e-12 * dq.T
        assert dq.td >= 0 and dq.H3 >= 0
