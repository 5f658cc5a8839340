import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qsirs import (FullState, MacroState, MicroState, ModelParams,
                   ValidationError, coupling_snapshot, critical_mutation,
                   effective_fitness, prevalence, rhs_array, rhs_full,
                   rhs_reduced_limit, transmission_rates)
from conftest import CASE1, case1_params, random_valid_state


class TestModelParams:
    def test_roundtrip_json(self, p1):
        assert ModelParams.from_json(p1.to_json()) == p1

    @pytest.mark.parametrize("field,value", [
        ("f1", 1.5),        # violates f0 > f1
        ("f1", 0.0),
        ("mu", 0.0),
        ("mu", 1.5),
        ("gamma0", 0.0),
        ("b1", -0.1),
        ("epsilon", 0.0),
        ("chi", -1.0),
        ("pi0", -0.2),
    ])
    def test_rejects_and_names_field(self, field, value):
        with pytest.raises(ValidationError) as err:
            case1_params(**{field: value})
        assert field in str(err.value) or "f0" in str(err.value)

    def test_unknown_key_rejected(self):
        with pytest.raises(ValidationError, match="unknown"):
            ModelParams.from_dict({**CASE1, "bogus": 1.0})

    def test_missing_key_rejected(self):
        data = dict(CASE1)
        del data["chi"]
        with pytest.raises(ValidationError, match="missing.*chi"):
            ModelParams.from_dict(data)

    def test_replace_unknown(self, p1):
        with pytest.raises(ValidationError):
            p1.replace(nope=1.0)


class TestStates:
    def test_micro_sum_enforced(self):
        MicroState(0.3, 0.7, 1.0, 2.0)
        with pytest.raises(ValidationError):
            MicroState(0.3, 0.6, 1.0, 2.0)
        with pytest.raises(ValidationError):
            MicroState(-0.1, 1.1, 0.0, 0.0)

    def test_macro_sum_enforced(self):
        MacroState(0.2, 0.2, 0.2, 0.2, 0.2)
        with pytest.raises(ValidationError):
            MacroState(0.2, 0.2, 0.2, 0.2, 0.3)

    def test_full_state_array_order(self):
        s = FullState(MacroState(0.5, 0.1, 0.2, 0.1, 0.1),
                      MicroState(0.6, 0.4, 1.5, 2.5))
        assert np.array_equal(s.as_array(),
                              [0.5, 0.1, 0.2, 0.1, 0.1, 0.6, 0.4, 1.5, 2.5])
        assert FullState.from_array(s.as_array()) == s

    def test_from_array_drift_tolerance(self):
        drifted = [0.5 + 3e-8, 0.1, 0.2, 0.1, 0.1, 0.6, 0.4 - 2e-8, 1.5, 2.5]
        s = FullState.from_array(drifted, tol=1e-7)
        assert math.isclose(sum([s.macro.S, s.macro.I0, s.macro.I1,
                                 s.macro.R, s.macro.D]), 1.0, abs_tol=1e-15)
        with pytest.raises(ValidationError):
            FullState.from_array(drifted)  # strict tolerance


class TestPrevalence:
    def test_symmetric(self):
        assert prevalence(0.5, 0.5) == (0.5, 0.5)

    def test_empty_is_exact_zero_pair(self):
        assert prevalence(0.0, 0.0) == (0.0, 0.0)

    def test_exact_ratio(self):
        assert prevalence(0.03, 0.01) == (0.75, 0.25)

    def test_negative_rejected(self):
        with pytest.raises(ValidationError):
            prevalence(-1e-3, 0.5)

    @given(st.floats(0, 1), st.floats(0, 1))
    @settings(max_examples=200, deadline=None)
    def test_sum_in_zero_one(self, I0, I1):
        nu0, nu1 = prevalence(I0, I1)
        assert nu0 + nu1 in (0.0, pytest.approx(1.0, abs=1e-12))


class TestTransmission:
    def test_zero_loads(self, p1):
        assert transmission_rates(p1, 0.3, 0.0, 0.0) == (0.0, 0.0, 0.0)

    def test_threshold_load(self, p1):
        # at the marginal master frequency 1/175 the master channel rate
        # equals pi0, i.e. the invasion index hits exactly 1
        beta00, _, _ = transmission_rates(p1, 0.0, 2.5 / 175.0, 0.0)
        assert beta00 == pytest.approx(0.5, rel=1e-14)
        assert beta00 / p1.pi0 == pytest.approx(1.0, rel=1e-14)

    def test_mutant_channels_split(self, p1):
        _, beta01, beta11 = transmission_rates(p1, 0.0, 0.0, 2.0)
        assert beta01 == 0.0
        assert beta11 == pytest.approx(40.0 / 7.0, rel=1e-14)

    @given(st.floats(0, 1), st.floats(0, 50), st.floats(0, 50))
    @settings(max_examples=200, deadline=None)
    def test_saturation_bounds(self, nu0, v0, v1):
        p = case1_params()
        b00, b01, b11 = transmission_rates(p, nu0, v0, v1)
        assert 0.0 <= b00 < p.a0
        assert 0.0 <= b01 < p.a1
        assert 0.0 <= b11 < p.a1

    @given(st.floats(0.01, 1), st.floats(0, 20), st.floats(0, 20),
           st.floats(0.01, 5))
    @settings(max_examples=200, deadline=None)
    def test_monotone_in_own_load(self, nu0, v, dv, b_half):
        p = case1_params(b0=b_half, b1=b_half)
        lo = transmission_rates(p, nu0, v, v)
        hi = transmission_rates(p, nu0, v + dv, v + dv)
        assert hi[0] >= lo[0] and hi[1] >= lo[1] and hi[2] >= lo[2]


class TestEffectiveFitness:
    @pytest.mark.parametrize("nu0,expected", [
        (1.0, (1.0, 0.0)),
        (0.0, (0.0, 0.2)),
        (0.5, (0.5, 0.1)),
    ])
    def test_examples(self, p1, nu0, expected):
        f0e, f1e = effective_fitness(p1, nu0)
        assert (f0e, f1e) == pytest.approx(expected, rel=1e-14)


class TestCriticalMutation:
    def test_examples(self, p1):
        assert critical_mutation(p1, 0.5) == pytest.approx(0.8, rel=1e-14)
        assert critical_mutation(p1, 1.0) == pytest.approx(1.0, rel=1e-14)
        assert critical_mutation(p1, 1.0 / 6.0) == pytest.approx(0.0, abs=1e-14)

    def test_undefined_at_zero(self, p1):
        assert critical_mutation(p1, 0.0) is None

    def test_may_be_negative(self, p1):
        assert critical_mutation(p1, 0.05) < 0.0

    @given(st.floats(0.01, 0.99), st.floats(0.001, 0.98))
    @settings(max_examples=200, deadline=None)
    def test_strictly_increasing_in_prevalence(self, nu0, bump):
        p = case1_params()
        hi = min(nu0 + bump, 1.0)
        if hi > nu0:
            assert critical_mutation(p, hi) > critical_mutation(p, nu0)


class TestRhs:
    def test_fully_susceptible_master_pool(self, p1):
        y = np.array([1.0, 0, 0, 0, 0, 1.0, 0, 0, 0])
        d = rhs_array(y, p1)
        assert np.array_equal(d[:5], np.zeros(5))
        assert d[5] == 0.0 and d[6] == 0.0
        assert d[7] == pytest.approx(p1.xi0 / p1.epsilon, rel=1e-14)
        assert d[8] == 0.0

    def test_genome_derivatives_vanish_without_infected(self, p1):
        y = np.array([0.6, 0, 0, 0.4, 0, 0.3, 0.7, 1.0, 2.0])
        d = rhs_array(y, p1)
        assert d[5] == 0.0 and d[6] == 0.0

    def test_conservation_random_states(self, p1):
        rng = np.random.default_rng(42)
        for _ in range(1000):
            y = random_valid_state(rng)
            d = rhs_array(y, p1)
            assert abs(d[:5].sum()) < 1e-12
            assert abs(d[5] + d[6]) < 1e-11  # 1/epsilon amplifies roundoff

    def test_negative_roundoff_treated_as_zero(self, p1):
        y = np.array([0.5, -1e-13, 0.2, 0.2, 0.1 + 1e-13, 0.4, 0.6, 1.0, 2.0])
        y_clip = np.array([0.5, 0.0, 0.2, 0.2, 0.1 + 1e-13, 0.4, 0.6, 1.0, 2.0])
        assert np.array_equal(rhs_array(y, p1), rhs_array(y_clip, p1))

    def test_full_state_wrapper(self, p1):
        s = FullState(MacroState(0.5, 0.1, 0.2, 0.1, 0.1),
                      MicroState(0.6, 0.4, 1.5, 2.5))
        assert np.array_equal(rhs_full(s, p1), rhs_array(s.as_array(), p1))

    def test_nonfinite_rejected(self, p1):
        from qsirs import NumericError
        with pytest.raises(NumericError):
            rhs_array(np.array([np.nan, 0, 0, 0, 1, 1, 0, 0, 0]), p1)


class TestReducedRhs:
    def test_disease_free_is_fixed(self, p1):
        assert np.array_equal(rhs_reduced_limit((1.0, 0.0, 0.0), p1, 2.0, 3.0),
                              np.zeros(3))

    def test_conservation(self, p1):
        rng = np.random.default_rng(7)
        for _ in range(100):
            S, I0, R = rng.dirichlet(np.ones(3))
            d = rhs_reduced_limit((S, I0, R), p1, 2.0, 3.0)
            assert abs(d.sum()) < 1e-14

    def test_endemic_point_is_stationary(self, p1):
        from qsirs import limit_equilibria
        eq = limit_equilibria(p1, 0.5)
        d = rhs_reduced_limit(eq.cse, p1.replace(mu=0.5), eq.beta00, eq.beta01)
        assert np.max(np.abs(d)) < 1e-12


def test_coupling_snapshot_consistency(p1):
    snap = coupling_snapshot(p1, 0.03, 0.01, 1.0, 2.0)
    assert snap.nu0 == 0.75 and snap.nu1 == 0.25
    assert snap.f0_eff == pytest.approx(0.75)
    assert snap.mu_crit == pytest.approx(1.0 - 0.2 * (1 / 0.75 - 1))
    empty = coupling_snapshot(p1, 0.0, 0.0, 1.0, 2.0)
    assert empty.nu0 == 0.0 and empty.beta01 == 0.0 and empty.beta11 == 0.0
    assert empty.mu_crit is None
