import numpy as np
import pytest

from qsirs import (EndpointClass, EventKind, IntegrationOptions,
                   NumericError, Trajectory, ValidationError, detect_endpoint,
                   integrate, rhs_array)
from qsirs.equilibria import dfe_points, nme_point
from conftest import PRINCIPAL_Y0


def test_options_validation():
    with pytest.raises(ValidationError):
        IntegrationOptions(rtol=0.0)
    with pytest.raises(ValidationError):
        IntegrationOptions(max_steps=0)
    with pytest.raises(ValidationError):
        IntegrationOptions().replace(nope=1)


def test_stable_disease_free_point_persists(p1):
    s0 = dfe_points(p1, 0.0)  # below-threshold master frequency
    traj = integrate(p1, s0.as_array(), IntegrationOptions(t_max=500.0))
    assert traj.status == "settled"
    assert np.max(np.abs(traj.final_array - s0.as_array())) <= 1e-12


def test_principal_trajectory_reaches_mutant_only_point(p1):
    traj = integrate(p1, PRINCIPAL_Y0, IntegrationOptions(t_max=4000.0))
    assert traj.status == "settled"
    assert detect_endpoint(traj, p1) is EndpointClass.NME
    target = nme_point(p1).as_array()
    assert np.max(np.abs(traj.final_array - target)) < 1e-9


def test_burnout_dip_and_recovery(p2):
    # moderate mutation: the master genome transiently crashes by several
    # orders of magnitude, then recovers once the lethal mutant burns out
    p = p2.replace(mu=0.4)
    traj = integrate(p, PRINCIPAL_Y0, IntegrationOptions(t_max=3000.0))
    assert detect_endpoint(traj, p) is EndpointClass.DFE
    g0 = traj.states[:, 5]
    assert g0.min() < 0.2
    assert traj.final_array[5] > 0.5

    # high mutation: the crash reaches the clamp and the master stays extinct
    p = p2.replace(mu=0.8)
    traj = integrate(p, PRINCIPAL_Y0, IntegrationOptions(t_max=3000.0))
    assert detect_endpoint(traj, p) is EndpointClass.DFE
    assert traj.clamp_events("g0")
    assert traj.final_array[5] == 0.0


def test_conservation_monitoring(p1):
    traj = integrate(p1, PRINCIPAL_Y0, IntegrationOptions(t_max=1000.0))
    macro, micro = traj.conservation_drift()
    assert macro.max() < 1e-7 and micro.max() < 1e-7
    assert traj.max_macro_drift == pytest.approx(macro.max(), abs=1e-15)
    assert traj.clamp_mass < 1e-10


def test_times_strictly_increasing(p1):
    traj = integrate(p1, PRINCIPAL_Y0, IntegrationOptions(t_max=200.0))
    assert np.all(np.diff(traj.times) > 0)
    for idx in (0, len(traj) // 2, -1):
        traj.state_at(idx)  # every sample satisfies invariants within 1e-7


def test_tolerance_halving_convergence(p1):
    base = IntegrationOptions(t_max=2000.0)
    coarse = integrate(p1, PRINCIPAL_Y0, base)
    fine = integrate(p1, PRINCIPAL_Y0, base.replace(rtol=base.rtol / 2,
                                                    atol=base.atol / 2))
    assert np.max(np.abs(coarse.final_array - fine.final_array)) < 10 * base.rtol


def test_horizon_status_and_budget_event(p1):
    traj = integrate(p1, PRINCIPAL_Y0, IntegrationOptions(t_max=1.0))
    assert traj.status == "horizon"
    assert traj.final_time == pytest.approx(1.0, abs=1e-12)
    tiny = integrate(p1, PRINCIPAL_Y0, IntegrationOptions(t_max=50.0, max_steps=20))
    assert tiny.status == "step_budget"
    assert any(e.kind is EventKind.BUDGET for e in tiny.events)


def test_nonfinite_initial_rejected(p1):
    bad = PRINCIPAL_Y0.copy()
    bad[0] = np.nan
    with pytest.raises(NumericError):
        integrate(p1, bad)


def test_overflow_state_raises_numeric_failure(p1):
    huge = PRINCIPAL_Y0.copy()
    huge[7] = 1e308
    with pytest.raises(NumericError):
        integrate(p1, huge, IntegrationOptions(t_max=10.0))


def test_wrong_shape_rejected(p1):
    with pytest.raises(ValidationError):
        integrate(p1, np.ones(4))


class TestDetectEndpoint:
    def _traj(self, p, y, status="settled"):
        y = np.asarray(y, dtype=float)
        return Trajectory(params=p, times=np.array([0.0, 1.0]),
                          states=np.vstack([y, y]), events=(), status=status,
                          n_accepted=1, n_rejected=0, clamp_mass=0.0,
                          max_macro_drift=0.0, max_micro_drift=0.0)

    def test_signatures(self, p1):
        dfe = self._traj(p1, [1, 0, 0, 0, 0, 0.5, 0.5, 1.25, 1.0])
        assert detect_endpoint(dfe, p1) is EndpointClass.DFE
        nme = self._traj(p1, [0.175, 0, 0.55, 0.275, 0, 0, 1, 0, 2])
        assert detect_endpoint(nme, p1) is EndpointClass.NME
        nmut = self._traj(p1, [0.5, 0.2, 0, 0.05, 0.25, 0.325, 0.675, 0.8125, 1.35])
        assert detect_endpoint(nmut, p1) is EndpointClass.NMUTE

    def test_moving_mixed_state_unresolved(self, p1):
        moving = self._traj(p1, [0.3, 0.3, 0.2, 0.1, 0.1, 0.5, 0.5, 1.0, 1.0],
                            status="horizon")
        assert np.max(np.abs(rhs_array(moving.final_array, p1))) > 1e-10
        assert detect_endpoint(moving, p1) is EndpointClass.UNRESOLVED

    def test_settled_coexistence(self, p1):
        from qsirs.equilibria import cse_solve
        q = cse_solve(p1.replace(pi1=5.0))[0]
        traj = self._traj(p1.replace(pi1=5.0), q.as_array())
        assert detect_endpoint(traj, p1.replace(pi1=5.0)) is EndpointClass.CSE

    def test_empty_rejected(self, p1):
        empty = Trajectory(params=p1, times=np.array([]),
                           states=np.empty((0, 9)), events=(), status="settled",
                           n_accepted=0, n_rejected=0, clamp_mass=0.0,
                           max_macro_drift=0.0, max_micro_drift=0.0)
        with pytest.raises(ValidationError):
            detect_endpoint(empty, p1)


def test_quasi_steady_tracking_after_threshold_transit(p1):
    """The fast layer tracks its quasi-steady state once past the
    error-threshold transit (the transit itself breaks tracking: the fast
    relaxation rate vanishes there)."""
    from qsirs import critical_mutation, micro_equilibrium, prevalence

    for eps in (1e-2, 1e-3):
        p = p1.replace(epsilon=eps)
        traj = integrate(p, PRINCIPAL_Y0, IntegrationOptions(t_max=10.0))
        worst = 0.0
        for t, row in zip(traj.times, traj.states):
            if t < 1.0:
                continue
            nu0, _ = prevalence(row[1], row[2])
            if nu0 in (0.0, 1.0):
                continue
            mu_c = critical_mutation(p, nu0)
            if mu_c is not None and p.mu < mu_c:
                target = micro_equilibrium(p, nu0)
                tgt = np.array([target.g0, target.g1, target.v0, target.v1])
            else:
                tgt = np.array([0.0, 1.0, 0.0, p.xi1 / p.gamma1])
            worst = max(worst, np.max(np.abs(row[5:] - tgt)))
        assert worst < 10 * eps
