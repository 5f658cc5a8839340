"""Adaptive integration of the coupled slow-fast system.

Wraps the stepping kernel (see :mod:`qsirs.kernel`) with validated options,
a :class:`Trajectory` result type, pseudo-extinction clamp events,
conservation monitoring and endpoint classification.

The stepper is an explicit embedded Dormand-Prince 5(4) pair with PI step
control.  At the default timescale ratio (epsilon = 0.01) the fast layer is
resolvable explicitly and step control absorbs the stiffness; epsilon below
1e-4 is out of the supported range.
"""
from __future__ import annotations

from dataclasses import dataclass, field, fields
from enum import Enum
from typing import Iterator, Mapping

import numpy as np

from . import kernel
from .model import (CouplingSnapshot, FullState, ModelParams, NumericError,
                    ValidationError, coupling_snapshot)

PARAM_ORDER = ("f0", "f1", "mu", "xi0", "xi1", "gamma0", "gamma1", "a0", "a1",
               "b0", "b1", "pi0", "pi1", "delta0", "delta1", "chi", "epsilon")

DRIFT_LIMIT = 1e-7
ENDPOINT_ETA = 1e-8


class StiffnessError(NumericError):
    """Step size underflow; carries the last good state and time."""

    def __init__(self, msg: str, t: float, state: np.ndarray):
        super().__init__(msg)
        self.t = t
        self.state = state


class ConservationError(NumericError):
    """A conserved sum drifted beyond the accepted bound."""


class EndpointClass(str, Enum):
    DFE = "DFE"
    NME = "NME"
    NMUTE = "NmutE"
    CSE = "CSE"
    UNRESOLVED = "Unresolved"


class EventKind(str, Enum):
    CLAMP = "clamp"
    SETTLED = "settled"
    BUDGET = "budget"


_STATE_NAMES = ("S", "I0", "I1", "R", "D", "g0", "g1", "v0", "v1")


@dataclass(frozen=True, slots=True)
class TrajectoryEvent:
    time: float
    kind: EventKind
    component: str | None = None

    def to_dict(self) -> dict:
        return {"time": self.time, "kind": self.kind.value, "component": self.component}


@dataclass(frozen=True, slots=True)
class IntegrationOptions:
    """Stepper tolerances, horizon and endpoint-detection thresholds."""

    rtol: float = 1e-9
    atol: float = 1e-12
    t_max: float = 5000.0
    clamp_threshold: float = 1e-14
    max_steps: int = 2_000_000
    settle_norm: float = 1e-10
    settle_duration: float = 50.0
    store: bool = True

    def __post_init__(self):
        for name in ("rtol", "atol", "t_max", "clamp_threshold", "settle_norm",
                     "settle_duration"):
            if not getattr(self, name) > 0.0:
                raise ValidationError(f"option {name!r} must be > 0, got {getattr(self, name)}")
        if self.max_steps <= 0:
            raise ValidationError(f"option 'max_steps' must be > 0, got {self.max_steps}")

    def replace(self, **changes) -> "IntegrationOptions":
        vals = {f.name: getattr(self, f.name) for f in fields(self)}
        for key in changes:
            if key not in vals:
                raise ValidationError(f"unknown integration option {key!r}")
        vals.update(changes)
        return IntegrationOptions(**vals)

    @classmethod
    def from_dict(cls, data: Mapping[str, float]) -> "IntegrationOptions":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ValidationError(f"unknown integration option keys: {', '.join(unknown)}")
        return cls(**dict(data))


@dataclass(frozen=True)
class Trajectory:
    """Accepted-step samples of one run plus events and run diagnostics.

    ``states`` is an (n, 9) array in canonical component order; rows are
    exact accepted states (clamps applied).  ``status`` is one of
    'settled', 'horizon', 'step_budget'.
    """

    params: ModelParams
    times: np.ndarray
    states: np.ndarray
    events: tuple[TrajectoryEvent, ...]
    status: str
    n_accepted: int
    n_rejected: int
    clamp_mass: float
    max_macro_drift: float
    max_micro_drift: float
    settle_start: float | None = None

    def __len__(self) -> int:
        return len(self.times)

    @property
    def final_time(self) -> float:
        return float(self.times[-1])

    @property
    def final_array(self) -> np.ndarray:
        return self.states[-1].copy()

    @property
    def final_state(self) -> FullState:
        return FullState.from_array(self.states[-1], tol=DRIFT_LIMIT)

    def state_at(self, i: int) -> FullState:
        return FullState.from_array(self.states[i], tol=DRIFT_LIMIT)

    def iter_states(self) -> Iterator[FullState]:
        for row in self.states:
            yield FullState.from_array(row, tol=DRIFT_LIMIT)

    def snapshots(self) -> list[CouplingSnapshot]:
        """Cross-scale diagnostics at every sample."""
        return [coupling_snapshot(self.params, row[1], row[2], row[7], row[8])
                for row in self.states]

    def conservation_drift(self) -> tuple[np.ndarray, np.ndarray]:
        """Per-sample |macro sum - 1| and |genome sum - 1|."""
        macro = np.abs(self.states[:, :5].sum(axis=1) - 1.0)
        micro = np.abs(self.states[:, 5] + self.states[:, 6] - 1.0)
        return macro, micro

    def clamp_events(self, component: str | None = None) -> list[TrajectoryEvent]:
        return [e for e in self.events
                if e.kind is EventKind.CLAMP
                and (component is None or e.component == component)]


def params_tuple(p: ModelParams) -> tuple[float, ...]:
    return tuple(getattr(p, name) for name in PARAM_ORDER)


_STATUS_NAMES = {kernel.SETTLED: "settled", kernel.HORIZON: "horizon",
                 kernel.STEP_BUDGET: "step_budget"}


def integrate(p: ModelParams, s0: FullState | np.ndarray,
              opts: IntegrationOptions | None = None) -> Trajectory:
    """Integrate from ``s0`` until settled, horizon or step budget.

    Raises :class:`StiffnessError` on step-size underflow,
    :class:`NumericError` on non-finite states, and
    :class:`ConservationError` when either conserved sum drifts by more
    than 1e-7 over the run.
    """
    opts = opts or IntegrationOptions()
    y0 = s0.as_array() if isinstance(s0, FullState) else np.asarray(s0, dtype=float)
    if y0.shape != (9,):
        raise ValidationError(f"initial state must have 9 components, got shape {y0.shape}")
    if not np.all(np.isfinite(y0)):
        raise NumericError(f"non-finite initial state: {y0!r}")
    FullState.from_array(y0)  # validate invariants strictly at entry

    raw = kernel.integrate_raw(
        params_tuple(p), [float(v) for v in y0],
        opts.rtol, opts.atol, opts.t_max, opts.clamp_threshold,
        opts.max_steps, opts.settle_norm, opts.settle_duration,
        bool(opts.store))

    times = np.asarray(raw["t"], dtype=float)
    states = np.asarray(raw["y"], dtype=float)
    status = raw["status"]

    if status == kernel.STEP_UNDERFLOW:
        raise StiffnessError(
            f"step size underflow at t={times[-1]:.6g}; the system is too stiff "
            f"for the explicit pair at these parameters (epsilon={p.epsilon})",
            float(times[-1]), states[-1])
    if status == kernel.NONFINITE:
        raise NumericError(f"non-finite state encountered near t={times[-1]:.6g}")

    events = []
    for (te, code, comp) in raw["events"]:
        if code == kernel.EV_CLAMP:
            events.append(TrajectoryEvent(te, EventKind.CLAMP, _STATE_NAMES[comp]))
        elif code == kernel.EV_SETTLED:
            events.append(TrajectoryEvent(te, EventKind.SETTLED))
        else:
            events.append(TrajectoryEvent(te, EventKind.BUDGET))

    traj = Trajectory(
        params=p, times=times, states=states, events=tuple(events),
        status=_STATUS_NAMES[status],
        n_accepted=raw["n_accepted"], n_rejected=raw["n_rejected"],
        clamp_mass=raw["clamp_mass"],
        max_macro_drift=raw["max_macro_drift"],
        max_micro_drift=raw["max_micro_drift"],
        settle_start=None if raw["settle_start"] < 0 else raw["settle_start"])

    if traj.max_macro_drift > DRIFT_LIMIT or traj.max_micro_drift > DRIFT_LIMIT:
        raise ConservationError(
            f"conserved sums drifted beyond {DRIFT_LIMIT:g}: macro "
            f"{traj.max_macro_drift:.3g}, genomes {traj.max_micro_drift:.3g}")
    return traj


def detect_endpoint(traj: Trajectory, p: ModelParams,
                    eta: float = ENDPOINT_ETA,
                    settle_norm: float = 1e-10) -> EndpointClass:
    """Classify the reached endpoint by its infected-compartment signature.

    With threshold ``eta`` on the final state: both infected classes empty
    -> DFE; only the master-infected class empty -> NME; only the
    mutant-infected class empty -> NmutE; both present with the derivative
    sup-norm below ``settle_norm`` -> CSE.  Anything else (e.g. an
    oscillating tail at the horizon) is Unresolved.
    """
    if len(traj) == 0:
        raise ValidationError("cannot classify an empty trajectory")
    from .model import rhs_array

    y = traj.final_array
    I0, I1 = y[1], y[2]
    if I0 <= eta and I1 <= eta:
        return EndpointClass.DFE
    if I0 <= eta < I1:
        return EndpointClass.NME
    if I1 <= eta < I0:
        return EndpointClass.NMUTE
    if np.max(np.abs(rhs_array(y, p))) < settle_norm:
        return EndpointClass.CSE
    return EndpointClass.UNRESOLVED
