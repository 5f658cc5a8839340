"""Core model: parameter set, state types, cross-scale coupling, vector fields.

Two layers share the state vector (fixed ordering ``S, I0, I1, R, D, g0, g1,
v0, v1``):

* a fast microscopic layer of genome frequencies ``g0`` (master), ``g1``
  (mutant pool) and packaged virions ``v0``, ``v1``, evolving at rate
  ``1/epsilon``;
* a slow macroscopic two-strain SIRS layer with infected classes ``I0``
  (master-infected) and ``I1`` (mutant-infected), plus a deceased class.

Coupling runs in both directions.  Micro to macro: transmission rates
saturate in the instantaneous virion load,

    beta00 = a0*v0/(b0 + v0)
    beta01 = a1*nu0*v1/(b1 + nu0*v1)
    beta11 = a1*(1-nu0)*v1/(b1 + (1-nu0)*v1)

Macro to micro: the replication fitnesses are weighted by the relative
prevalences ``nu0 = I0/(I0+I1)``, ``nu1 = 1 - nu0`` (both 0 when no one is
infected), giving ``f0_eff = f0*nu0`` and ``f1_eff = f1*nu1``.  The
prevalence-dependent critical mutation probability is

    mu_crit(nu0) = 1 - (f1/f0) * (1/nu0 - 1),

undefined at nu0 = 0; mutation probabilities ``mu >= mu_crit`` drive the
master genome extinct at the fast layer's equilibrium.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, fields
from typing import Mapping, Sequence

import numpy as np

SUM_TOL = 1e-9
# adaptive steppers legitimately probe a hair outside the simplex
NEG_ROUNDOFF = -1e-12

STATE_NAMES = ("S", "I0", "I1", "R", "D", "g0", "g1", "v0", "v1")


class ValidationError(ValueError):
    """A constructor or configuration value violates its contract."""


class NumericError(ArithmeticError):
    """A numerical routine produced or met a non-finite quantity."""


@dataclass(frozen=True, slots=True)
class ModelParams:
    """All rate constants of both layers plus the timescale ratio.

    Units are 1/time for rates, virion units for the half-saturation loads
    b0/b1, dimensionless for mu and epsilon.  Constraints: f0 > f1 > 0,
    mu in (0, 1], gamma0/gamma1/b0/b1/epsilon > 0, everything else >= 0.
    """

    f0: float
    f1: float
    mu: float
    xi0: float
    xi1: float
    gamma0: float
    gamma1: float
    a0: float
    a1: float
    b0: float
    b1: float
    pi0: float
    pi1: float
    delta0: float
    delta1: float
    chi: float
    epsilon: float

    def __post_init__(self):
        for name in ("f0", "f1", "mu", "xi0", "xi1", "gamma0", "gamma1",
                     "a0", "a1", "b0", "b1", "pi0", "pi1", "delta0",
                     "delta1", "chi", "epsilon"):
            val = getattr(self, name)
            if not isinstance(val, (int, float)) or not np.isfinite(val):
                raise ValidationError(f"parameter {name!r} must be a finite number, got {val!r}")
            object.__setattr__(self, name, float(val))
        if not self.f0 > self.f1 > 0.0:
            raise ValidationError(
                f"fitness ordering requires f0 > f1 > 0, got f0={self.f0}, f1={self.f1}")
        if not 0.0 < self.mu <= 1.0:
            raise ValidationError(f"parameter 'mu' must lie in (0, 1], got {self.mu}")
        for name in ("gamma0", "gamma1", "b0", "b1", "epsilon"):
            if not getattr(self, name) > 0.0:
                raise ValidationError(f"parameter {name!r} must be > 0, got {getattr(self, name)}")
        for name in ("xi0", "xi1", "a0", "a1", "pi0", "pi1", "delta0", "delta1", "chi"):
            if getattr(self, name) < 0.0:
                raise ValidationError(f"parameter {name!r} must be >= 0, got {getattr(self, name)}")

    def replace(self, **changes: float) -> "ModelParams":
        vals = self.to_dict()
        for key in changes:
            if key not in vals:
                raise ValidationError(f"unknown parameter {key!r}")
        vals.update(changes)
        return ModelParams(**vals)

    def to_dict(self) -> dict[str, float]:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_dict(cls, data: Mapping[str, float]) -> "ModelParams":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ValidationError(f"unknown parameter keys: {', '.join(unknown)}")
        missing = sorted(known - set(data))
        if missing:
            raise ValidationError(f"missing parameter keys: {', '.join(missing)}")
        return cls(**{k: float(v) for k, v in data.items()})

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ModelParams":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True, slots=True)
class MicroState:
    """Genome frequencies and virion abundances of the fast layer."""

    g0: float
    g1: float
    v0: float
    v1: float

    def __post_init__(self):
        for name in ("g0", "g1", "v0", "v1"):
            val = float(getattr(self, name))
            object.__setattr__(self, name, val)
            if not np.isfinite(val) or val < 0.0:
                raise ValidationError(f"micro component {name!r} must be finite and >= 0, got {val}")
        if abs(self.g0 + self.g1 - 1.0) > SUM_TOL:
            raise ValidationError(
                f"genome frequencies must satisfy g0 + g1 = 1, got sum {self.g0 + self.g1!r}")


@dataclass(frozen=True, slots=True)
class MacroState:
    """Population fractions of the slow layer (S + I0 + I1 + R + D = 1)."""

    S: float
    I0: float
    I1: float
    R: float
    D: float

    def __post_init__(self):
        for name in ("S", "I0", "I1", "R", "D"):
            val = float(getattr(self, name))
            object.__setattr__(self, name, val)
            if not np.isfinite(val) or val < 0.0:
                raise ValidationError(f"macro component {name!r} must be finite and >= 0, got {val}")
        total = self.S + self.I0 + self.I1 + self.R + self.D
        if abs(total - 1.0) > SUM_TOL:
            raise ValidationError(f"population fractions must sum to 1, got {total!r}")


@dataclass(frozen=True, slots=True)
class FullState:
    """Joint state; array form uses the canonical component order."""

    macro: MacroState
    micro: MicroState

    def as_array(self) -> np.ndarray:
        m, q = self.macro, self.micro
        return np.array([m.S, m.I0, m.I1, m.R, m.D, q.g0, q.g1, q.v0, q.v1])

    @classmethod
    def from_array(cls, y: Sequence[float], tol: float = SUM_TOL) -> "FullState":
        y = [float(v) for v in y]
        if len(y) != 9:
            raise ValidationError(f"state vector must have 9 components, got {len(y)}")
        if tol <= SUM_TOL:
            return cls(MacroState(*y[:5]), MicroState(*y[5:]))
        # drift-tolerant path for integrator output: check against the looser
        # tolerance, then renormalise before the strict constructors see it
        msum = sum(y[:5])
        gsum = y[5] + y[6]
        if abs(msum - 1.0) > tol or abs(gsum - 1.0) > tol:
            raise ValidationError(
                f"state sums exceed tolerance {tol}: macro {msum!r}, genomes {gsum!r}")
        y = [max(v, 0.0) for v in y]
        macro = [v / sum(y[:5]) for v in y[:5]]
        gs = y[5] + y[6]
        return cls(MacroState(*macro), MicroState(y[5] / gs, y[6] / gs, y[7], y[8]))


@dataclass(frozen=True, slots=True)
class CouplingSnapshot:
    """Cross-scale quantities evaluated at one state.

    ``mu_crit`` is None exactly when nu0 = 0 (no master-infected hosts, so
    the error threshold is undefined).
    """

    nu0: float
    nu1: float
    f0_eff: float
    f1_eff: float
    beta00: float
    beta01: float
    beta11: float
    mu_crit: float | None


def prevalence(I0: float, I1: float) -> tuple[float, float]:
    """Relative prevalence (nu0, nu1) of the two infected classes.

    Returns exactly (0.0, 0.0) when both classes are empty; otherwise the
    pair (I0, I1)/(I0+I1).
    """
    if I0 < 0.0 or I1 < 0.0:
        raise ValidationError(f"prevalence requires I0, I1 >= 0, got ({I0}, {I1})")
    total = I0 + I1
    if total == 0.0:
        return (0.0, 0.0)
    return (I0 / total, I1 / total)


def transmission_rates(p: ModelParams, nu0: float, v0: float, v1: float) -> tuple[float, float, float]:
    """Saturating transmission rates (beta00, beta01, beta11) at given loads."""
    if not 0.0 <= nu0 <= 1.0:
        raise ValidationError(f"nu0 must lie in [0, 1], got {nu0}")
    if v0 < 0.0 or v1 < 0.0:
        raise ValidationError(f"virion loads must be >= 0, got ({v0}, {v1})")
    beta00 = p.a0 * v0 / (p.b0 + v0)
    beta01 = p.a1 * nu0 * v1 / (p.b1 + nu0 * v1)
    nu1 = 1.0 - nu0
    beta11 = p.a1 * nu1 * v1 / (p.b1 + nu1 * v1)
    return (beta00, beta01, beta11)


def effective_fitness(p: ModelParams, nu0: float) -> tuple[float, float]:
    """Prevalence-weighted replication fitnesses (f0*nu0, f1*(1-nu0))."""
    if not 0.0 <= nu0 <= 1.0:
        raise ValidationError(f"nu0 must lie in [0, 1], got {nu0}")
    return (p.f0 * nu0, p.f1 * (1.0 - nu0))


def critical_mutation(p: ModelParams, nu0: float) -> float | None:
    """Critical mutation probability mu_crit(nu0); None when nu0 = 0.

    The value may be negative: the meaningful predicate is
    ``p.mu >= critical_mutation(p, nu0)`` (master extinction at the fast
    layer), so no clamping is applied.
    """
    if not 0.0 <= nu0 <= 1.0:
        raise ValidationError(f"nu0 must lie in [0, 1], got {nu0}")
    if nu0 == 0.0:
        return None
    return 1.0 - (p.f1 / p.f0) * (1.0 / nu0 - 1.0)


def coupling_snapshot(p: ModelParams, I0: float, I1: float, v0: float, v1: float) -> CouplingSnapshot:
    """Evaluate every cross-scale quantity at one (I0, I1, v0, v1).

    Unlike :func:`transmission_rates` / :func:`effective_fitness`, which
    take nu0 with nu1 = 1 - nu0 (the generic branch), this handles the
    degenerate disease-free case where both prevalences are exactly 0 and
    every mutant channel vanishes.
    """
    nu0, nu1 = prevalence(I0, I1)
    if v0 < 0.0 or v1 < 0.0:
        raise ValidationError(f"virion loads must be >= 0, got ({v0}, {v1})")
    beta00 = p.a0 * v0 / (p.b0 + v0)
    beta01 = p.a1 * nu0 * v1 / (p.b1 + nu0 * v1)
    beta11 = p.a1 * nu1 * v1 / (p.b1 + nu1 * v1)
    return CouplingSnapshot(nu0, nu1, p.f0 * nu0, p.f1 * nu1,
                            beta00, beta01, beta11, critical_mutation(p, nu0))


def snapshot_of(p: ModelParams, state: FullState) -> CouplingSnapshot:
    m, q = state.macro, state.micro
    return coupling_snapshot(p, m.I0, m.I1, q.v0, q.v1)


def rhs_array(y: Sequence[float], p: ModelParams, *,
              nu_frozen: tuple[float, float] | None = None,
              clip: bool = True) -> np.ndarray:
    """Time derivative of the 9-component state vector.

    ``clip=True`` floors components at 0 before evaluating the coupling
    (stepper-facing behaviour); ``clip=False`` evaluates the formulas as
    written, which extends the field smoothly to slightly negative
    components and is what finite differencing needs.  ``nu_frozen`` pins
    the prevalence pair instead of computing it from (I0, I1); the
    linearisation at disease-free points uses the defined value (0, 0),
    where the prevalence itself is discontinuous.
    """
    S, I0, I1, R, D, g0, g1, v0, v1 = (float(v) for v in y)
    if not all(np.isfinite(v) for v in (S, I0, I1, R, D, g0, g1, v0, v1)):
        raise NumericError(f"non-finite state passed to rhs: {list(y)!r}")
    if clip:
        S, I0, I1, R, D = (max(v, 0.0) for v in (S, I0, I1, R, D))
        g0, g1, v0, v1 = (max(v, 0.0) for v in (g0, g1, v0, v1))

    if nu_frozen is not None:
        nu0, nu1 = nu_frozen
    else:
        total = I0 + I1
        if total == 0.0:
            nu0 = nu1 = 0.0
        else:
            nu0 = I0 / total
            nu1 = I1 / total

    beta00 = p.a0 * v0 / (p.b0 + v0)
    beta01 = p.a1 * nu0 * v1 / (p.b1 + nu0 * v1)
    beta11 = p.a1 * nu1 * v1 / (p.b1 + nu1 * v1)
    f0_eff = p.f0 * nu0
    f1_eff = p.f1 * nu1
    phi = f0_eff * g0 + f1_eff * g1

    inv_eps = 1.0 / p.epsilon
    return np.array([
        -(beta00 * I0 + beta01 * I0 + beta11 * I1) * S + p.chi * R,
        beta00 * I0 * S - (p.pi0 + p.delta0) * I0,
        (beta01 * I0 + beta11 * I1) * S - (p.pi1 + p.delta1) * I1,
        p.pi0 * I0 + p.pi1 * I1 - p.chi * R,
        p.delta0 * I0 + p.delta1 * I1,
        (f0_eff * (1.0 - p.mu) * g0 - phi * g0) * inv_eps,
        (f0_eff * p.mu * g0 + f1_eff * g1 - phi * g1) * inv_eps,
        (p.xi0 * g0 - p.gamma0 * v0) * inv_eps,
        (p.xi1 * g1 - p.gamma1 * v1) * inv_eps,
    ])


def rhs_full(state: FullState, p: ModelParams) -> np.ndarray:
    """Derivative of a full state, canonical component order."""
    return rhs_array(state.as_array(), p)


def rhs_reduced_limit(y: Sequence[float], p: ModelParams,
                      beta00: float, beta01: float) -> np.ndarray:
    """Vector field of the instant-recovery reduced model on (S, I0, R).

    The mutant class is adiabatically eliminated; the cross channel beta01
    sends susceptibles directly to the recovered class:

        S'  = -(beta00 + beta01)*I0*S + chi*R
        I0' = (beta00*S - pi0)*I0
        R'  = beta01*I0*S + pi0*I0 - chi*R
    """
    S, I0, R = (float(v) for v in y)
    return np.array([
        -(beta00 + beta01) * I0 * S + p.chi * R,
        (beta00 * S - p.pi0) * I0,
        beta01 * I0 * S + p.pi0 * I0 - p.chi * R,
    ])
