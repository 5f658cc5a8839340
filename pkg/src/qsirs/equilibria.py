"""Equilibrium construction, certification and continuation.

Equilibria of the coupled system fall into four classes by their infected
compartments: disease-free (DFE), mutant-only (NME), master-only (NmutE)
and co-circulation (CSE).  Every constructor returns points carrying a
certificate (named feasibility conditions with margins) and is checked
against the universal criterion: the full vector field at the point has
sup-norm below 1e-9.  Infeasibility is data (an :class:`Infeasible`
result), not an exception, except where a caller passes contradictory
freedoms (:class:`InfeasibleError`).

The co-circulation solver reduces the two-dimensional self-consistency
problem to a scalar root find in the infection ratio rho = I1/I0: the
prevalence nu = 1/(1+rho) fixes the fast-layer equilibrium and hence all
transmission rates, leaving the single residual

    r(rho) = rho - beta01*pi0 / (beta00*pi1 - beta11*pi0)

whose roots are bracketed by a log-spaced scan (densified toward the edge
of the valid rho-domain, where the second solution branch accumulates) and
polished by bisection.  The slow-layer point then follows from the linear
mass balance.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .integrate import EndpointClass
from .model import (CouplingSnapshot, MacroState, MicroState, ModelParams,
                    NumericError, ValidationError, coupling_snapshot,
                    critical_mutation, rhs_array, rhs_reduced_limit)

RHS_NORM_LIMIT = 1e-9


class InfeasibleError(ValidationError):
    """A requested equilibrium violates one of its existence conditions."""


@dataclass(frozen=True, slots=True)
class Condition:
    """One named feasibility condition with its numerical margin."""

    name: str
    satisfied: bool
    margin: float

    def to_dict(self) -> dict:
        return {"name": self.name, "satisfied": self.satisfied, "margin": self.margin}


@dataclass(frozen=True, slots=True)
class Infeasible:
    """Result marker: the class/branch admits no equilibrium here."""

    cls: EndpointClass
    reason: str
    conditions: tuple[Condition, ...] = ()
    label: str | None = None

    def to_dict(self) -> dict:
        return {"class": self.cls.value, "feasible": False, "reason": self.reason,
                "label": self.label,
                "conditions": [c.to_dict() for c in self.conditions]}


@dataclass(frozen=True, slots=True)
class EquilibriumPoint:
    """A certified fixed point of the coupled system."""

    cls: EndpointClass
    macro: MacroState
    micro: MicroState
    snapshot: CouplingSnapshot
    free_params: dict[str, float]
    certificate: tuple[Condition, ...]
    rhs_norm: float
    label: str | None = None

    def as_array(self) -> np.ndarray:
        m, q = self.macro, self.micro
        return np.array([m.S, m.I0, m.I1, m.R, m.D, q.g0, q.g1, q.v0, q.v1])

    def to_dict(self) -> dict:
        m, q = self.macro, self.micro
        return {
            "class": self.cls.value, "feasible": True, "label": self.label,
            "macro": {"S": m.S, "I0": m.I0, "I1": m.I1, "R": m.R, "D": m.D},
            "micro": {"g0": q.g0, "g1": q.g1, "v0": q.v0, "v1": q.v1},
            "free_params": dict(self.free_params),
            "certificate": [c.to_dict() for c in self.certificate],
            "rhs_norm": self.rhs_norm,
        }


def _nn(x: float) -> float:
    """Snap negative roundoff residue from mass balances to exactly 0."""
    return 0.0 if -1e-12 < x < 0.0 else x


def _certify(p: ModelParams, cls: EndpointClass, macro: MacroState,
             micro: MicroState, free_params: dict, conditions: tuple,
             label: str | None = None) -> EquilibriumPoint:
    snap = coupling_snapshot(p, macro.I0, macro.I1, micro.v0, micro.v1)
    y = np.array([macro.S, macro.I0, macro.I1, macro.R, macro.D,
                  micro.g0, micro.g1, micro.v0, micro.v1])
    norm = float(np.max(np.abs(rhs_array(y, p))))
    if norm >= RHS_NORM_LIMIT:
        raise NumericError(
            f"{cls.value} candidate failed the residual certificate: sup|rhs| = {norm:.3e}")
    return EquilibriumPoint(cls, macro, micro, snap, free_params,
                            conditions, norm, label)


# ---------------------------------------------------------------------------
# fast-layer equilibrium
# ---------------------------------------------------------------------------

def micro_equilibrium(p: ModelParams, nu0: float) -> MicroState:
    """Fast-layer equilibrium for a mixed-prevalence slow state.

    Below the critical mutation probability the master persists at
    g0* = 1 - mu/mu_crit; at or above it only mutants remain.  Virions sit
    at their production/decay balance v_i* = xi_i*g_i*/gamma_i.
    """
    if not 0.0 < nu0 < 1.0:
        raise ValidationError(
            f"mixed-prevalence fast equilibrium requires nu0 in (0, 1), got {nu0}")
    mu_c = critical_mutation(p, nu0)
    if mu_c is not None and p.mu < mu_c:
        g0 = 1.0 - p.mu / mu_c
        g1 = p.mu / mu_c
    else:
        g0, g1 = 0.0, 1.0
    return MicroState(g0, g1, p.xi0 * g0 / p.gamma0, p.xi1 * g1 / p.gamma1)


def _micro_master(p: ModelParams) -> MicroState:
    return MicroState(1.0, 0.0, p.xi0 / p.gamma0, 0.0)


def _micro_mutant(p: ModelParams) -> MicroState:
    return MicroState(0.0, 1.0, 0.0, p.xi1 / p.gamma1)


def _micro_mutation_balance(p: ModelParams) -> MicroState:
    # master-only prevalence: the mutant pool is maintained by mutation alone
    return MicroState(1.0 - p.mu, p.mu, p.xi0 * (1.0 - p.mu) / p.gamma0,
                      p.xi1 * p.mu / p.gamma1)


# ---------------------------------------------------------------------------
# disease-free points
# ---------------------------------------------------------------------------

def dfe_points(p: ModelParams, g0_star: float,
               freedoms: Mapping[str, float] | None = None) -> EquilibriumPoint:
    """Disease-free point for a given master frequency g0*.

    The fast layer is a whole segment (any g0* in [0, 1]).  With waning
    immunity (chi > 0) the slow layer must have R = 0 and S + D = 1; the
    susceptible fraction is the free coordinate (default 1, the fully
    susceptible population).  With chi = 0, R is also free.  Contradictory
    freedoms raise :class:`InfeasibleError` naming the violated condition.
    """
    if not 0.0 <= g0_star <= 1.0:
        raise ValidationError(f"g0_star must lie in [0, 1], got {g0_star}")
    freedoms = dict(freedoms or {})
    unknown = set(freedoms) - {"S", "R", "D"}
    if unknown:
        raise ValidationError(f"unknown DFE freedoms: {sorted(unknown)}")
    S = freedoms.get("S", 1.0)
    if p.chi > 0.0:
        R = freedoms.get("R", 0.0)
        if R != 0.0:
            raise InfeasibleError(
                f"condition 'R == 0 when chi > 0' violated by freedom R={R}")
        D = freedoms.get("D", 1.0 - S)
        if abs(S + D - 1.0) > 1e-12:
            raise InfeasibleError(f"condition 'S + D == 1' violated: got {S + D}")
        free = {"g0_star": g0_star, "S": S, "D": D}
    else:
        R = freedoms.get("R", 0.0)
        D = freedoms.get("D", 1.0 - S - R)
        if abs(S + R + D - 1.0) > 1e-12:
            raise InfeasibleError(f"condition 'S + R + D == 1' violated: got {S + R + D}")
        free = {"g0_star": g0_star, "S": S, "R": R, "D": D}
    macro = MacroState(S, 0.0, 0.0, R, D)
    micro = MicroState(g0_star, 1.0 - g0_star, p.xi0 * g0_star / p.gamma0,
                       p.xi1 * (1.0 - g0_star) / p.gamma1)
    return _certify(p, EndpointClass.DFE, macro, micro, free, ())


# ---------------------------------------------------------------------------
# mutant-only points
# ---------------------------------------------------------------------------

def nme_feasibility_bound(p: ModelParams) -> float:
    """Recovery-rate bound for the generic mutant-only point: pi1 < bound."""
    return p.a1 * p.xi1 / (p.b1 * p.gamma1 + p.xi1)


def nme_point(p: ModelParams, freedoms: Mapping[str, float] | None = None,
              micro_branch: str = "mutant") -> EquilibriumPoint | Infeasible:
    """Mutant-only equilibrium, or the reason none exists.

    Exists only for delta1 = 0.  Generic branch (chi > 0, transmitting
    mutant): micro state (0, 1, 0, xi1/gamma1) and

        S* = pi1/beta11,  I1* = (1 - S* - D*)/(1 + pi1/chi),
        R* = (pi1/chi)*I1*,

    feasible iff pi1 < a1*xi1/(b1*gamma1 + xi1).  The deceased fraction D*
    is a free coordinate (default 0).  Degenerate branches (silent mutant
    or chi = 0) require pi1 = 0; their free coordinates default to an
    interior point and are recorded in ``free_params``.  ``micro_branch``
    ('mutant' or 'master') picks the fast state on degenerate branches.
    """
    cls = EndpointClass.NME
    freedoms = dict(freedoms or {})
    if p.delta1 > 0.0:
        return Infeasible(cls, "delta1 must vanish",
                          (Condition("delta1 == 0", False, -p.delta1),))
    mutant_transmits = p.a1 > 0.0 and p.xi1 > 0.0

    if p.chi > 0.0 and mutant_transmits:
        beta11 = nme_feasibility_bound(p)
        bound = Condition("pi1 < a1*xi1/(b1*gamma1 + xi1)", p.pi1 < beta11,
                          beta11 - p.pi1)
        if not bound.satisfied:
            return Infeasible(cls, "mutant recovery too fast for persistence", (bound,))
        D = freedoms.get("D", 0.0)
        S = p.pi1 / beta11
        I1 = (1.0 - S - D) / (1.0 + p.pi1 / p.chi)
        pos = Condition("I1* > 0", I1 > 0.0, I1)
        if not pos.satisfied:
            return Infeasible(cls, "no room for an infected fraction", (bound, pos))
        R = (p.pi1 / p.chi) * I1
        macro = MacroState(S, 0.0, I1, R, _nn(1.0 - S - I1 - R))
        return _certify(p, cls, macro, _micro_mutant(p), {"D": D}, (bound, pos))

    # degenerate branches
    need_pi1 = Condition("pi1 == 0", p.pi1 == 0.0, -p.pi1)
    if not need_pi1.satisfied:
        return Infeasible(cls, "degenerate branch requires pi1 = 0", (need_pi1,))
    if micro_branch not in ("mutant", "master"):
        raise ValidationError(f"micro_branch must be 'mutant' or 'master', got {micro_branch!r}")
    micro = _micro_mutant(p) if micro_branch == "mutant" else _micro_master(p)
    mutant_state_transmits = micro.g1 == 1.0 and mutant_transmits
    I1 = freedoms.get("I1", 0.5)
    if p.chi > 0.0:
        # silent mutant: (S, 0, I1, 0, D) with S, I1 free
        S = freedoms.get("S", (1.0 - I1) / 2.0)
        macro = MacroState(S, 0.0, I1, 0.0, _nn(1.0 - S - I1))
        free = {"I1": I1, "S": S, "D": macro.D, "micro": micro_branch}
    elif mutant_state_transmits:
        # no waning, transmitting mutant: S* forced to 0
        S = freedoms.get("S", 0.0)
        if S != 0.0:
            raise InfeasibleError("condition 'S == 0' violated for a transmitting "
                                  f"mutant without waning; got freedom S={S}")
        R = freedoms.get("R", (1.0 - I1) / 2.0)
        macro = MacroState(0.0, 0.0, I1, R, _nn(1.0 - I1 - R))
        free = {"I1": I1, "R": R, "D": macro.D, "micro": micro_branch}
    else:
        S = freedoms.get("S", (1.0 - I1) / 3.0)
        R = freedoms.get("R", (1.0 - S - I1) / 2.0)
        macro = MacroState(S, 0.0, I1, R, _nn(1.0 - S - I1 - R))
        free = {"I1": I1, "S": S, "R": R, "D": macro.D, "micro": micro_branch}
    return _certify(p, cls, macro, micro, free, (need_pi1,), label="degenerate")


# ---------------------------------------------------------------------------
# master-only points
# ---------------------------------------------------------------------------

def nmut_cases(p: ModelParams,
               freedoms: Mapping[str, float] | None = None) -> list[EquilibriumPoint | Infeasible]:
    """Enumerate the eight master-only macroscopic cases.

    Requires delta0 = 0 throughout.  Case labels i1..i4 (chi > 0) and
    ii1..ii4 (chi = 0) are indexed by which of (beta00, beta01) vanish at
    the candidate fast state; master-only prevalence forces beta11 = 0.
    Candidate fast states are the mutation balance (1-mu, mu, ...) and the
    pure-mutant state; a transmitting master (beta00 > 0) is incompatible
    with the latter, which carries no master virions.  Free coordinates
    default to an interior point of their range and are recorded in
    ``free_params``.
    """
    freedoms = dict(freedoms or {})
    prefix = "i" if p.chi > 0.0 else "ii"
    if p.delta0 > 0.0:
        cond = Condition("delta0 == 0", False, -p.delta0)
        return [Infeasible(EndpointClass.NMUTE, "delta0 must vanish", (cond,),
                           label=f"{prefix}{k}") for k in range(1, 5)]

    candidates: list[tuple[str, MicroState]] = []
    if p.mu < 1.0:
        candidates.append(("mutation_balance", _micro_mutation_balance(p)))
    candidates.append(("pure_mutant", _micro_mutant(p)))

    results: list[EquilibriumPoint | Infeasible] = []
    for case_idx, (b00_zero, b01_zero) in enumerate(
            [(True, False), (False, True), (False, False), (True, True)], start=1):
        label = f"{prefix}{case_idx}"
        matched = False
        for micro_tag, micro in candidates:
            beta00 = p.a0 * micro.v0 / (p.b0 + micro.v0)
            beta01 = p.a1 * micro.v1 / (p.b1 + micro.v1)  # nu0 = 1
            if (beta00 == 0.0) != b00_zero or (beta01 == 0.0) != b01_zero:
                continue
            matched = True
            conds: list[Condition] = []
            if p.chi == 0.0 or b00_zero or not b01_zero:
                # every branch except (i2) forces a vanishing master recovery
                conds.append(Condition("pi0 == 0", p.pi0 == 0.0, -p.pi0))
            if not all(c.satisfied for c in conds):
                results.append(Infeasible(EndpointClass.NMUTE,
                                          "master recovery must vanish",
                                          tuple(conds), label=label))
                continue
            try:
                results.append(_build_nmut_macro(p, label, case_idx, micro,
                                                 micro_tag, beta00, freedoms,
                                                 tuple(conds)))
            except InfeasibleError as exc:
                results.append(Infeasible(EndpointClass.NMUTE, str(exc),
                                          tuple(conds), label=label))
        if not matched:
            results.append(Infeasible(
                EndpointClass.NMUTE,
                "no fast state realises this (beta00, beta01) signature",
                (), label=label))
    return results


def _build_nmut_macro(p, label, case_idx, micro, micro_tag, beta00, freedoms, conds):
    cls = EndpointClass.NMUTE
    if p.chi > 0.0:
        if case_idx == 2:
            # transmitting master, silent cross channel: endemic branch
            S = p.pi0 / beta00
            room = Condition("pi0 < beta00", S < 1.0, 1.0 - S)
            if not room.satisfied:
                raise InfeasibleError("master transmission cannot sustain itself")
            I0_max = (1.0 - S) / (1.0 + p.pi0 / p.chi)
            I0 = freedoms.get("I0", 0.5 * I0_max)
            in_range = Condition("0 < I0* <= (1-S*)/(1+pi0/chi)",
                                 0.0 < I0 <= I0_max, I0_max - I0)
            if not in_range.satisfied:
                raise InfeasibleError("I0* outside its feasible range")
            R = (p.pi0 / p.chi) * I0
            macro = MacroState(S, I0, 0.0, R, _nn(1.0 - S - I0 - R))
            return _certify(p, cls, macro, micro, {"I0": I0, "micro": micro_tag},
                            (*conds, room, in_range), label=label)
        if case_idx in (1, 3):
            I0 = freedoms.get("I0", 0.5)
            macro = MacroState(0.0, I0, 0.0, 0.0, _nn(1.0 - I0))
            return _certify(p, cls, macro, micro, {"I0": I0, "micro": micro_tag},
                            conds, label=label)
        I0 = freedoms.get("I0", 0.4)  # i4: S also free
        S = freedoms.get("S", 0.5 * (1.0 - I0))
        macro = MacroState(S, I0, 0.0, 0.0, _nn(1.0 - S - I0))
        return _certify(p, cls, macro, micro, {"I0": I0, "S": S, "micro": micro_tag},
                        conds, label=label)
    # chi = 0: S* = 0 except when both channels are silent (ii4)
    I0 = freedoms.get("I0", 0.4)
    R = freedoms.get("R", 0.3 * (1.0 - I0))
    if case_idx == 4:
        S = freedoms.get("S", 0.3 * (1.0 - I0))
        macro = MacroState(S, I0, 0.0, R, _nn(1.0 - S - I0 - R))
        free = {"I0": I0, "S": S, "R": R, "micro": micro_tag}
    else:
        macro = MacroState(0.0, I0, 0.0, R, _nn(1.0 - I0 - R))
        free = {"I0": I0, "R": R, "micro": micro_tag}
    return _certify(p, cls, macro, micro, free, conds, label=label)


# ---------------------------------------------------------------------------
# co-circulation points
# ---------------------------------------------------------------------------

def _cse_branch_data(p: ModelParams, rho: float, pi1: float):
    """Fast state and transmission rates on the mixed branch at ratio rho."""
    nu = 1.0 / (1.0 + rho)
    mu_c = 1.0 - (p.f1 / p.f0) * rho
    if p.mu >= mu_c:
        return None  # master-extinct fast state admits no co-circulation
    g0 = 1.0 - p.mu / mu_c
    g1 = p.mu / mu_c
    v0 = p.xi0 * g0 / p.gamma0
    v1 = p.xi1 * g1 / p.gamma1
    beta00 = p.a0 * v0 / (p.b0 + v0)
    beta01 = p.a1 * nu * v1 / (p.b1 + nu * v1)
    beta11 = p.a1 * (1.0 - nu) * v1 / (p.b1 + (1.0 - nu) * v1)
    den = beta00 * pi1 - beta11 * p.pi0
    if den <= 0.0 or beta00 <= 0.0:
        return None
    return (nu, mu_c, MicroState(g0, g1, v0, v1), beta00, beta01, beta11, den)


def _cse_residual(p: ModelParams, rho: float, pi1: float) -> float | None:
    data = _cse_branch_data(p, rho, pi1)
    if data is None:
        return None
    return rho - data[4] * p.pi0 / data[6]


def cse_solve(p: ModelParams, *, rho_min: float = 1e-6, rho_max: float = 1e6,
              n_scan: int = 2000, residual_tol: float = 1e-12,
              D_star: float = 0.0) -> list[EquilibriumPoint]:
    """All co-circulation equilibria on the generic branch (chi > 0).

    Returns the empty list whenever either strain is lethal (a positive
    mortality rate forbids co-circulation) or no root exists.  ``D_star``
    is the free deceased fraction (mass balance closes on 1 - D_star).
    Points are sorted by increasing infection ratio I1/I0.
    """
    if p.delta0 > 0.0 or p.delta1 > 0.0:
        return []
    if p.chi <= 0.0 or p.a0 == 0.0 or p.xi0 == 0.0:
        return _cse_degenerate(p)
    if not 0.0 <= D_star < 1.0:
        raise ValidationError(f"D_star must lie in [0, 1), got {D_star}")

    def f(r: float) -> float | None:
        return _cse_residual(p, r, p.pi1)

    if f(rho_min) is None:
        return []
    # the mixed branch dies where mu >= mu_crit; locate the domain edge
    lo, hi = rho_min, min(rho_max, (1.0 - p.mu) * p.f0 / p.f1)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if f(mid) is None:
            hi = mid
        else:
            lo = mid
    edge = lo

    grid = np.logspace(math.log10(rho_min), math.log10(edge), n_scan).tolist()
    # densify toward the edge: the second root branch accumulates there
    grid += [edge * (1.0 - 10.0 ** (-k)) for k in range(1, 14)]
    grid = sorted(set(g for g in grid if rho_min <= g <= edge))

    roots: list[float] = []
    prev_rho = prev_val = None
    for rho in grid:
        val = f(rho)
        if val is None:
            prev_rho = prev_val = None
            continue
        if val == 0.0:
            roots.append(rho)
        elif prev_val is not None and prev_val * val < 0.0:
            roots.append(_bisect(f, prev_rho, rho, residual_tol))
        prev_rho, prev_val = rho, val

    points = [pt for rho in roots
              if (pt := _cse_point_from_rho(p, rho, D_star)) is not None]
    points.sort(key=lambda q: q.macro.I1 / q.macro.I0)
    return points


def _bisect(f: Callable[[float], float | None], lo: float, hi: float,
            tol: float) -> float:
    flo = f(lo)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm is None:
            hi = mid
            continue
        if fm == 0.0:
            return mid
        if abs(fm) < tol and hi - lo < 1e-12 * max(1.0, lo):
            return mid
        if flo * fm < 0.0:
            hi = mid
        else:
            lo, flo = mid, fm
        if hi - lo <= 1e-16 * max(1.0, lo):
            break
    return 0.5 * (lo + hi)


def _cse_point_from_rho(p: ModelParams, rho: float, D_star: float) -> EquilibriumPoint | None:
    data = _cse_branch_data(p, rho, p.pi1)
    if data is None:
        return None
    nu, mu_c, micro, beta00, beta01, beta11, den = data
    S = p.pi0 / beta00
    I0 = (1.0 - D_star - S) / (1.0 + rho + (p.pi0 + p.pi1 * rho) / p.chi)
    if I0 <= 0.0:
        return None
    I1 = rho * I0
    R = (p.pi0 * I0 + p.pi1 * I1) / p.chi
    macro = MacroState(S, I0, I1, R, D_star)
    conds = (
        Condition("mu < mu_crit(nu*)", p.mu < mu_c, mu_c - p.mu),
        Condition("beta00*pi1 - beta11*pi0 > 0", den > 0.0, den),
        Condition("S* < 1 - D*", S < 1.0 - D_star, 1.0 - D_star - S),
    )
    free = {"D": D_star} if D_star else {}
    return _certify(p, EndpointClass.CSE, macro, micro, free, conds)


def _cse_degenerate(p: ModelParams) -> list[EquilibriumPoint]:
    """Non-generic co-circulation branches (chi = 0 or a silent master).

    All of them force vanishing recovery rates.  One representative point
    per applicable branch is returned, with the free coordinates (here the
    infection ratio, sizes and leftover fractions) recorded explicitly.
    """
    points: list[EquilibriumPoint] = []
    if p.pi0 != 0.0 or (p.chi <= 0.0 and p.pi1 != 0.0):
        return points
    rho = 1.0  # representative infection ratio; fast state must stay mixed
    if p.mu >= 1.0 - (p.f1 / p.f0) * rho:
        return points
    nu = 1.0 / (1.0 + rho)
    micro = micro_equilibrium(p, nu)
    beta00 = p.a0 * micro.v0 / (p.b0 + micro.v0)
    mutant_silent = p.a1 == 0.0 or p.xi1 == 0.0
    pi_cond = Condition("pi0 == 0" + (" and pi1 == 0" if p.chi <= 0.0 else ""),
                        True, 0.0)
    if p.chi <= 0.0 and beta00 > 0.0:
        # no waning, transmitting master: S* = 0
        I0, R = 0.25, 0.25
        macro = MacroState(0.0, I0, rho * I0, R, 1.0 - (1 + rho) * I0 - R)
        points.append(_certify(p, EndpointClass.CSE, macro, micro,
                               {"I0": I0, "R": R, "rho": rho}, (pi_cond,),
                               label="no_waning"))
    elif beta00 == 0.0 and mutant_silent:
        # fully silent virus: every macro coordinate is free
        I0, S = 0.2, 0.2
        R = 0.0 if p.chi > 0.0 else 0.1
        macro = MacroState(S, I0, rho * I0, R, 1.0 - S - (1 + rho) * I0 - R)
        points.append(_certify(p, EndpointClass.CSE, macro, micro,
                               {"I0": I0, "S": S, "R": R, "rho": rho}, (pi_cond,),
                               label="silent"))
    elif beta00 == 0.0 and p.pi1 == 0.0:
        # silent master, transmitting mutant without recovery: S* = 0
        I0 = 0.25
        R = 0.0 if p.chi > 0.0 else 0.2
        macro = MacroState(0.0, I0, rho * I0, R, 1.0 - (1 + rho) * I0 - R)
        points.append(_certify(p, EndpointClass.CSE, macro, micro,
                               {"I0": I0, "R": R, "rho": rho}, (pi_cond,),
                               label="silent_master"))
    return points


# ---------------------------------------------------------------------------
# continuation of co-circulation families
# ---------------------------------------------------------------------------

@dataclass(frozen=True, slots=True)
class FamilyEvent:
    kind: str  # "birth" | "collision_dfe" | "lost"
    pi1: float


@dataclass(slots=True)
class CseFamily:
    """One continuation branch of co-circulation points over pi1."""

    tag: str
    pi1_values: list[float] = field(default_factory=list)
    points: list[EquilibriumPoint] = field(default_factory=list)
    events: list[FamilyEvent] = field(default_factory=list)

    def coords(self) -> np.ndarray:
        return np.array([[q.macro.I0, q.macro.I1] for q in self.points])


@dataclass(frozen=True, slots=True)
class ContinuationResult:
    families: list[CseFamily]
    birth_pi1: float | None
    collision_pi1: float | None
    step: float


def cse_continuation(p: ModelParams, pi1_range: tuple[float, float] = (0.5, 10.0),
                     step: float = 0.025, **solve_kw) -> ContinuationResult:
    """Sweep pi1, chaining co-circulation roots into families.

    Points are matched between consecutive grid values by nearest neighbour
    in (I0, I1); a jump larger than 10x the grid step ends the family.  The
    birth value (first pi1 with roots) and each family end are refined by
    bisection in pi1 to an eighth of the step.  A family whose last point
    sits next to the disease-free state ends in a 'collision_dfe' event.
    """
    lo, hi = pi1_range
    if not (hi > lo >= p.pi0):
        raise ValidationError(
            f"pi1 range must sit at or above pi0={p.pi0} and be increasing, got {pi1_range}")
    grid = np.arange(lo, hi + 0.5 * step, step)
    max_jump = 10.0 * step
    done: list[CseFamily] = []
    active: list[CseFamily] = []
    birth_pi1 = None

    def solve_at(pi1: float) -> list[EquilibriumPoint]:
        return cse_solve(p.replace(pi1=float(pi1)), **solve_kw)

    prev_pi1: float | None = None
    for pi1 in grid:
        pts = solve_at(float(pi1))
        ended, born = _assign(active, done, pts, float(pi1), max_jump)
        if born and birth_pi1 is None:
            birth_pi1 = (float(pi1) if prev_pi1 is None else
                         _refine_transition(lambda q: solve_at(q), prev_pi1,
                                            float(pi1), step / 8.0, appears=True))
            for fam in born:
                fam.events.append(FamilyEvent("birth", birth_pi1))
        for fam in ended:
            end = _refine_transition(
                lambda q: _match_family(solve_at(q), fam, max_jump),
                prev_pi1, float(pi1), step / 8.0, appears=False)
            last = fam.points[-1].macro
            near_dfe = last.I0 + last.I1 < 1e-2 and last.S > 0.9
            fam.events.append(FamilyEvent("collision_dfe" if near_dfe else "lost", end))
        prev_pi1 = float(pi1)

    families = done + active

    def median_ratio(f: CseFamily) -> float:
        return float(np.median([q.macro.I1 / q.macro.I0 for q in f.points]))

    families.sort(key=median_ratio)
    # tag by infection balance along the branch: the master-heavier family
    # (smaller I1/I0 throughout) is family 1, the mutant-heavier is family 2
    for k, fam in enumerate(families, start=1):
        fam.tag = f"CSE{k}"
    collision = None
    for fam in families:
        for ev in fam.events:
            if ev.kind == "collision_dfe":
                collision = ev.pi1
    return ContinuationResult(families, birth_pi1, collision, step)


def _match_family(pts: list[EquilibriumPoint], fam: CseFamily,
                  max_jump: float) -> list[EquilibriumPoint]:
    if not pts:
        return []
    ref = fam.points[-1].macro
    best = min(pts, key=lambda q: math.hypot(q.macro.I0 - ref.I0, q.macro.I1 - ref.I1))
    if math.hypot(best.macro.I0 - ref.I0, best.macro.I1 - ref.I1) > max_jump:
        return []
    return [best]


def _refine_transition(solver, lo: float, hi: float, tol: float, appears: bool) -> float:
    """Bisect the pi1 value where the solver's root set becomes (non-)empty."""
    for _ in range(60):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        if bool(solver(mid)) == appears:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def _assign(active: list[CseFamily], done: list[CseFamily],
            pts: list[EquilibriumPoint], pi1: float,
            max_jump: float) -> tuple[list[CseFamily], list[CseFamily]]:
    """Greedy nearest-neighbour matching.

    Returns (families that ended at this grid value, families born here).
    """
    unmatched = list(pts)
    ended: list[CseFamily] = []
    for fam in list(active):
        best = None
        if unmatched:
            ref = fam.points[-1].macro
            best = min(unmatched, key=lambda q: math.hypot(q.macro.I0 - ref.I0,
                                                           q.macro.I1 - ref.I1))
            if math.hypot(best.macro.I0 - ref.I0, best.macro.I1 - ref.I1) > max_jump:
                best = None
        if best is None:
            ended.append(fam)
            active.remove(fam)
            done.append(fam)
        else:
            fam.pi1_values.append(pi1)
            fam.points.append(best)
            unmatched.remove(best)
    born: list[CseFamily] = []
    for q in unmatched:
        fam = CseFamily(tag="")
        fam.pi1_values.append(pi1)
        fam.points.append(q)
        active.append(fam)
        born.append(fam)
    return ended, born


# ---------------------------------------------------------------------------
# instant-recovery reduced model
# ---------------------------------------------------------------------------

@dataclass(frozen=True, slots=True)
class LimitEquilibria:
    """Equilibria of the reduced (S, I0, R) model at mutation balance."""

    micro: MicroState
    beta00: float
    beta01: float
    dfe: tuple[float, float, float]
    cse: tuple[float, float, float] | None
    conditions: tuple[Condition, ...]


def limit_equilibria(p: ModelParams, mu: float | None = None) -> LimitEquilibria:
    """Disease-free and endemic points of the instant-recovery limit.

    The fast layer sits at the mutation balance (1-mu, mu, ...) with full
    master prevalence.  Setting the three slow equations to zero gives

        S*  = pi0/beta00,
        I0* = chi*(1 - S*) / (chi + (1 + beta01/beta00)*pi0),
        R*  = 1 - S* - I0*,

    which exists when the master transmits (beta00 > pi0); the returned
    point is certified against the reduced vector field.
    """
    mu = p.mu if mu is None else mu
    if not 0.0 < mu < 1.0:
        raise ValidationError(f"reduced model requires mu in (0, 1), got {mu}")
    q = p.replace(mu=mu)
    micro = _micro_mutation_balance(q)
    beta00 = q.a0 * micro.v0 / (q.b0 + micro.v0)
    beta01 = q.a1 * micro.v1 / (q.b1 + micro.v1)  # full master prevalence
    dfe = (1.0, 0.0, 0.0)
    transmits = Condition("beta00 > 0", beta00 > 0.0, beta00)
    if not transmits.satisfied:
        return LimitEquilibria(micro, beta00, beta01, dfe, None, (transmits,))
    S = q.pi0 / beta00
    I0 = q.chi * (1.0 - S) / (q.chi + (1.0 + beta01 / beta00) * q.pi0)
    R = _nn(1.0 - S - I0)
    below_one = Condition("pi0 < beta00", S < 1.0, 1.0 - S)
    fits = Condition("S* + I0* <= 1", R >= 0.0, R)
    conds = (transmits, below_one, fits)
    if not (fits.satisfied and below_one.satisfied):
        return LimitEquilibria(micro, beta00, beta01, dfe, None, conds)
    resid = float(np.max(np.abs(rhs_reduced_limit((S, I0, R), q, beta00, beta01))))
    if resid >= RHS_NORM_LIMIT:
        raise NumericError(f"reduced endemic point failed its residual check: {resid:.3e}")
    return LimitEquilibria(micro, beta00, beta01, dfe, (S, I0, R), conds)
