"""Reproduction numbers: invasion threshold at the disease-free state,
time-varying per-strain indices, and the outflow-weighted growth
diagnostic.

At the disease-free state the prevalence pair is (0, 0) by definition, so
the mutant channels vanish and the next-generation matrix is triangular:
the invasion threshold reduces to beta00/(pi0 + delta0).  Away from the
disease-free state the two-strain spectral radius
max{beta00/(pi0+delta0), beta11/(pi1+delta1)} is exposed separately as a
diagnostic.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import (FullState, ModelParams, ValidationError, prevalence,
                    transmission_rates)


@dataclass(frozen=True, slots=True)
class ReproductionReport:
    """Per-state reproduction indices.

    ``Rt0``/``Rt1`` are None exactly when the corresponding strain is
    absent (the per-strain index conditions on a non-empty class); the
    standalone mutant index beta11*S/(pi1+delta1) is always defined.
    ``growth`` is the outflow-weighted aggregate

        G = O0*(Rt0 - 1) + O1*(Rt1 - 1),   Oj = (pij + deltaj)*Ij,

    positive exactly when the total infected fraction grows.
    """

    R0: float
    Rt0: float | None
    Rt1: float | None
    Rt1_standalone: float
    growth: float
    outflow0: float
    outflow1: float

    def to_row(self) -> dict:
        return {"R0": self.R0, "Rt0": self.Rt0, "Rt1": self.Rt1,
                "Rt1_standalone": self.Rt1_standalone, "Gt": self.growth,
                "O0": self.outflow0, "O1": self.outflow1}


def r0(p: ModelParams, v0_init: float) -> float:
    """Invasion threshold at the disease-free state for a master load.

    beta00(v0)/(pi0 + delta0); the mutant channels contribute nothing
    because no mutant-infected hosts exist yet.
    """
    if p.pi0 + p.delta0 <= 0.0:
        raise ValidationError(
            "invasion threshold undefined: pi0 + delta0 must be positive")
    if v0_init < 0.0:
        raise ValidationError(f"virion load must be >= 0, got {v0_init}")
    beta00 = p.a0 * v0_init / (p.b0 + v0_init)
    return beta00 / (p.pi0 + p.delta0)


def ngm_spectral_radius(p: ModelParams, nu0: float, v0: float, v1: float) -> float:
    """Two-strain next-generation spectral radius at arbitrary prevalence:
    max of the per-strain inflow/outflow ratios (diagnostic use)."""
    if p.pi0 + p.delta0 <= 0.0 or p.pi1 + p.delta1 <= 0.0:
        raise ValidationError("spectral radius undefined: both strain outflow "
                              "rates must be positive")
    beta00, _, beta11 = transmission_rates(p, nu0, v0, v1)
    return max(beta00 / (p.pi0 + p.delta0), beta11 / (p.pi1 + p.delta1))


def rt_report(s: FullState | np.ndarray, p: ModelParams) -> ReproductionReport:
    """Reproduction indices and the growth diagnostic at one state."""
    y = s.as_array() if isinstance(s, FullState) else np.asarray(s, dtype=float)
    S, I0, I1 = float(y[0]), float(y[1]), float(y[2])
    v0, v1 = float(y[7]), float(y[8])
    nu0, _ = prevalence(I0, I1)
    beta00, beta01, beta11 = transmission_rates(p, nu0, v0, v1)
    out0_rate = p.pi0 + p.delta0
    out1_rate = p.pi1 + p.delta1

    Rt0 = beta00 * S / out0_rate if I0 > 0.0 and out0_rate > 0.0 else None
    if I1 > 0.0 and out1_rate > 0.0:
        Rt1 = (beta01 * I0 / I1 + beta11) * S / out1_rate
    else:
        Rt1 = None
    Rt1_alone = beta11 * S / out1_rate if out1_rate > 0.0 else float("nan")

    O0 = out0_rate * I0
    O1 = out1_rate * I1
    growth = 0.0
    if Rt0 is not None:
        growth += O0 * (Rt0 - 1.0)
    if Rt1 is not None:
        growth += O1 * (Rt1 - 1.0)

    R0 = max(beta00 / out0_rate if out0_rate > 0.0 else float("inf"),
             beta11 / out1_rate if out1_rate > 0.0 else float("inf"))
    return ReproductionReport(R0, Rt0, Rt1, Rt1_alone, growth, O0, O1)
