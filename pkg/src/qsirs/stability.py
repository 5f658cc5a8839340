"""Linear stability analysis: finite-difference Jacobians, spectra,
closed-form cross-checks and the quasi-period of damped oscillations.

All spectra of the full system are reported for the vector field with the
timescale split absorbed (epsilon = 1): stability classification is
unchanged for any epsilon > 0, the fast-block eigenvalues simply scale by
1/epsilon, and the closed-form lists below are exact in that convention.
Cross-checks against the finite-difference Jacobian therefore evaluate it
on a parameter set with epsilon = 1.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import (FullState, ModelParams, NumericError, ValidationError,
                    rhs_array, rhs_reduced_limit)

ZERO_TOL = 1e-7


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues sorted by descending real part, with a center band.

    ``counts`` partitions the list into (unstable, center, stable) by
    comparing real parts against ``zero_tol``; center directions arise
    from conservation laws and equilibrium-family freedoms.
    """

    eigenvalues: np.ndarray
    zero_tol: float = ZERO_TOL

    @property
    def counts(self) -> tuple[int, int, int]:
        re = self.eigenvalues.real
        n_unstable = int(np.sum(re > self.zero_tol))
        n_center = int(np.sum(np.abs(re) <= self.zero_tol))
        return (n_unstable, n_center, len(re) - n_unstable - n_center)

    @property
    def stable(self) -> bool:
        return self.counts[0] == 0

    @property
    def leading(self) -> complex:
        """Eigenvalue with the largest real part."""
        return complex(self.eigenvalues[0])

    def deciding(self) -> complex:
        """Largest-real-part eigenvalue outside the center band."""
        for lam in self.eigenvalues:
            if abs(lam.real) > self.zero_tol:
                return complex(lam)
        return complex(self.eigenvalues[-1])


def _sorted_spectrum(vals: np.ndarray, zero_tol: float) -> Spectrum:
    vals = np.asarray(vals, dtype=complex)
    order = np.lexsort((vals.imag, -vals.real))
    return Spectrum(vals[order], zero_tol)


def eigenvalues(m: np.ndarray, zero_tol: float = ZERO_TOL) -> Spectrum:
    """Spectrum of a small dense real matrix.

    Delegates to LAPACK's balancing + Hessenberg + shifted-QR path (via
    numpy); for real input the complex eigenvalues come out in exact
    conjugate pairs.  Dimension is capped at 16: everything in this
    package is at most 9x9.
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValidationError(f"eigenvalues expects a square matrix, got shape {m.shape}")
    if m.shape[0] > 16:
        raise ValidationError(f"matrix dimension {m.shape[0]} exceeds the supported 16")
    if not np.all(np.isfinite(m)):
        raise NumericError("matrix contains non-finite entries")
    try:
        vals = np.linalg.eigvals(m)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise NumericError(f"QR iteration failed to converge: {exc}") from exc
    return _sorted_spectrum(vals, zero_tol)


def finite_difference_jacobian(f, x: np.ndarray, h: float = 1e-6) -> np.ndarray:
    """Central-difference Jacobian of an arbitrary vector map (exact for
    linear maps up to roundoff)."""
    x = np.asarray(x, dtype=float)
    n = len(x)
    cols = []
    for j in range(n):
        dx = np.zeros(n)
        dx[j] = h
        cols.append((np.asarray(f(x + dx), dtype=float)
                     - np.asarray(f(x - dx), dtype=float)) / (2.0 * h))
    return np.column_stack(cols)


def jacobian_fd(p: ModelParams, x: FullState | np.ndarray,
                h: float = 1e-6) -> np.ndarray:
    """Central-difference Jacobian of the full vector field.

    Uses the smooth analytic extension of the field (no flooring), so
    probing slightly negative components is well defined.  At a
    disease-free base point (I0 = I1 = 0) the prevalence pair is held at
    its defined value (0, 0): the prevalence itself is discontinuous
    there, and this frozen convention is the one under which the
    disease-free spectra and the reproduction-number threshold agree.
    """
    if not 1e-8 <= h <= 1e-4:
        raise ValidationError(f"finite-difference step must lie in [1e-8, 1e-4], got {h}")
    y = x.as_array() if isinstance(x, FullState) else np.asarray(x, dtype=float)
    if y.shape != (9,):
        raise ValidationError(f"state must have 9 components, got shape {y.shape}")
    frozen = (0.0, 0.0) if y[1] + y[2] == 0.0 else None
    J = finite_difference_jacobian(
        lambda u: rhs_array(u, p, nu_frozen=frozen, clip=False), y, h)
    if not np.all(np.isfinite(J)):
        raise NumericError("non-finite entries in the finite-difference Jacobian")
    return J


def spectrum_at(p: ModelParams, x: FullState | np.ndarray,
                h: float = 1e-6, zero_tol: float = ZERO_TOL) -> Spectrum:
    """Spectrum of the finite-difference Jacobian at a state."""
    return eigenvalues(jacobian_fd(p, x, h), zero_tol)


# ---------------------------------------------------------------------------
# closed-form spectra for the vaccine-like scenario (case 1)
# ---------------------------------------------------------------------------

CASE1_NME_PI1_MAX = 40.0 / 7.0


def nme_discriminant(pi1: float) -> float:
    """Cubic whose sign decides real vs complex slow modes at the
    mutant-only point of the case-1 parameter set."""
    return 49.0 * pi1**3 - 84.0 * pi1**2 - 924.0 * pi1 + 338.0


def nme_spectrum_closed_form(pi1: float, zero_tol: float = ZERO_TOL) -> Spectrum:
    """Exact spectrum at the case-1 mutant-only point (epsilon = 1).

    Valid for pi1 in (0.5, 40/7), the feasibility window of the point.
    Six eigenvalues are parameter-independent; the remaining pair

        -(54 -/+ sqrt(2*Delta(pi1))) / (7*(pi1 + 2))

    is complex for Delta < 0 (damped oscillations) and real otherwise.
    The deceased class is decoupled at this point and excluded (8 values);
    the full 9x9 Jacobian carries one additional zero.
    """
    if not 0.5 < pi1 < CASE1_NME_PI1_MAX:
        raise ValidationError(
            f"closed-form NME spectrum needs pi1 in (0.5, 40/7), got {pi1}")
    delta = nme_discriminant(pi1)
    denom = 7.0 * (pi1 + 2.0)
    if delta < 0.0:
        true_pair = [complex(-54.0, +np.sqrt(-2.0 * delta)) / denom,
                     complex(-54.0, -np.sqrt(-2.0 * delta)) / denom]
    else:
        root = np.sqrt(2.0 * delta)
        true_pair = [(-54.0 + root) / denom, (-54.0 - root) / denom]
    vals = np.array([-0.8, -0.5, -0.5, -0.2, -0.2, 0.0, *true_pair], dtype=complex)
    return _sorted_spectrum(vals, zero_tol)


def nme_complex_window(tol: float = 1e-10) -> tuple[float, float]:
    """Positive roots of the discriminant: the pi1 interval with complex
    slow modes, located by sign-change bisection."""
    roots = []
    grid = np.linspace(0.0, 8.0, 4001)
    vals = [nme_discriminant(x) for x in grid]
    for a, b, fa, fb in zip(grid[:-1], grid[1:], vals[:-1], vals[1:]):
        if fa == 0.0:
            roots.append(float(a))
        elif fa * fb < 0.0:
            lo, hi = float(a), float(b)
            flo = fa
            while hi - lo > tol:
                mid = 0.5 * (lo + hi)
                fm = nme_discriminant(mid)
                if fm == 0.0:
                    lo = hi = mid
                elif flo * fm < 0.0:
                    hi = mid
                else:
                    lo, flo = mid, fm
            roots.append(0.5 * (lo + hi))
    if len(roots) != 2:
        raise NumericError(f"expected two positive discriminant roots, found {roots}")
    return (roots[0], roots[1])


def dfe_spectrum_case1(g0_star: float, pi1: float = 1.0,
                       zero_tol: float = ZERO_TOL) -> Spectrum:
    """Exact spectrum on the case-1 disease-free segment (epsilon = 1).

    The deciding eigenvalue (175*g0* - 1)/(50*g0* + 2) flips sign at
    g0* = 1/175; the deceased class is excluded (8 values) as in the
    mutant-only spectrum.
    """
    if not 0.0 <= g0_star <= 1.0:
        raise ValidationError(f"g0_star must lie in [0, 1], got {g0_star}")
    lam = dfe_deciding_eigenvalue_case1(g0_star)
    vals = np.array([-2.0, -0.8, -0.5, 0.0, 0.0, 0.0, lam, -pi1], dtype=complex)
    return _sorted_spectrum(vals, zero_tol)


def dfe_deciding_eigenvalue_case1(g0_star: float) -> float:
    return (175.0 * g0_star - 1.0) / (50.0 * g0_star + 2.0)


# ---------------------------------------------------------------------------
# closed-form spectra for the burnout scenario (case 2)
# ---------------------------------------------------------------------------

def dfe_deciding_eigenvalue_case2(p: ModelParams, S_star: float,
                                  g0_star: float) -> float:
    """Transversal growth rate of the master infection on the disease-free
    plane: a0*xi0*g0*S/(b0*gamma0 + xi0*g0) - pi0."""
    return (p.a0 * p.xi0 * g0_star * S_star
            / (p.b0 * p.gamma0 + p.xi0 * g0_star) - p.pi0)


def dfe_spectrum_case2(p: ModelParams, S_star: float, g0_star: float,
                       zero_tol: float = ZERO_TOL) -> Spectrum:
    """Exact spectrum on the burnout-scenario disease-free plane
    (epsilon = 1), parametrised by (S*, g0*); all nine directions."""
    if not 0.0 <= S_star <= 1.0 or not 0.0 <= g0_star <= 1.0:
        raise ValidationError(
            f"(S*, g0*) must lie in the unit square, got ({S_star}, {g0_star})")
    psi = dfe_deciding_eigenvalue_case2(p, S_star, g0_star)
    vals = np.array([0.0, 0.0, 0.0, 0.0, -p.chi, -p.gamma0, -p.gamma1,
                     -(p.delta1 + p.pi1), psi], dtype=complex)
    return _sorted_spectrum(vals, zero_tol)


def dfe_boundary_case2(p: ModelParams, g0_star: float) -> float:
    """Susceptible fraction on the marginal-stability hyperbola:
    S* = (pi0/a0) * (1 + b0*gamma0/(xi0*g0*)).  Undefined at g0* = 0,
    where the deciding eigenvalue is -pi0 < 0 for any S*."""
    if g0_star <= 0.0:
        raise ValidationError(
            "stability boundary undefined at g0* = 0 (always stable there)")
    return (p.pi0 / p.a0) * (1.0 + p.b0 * p.gamma0 / (p.xi0 * g0_star))


# ---------------------------------------------------------------------------
# damped oscillations
# ---------------------------------------------------------------------------

def quasi_period(spec: Spectrum) -> float | None:
    """Oscillation period 2*pi/|Im| of the least-damped complex pair.

    None when the spectrum is real (within the zero tolerance on the
    imaginary part): no oscillatory mode.
    """
    for lam in spec.eigenvalues:  # sorted by descending real part
        if abs(lam.imag) > spec.zero_tol:
            return float(2.0 * np.pi / abs(lam.imag))
    return None


# ---------------------------------------------------------------------------
# instant-recovery reduced model
# ---------------------------------------------------------------------------

def reduced_dfe_spectrum(p: ModelParams, mu: float | None = None,
                         zero_tol: float = ZERO_TOL) -> Spectrum:
    """Spectrum {-chi, beta00 - pi0} of the reduced model's disease-free
    point on the invariant simplex (R eliminated by conservation)."""
    from .equilibria import limit_equilibria

    eq = limit_equilibria(p, mu)
    return _sorted_spectrum(np.array([-p.chi, eq.beta00 - p.pi0], dtype=complex),
                            zero_tol)


def reduced_jacobian(p: ModelParams, S: float, I0: float,
                     beta00: float, beta01: float) -> np.ndarray:
    """Analytic 2x2 Jacobian of the reduced model on the simplex slice
    R = 1 - S - I0."""
    return np.array([
        [-(beta00 + beta01) * I0 - p.chi, -(beta00 + beta01) * S - p.chi],
        [beta00 * I0, beta00 * S - p.pi0],
    ])


def reduced_jacobian_fd(p: ModelParams, S: float, I0: float,
                        beta00: float, beta01: float, h: float = 1e-6) -> np.ndarray:
    """Finite-difference twin of :func:`reduced_jacobian` (cross-check)."""

    def f(u):
        s, i0 = u
        return rhs_reduced_limit((s, i0, 1.0 - s - i0), p, beta00, beta01)[:2]

    J = np.empty((2, 2))
    for j in range(2):
        du = np.zeros(2)
        du[j] = h
        J[:, j] = (f(np.array([S, I0]) + du) - f(np.array([S, I0]) - du)) / (2 * h)
    return J


def reduced_cse_stability(p: ModelParams, mu: float | None = None) -> tuple[float, float]:
    """(determinant, trace) of the reduced Jacobian at the endemic point.

    Positive determinant with negative trace for every feasible draw: the
    endemic point of the reduced model is always locally stable.
    """
    from .equilibria import limit_equilibria

    eq = limit_equilibria(p, mu)
    if eq.cse is None:
        raise ValidationError("reduced endemic point infeasible for these parameters")
    S, I0, _ = eq.cse
    J = reduced_jacobian(p, S, I0, eq.beta00, eq.beta01)
    return (float(np.linalg.det(J)), float(np.trace(J)))
