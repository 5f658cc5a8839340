"""Pure-Python stepping kernel.

Reference implementation of the adaptive Dormand-Prince 5(4) loop used by
the integrator.  A Cython twin (``qsirs._core_c``) implements the identical
arithmetic; ``qsirs.kernel`` picks whichever is importable.  Plain floats
and lists throughout: this loop dominates runtime, so no per-step numpy.

Kernel contract (shared by both backends):

* parameters arrive as a 17-tuple in ``ModelParams`` field order;
* the state vector is ``(S, I0, I1, R, D, g0, g1, v0, v1)``;
* components are floored at 0 for the coupling evaluation (steppers probe
  slightly outside the simplex);
* after every accepted step, components with ``y < clamp_threshold`` are
  set to exactly 0 and a clamp event is recorded;
* the run stops when the sup-norm of the derivative has stayed below
  ``settle_norm`` for ``settle_duration`` time units (settled), at
  ``t_max``, or when the step budget is exhausted.
"""
from __future__ import annotations

from math import isfinite as _isfinite

BACKEND = "python"

# status codes
SETTLED = 0
HORIZON = 1
STEP_BUDGET = 2
STEP_UNDERFLOW = 3
NONFINITE = 4

# event codes
EV_CLAMP = 0
EV_SETTLED = 1
EV_BUDGET = 2

# Dormand-Prince 5(4) tableau
_C2, _C3, _C4, _C5 = 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0
_A21 = 1.0 / 5.0
_A31, _A32 = 3.0 / 40.0, 9.0 / 40.0
_A41, _A42, _A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
_A51, _A52, _A53, _A54 = 19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0
_A61, _A62, _A63, _A64, _A65 = (9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0,
                                49.0 / 176.0, -5103.0 / 18656.0)
_B1, _B3, _B4, _B5, _B6 = 35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0
_E1, _E3, _E4, _E5, _E6, _E7 = (71.0 / 57600.0, -71.0 / 16695.0, 71.0 / 1920.0,
                                -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0)

# PI step controller (order-5 pair)
_ALPHA = 0.7 / 5.0
_BETA = 0.4 / 5.0
_SAFETY = 0.9
_FAC_MIN = 0.2
_FAC_MAX = 6.0

# Near an equilibrium the controller rides the stability boundary
# (|R(h*lambda)| ~ 1), freezing roundoff-scale fast-mode deviations and
# keeping the derivative norm above the settle threshold forever.  Once the
# derivative norm falls below the gate, the step is capped so that
# h*lambda_fast stays strictly inside the stability region and deviations
# decay geometrically.
_SETTLE_GATE = 1e-6
_DAMP_HL = 2.0


def rhs(y, P, out):
    """Clipped vector field; writes the derivative into ``out``."""
    (f0, f1, mu, xi0, xi1, gamma0, gamma1, a0, a1, b0, b1,
     pi0, pi1, delta0, delta1, chi, epsilon) = P
    S = y[0] if y[0] > 0.0 else 0.0
    I0 = y[1] if y[1] > 0.0 else 0.0
    I1 = y[2] if y[2] > 0.0 else 0.0
    R = y[3] if y[3] > 0.0 else 0.0
    g0 = y[5] if y[5] > 0.0 else 0.0
    g1 = y[6] if y[6] > 0.0 else 0.0
    v0 = y[7] if y[7] > 0.0 else 0.0
    v1 = y[8] if y[8] > 0.0 else 0.0

    tot = I0 + I1
    if tot > 0.0:
        nu0 = I0 / tot
        nu1 = I1 / tot
    else:
        nu0 = 0.0
        nu1 = 0.0

    beta00 = a0 * v0 / (b0 + v0)
    beta01 = a1 * nu0 * v1 / (b1 + nu0 * v1)
    beta11 = a1 * nu1 * v1 / (b1 + nu1 * v1)
    f0e = f0 * nu0
    f1e = f1 * nu1
    phi = f0e * g0 + f1e * g1
    inv_eps = 1.0 / epsilon

    out[0] = -(beta00 * I0 + beta01 * I0 + beta11 * I1) * S + chi * R
    out[1] = beta00 * I0 * S - (pi0 + delta0) * I0
    out[2] = (beta01 * I0 + beta11 * I1) * S - (pi1 + delta1) * I1
    out[3] = pi0 * I0 + pi1 * I1 - chi * R
    out[4] = delta0 * I0 + delta1 * I1
    out[5] = (f0e * (1.0 - mu) * g0 - phi * g0) * inv_eps
    out[6] = (f0e * mu * g0 + f1e * g1 - phi * g1) * inv_eps
    out[7] = (xi0 * g0 - gamma0 * v0) * inv_eps
    out[8] = (xi1 * g1 - gamma1 * v1) * inv_eps


def _error_norm(err, y_old, y_new, rtol, atol):
    acc = 0.0
    for i in range(9):
        ay = abs(y_old[i])
        an = abs(y_new[i])
        sk = atol + rtol * (ay if ay > an else an)
        r = err[i] / sk
        acc += r * r
    return (acc / 9.0) ** 0.5


def _initial_step(P, y0, f0, rtol, atol, t_max):
    """Hairer-style automatic first step size."""
    d0 = 0.0
    d1 = 0.0
    for i in range(9):
        sk = atol + rtol * abs(y0[i])
        r = y0[i] / sk
        d0 += r * r
        r = f0[i] / sk
        d1 += r * r
    d0 = (d0 / 9.0) ** 0.5
    d1 = (d1 / 9.0) ** 0.5
    h0 = 1e-6 if (d0 < 1e-5 or d1 < 1e-5) else 0.01 * d0 / d1
    h0 = min(h0, t_max)
    y1 = [y0[i] + h0 * f0[i] for i in range(9)]
    f1 = [0.0] * 9
    rhs(y1, P, f1)
    d2 = 0.0
    for i in range(9):
        sk = atol + rtol * abs(y0[i])
        r = (f1[i] - f0[i]) / sk
        d2 += r * r
    d2 = (d2 / 9.0) ** 0.5 / h0
    dm = max(d1, d2)
    h1 = max(1e-6, h0 * 1e-3) if dm <= 1e-15 else (0.01 / dm) ** 0.2
    return min(100.0 * h0, h1, t_max)


def integrate_raw(P, y0, rtol, atol, t_max, clamp_threshold, max_steps,
                  settle_norm, settle_duration, store):
    """Run the adaptive loop; returns a plain dict of results."""
    # bound on the fast-layer spectral radius (virion decay and genome block)
    lam_fast = P[5] if P[5] > P[6] else P[6]
    if 2.0 * P[0] > lam_fast:
        lam_fast = 2.0 * P[0]
    h_damp = _DAMP_HL * P[16] / lam_fast

    y = [float(v) for v in y0]
    t = 0.0
    k1 = [0.0] * 9
    k2 = [0.0] * 9
    k3 = [0.0] * 9
    k4 = [0.0] * 9
    k5 = [0.0] * 9
    k6 = [0.0] * 9
    k7 = [0.0] * 9
    ys = [0.0] * 9
    y_new = [0.0] * 9
    err = [0.0] * 9

    rhs(y, P, k1)

    macro0 = y[0] + y[1] + y[2] + y[3] + y[4]
    micro0 = y[5] + y[6]

    times = [0.0]
    states = [list(y)]
    events = []
    n_accepted = 0
    n_rejected = 0
    clamp_mass = 0.0
    max_macro_drift = 0.0
    max_micro_drift = 0.0
    below_since = -1.0
    err_prev = 1.0
    status = HORIZON

    dnorm = 0.0
    for i in range(9):
        a = abs(k1[i])
        if a > dnorm:
            dnorm = a
    if dnorm < settle_norm:
        below_since = 0.0

    h = _initial_step(P, y, k1, rtol, atol, t_max)

    while True:
        if t_max - t <= 1e-13 * (1.0 if t_max < 1.0 else t_max):
            status = HORIZON
            break
        if n_accepted + n_rejected >= max_steps:
            status = STEP_BUDGET
            events.append((t, EV_BUDGET, -1))
            break
        if h < 1e-13 * (1.0 if t < 1.0 else t):
            status = STEP_UNDERFLOW
            break
        if 0.0 < dnorm < _SETTLE_GATE and h > h_damp:
            h = h_damp
        if h > t_max - t:
            h = t_max - t

        for i in range(9):
            ys[i] = y[i] + h * (_A21 * k1[i])
        rhs(ys, P, k2)
        for i in range(9):
            ys[i] = y[i] + h * (_A31 * k1[i] + _A32 * k2[i])
        rhs(ys, P, k3)
        for i in range(9):
            ys[i] = y[i] + h * (_A41 * k1[i] + _A42 * k2[i] + _A43 * k3[i])
        rhs(ys, P, k4)
        for i in range(9):
            ys[i] = y[i] + h * (_A51 * k1[i] + _A52 * k2[i] + _A53 * k3[i] + _A54 * k4[i])
        rhs(ys, P, k5)
        for i in range(9):
            ys[i] = y[i] + h * (_A61 * k1[i] + _A62 * k2[i] + _A63 * k3[i]
                                + _A64 * k4[i] + _A65 * k5[i])
        rhs(ys, P, k6)
        for i in range(9):
            y_new[i] = y[i] + h * (_B1 * k1[i] + _B3 * k3[i] + _B4 * k4[i]
                                   + _B5 * k5[i] + _B6 * k6[i])
        rhs(y_new, P, k7)
        for i in range(9):
            err[i] = h * (_E1 * k1[i] + _E3 * k3[i] + _E4 * k4[i]
                          + _E5 * k5[i] + _E6 * k6[i] + _E7 * k7[i])

        bad = False
        for i in range(9):
            if not (_isfinite(y_new[i]) and _isfinite(err[i])):
                bad = True
                break
        if bad:
            n_rejected += 1
            h *= 0.25
            if h < 1e-13 * (1.0 if t < 1.0 else t):
                status = NONFINITE
                break
            continue

        enorm = _error_norm(err, y, y_new, rtol, atol)

        if enorm > 1.0:
            n_rejected += 1
            fac = _SAFETY * enorm ** (-0.2)
            h *= fac if fac > _FAC_MIN else _FAC_MIN
            continue

        # accepted
        t += h
        n_accepted += 1
        clamped = False
        for i in range(9):
            v = y_new[i]
            if v != 0.0 and v < clamp_threshold:
                clamp_mass += v if v > 0.0 else -v
                y_new[i] = 0.0
                events.append((t, EV_CLAMP, i))
                clamped = True
        y, y_new = y_new, y

        if clamped:
            rhs(y, P, k1)
        else:
            k1, k7 = k7, k1

        md = y[0] + y[1] + y[2] + y[3] + y[4] - macro0
        if md < 0.0:
            md = -md
        if md > max_macro_drift:
            max_macro_drift = md
        gd = y[5] + y[6] - micro0
        if gd < 0.0:
            gd = -gd
        if gd > max_micro_drift:
            max_micro_drift = gd

        if store:
            times.append(t)
            states.append(list(y))

        dnorm = 0.0
        for i in range(9):
            a = abs(k1[i])
            if a > dnorm:
                dnorm = a
        if dnorm < settle_norm:
            if below_since < 0.0:
                below_since = t
            elif t - below_since >= settle_duration:
                status = SETTLED
                events.append((t, EV_SETTLED, -1))
                break
        else:
            below_since = -1.0

        # PI controller
        e_clip = enorm if enorm > 1e-10 else 1e-10
        fac = _SAFETY * e_clip ** (-_ALPHA) * err_prev ** _BETA
        if fac < _FAC_MIN:
            fac = _FAC_MIN
        elif fac > _FAC_MAX:
            fac = _FAC_MAX
        h *= fac
        err_prev = e_clip

    if times[-1] != t:
        times.append(t)
        states.append(list(y))

    return {
        "status": status,
        "t": times,
        "y": states,
        "events": events,
        "n_accepted": n_accepted,
        "n_rejected": n_rejected,
        "clamp_mass": clamp_mass,
        "max_macro_drift": max_macro_drift,
        "max_micro_drift": max_micro_drift,
        "settle_start": below_since if status == SETTLED else -1.0,
    }
