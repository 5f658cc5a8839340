# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled stepping kernel: Cython twin of ``qsirs._core_py``.

Same contract, same arithmetic, same constants.  Any change here must be
mirrored in the pure-Python module (cross-backend agreement is enforced by
tests and by ``benchmarks/bench_kernel.py``).
"""

from libc.math cimport fabs, isfinite, pow, sqrt

BACKEND = "c"

SETTLED = 0
HORIZON = 1
STEP_BUDGET = 2
STEP_UNDERFLOW = 3
NONFINITE = 4

EV_CLAMP = 0
EV_SETTLED = 1
EV_BUDGET = 2

cdef double _C2 = 1.0 / 5.0
cdef double _A21 = 1.0 / 5.0
cdef double _A31 = 3.0 / 40.0, _A32 = 9.0 / 40.0
cdef double _A41 = 44.0 / 45.0, _A42 = -56.0 / 15.0, _A43 = 32.0 / 9.0
cdef double _A51 = 19372.0 / 6561.0, _A52 = -25360.0 / 2187.0
cdef double _A53 = 64448.0 / 6561.0, _A54 = -212.0 / 729.0
cdef double _A61 = 9017.0 / 3168.0, _A62 = -355.0 / 33.0
cdef double _A63 = 46732.0 / 5247.0, _A64 = 49.0 / 176.0, _A65 = -5103.0 / 18656.0
cdef double _B1 = 35.0 / 384.0, _B3 = 500.0 / 1113.0, _B4 = 125.0 / 192.0
cdef double _B5 = -2187.0 / 6784.0, _B6 = 11.0 / 84.0
cdef double _E1 = 71.0 / 57600.0, _E3 = -71.0 / 16695.0, _E4 = 71.0 / 1920.0
cdef double _E5 = -17253.0 / 339200.0, _E6 = 22.0 / 525.0, _E7 = -1.0 / 40.0

cdef double _ALPHA = 0.7 / 5.0
cdef double _BETA = 0.4 / 5.0
cdef double _SAFETY = 0.9
cdef double _FAC_MIN = 0.2
cdef double _FAC_MAX = 6.0
cdef double _SETTLE_GATE = 1e-6
cdef double _DAMP_HL = 2.0


cdef inline void _rhs(const double* P, const double* yv, double* out) noexcept nogil:
    cdef double f0 = P[0], f1 = P[1], mu = P[2], xi0 = P[3], xi1 = P[4]
    cdef double gamma0 = P[5], gamma1 = P[6], a0 = P[7], a1 = P[8]
    cdef double b0 = P[9], b1 = P[10], pi0 = P[11], pi1 = P[12]
    cdef double delta0 = P[13], delta1 = P[14], chi = P[15], epsilon = P[16]
    cdef double S = yv[0] if yv[0] > 0.0 else 0.0
    cdef double I0 = yv[1] if yv[1] > 0.0 else 0.0
    cdef double I1 = yv[2] if yv[2] > 0.0 else 0.0
    cdef double R = yv[3] if yv[3] > 0.0 else 0.0
    cdef double g0 = yv[5] if yv[5] > 0.0 else 0.0
    cdef double g1 = yv[6] if yv[6] > 0.0 else 0.0
    cdef double v0 = yv[7] if yv[7] > 0.0 else 0.0
    cdef double v1 = yv[8] if yv[8] > 0.0 else 0.0
    cdef double tot = I0 + I1
    cdef double nu0, nu1
    if tot > 0.0:
        nu0 = I0 / tot
        nu1 = I1 / tot
    else:
        nu0 = 0.0
        nu1 = 0.0
    cdef double beta00 = a0 * v0 / (b0 + v0)
    cdef double beta01 = a1 * nu0 * v1 / (b1 + nu0 * v1)
    cdef double beta11 = a1 * nu1 * v1 / (b1 + nu1 * v1)
    cdef double f0e = f0 * nu0
    cdef double f1e = f1 * nu1
    cdef double phi = f0e * g0 + f1e * g1
    cdef double inv_eps = 1.0 / epsilon
    out[0] = -(beta00 * I0 + beta01 * I0 + beta11 * I1) * S + chi * R
    out[1] = beta00 * I0 * S - (pi0 + delta0) * I0
    out[2] = (beta01 * I0 + beta11 * I1) * S - (pi1 + delta1) * I1
    out[3] = pi0 * I0 + pi1 * I1 - chi * R
    out[4] = delta0 * I0 + delta1 * I1
    out[5] = (f0e * (1.0 - mu) * g0 - phi * g0) * inv_eps
    out[6] = (f0e * mu * g0 + f1e * g1 - phi * g1) * inv_eps
    out[7] = (xi0 * g0 - gamma0 * v0) * inv_eps
    out[8] = (xi1 * g1 - gamma1 * v1) * inv_eps


def rhs(y, P, out):
    """Python-facing wrapper matching the pure kernel's signature."""
    cdef double[17] Pv
    cdef double[9] yv
    cdef double[9] ov
    cdef int i
    for i in range(17):
        Pv[i] = P[i]
    for i in range(9):
        yv[i] = y[i]
    _rhs(Pv, yv, ov)
    for i in range(9):
        out[i] = ov[i]


cdef inline double _error_norm(const double* err, const double* y_old,
                               const double* y_new, double rtol, double atol) noexcept nogil:
    cdef double acc = 0.0, ay, an, sk, r
    cdef int i
    for i in range(9):
        ay = fabs(y_old[i])
        an = fabs(y_new[i])
        sk = atol + rtol * (ay if ay > an else an)
        r = err[i] / sk
        acc += r * r
    return sqrt(acc / 9.0)


def integrate_raw(P, y0, double rtol, double atol, double t_max,
                  double clamp_threshold, long max_steps, double settle_norm,
                  double settle_duration, bint store):
    """Run the adaptive loop; returns a plain dict of results."""
    cdef double[17] Pv
    cdef double[9] y, y_new, ys, err
    cdef double[9] k1, k2, k3, k4, k5, k6, k7
    cdef int i, j
    for i in range(17):
        Pv[i] = P[i]
    for i in range(9):
        y[i] = y0[i]

    cdef double lam_fast = Pv[5] if Pv[5] > Pv[6] else Pv[6]
    if 2.0 * Pv[0] > lam_fast:
        lam_fast = 2.0 * Pv[0]
    cdef double h_damp = _DAMP_HL * Pv[16] / lam_fast

    cdef double t = 0.0
    _rhs(Pv, y, k1)

    cdef double macro0 = y[0] + y[1] + y[2] + y[3] + y[4]
    cdef double micro0 = y[5] + y[6]

    times = [0.0]
    states = [[y[i] for i in range(9)]]
    events = []
    cdef long n_accepted = 0, n_rejected = 0
    cdef double clamp_mass = 0.0
    cdef double max_macro_drift = 0.0, max_micro_drift = 0.0
    cdef double below_since = -1.0
    cdef double err_prev = 1.0
    cdef int status = HORIZON
    cdef bint bad, clamped
    cdef double dnorm = 0.0, a, v, md, gd, enorm, fac, e_clip
    cdef double d0, d1, d2, h0, h1, dm, sk, r, h

    for i in range(9):
        a = fabs(k1[i])
        if a > dnorm:
            dnorm = a
    if dnorm < settle_norm:
        below_since = 0.0

    # Hairer-style automatic first step size
    d0 = 0.0
    d1 = 0.0
    for i in range(9):
        sk = atol + rtol * fabs(y[i])
        r = y[i] / sk
        d0 += r * r
        r = k1[i] / sk
        d1 += r * r
    d0 = sqrt(d0 / 9.0)
    d1 = sqrt(d1 / 9.0)
    h0 = 1e-6 if (d0 < 1e-5 or d1 < 1e-5) else 0.01 * d0 / d1
    if h0 > t_max:
        h0 = t_max
    for i in range(9):
        ys[i] = y[i] + h0 * k1[i]
    _rhs(Pv, ys, k2)
    d2 = 0.0
    for i in range(9):
        sk = atol + rtol * fabs(y[i])
        r = (k2[i] - k1[i]) / sk
        d2 += r * r
    d2 = sqrt(d2 / 9.0) / h0
    dm = d1 if d1 > d2 else d2
    if dm <= 1e-15:
        h1 = 1e-6 if 1e-6 > h0 * 1e-3 else h0 * 1e-3
    else:
        h1 = pow(0.01 / dm, 0.2)
    h = 100.0 * h0
    if h1 < h:
        h = h1
    if t_max < h:
        h = t_max

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
        _rhs(Pv, ys, k2)
        for i in range(9):
            ys[i] = y[i] + h * (_A31 * k1[i] + _A32 * k2[i])
        _rhs(Pv, ys, k3)
        for i in range(9):
            ys[i] = y[i] + h * (_A41 * k1[i] + _A42 * k2[i] + _A43 * k3[i])
        _rhs(Pv, ys, k4)
        for i in range(9):
            ys[i] = y[i] + h * (_A51 * k1[i] + _A52 * k2[i] + _A53 * k3[i] + _A54 * k4[i])
        _rhs(Pv, ys, k5)
        for i in range(9):
            ys[i] = y[i] + h * (_A61 * k1[i] + _A62 * k2[i] + _A63 * k3[i]
                                + _A64 * k4[i] + _A65 * k5[i])
        _rhs(Pv, ys, k6)
        for i in range(9):
            y_new[i] = y[i] + h * (_B1 * k1[i] + _B3 * k3[i] + _B4 * k4[i]
                                   + _B5 * k5[i] + _B6 * k6[i])
        _rhs(Pv, y_new, k7)
        for i in range(9):
            err[i] = h * (_E1 * k1[i] + _E3 * k3[i] + _E4 * k4[i]
                          + _E5 * k5[i] + _E6 * k6[i] + _E7 * k7[i])

        bad = False
        for i in range(9):
            if not (isfinite(y_new[i]) and isfinite(err[i])):
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
            fac = _SAFETY * pow(enorm, -0.2)
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
        for i in range(9):
            y[i] = y_new[i]

        if clamped:
            _rhs(Pv, y, k1)
        else:
            for i in range(9):
                k1[i] = k7[i]

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
            states.append([y[i] for i in range(9)])

        dnorm = 0.0
        for i in range(9):
            a = fabs(k1[i])
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
        fac = _SAFETY * pow(e_clip, -_ALPHA) * pow(err_prev, _BETA)
        if fac < _FAC_MIN:
            fac = _FAC_MIN
        elif fac > _FAC_MAX:
            fac = _FAC_MAX
        h *= fac
        err_prev = e_clip

    if times[len(times) - 1] != t:
        times.append(t)
        states.append([y[i] for i in range(9)])

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
