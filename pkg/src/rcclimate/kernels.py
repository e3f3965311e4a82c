"""Hot loops: discrete LTI recurrence and the Bogacki-Shampine RK2(3) integrator.

Written as explicit loops over float64 arrays so the same source runs under
numba or as plain Python (see ``_accel``). Inputs are laid out ``(m, N)``,
one column per sample.
"""
import numpy as np

from ._accel import kernel

RK_OK = 0
RK_UNDERFLOW = 1
RK_MAXSTEPS = 2


@kernel
def lti_simulate(ad, bd, c, d, u, x0, y, states):
    """Run ``x[k+1] = ad x[k] + bd u[k]``, ``y[k] = c x[k] + d u[k]`` in place.

    ``y`` has shape (p, N). ``states`` is either (n, N) or (n, 0); in the
    second case the state trajectory is not stored.
    """
    n = ad.shape[0]
    m = bd.shape[1]
    p = c.shape[0]
    nsteps = u.shape[1]
    keep = states.shape[1] == nsteps
    x = x0.copy()
    xn = np.empty(n)
    for k in range(nsteps):
        for i in range(p):
            acc = 0.0
            for j in range(n):
                acc += c[i, j] * x[j]
            for j in range(m):
                acc += d[i, j] * u[j, k]
            y[i, k] = acc
        if keep:
            for j in range(n):
                states[j, k] = x[j]
        for i in range(n):
            acc = 0.0
            for j in range(n):
                acc += ad[i, j] * x[j]
            for j in range(m):
                acc += bd[i, j] * u[j, k]
            xn[i] = acc
        for i in range(n):
            x[i] = xn[i]
    return x


@kernel
def _deriv(a, x, bu, out):
    n = a.shape[0]
    for i in range(n):
        acc = bu[i]
        for j in range(n):
            acc += a[i, j] * x[j]
        out[i] = acc


@kernel
def _initial_step(a, x, bu, f0, dt, rtol, atol, x1, f1):
    """Starting step after Hairer, Norsett & Wanner (II.4), for a third-order pair."""
    n = a.shape[0]
    d0 = 0.0
    d1 = 0.0
    for i in range(n):
        sc = atol + rtol * abs(x[i])
        d0 += (x[i] / sc) ** 2
        d1 += (f0[i] / sc) ** 2
    d0 = (d0 / n) ** 0.5
    d1 = (d1 / n) ** 0.5
    if d0 < 1e-5 or d1 < 1e-5:
        h0 = 1e-6
    else:
        h0 = 0.01 * d0 / d1
    h0 = min(h0, dt)
    for i in range(n):
        x1[i] = x[i] + h0 * f0[i]
    _deriv(a, x1, bu, f1)
    d2 = 0.0
    for i in range(n):
        sc = atol + rtol * abs(x[i])
        d2 += ((f1[i] - f0[i]) / sc) ** 2
    d2 = (d2 / n) ** 0.5 / h0
    if d1 <= 1e-15 and d2 <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1.0 / 3.0)
    return min(100.0 * h0, h1, dt)


@kernel
def rk23_zoh(a, b, c, d, u, x0, dt, rtol, atol, max_steps, y, states):
    """Adaptive RK2(3) over hourly intervals with inputs held per interval.

    Integration restarts the FSAL stage at every interval boundary, where the
    input jumps. Returns ``(status, t_fail, n_accepted, n_rejected)``.
    """
    n = a.shape[0]
    m = b.shape[1]
    p = c.shape[0]
    nint = u.shape[1]
    keep = states.shape[1] == nint
    eps = 2.220446049250313e-16

    x = x0.copy()
    xnew = np.empty(n)
    tmp = np.empty(n)
    bu = np.empty(n)
    k1 = np.empty(n)
    k2 = np.empty(n)
    k3 = np.empty(n)
    k4 = np.empty(n)
    accepted = 0
    rejected = 0
    h = -1.0

    for k in range(nint):
        t0 = k * dt
        for i in range(p):
            acc = 0.0
            for j in range(n):
                acc += c[i, j] * x[j]
            for j in range(m):
                acc += d[i, j] * u[j, k]
            y[i, k] = acc
        if keep:
            for j in range(n):
                states[j, k] = x[j]

        for i in range(n):
            acc = 0.0
            for j in range(m):
                acc += b[i, j] * u[j, k]
            bu[i] = acc
        _deriv(a, x, bu, k1)

        # each interval is a fresh initial value problem (the input jumps), so
        # the carried step is capped by a new starting-step estimate
        h_start = _initial_step(a, x, bu, k1, dt, rtol, atol, tmp, k2)
        h = h_start if h <= 0.0 else min(h, h_start)

        t = 0.0
        while t < dt:
            if accepted + rejected >= max_steps:
                return RK_MAXSTEPS, t0 + t, accepted, rejected
            if h < 16.0 * eps * max(t0 + t, dt):
                return RK_UNDERFLOW, t0 + t, accepted, rejected
            last = False
            if t + h >= dt * (1.0 - 1e-12):
                h_try = dt - t
                last = True
            else:
                h_try = h

            for i in range(n):
                tmp[i] = x[i] + 0.5 * h_try * k1[i]
            _deriv(a, tmp, bu, k2)
            for i in range(n):
                tmp[i] = x[i] + 0.75 * h_try * k2[i]
            _deriv(a, tmp, bu, k3)
            for i in range(n):
                xnew[i] = x[i] + h_try * (2.0 / 9.0 * k1[i] + 1.0 / 3.0 * k2[i] + 4.0 / 9.0 * k3[i])
            _deriv(a, xnew, bu, k4)

            err = 0.0
            for i in range(n):
                e = h_try * (-5.0 / 72.0 * k1[i] + 1.0 / 12.0 * k2[i]
                             + 1.0 / 9.0 * k3[i] - 0.125 * k4[i])
                sc = atol + rtol * max(abs(x[i]), abs(xnew[i]))
                err = max(err, abs(e) / sc)

            if err <= 1.0:
                accepted += 1
                t = dt if last else t + h_try
                for i in range(n):
                    x[i] = xnew[i]
                    k1[i] = k4[i]
                if err == 0.0:
                    fac = 5.0
                else:
                    fac = min(5.0, max(0.2, 0.9 * err ** (-1.0 / 3.0)))
                # a clipped final step says nothing about the step to come
                if not last or fac < 1.0:
                    h = h_try * fac
            else:
                rejected += 1
                h = h_try * max(0.2, 0.9 * err ** (-1.0 / 3.0))
    return RK_OK, nint * dt, accepted, rejected
