"""Compiled inner loops.

All kernels work on a 3-component real state ``(Re E, Im E, N)``.  The
Landau-Stuart model ignores the third component and keeps it at zero.
Parameters are packed in a float64 vector ``p``:

    laser:          p = [J, Delta, alpha, gamma, g]
    landau-stuart:  p = [J, DeltaTilde, alpha, 0, 0]

Forcing is packed in ``fp = [kind, K, nu]`` with kind 0 (none / stochastic
only) or 1 (monochromatic ``K exp(i nu t)`` added to dE/dt).
"""

import math

import numba as nb
import numpy as np

LASER = 0
LANDAU_STUART = 1

E2_MAX = 1e9
N_MAX = 1e6

STATUS_OK = 0
STATUS_BLOWUP = 1


@nb.njit(cache=True, inline="always")
def _drift(model, p, fp, x0, x1, x2, t):
    J = p[0]
    det = p[1]
    alpha = p[2]
    if model == LASER:
        gg = p[4] * p[3]
        e2 = x0 * x0 + x1 * x1
        f0 = -det * x1 + gg * x2 * (x0 + alpha * x1)
        f1 = det * x0 + gg * x2 * (x1 - alpha * x0)
        f2 = J - x2 - (1.0 + p[4] * x2) * e2
    else:
        e2 = x0 * x0 + x1 * x1
        a = J - e2
        w = det - alpha * (J - e2)
        f0 = a * x0 - w * x1
        f1 = a * x1 + w * x0
        f2 = 0.0
    if fp[0] == 1.0:
        f0 += fp[1] * math.cos(fp[2] * t)
        f1 += fp[1] * math.sin(fp[2] * t)
    return f0, f1, f2


@nb.njit(cache=True)
def drift(model, p, fp, x, t):
    out = np.empty(3)
    f0, f1, f2 = _drift(model, p, fp, x[0], x[1], x[2], t)
    out[0] = f0
    out[1] = f1
    out[2] = f2
    return out


@nb.njit(cache=True)
def jacobian(model, p, x):
    J = p[0]
    det = p[1]
    alpha = p[2]
    x0 = x[0]
    x1 = x[1]
    x2 = x[2]
    out = np.zeros((3, 3))
    if model == LASER:
        g = p[4]
        gg = g * p[3]
        e2 = x0 * x0 + x1 * x1
        out[0, 0] = gg * x2
        out[0, 1] = -det + gg * x2 * alpha
        out[0, 2] = gg * (x0 + alpha * x1)
        out[1, 0] = det - gg * x2 * alpha
        out[1, 1] = gg * x2
        out[1, 2] = gg * (x1 - alpha * x0)
        out[2, 0] = -2.0 * (1.0 + g * x2) * x0
        out[2, 1] = -2.0 * (1.0 + g * x2) * x1
        out[2, 2] = -1.0 - g * e2
    else:
        e2 = x0 * x0 + x1 * x1
        a = J - e2
        w = det - alpha * (J - e2)
        out[0, 0] = a - 2.0 * x0 * x0 - 2.0 * alpha * x0 * x1
        out[0, 1] = -2.0 * x0 * x1 - w - 2.0 * alpha * x1 * x1
        out[1, 0] = -2.0 * x0 * x1 + w + 2.0 * alpha * x0 * x0
        out[1, 1] = a - 2.0 * x1 * x1 + 2.0 * alpha * x0 * x1
    return out


@nb.njit(cache=True, inline="always")
def _jv(model, p, x0, x1, x2, v0, v1, v2):
    """Jacobian-vector product without forming the matrix."""
    J = p[0]
    det = p[1]
    alpha = p[2]
    if model == LASER:
        g = p[4]
        gg = g * p[3]
        e2 = x0 * x0 + x1 * x1
        c = -2.0 * (1.0 + g * x2)
        r0 = gg * x2 * v0 + (-det + gg * x2 * alpha) * v1 + gg * (x0 + alpha * x1) * v2
        r1 = (det - gg * x2 * alpha) * v0 + gg * x2 * v1 + gg * (x1 - alpha * x0) * v2
        r2 = c * x0 * v0 + c * x1 * v1 + (-1.0 - g * e2) * v2
    else:
        e2 = x0 * x0 + x1 * x1
        a = J - e2
        w = det - alpha * (J - e2)
        r0 = (a - 2.0 * x0 * x0 - 2.0 * alpha * x0 * x1) * v0 + (
            -2.0 * x0 * x1 - w - 2.0 * alpha * x1 * x1
        ) * v1
        r1 = (-2.0 * x0 * x1 + w + 2.0 * alpha * x0 * x0) * v0 + (
            a - 2.0 * x1 * x1 + 2.0 * alpha * x0 * x1
        ) * v1
        r2 = 0.0
    return r0, r1, r2


@nb.njit(cache=True, inline="always")
def _bad(x0, x1, x2):
    e2 = x0 * x0 + x1 * x1
    return not (e2 <= E2_MAX and abs(x2) <= N_MAX)


@nb.njit(cache=True, inline="always")
def _heun(model, p, fp, x0, x1, x2, t, dt, w0, w1, w2):
    f0, f1, f2 = _drift(model, p, fp, x0, x1, x2, t)
    y0 = x0 + f0 * dt + w0
    y1 = x1 + f1 * dt + w1
    y2 = x2 + f2 * dt + w2
    g0, g1, g2 = _drift(model, p, fp, y0, y1, y2, t + dt)
    h = 0.5 * dt
    return (
        x0 + h * (f0 + g0) + w0,
        x1 + h * (f1 + g1) + w1,
        x2 + h * (f2 + g2) + w2,
    )


@nb.njit(cache=True, inline="always")
def _euler(model, p, fp, x0, x1, x2, t, dt, w0, w1, w2):
    f0, f1, f2 = _drift(model, p, fp, x0, x1, x2, t)
    return x0 + f0 * dt + w0, x1 + f1 * dt + w1, x2 + f2 * dt + w2


@nb.njit(cache=True, inline="always")
def _rk4(model, p, fp, x0, x1, x2, t, dt):
    a0, a1, a2 = _drift(model, p, fp, x0, x1, x2, t)
    h = 0.5 * dt
    b0, b1, b2 = _drift(model, p, fp, x0 + h * a0, x1 + h * a1, x2 + h * a2, t + h)
    c0, c1, c2 = _drift(model, p, fp, x0 + h * b0, x1 + h * b1, x2 + h * b2, t + h)
    d0, d1, d2 = _drift(model, p, fp, x0 + dt * c0, x1 + dt * c1, x2 + dt * c2, t + dt)
    s = dt / 6.0
    return (
        x0 + s * (a0 + 2.0 * b0 + 2.0 * c0 + d0),
        x1 + s * (a1 + 2.0 * b1 + 2.0 * c1 + d1),
        x2 + s * (a2 + 2.0 * b2 + 2.0 * c2 + d2),
    )


# scheme codes
RK4 = 0
EULER = 1
HEUN = 2


@nb.njit(cache=True)
def advance(model, p, fp, scheme, X, n0, dt, dw_ext, dw_int, stride, out):
    """Advance every row of ``X`` (shape (P, 3)) through ``len(dw_ext)`` steps.

    ``dw_ext`` has shape (S, 2) and is shared by all rows.  ``dw_int`` is
    either empty or (S, P, 3) with per-row increments.  Rows are written to
    ``out[k // stride]`` after every ``stride``-th step when ``out`` is not
    empty.  Returns (status array per row, step index of failure or -1).
    """
    S = dw_ext.shape[0]
    P = X.shape[0]
    have_int = dw_int.shape[0] > 0
    record = out.shape[0] > 0
    status = np.zeros(P, dtype=np.int64)
    fail_at = np.full(P, -1, dtype=np.int64)
    for i in range(P):
        x0 = X[i, 0]
        x1 = X[i, 1]
        x2 = X[i, 2]
        for k in range(S):
            t = (n0 + k) * dt
            w0 = dw_ext[k, 0]
            w1 = dw_ext[k, 1]
            w2 = 0.0
            if have_int:
                w0 += dw_int[k, i, 0]
                w1 += dw_int[k, i, 1]
                w2 += dw_int[k, i, 2]
            if scheme == HEUN:
                x0, x1, x2 = _heun(model, p, fp, x0, x1, x2, t, dt, w0, w1, w2)
            elif scheme == EULER:
                x0, x1, x2 = _euler(model, p, fp, x0, x1, x2, t, dt, w0, w1, w2)
            else:
                x0, x1, x2 = _rk4(model, p, fp, x0, x1, x2, t, dt)
            if _bad(x0, x1, x2):
                status[i] = STATUS_BLOWUP
                fail_at[i] = n0 + k + 1
                break
            if record and (k + 1) % stride == 0:
                j = (k + 1) // stride - 1
                out[j, i, 0] = x0
                out[j, i, 1] = x1
                out[j, i, 2] = x2
        X[i, 0] = x0
        X[i, 1] = x1
        X[i, 2] = x2
    return status, fail_at


@nb.njit(cache=True)
def ensemble_intensity(model, p, fp, X, n0, dt, dw_ext, dw_int, out_im, out_e2):
    """Lock-step ensemble advance recording I_M = |sum_j E_j|^2 per step.

    ``out_e2`` receives the mean single-member intensity per step.  Returns
    the index of the first row that blew up (or -1) and the failing step.
    """
    S = dw_ext.shape[0]
    P = X.shape[0]
    have_int = dw_int.shape[0] > 0
    for k in range(S):
        t = (n0 + k) * dt
        s0 = 0.0
        s1 = 0.0
        se2 = 0.0
        for i in range(P):
            w0 = dw_ext[k, 0]
            w1 = dw_ext[k, 1]
            w2 = 0.0
            if have_int:
                w0 += dw_int[k, i, 0]
                w1 += dw_int[k, i, 1]
                w2 += dw_int[k, i, 2]
            x0, x1, x2 = _heun(model, p, fp, X[i, 0], X[i, 1], X[i, 2], t, dt, w0, w1, w2)
            if _bad(x0, x1, x2):
                return i, n0 + k + 1
            X[i, 0] = x0
            X[i, 1] = x1
            X[i, 2] = x2
            s0 += x0
            s1 += x1
            se2 += x0 * x0 + x1 * x1
        out_im[k] = s0 * s0 + s1 * s1
        out_e2[k] = se2 / P
    return -1, -1


@nb.njit(cache=True)
def tangent_chunk(model, p, fp, scheme, x, v, n0, dt, dw_ext, renorm_every, acc, block_of_step, blocks):
    """Propagate state ``x`` and tangent ``v`` through ``len(dw_ext)`` steps.

    The tangent follows the exact derivative of the discrete step map
    (noise is additive, so it never enters the tangent).  ``acc[0]`` holds
    the running sum of log growth factors, ``acc[1]`` the renormalisation
    count and ``acc[2]`` the sum of |E|^2 over steps with a block index.  Log growth is also added to ``blocks[block_of_step[k]]`` when
    that index is non-negative.  Returns (status, failing step).
    """
    S = dw_ext.shape[0]
    x0 = x[0]
    x1 = x[1]
    x2 = x[2]
    v0 = v[0]
    v1 = v[1]
    v2 = v[2]
    since = 0
    for k in range(S):
        t = (n0 + k) * dt
        w0 = dw_ext[k, 0]
        w1 = dw_ext[k, 1]
        if scheme == RK4:
            # RK4 on the joint (x, v) system
            a0, a1, a2 = _drift(model, p, fp, x0, x1, x2, t)
            ka0, ka1, ka2 = _jv(model, p, x0, x1, x2, v0, v1, v2)
            h = 0.5 * dt
            y0 = x0 + h * a0
            y1 = x1 + h * a1
            y2 = x2 + h * a2
            b0, b1, b2 = _drift(model, p, fp, y0, y1, y2, t + h)
            kb0, kb1, kb2 = _jv(model, p, y0, y1, y2, v0 + h * ka0, v1 + h * ka1, v2 + h * ka2)
            y0 = x0 + h * b0
            y1 = x1 + h * b1
            y2 = x2 + h * b2
            c0, c1, c2 = _drift(model, p, fp, y0, y1, y2, t + h)
            kc0, kc1, kc2 = _jv(model, p, y0, y1, y2, v0 + h * kb0, v1 + h * kb1, v2 + h * kb2)
            y0 = x0 + dt * c0
            y1 = x1 + dt * c1
            y2 = x2 + dt * c2
            d0, d1, d2 = _drift(model, p, fp, y0, y1, y2, t + dt)
            kd0, kd1, kd2 = _jv(model, p, y0, y1, y2, v0 + dt * kc0, v1 + dt * kc1, v2 + dt * kc2)
            s = dt / 6.0
            x0 += s * (a0 + 2.0 * b0 + 2.0 * c0 + d0)
            x1 += s * (a1 + 2.0 * b1 + 2.0 * c1 + d1)
            x2 += s * (a2 + 2.0 * b2 + 2.0 * c2 + d2)
            v0 += s * (ka0 + 2.0 * kb0 + 2.0 * kc0 + kd0)
            v1 += s * (ka1 + 2.0 * kb1 + 2.0 * kc1 + kd1)
            v2 += s * (ka2 + 2.0 * kb2 + 2.0 * kc2 + kd2)
        elif scheme == HEUN:
            f0, f1, f2 = _drift(model, p, fp, x0, x1, x2, t)
            j0, j1, j2 = _jv(model, p, x0, x1, x2, v0, v1, v2)
            y0 = x0 + f0 * dt + w0
            y1 = x1 + f1 * dt + w1
            y2 = x2 + f2 * dt
            u0 = v0 + j0 * dt
            u1 = v1 + j1 * dt
            u2 = v2 + j2 * dt
            g0, g1, g2 = _drift(model, p, fp, y0, y1, y2, t + dt)
            i0, i1, i2 = _jv(model, p, y0, y1, y2, u0, u1, u2)
            h = 0.5 * dt
            x0 += h * (f0 + g0) + w0
            x1 += h * (f1 + g1) + w1
            x2 += h * (f2 + g2)
            v0 += h * (j0 + i0)
            v1 += h * (j1 + i1)
            v2 += h * (j2 + i2)
        else:
            f0, f1, f2 = _drift(model, p, fp, x0, x1, x2, t)
            j0, j1, j2 = _jv(model, p, x0, x1, x2, v0, v1, v2)
            x0 += f0 * dt + w0
            x1 += f1 * dt + w1
            x2 += f2 * dt
            v0 += j0 * dt
            v1 += j1 * dt
            v2 += j2 * dt
        if _bad(x0, x1, x2):
            x[0] = x0
            x[1] = x1
            x[2] = x2
            return STATUS_BLOWUP, n0 + k + 1
        if block_of_step[k] >= 0:
            acc[2] += x0 * x0 + x1 * x1
        since += 1
        nv = v0 * v0 + v1 * v1 + v2 * v2
        if since >= renorm_every or nv > 1e12 or nv < 1e-12 or k == S - 1:
            nrm = math.sqrt(nv)
            lg = math.log(nrm)
            acc[0] += lg
            acc[1] += 1.0
            b = block_of_step[k]
            if b >= 0:
                blocks[b] += lg
            v0 /= nrm
            v1 /= nrm
            v2 /= nrm
            since = 0
    x[0] = x0
    x[1] = x1
    x[2] = x2
    v[0] = v0
    v[1] = v1
    v[2] = v2
    return STATUS_OK, -1


@nb.njit(cache=True)
def basis_chunk(model, p, x, Q, dim, nsteps, dt, qr_every, sums):
    """Deterministic RK4 of the state plus a full tangent basis ``Q``.

    Columns of ``Q`` (3 x dim) are re-orthonormalised by modified
    Gram-Schmidt every ``qr_every`` steps; the log of each column norm is
    added to ``sums``.
    """
    fp = np.zeros(3)
    x0 = x[0]
    x1 = x[1]
    x2 = x[2]
    h = 0.5 * dt
    s = dt / 6.0
    for k in range(nsteps):
        t = k * dt
        a0, a1, a2 = _drift(model, p, fp, x0, x1, x2, t)
        y0 = x0 + h * a0
        y1 = x1 + h * a1
        y2 = x2 + h * a2
        b0, b1, b2 = _drift(model, p, fp, y0, y1, y2, t + h)
        z0 = x0 + h * b0
        z1 = x1 + h * b1
        z2 = x2 + h * b2
        c0, c1, c2 = _drift(model, p, fp, z0, z1, z2, t + h)
        q0 = x0 + dt * c0
        q1 = x1 + dt * c1
        q2 = x2 + dt * c2
        d0, d1, d2 = _drift(model, p, fp, q0, q1, q2, t + dt)
        for c in range(dim):
            v0 = Q[0, c]
            v1 = Q[1, c]
            v2 = Q[2, c]
            ka0, ka1, ka2 = _jv(model, p, x0, x1, x2, v0, v1, v2)
            kb0, kb1, kb2 = _jv(model, p, y0, y1, y2, v0 + h * ka0, v1 + h * ka1, v2 + h * ka2)
            kc0, kc1, kc2 = _jv(model, p, z0, z1, z2, v0 + h * kb0, v1 + h * kb1, v2 + h * kb2)
            kd0, kd1, kd2 = _jv(model, p, q0, q1, q2, v0 + dt * kc0, v1 + dt * kc1, v2 + dt * kc2)
            Q[0, c] = v0 + s * (ka0 + 2.0 * kb0 + 2.0 * kc0 + kd0)
            Q[1, c] = v1 + s * (ka1 + 2.0 * kb1 + 2.0 * kc1 + kd1)
            Q[2, c] = v2 + s * (ka2 + 2.0 * kb2 + 2.0 * kc2 + kd2)
        x0 += s * (a0 + 2.0 * b0 + 2.0 * c0 + d0)
        x1 += s * (a1 + 2.0 * b1 + 2.0 * c1 + d1)
        x2 += s * (a2 + 2.0 * b2 + 2.0 * c2 + d2)
        if (k + 1) % qr_every == 0 or k == nsteps - 1:
            for c in range(dim):
                for d in range(c):
                    dot = Q[0, c] * Q[0, d] + Q[1, c] * Q[1, d] + Q[2, c] * Q[2, d]
                    Q[0, c] -= dot * Q[0, d]
                    Q[1, c] -= dot * Q[1, d]
                    Q[2, c] -= dot * Q[2, d]
                nrm = math.sqrt(Q[0, c] ** 2 + Q[1, c] ** 2 + Q[2, c] ** 2)
                sums[c] += math.log(nrm)
                Q[0, c] /= nrm
                Q[1, c] /= nrm
                Q[2, c] /= nrm
    x[0] = x0
    x[1] = x1
    x[2] = x2
