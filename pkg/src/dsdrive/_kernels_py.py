"""Pure-Python fallback kernels.

Mirrors the compiled extension in ``_kernels.pyx`` operation for operation;
the loops are scalar Python and roughly two orders of magnitude slower.
Selected automatically when the extension is not built (see ``_backend``).
"""

from math import floor, isfinite

import numpy as np

BACKEND_NAME = "python"


def modulator_loop(w, b_taps, a_taps, full_scale, levels):
    """Error-feedback modulator recursion.

    u(n) = w(n) + v(n)
    v(n) = sum_k b[k] * eps(n-1-k) - sum_k a[k] * v(n-1-k)
    y(n) = nearest quantizer level to u(n), eps(n) = y(n) - u(n)

    Returns (y, eps, overloaded, bad_index); bad_index is the first sample
    whose state went non-finite, or -1.
    """
    w = np.ascontiguousarray(w, dtype=float)
    b = [float(x) for x in b_taps]
    a = [float(x) for x in a_taps]
    n = w.shape[0]
    nb, na = len(b), len(a)
    fsc = float(full_scale)
    nlev = int(levels)
    dq = 2.0 * fsc / (nlev - 1)
    half = 0.5 * dq

    y = np.empty(n)
    eps = np.zeros(n)
    v = np.zeros(n) if na else None
    overloaded = False

    for i in range(n):
        acc = 0.0
        kmax = min(nb, i)
        for k in range(kmax):
            acc += b[k] * eps[i - 1 - k]
        if na:
            kmax = min(na, i)
            for k in range(kmax):
                acc -= a[k] * v[i - 1 - k]
            v[i] = acc
        u = w[i] + acc
        if not isfinite(u):
            return y, eps, overloaded, i
        idx = int(floor((u + fsc) / dq + 0.5))
        if idx < 0:
            idx = 0
        elif idx > nlev - 1:
            idx = nlev - 1
        yv = -fsc + idx * dq
        y[i] = yv
        e = yv - u
        eps[i] = e
        if e > half or -e > half:
            overloaded = True
    return y, eps, overloaded, -1


def rk4_loop(x, vsd, vsq, load, dt, params, bound, lock_speed, store_every, out):
    """Fixed-step RK4 over the five-state induction-motor ODE.

    vsd, vsq, load have shape (n, 3): the drive at the start, midpoint and
    end of each step.  x (shape (5,)) is advanced in place.  States are
    written to ``out`` every ``store_every`` steps.  Returns
    (n_stored, fail_step); fail_step is the first step whose result exceeded
    ``bound`` in magnitude (or went non-finite), -1 otherwise.
    """
    x = np.asarray(x, dtype=float)
    vsd = np.asarray(vsd, dtype=float)
    vsq = np.asarray(vsq, dtype=float)
    load = np.asarray(load, dtype=float)
    Rs, Rr, Ls, Lr, Lm, P, B, J = (float(p) for p in params)
    dm = 1.0 - Lm * Lm / (Ls * Lr)
    n = vsd.shape[0]
    h = float(dt)
    lock = bool(lock_speed)
    every = int(store_every)
    bnd = float(bound)

    sd, sq, rd, rq, wm = (float(val) for val in x)
    c_is = 1.0 / (dm * Ls)
    c_ir = 1.0 / (dm * Lr)
    k_rl = Rr * Lm / Lr
    k_sl = Rs * Lm / Ls
    k_ls = Lm / Ls
    k_ml = Lm * Lm / Lr
    k_tq = 0.75 * P * Lm

    def deriv(isd, isq, ird, irq, omega, vd, vq, lam):
        we2 = 0.5 * omega * P
        d0 = (-Rs * isd + we2 * k_ml * isq + k_rl * ird + we2 * Lm * irq + vd) * c_is
        d1 = (-we2 * k_ml * isd - Rs * isq - we2 * Lm * ird + k_rl * irq + vq) * c_is
        d2 = (k_sl * isd - we2 * Lm * isq - Rr * ird - we2 * Lr * irq - k_ls * vd) * c_ir
        d3 = (we2 * Lm * isd + k_sl * isq + we2 * Lr * ird - Rr * irq - k_ls * vq) * c_ir
        if lock:
            d4 = 0.0
        else:
            d4 = (k_tq * (isq * ird - isd * irq) - lam - B * omega) / J
        return d0, d1, d2, d3, d4

    stored = 0
    for i in range(n):
        v0, v1, v2 = vsd[i, 0], vsd[i, 1], vsd[i, 2]
        q0, q1, q2 = vsq[i, 0], vsq[i, 1], vsq[i, 2]
        l0, l1, l2 = load[i, 0], load[i, 1], load[i, 2]

        a0, a1, a2, a3, a4 = deriv(sd, sq, rd, rq, wm, v0, q0, l0)
        b0, b1, b2, b3, b4 = deriv(sd + 0.5 * h * a0, sq + 0.5 * h * a1,
                                   rd + 0.5 * h * a2, rq + 0.5 * h * a3,
                                   wm + 0.5 * h * a4, v1, q1, l1)
        c0, c1, c2, c3, c4 = deriv(sd + 0.5 * h * b0, sq + 0.5 * h * b1,
                                   rd + 0.5 * h * b2, rq + 0.5 * h * b3,
                                   wm + 0.5 * h * b4, v1, q1, l1)
        d0, d1, d2, d3, d4 = deriv(sd + h * c0, sq + h * c1,
                                   rd + h * c2, rq + h * c3,
                                   wm + h * c4, v2, q2, l2)

        sd += h * (a0 + 2.0 * (b0 + c0) + d0) / 6.0
        sq += h * (a1 + 2.0 * (b1 + c1) + d1) / 6.0
        rd += h * (a2 + 2.0 * (b2 + c2) + d2) / 6.0
        rq += h * (a3 + 2.0 * (b3 + c3) + d3) / 6.0
        wm += h * (a4 + 2.0 * (b4 + c4) + d4) / 6.0

        ok = (isfinite(sd) and isfinite(sq) and isfinite(rd) and isfinite(rq)
              and isfinite(wm) and abs(sd) <= bnd and abs(sq) <= bnd
              and abs(rd) <= bnd and abs(rq) <= bnd and abs(wm) <= bnd)
        if not ok:
            x[0], x[1], x[2], x[3], x[4] = sd, sq, rd, rq, wm
            return stored, i
        if (i + 1) % every == 0:
            out[stored, 0] = sd
            out[stored, 1] = sq
            out[stored, 2] = rd
            out[stored, 3] = rq
            out[stored, 4] = wm
            stored += 1

    x[0], x[1], x[2], x[3], x[4] = sd, sq, rd, rq, wm
    return stored, -1
