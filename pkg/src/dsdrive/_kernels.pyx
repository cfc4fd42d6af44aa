# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels for the sample-rate loops.

Twin of ``_kernels_py``: same signatures, same arithmetic, same sample
ordering, so either backend can be selected at import time.
"""

import numpy as np

cimport cython
from libc.math cimport floor, fabs, isfinite

BACKEND_NAME = "cython"


def modulator_loop(w, b_taps, a_taps, double full_scale, int levels):
    """Error-feedback modulator recursion; see the Python twin for the contract."""
    cdef double[::1] wv = np.ascontiguousarray(w, dtype=np.float64)
    cdef double[::1] bv = np.ascontiguousarray(b_taps, dtype=np.float64)
    cdef double[::1] av = np.ascontiguousarray(a_taps, dtype=np.float64)
    cdef Py_ssize_t n = wv.shape[0]
    cdef Py_ssize_t nb = bv.shape[0]
    cdef Py_ssize_t na = av.shape[0]

    y_arr = np.empty(n, dtype=np.float64)
    eps_arr = np.zeros(n, dtype=np.float64)
    cdef double[::1] y = y_arr
    cdef double[::1] eps = eps_arr
    cdef double[::1] v
    v_arr = None
    if na > 0:
        v_arr = np.zeros(n, dtype=np.float64)
        v = v_arr

    cdef double dq = 2.0 * full_scale / (levels - 1)
    cdef double half = 0.5 * dq
    cdef double acc, u, yv, e
    cdef Py_ssize_t i, k, kmax
    cdef long idx
    cdef bint overloaded = False

    for i in range(n):
        acc = 0.0
        kmax = nb if nb < i else i
        for k in range(kmax):
            acc += bv[k] * eps[i - 1 - k]
        if na > 0:
            kmax = na if na < i else i
            for k in range(kmax):
                acc -= av[k] * v[i - 1 - k]
            v[i] = acc
        u = wv[i] + acc
        if not isfinite(u):
            return y_arr, eps_arr, overloaded, i
        idx = <long>floor((u + full_scale) / dq + 0.5)
        if idx < 0:
            idx = 0
        elif idx > levels - 1:
            idx = levels - 1
        yv = -full_scale + idx * dq
        y[i] = yv
        e = yv - u
        eps[i] = e
        if e > half or -e > half:
            overloaded = True
    return y_arr, eps_arr, overloaded, -1


cdef inline void _deriv(double isd, double isq, double ird, double irq,
                        double omega, double vd, double vq, double lam,
                        double Rs, double Rr, double Lm, double Lr,
                        double P, double B, double J,
                        double c_is, double c_ir, double k_rl, double k_sl,
                        double k_ls, double k_ml, double k_tq, bint lock,
                        double *d) noexcept nogil:
    cdef double we2 = 0.5 * omega * P
    d[0] = (-Rs * isd + we2 * k_ml * isq + k_rl * ird + we2 * Lm * irq + vd) * c_is
    d[1] = (-we2 * k_ml * isd - Rs * isq - we2 * Lm * ird + k_rl * irq + vq) * c_is
    d[2] = (k_sl * isd - we2 * Lm * isq - Rr * ird - we2 * Lr * irq - k_ls * vd) * c_ir
    d[3] = (we2 * Lm * isd + k_sl * isq + we2 * Lr * ird - Rr * irq - k_ls * vq) * c_ir
    if lock:
        d[4] = 0.0
    else:
        d[4] = (k_tq * (isq * ird - isd * irq) - lam - B * omega) / J


def rk4_loop(x, vsd, vsq, load, double dt, params, double bound,
             bint lock_speed, Py_ssize_t store_every, out):
    """Fixed-step RK4 over the motor ODE; see the Python twin for the contract."""
    cdef double[::1] xv = np.asarray(x, dtype=np.float64)
    cdef double[:, ::1] vd = np.ascontiguousarray(vsd, dtype=np.float64)
    cdef double[:, ::1] vq = np.ascontiguousarray(vsq, dtype=np.float64)
    cdef double[:, ::1] lm = np.ascontiguousarray(load, dtype=np.float64)
    cdef double[:, ::1] ov = out

    cdef double Rs = params[0], Rr = params[1], Ls = params[2], Lr = params[3]
    cdef double Lm = params[4], P = params[5], B = params[6], J = params[7]
    cdef double dm = 1.0 - Lm * Lm / (Ls * Lr)
    cdef double c_is = 1.0 / (dm * Ls)
    cdef double c_ir = 1.0 / (dm * Lr)
    cdef double k_rl = Rr * Lm / Lr
    cdef double k_sl = Rs * Lm / Ls
    cdef double k_ls = Lm / Ls
    cdef double k_ml = Lm * Lm / Lr
    cdef double k_tq = 0.75 * P * Lm

    cdef Py_ssize_t n = vd.shape[0]
    cdef double h = dt
    cdef double sd = xv[0], sq = xv[1], rd = xv[2], rq = xv[3], wm = xv[4]
    cdef double ka[5]
    cdef double kb[5]
    cdef double kc[5]
    cdef double kd[5]
    cdef Py_ssize_t i, stored = 0
    cdef bint ok

    for i in range(n):
        _deriv(sd, sq, rd, rq, wm, vd[i, 0], vq[i, 0], lm[i, 0],
               Rs, Rr, Lm, Lr, P, B, J, c_is, c_ir, k_rl, k_sl, k_ls, k_ml,
               k_tq, lock_speed, ka)
        _deriv(sd + 0.5 * h * ka[0], sq + 0.5 * h * ka[1], rd + 0.5 * h * ka[2],
               rq + 0.5 * h * ka[3], wm + 0.5 * h * ka[4],
               vd[i, 1], vq[i, 1], lm[i, 1],
               Rs, Rr, Lm, Lr, P, B, J, c_is, c_ir, k_rl, k_sl, k_ls, k_ml,
               k_tq, lock_speed, kb)
        _deriv(sd + 0.5 * h * kb[0], sq + 0.5 * h * kb[1], rd + 0.5 * h * kb[2],
               rq + 0.5 * h * kb[3], wm + 0.5 * h * kb[4],
               vd[i, 1], vq[i, 1], lm[i, 1],
               Rs, Rr, Lm, Lr, P, B, J, c_is, c_ir, k_rl, k_sl, k_ls, k_ml,
               k_tq, lock_speed, kc)
        _deriv(sd + h * kc[0], sq + h * kc[1], rd + h * kc[2],
               rq + h * kc[3], wm + h * kc[4],
               vd[i, 2], vq[i, 2], lm[i, 2],
               Rs, Rr, Lm, Lr, P, B, J, c_is, c_ir, k_rl, k_sl, k_ls, k_ml,
               k_tq, lock_speed, kd)

        sd += h * (ka[0] + 2.0 * (kb[0] + kc[0]) + kd[0]) / 6.0
        sq += h * (ka[1] + 2.0 * (kb[1] + kc[1]) + kd[1]) / 6.0
        rd += h * (ka[2] + 2.0 * (kb[2] + kc[2]) + kd[2]) / 6.0
        rq += h * (ka[3] + 2.0 * (kb[3] + kc[3]) + kd[3]) / 6.0
        wm += h * (ka[4] + 2.0 * (kb[4] + kc[4]) + kd[4]) / 6.0

        ok = (isfinite(sd) and isfinite(sq) and isfinite(rd) and isfinite(rq)
              and isfinite(wm) and fabs(sd) <= bound and fabs(sq) <= bound
              and fabs(rd) <= bound and fabs(rq) <= bound and fabs(wm) <= bound)
        if not ok:
            xv[0] = sd; xv[1] = sq; xv[2] = rd; xv[3] = rq; xv[4] = wm
            return stored, i
        if (i + 1) % store_every == 0:
            ov[stored, 0] = sd
            ov[stored, 1] = sq
            ov[stored, 2] = rd
            ov[stored, 3] = rq
            ov[stored, 4] = wm
            stored += 1

    xv[0] = sd; xv[1] = sq; xv[2] = rd; xv[3] = rq; xv[4] = wm
    return stored, -1
