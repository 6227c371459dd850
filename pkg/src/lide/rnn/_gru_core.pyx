# cython: language_level=3
"""Compiled GRU recurrence.

Only the sequential part of the cell lives here: the hidden-to-hidden
products and gate nonlinearities, step by step. Input projections and all
parameter gradients that are plain matrix products stay in numpy.
Signatures and results match ``lide.rnn._gru_py``.
"""
import numpy as np

from libc.math cimport exp, tanh


cdef inline double _sigmoid(double x) noexcept nogil:
    cdef double e
    if x >= 0:
        return 1.0 / (1.0 + exp(-x))
    e = exp(x)
    return e / (1.0 + e)


def recurrence_forward(const double[:, ::1] az, const double[:, ::1] ar,
                       const double[:, ::1] ac, const double[:, ::1] uz,
                       const double[:, ::1] ur, const double[:, ::1] uc):
    cdef Py_ssize_t T = az.shape[0]
    cdef Py_ssize_t H = az.shape[1]
    cdef Py_ssize_t t, i, j
    cdef double sz, sr, sc, hp, zt

    hs_a = np.zeros((T + 1, H))
    z_a = np.empty((T, H))
    r_a = np.empty((T, H))
    c_a = np.empty((T, H))
    rh_a = np.empty(H)
    cdef double[:, ::1] hs = hs_a
    cdef double[:, ::1] z = z_a
    cdef double[:, ::1] r = r_a
    cdef double[:, ::1] c = c_a
    cdef double[::1] rh = rh_a

    with nogil:
        for t in range(T):
            for i in range(H):
                sz = az[t, i]
                sr = ar[t, i]
                for j in range(H):
                    hp = hs[t, j]
                    sz = sz + uz[i, j] * hp
                    sr = sr + ur[i, j] * hp
                z[t, i] = _sigmoid(sz)
                r[t, i] = _sigmoid(sr)
            for j in range(H):
                rh[j] = r[t, j] * hs[t, j]
            for i in range(H):
                sc = ac[t, i]
                for j in range(H):
                    sc = sc + uc[i, j] * rh[j]
                c[t, i] = tanh(sc)
                zt = z[t, i]
                hs[t + 1, i] = (1.0 - zt) * hs[t, i] + zt * c[t, i]
    return hs_a, z_a, r_a, c_a


def recurrence_backward(const double[:, ::1] hs, const double[:, ::1] z,
                        const double[:, ::1] r, const double[:, ::1] c,
                        const double[:, ::1] dh_ext, const double[:, ::1] uz,
                        const double[:, ::1] ur, const double[:, ::1] uc):
    cdef Py_ssize_t T = z.shape[0]
    cdef Py_ssize_t H = z.shape[1]
    cdef Py_ssize_t t, i, j
    cdef double dh, zt, ct, hp, rt, g, drh

    daz_a = np.empty((T, H))
    dar_a = np.empty((T, H))
    dac_a = np.empty((T, H))
    duz_a = np.zeros((H, H))
    dur_a = np.zeros((H, H))
    duc_a = np.zeros((H, H))
    dnext_a = np.zeros(H)
    dprev_a = np.empty(H)
    cdef double[:, ::1] daz = daz_a
    cdef double[:, ::1] dar = dar_a
    cdef double[:, ::1] dac = dac_a
    cdef double[:, ::1] duz = duz_a
    cdef double[:, ::1] dur = dur_a
    cdef double[:, ::1] duc = duc_a
    cdef double[::1] dnext = dnext_a
    cdef double[::1] dprev = dprev_a

    with nogil:
        for t in range(T - 1, -1, -1):
            # h_t = (1 - z) h_{t-1} + z c
            for i in range(H):
                dh = dh_ext[t, i] + dnext[i]
                zt = z[t, i]
                ct = c[t, i]
                hp = hs[t, i]
                daz[t, i] = dh * (ct - hp) * zt * (1.0 - zt)
                dac[t, i] = dh * zt * (1.0 - ct * ct)
                dprev[i] = dh * (1.0 - zt)
            # candidate: Uc (r * h_{t-1})
            for j in range(H):
                dar[t, j] = 0.0
            for i in range(H):
                g = dac[t, i]
                for j in range(H):
                    duc[i, j] = duc[i, j] + g * r[t, j] * hs[t, j]
                    dar[t, j] = dar[t, j] + uc[i, j] * g
            for j in range(H):
                drh = dar[t, j]
                rt = r[t, j]
                dprev[j] = dprev[j] + drh * rt
                dar[t, j] = drh * hs[t, j] * rt * (1.0 - rt)
            # gates: Uz h_{t-1}, Ur h_{t-1}
            for i in range(H):
                for j in range(H):
                    hp = hs[t, j]
                    duz[i, j] = duz[i, j] + daz[t, i] * hp
                    dur[i, j] = dur[i, j] + dar[t, i] * hp
                    dprev[j] = dprev[j] + uz[i, j] * daz[t, i] + ur[i, j] * dar[t, i]
            for i in range(H):
                dnext[i] = dprev[i]
    return daz_a, dar_a, dac_a, duz_a, dur_a, duc_a
