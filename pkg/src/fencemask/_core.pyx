# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled mask kernels; same contracts as ``_pykernels``."""
import numpy as np

cdef inline double _floor(double t) noexcept nogil:
    # exact floor for |t| < 2**63; avoids a libm call on baseline x86-64
    cdef double q = <double>(<long long>t)
    return q - (q > t)


cdef inline bint _hit(double v, double w, double period, double inv) noexcept nogil:
    cdef double r = v - _floor(v * inv) * period
    r += period * (r < 0.0)
    r -= period * (r >= period)
    return r < w


def stripe_keep(Py_ssize_t width, Py_ssize_t height, double c, double s,
                double phase, double w, double period):
    if w <= 0:
        return np.ones((height, width), dtype=bool)
    out = np.empty((height, width), dtype=np.uint8)
    cdef unsigned char[:, ::1] o = out
    cdef Py_ssize_t x, y
    cdef double row
    cdef double inv = 1.0 / period
    with nogil:
        for y in range(height):
            row = (y + 0.5) * s - phase
            for x in range(width):
                o[y, x] = not _hit((x + 0.5) * c + row, w, period, inv)
    return out.view(bool)


def fence_keep(Py_ssize_t width, Py_ssize_t height, tuple a, tuple b):
    cdef double c1 = a[0], s1 = a[1], ph1 = a[2], w1 = a[3], p1 = a[4]
    cdef double c2 = b[0], s2 = b[1], ph2 = b[2], w2 = b[3], p2 = b[4]
    if w1 <= 0 and w2 <= 0:
        return np.ones((height, width), dtype=bool)
    if w1 <= 0 or w2 <= 0:
        return stripe_keep(width, height, *(b if w1 <= 0 else a))
    out = np.empty((height, width), dtype=np.uint8)
    cdef unsigned char[:, ::1] o = out
    cdef Py_ssize_t x, y
    cdef double row1, row2, xc
    cdef double inv1 = 1.0 / p1, inv2 = 1.0 / p2
    with nogil:
        for y in range(height):
            row1 = (y + 0.5) * s1 - ph1
            row2 = (y + 0.5) * s2 - ph2
            for x in range(width):
                xc = x + 0.5
                o[y, x] = not (_hit(xc * c1 + row1, w1, p1, inv1) | _hit(xc * c2 + row2, w2, p2, inv2))
    return out.view(bool)


def box_occluded_counts(keep, boxes):
    k = np.ascontiguousarray(keep, dtype=bool).view(np.uint8)
    bx = np.ascontiguousarray(np.asarray(boxes, dtype=np.int64).reshape(-1, 4))
    out = np.zeros(bx.shape[0], dtype=np.int64)
    cdef const unsigned char[:, ::1] kv = k
    cdef const long long[:, ::1] bv = bx.view(np.longlong)
    cdef long long[::1] ov = out.view(np.longlong)
    cdef Py_ssize_t i, x, y
    cdef long long n
    with nogil:
        for i in range(bv.shape[0]):
            n = 0
            for y in range(bv[i, 1], bv[i, 1] + bv[i, 3]):
                for x in range(bv[i, 0], bv[i, 0] + bv[i, 2]):
                    n += kv[y, x] == 0
            ov[i] = n
    return out
