# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled dense complex kernels.

Same algorithms and calling convention as ``_pykernels``: every routine
mutates C-contiguous complex128 arrays in place.
"""
from libc.math cimport sqrt, fabs, hypot, copysign

cdef double EPS = 2.220446049250313e-16


cdef inline double cabs_(double complex z) nogil:
    return hypot(z.real, z.imag)


cdef inline double complex csqrt_(double complex z) nogil:
    cdef double x = z.real, y = z.imag
    cdef double r = hypot(x, y)
    cdef double re, im
    if r == 0.0:
        return 0.0
    re = sqrt(0.5 * (r + x))
    im = copysign(sqrt(0.5 * (r - x)), y)
    return re + 1j * im


cdef inline void givens(double complex x, double complex y,
                        double* c, double complex* s, double complex* r) nogil:
    cdef double ax = cabs_(x), ay = cabs_(y), rho
    cdef double complex phase
    if ay == 0.0:
        c[0] = 1.0
        s[0] = 0.0
        r[0] = x
        return
    if ax == 0.0:
        c[0] = 0.0
        s[0] = 1.0
        r[0] = y
        return
    rho = hypot(ax, ay)
    phase = x / ax
    c[0] = ax / rho
    s[0] = phase * y.conjugate() / rho
    r[0] = phase * rho


cdef inline void rot_rows(double complex[:, ::1] T, Py_ssize_t i, double c,
                          double complex s, Py_ssize_t lo, Py_ssize_t hi) nogil:
    cdef Py_ssize_t j
    cdef double complex xi, xj
    cdef double complex sc = s.conjugate()
    for j in range(lo, hi):
        xi = T[i, j]
        xj = T[i + 1, j]
        T[i, j] = c * xi + s * xj
        T[i + 1, j] = -sc * xi + c * xj


cdef inline void rot_cols(double complex[:, ::1] T, Py_ssize_t i, double c,
                          double complex s, Py_ssize_t lo, Py_ssize_t hi) nogil:
    cdef Py_ssize_t j
    cdef double complex xi, xj
    cdef double complex sc = s.conjugate()
    for j in range(lo, hi):
        xi = T[j, i]
        xj = T[j, i + 1]
        T[j, i] = c * xi + sc * xj
        T[j, i + 1] = -s * xi + c * xj


cdef void hessenberg(double complex[:, ::1] T, double complex[:, ::1] Q,
                     double complex[::1] v) nogil:
    cdef Py_ssize_t n = T.shape[0]
    cdef Py_ssize_t k, i, j, m
    cdef double alpha, vn, a0
    cdef double complex phase, acc
    for k in range(n - 2):
        m = n - k - 1
        alpha = 0.0
        for i in range(m):
            v[i] = T[k + 1 + i, k]
            alpha += v[i].real * v[i].real + v[i].imag * v[i].imag
        alpha = sqrt(alpha)
        if alpha == 0.0:
            continue
        a0 = cabs_(v[0])
        if a0 != 0.0:
            phase = v[0] / a0
        else:
            phase = 1.0
        v[0] = v[0] + phase * alpha
        vn = 0.0
        for i in range(m):
            vn += v[i].real * v[i].real + v[i].imag * v[i].imag
        vn = sqrt(vn)
        for i in range(m):
            v[i] = v[i] / vn
        # T[k+1:, :] -= 2 v (v^H T[k+1:, :])
        for j in range(n):
            acc = 0.0
            for i in range(m):
                acc = acc + v[i].conjugate() * T[k + 1 + i, j]
            acc = 2.0 * acc
            for i in range(m):
                T[k + 1 + i, j] = T[k + 1 + i, j] - v[i] * acc
        # T[:, k+1:] -= 2 (T[:, k+1:] v) v^H ; same for Q
        for j in range(n):
            acc = 0.0
            for i in range(m):
                acc = acc + T[j, k + 1 + i] * v[i]
            acc = 2.0 * acc
            for i in range(m):
                T[j, k + 1 + i] = T[j, k + 1 + i] - acc * v[i].conjugate()
            acc = 0.0
            for i in range(m):
                acc = acc + Q[j, k + 1 + i] * v[i]
            acc = 2.0 * acc
            for i in range(m):
                Q[j, k + 1 + i] = Q[j, k + 1 + i] - acc * v[i].conjugate()
        for i in range(k + 2, n):
            T[i, k] = 0.0


cdef inline double complex wilkinson(double complex a, double complex b,
                                     double complex c, double complex d) nogil:
    cdef double complex half = 0.5 * (a - d)
    cdef double complex disc = csqrt_(half * half + b * c)
    cdef double complex m1 = d, m2 = d
    if cabs_(half + disc) > 0.0:
        m1 = d - b * c / (half + disc)
    if cabs_(half - disc) > 0.0:
        m2 = d - b * c / (half - disc)
    if cabs_(m1 - d) <= cabs_(m2 - d):
        return m1
    return m2


def hessenberg_inplace(double complex[:, ::1] T, double complex[:, ::1] Q):
    import numpy as np
    cdef double complex[::1] v = np.empty(max(T.shape[0], 1), dtype=np.complex128)
    with nogil:
        hessenberg(T, Q, v)


def schur_inplace(double complex[:, ::1] T, double complex[:, ::1] Q, int max_sweeps):
    """Reduce T to upper triangular form by unitary similarity, accumulating Q.

    Returns the number of QR sweeps used, or -1 when ``max_sweeps`` is exceeded.
    """
    import numpy as np
    cdef Py_ssize_t n = T.shape[0]
    if n == 1:
        return 0
    cdef double complex[::1] v = np.empty(n, dtype=np.complex128)
    cdef Py_ssize_t hi, l, k, col0, top
    cdef int its = 0, sweeps = 0
    cdef double scale, fro = 0.0, c
    cdef double complex mu, x, y, s, r, sub
    cdef Py_ssize_t i, j
    with nogil:
        hessenberg(T, Q, v)
        for i in range(n):
            for j in range(n):
                fro += T[i, j].real * T[i, j].real + T[i, j].imag * T[i, j].imag
        fro = sqrt(fro)
        hi = n - 1
        while hi > 0:
            l = hi
            while l > 0:
                scale = cabs_(T[l - 1, l - 1]) + cabs_(T[l, l])
                if scale == 0.0:
                    scale = fro
                if cabs_(T[l, l - 1]) <= EPS * scale:
                    T[l, l - 1] = 0.0
                    break
                l -= 1
            if l == hi:
                hi -= 1
                its = 0
                continue
            if sweeps >= max_sweeps:
                sweeps = -1
                break
            sweeps += 1
            its += 1
            if its % 10 == 0:
                sub = T[hi, hi - 1]
                mu = T[hi, hi] + 0.75 * fabs(sub.real) + 0.75j * fabs(sub.imag)
            else:
                mu = wilkinson(T[hi - 1, hi - 1], T[hi - 1, hi], T[hi, hi - 1], T[hi, hi])
            x = T[l, l] - mu
            y = T[l + 1, l]
            for k in range(l, hi):
                if k > l:
                    x = T[k, k - 1]
                    y = T[k + 1, k - 1]
                givens(x, y, &c, &s, &r)
                col0 = k - 1 if k > l else k
                rot_rows(T, k, c, s, col0, n)
                if k > l:
                    T[k, k - 1] = r
                    T[k + 1, k - 1] = 0.0
                top = k + 3 if k + 3 < hi + 1 else hi + 1
                rot_cols(T, k, c, s, 0, top)
                rot_cols(Q, k, c, s, 0, n)
    return sweeps


cdef void swap(double complex[:, ::1] T, double complex[:, ::1] Q, Py_ssize_t k) nogil:
    cdef Py_ssize_t n = T.shape[0]
    cdef double complex t11 = T[k, k], t22 = T[k + 1, k + 1], s, r
    cdef double c
    if t11 == t22:
        return
    givens(T[k, k + 1], t22 - t11, &c, &s, &r)
    if k + 2 < n:
        rot_rows(T, k, c, s, k + 2, n)
    rot_cols(T, k, c, s, 0, k)
    T[k, k] = t22
    T[k + 1, k + 1] = t11
    rot_cols(Q, k, c, s, 0, n)


def swap_adjacent(double complex[:, ::1] T, double complex[:, ::1] Q, Py_ssize_t k):
    """Exchange diagonal entries k and k+1 of upper triangular T."""
    with nogil:
        swap(T, Q, k)


def order_stable_first(double complex[:, ::1] T, double complex[:, ::1] Q):
    """Bubble diagonal entries with negative real part to the top; return their count."""
    cdef Py_ssize_t n = T.shape[0], i, k, dest = 0
    with nogil:
        for i in range(n):
            if T[i, i].real < 0.0:
                k = i - 1
                while k >= dest:
                    swap(T, Q, k)
                    k -= 1
                dest += 1
    return dest


def trsyl_inplace(double complex[:, ::1] Ta, double complex[:, ::1] Tb,
                  double complex[:, ::1] F):
    """Overwrite F with Y solving Ta @ Y + Y @ Tb = F, Ta and Tb upper triangular."""
    cdef Py_ssize_t n = Ta.shape[0], kb = Tb.shape[0]
    cdef Py_ssize_t i, j, r, q
    cdef double complex acc, mu
    with nogil:
        for j in range(kb):
            for i in range(j):
                for r in range(n):
                    F[r, j] = F[r, j] - F[r, i] * Tb[i, j]
            mu = Tb[j, j]
            r = n - 1
            while r >= 0:
                acc = F[r, j]
                for q in range(r + 1, n):
                    acc = acc - Ta[r, q] * F[q, j]
                F[r, j] = acc / (Ta[r, r] + mu)
                r -= 1
