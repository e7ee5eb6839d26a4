"""Pure NumPy implementation of the dense complex kernels.

Mirrors ``_kernels.pyx`` routine for routine; the two are checked against
each other in ``tests/test_kernels.py``.  All routines work in place on
C-contiguous ``complex128`` arrays.
"""
import numpy as np

EPS = np.finfo(float).eps


def _givens(x: complex, y: complex):
    """Return (c, s, r) with [[c, s], [-conj(s), c]] @ [x, y] = [r, 0], c real."""
    ax = abs(x)
    ay = abs(y)
    if ay == 0.0:
        return 1.0, 0j, x
    if ax == 0.0:
        return 0.0, 1.0 + 0j, y
    rho = np.hypot(ax, ay)
    phase = x / ax
    return ax / rho, phase * y.conjugate() / rho, phase * rho


def _rot_rows(T, i, c, s, lo, hi):
    # rows i, i+1 <- G @ rows, columns lo:hi
    xi = T[i, lo:hi].copy()
    xj = T[i + 1, lo:hi]
    T[i, lo:hi] = c * xi + s * xj
    T[i + 1, lo:hi] = -s.conjugate() * xi + c * xj


def _rot_cols(T, i, c, s, lo, hi):
    # columns i, i+1 <- columns @ G^H, rows lo:hi
    xi = T[lo:hi, i].copy()
    xj = T[lo:hi, i + 1]
    T[lo:hi, i] = c * xi + s.conjugate() * xj
    T[lo:hi, i + 1] = -s * xi + c * xj


def hessenberg_inplace(T, Q):
    n = T.shape[0]
    for k in range(n - 2):
        x = T[k + 1:, k].copy()
        alpha = np.linalg.norm(x)
        if alpha == 0.0:
            continue
        phase = x[0] / abs(x[0]) if x[0] != 0 else 1.0
        v = x
        v[0] += phase * alpha
        v /= np.linalg.norm(v)
        T[k + 1:, :] -= 2.0 * np.outer(v, v.conj() @ T[k + 1:, :])
        T[:, k + 1:] -= 2.0 * np.outer(T[:, k + 1:] @ v, v.conj())
        Q[:, k + 1:] -= 2.0 * np.outer(Q[:, k + 1:] @ v, v.conj())
        T[k + 2:, k] = 0.0


def _wilkinson(a, b, c, d):
    half = 0.5 * (a - d)
    disc = np.sqrt(half * half + b * c + 0j)
    m1 = d - b * c / (half + disc) if abs(half + disc) > 0 else d
    m2 = d - b * c / (half - disc) if abs(half - disc) > 0 else d
    return m1 if abs(m1 - d) <= abs(m2 - d) else m2


def schur_inplace(T, Q, max_sweeps: int) -> int:
    """Reduce T to upper triangular form by unitary similarity, accumulating Q.

    Returns the number of QR sweeps used, or -1 when ``max_sweeps`` is exceeded.
    """
    n = T.shape[0]
    if n == 1:
        return 0
    hessenberg_inplace(T, Q)
    fro = np.linalg.norm(T)
    hi = n - 1
    its = 0
    sweeps = 0
    while hi > 0:
        l = hi
        while l > 0:
            scale = abs(T[l - 1, l - 1]) + abs(T[l, l])
            if scale == 0.0:
                scale = fro
            if abs(T[l, l - 1]) <= EPS * scale:
                T[l, l - 1] = 0.0
                break
            l -= 1
        if l == hi:
            hi -= 1
            its = 0
            continue
        if sweeps >= max_sweeps:
            return -1
        sweeps += 1
        its += 1
        if its % 10 == 0:
            mu = T[hi, hi] + 0.75 * abs(T[hi, hi - 1].real) + 0.75j * abs(T[hi, hi - 1].imag)
        else:
            mu = _wilkinson(T[hi - 1, hi - 1], T[hi - 1, hi], T[hi, hi - 1], T[hi, hi])
        x = T[l, l] - mu
        y = T[l + 1, l]
        for k in range(l, hi):
            if k > l:
                x = T[k, k - 1]
                y = T[k + 1, k - 1]
            c, s, r = _givens(x, y)
            col0 = k - 1 if k > l else k
            _rot_rows(T, k, c, s, col0, n)
            if k > l:
                T[k, k - 1] = r
                T[k + 1, k - 1] = 0.0
            _rot_cols(T, k, c, s, 0, min(k + 3, hi + 1))
            _rot_cols(Q, k, c, s, 0, n)
    return sweeps


def swap_adjacent(T, Q, k: int):
    """Exchange diagonal entries k and k+1 of upper triangular T.

    The coupling entry T[k, k+1] is left unchanged by this rotation.
    """
    n = T.shape[0]
    t11 = T[k, k]
    t22 = T[k + 1, k + 1]
    if t11 == t22:
        return
    c, s, _ = _givens(T[k, k + 1], t22 - t11)
    if k + 2 < n:
        _rot_rows(T, k, c, s, k + 2, n)
    _rot_cols(T, k, c, s, 0, k)
    T[k, k] = t22
    T[k + 1, k + 1] = t11
    _rot_cols(Q, k, c, s, 0, n)


def order_stable_first(T, Q) -> int:
    """Bubble diagonal entries with negative real part to the top; return their count."""
    n = T.shape[0]
    dest = 0
    for i in range(n):
        if T[i, i].real < 0.0:
            for k in range(i - 1, dest - 1, -1):
                swap_adjacent(T, Q, k)
            dest += 1
    return dest


def trsyl_inplace(Ta, Tb, F):
    """Overwrite F with Y solving Ta @ Y + Y @ Tb = F, Ta and Tb upper triangular."""
    n = Ta.shape[0]
    kb = Tb.shape[0]
    for j in range(kb):
        if j > 0:
            F[:, j] -= F[:, :j] @ Tb[:j, j]
        mu = Tb[j, j]
        for r in range(n - 1, -1, -1):
            acc = F[r, j]
            if r + 1 < n:
                acc -= Ta[r, r + 1:] @ F[r + 1:, j]
            F[r, j] = acc / (Ta[r, r] + mu)
