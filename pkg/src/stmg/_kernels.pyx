# cython: boundscheck=False, wraparound=False, cdivision=True
"""Dense complex kernels, compiled backend.

Line-for-line port of ``stmg._kernels_py`` (partial-pivot LU, shifted-QR
eigenvalues on a Hessenberg reduction) with typed loops. Selected at import
by ``stmg.linalg`` when available.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport sqrt

from stmg.errors import NoConvergence, SingularMatrix

cnp.import_array()

BACKEND = "compiled"

cdef double _EPS = 2.220446049250313e-16
PIVOT_RTOL = 1e-14
STEP_CAP_FACTOR = 100

cdef double _PIVOT_RTOL_C = 1e-14


cdef inline double _cabs(double complex z) nogil:
    cdef double x = z.real
    cdef double y = z.imag
    if x < 0: x = -x
    if y < 0: y = -y
    if x == 0 and y == 0:
        return 0.0
    if x < y:
        x, y = y, x
    cdef double q = y / x
    return x * sqrt(1.0 + q * q)


cdef inline double complex _csqrt(double complex z) nogil:
    cdef double r = _cabs(z)
    if r == 0.0:
        return 0.0
    cdef double x = sqrt((r + z.real) * 0.5)
    cdef double y = sqrt((r - z.real) * 0.5)
    if z.imag < 0.0:
        y = -y
    return x + 1j * y


cdef double _max_abs(double complex[:, ::1] a, Py_ssize_t n) nogil:
    cdef double m = 0.0, v
    cdef Py_ssize_t i, j
    for i in range(n):
        for j in range(n):
            v = _cabs(a[i, j])
            if v > m:
                m = v
    return m


def lu_solve(a, b):
    """Solve a @ x = b by LU with partial pivoting.

    Raises SingularMatrix when a pivot drops below PIVOT_RTOL times the
    largest initial entry magnitude.
    """
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] lu = np.array(a, dtype=np.complex128, order="C")
    barr = np.asarray(b, dtype=np.complex128)
    squeeze = barr.ndim == 1
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] rhs = np.array(barr.reshape(lu.shape[0], -1), order="C")
    cdef double complex[:, ::1] L = lu
    cdef double complex[:, ::1] R = rhs
    cdef Py_ssize_t n = lu.shape[0], m = rhs.shape[1]
    cdef Py_ssize_t i, j, k, piv
    cdef double pmag, mag
    cdef double complex mult, inv_p, s, tmp
    cdef double thresh = _PIVOT_RTOL_C * _max_abs(L, n)
    for k in range(n):
        piv = k
        pmag = _cabs(L[k, k])
        for i in range(k + 1, n):
            mag = _cabs(L[i, k])
            if mag > pmag:
                piv = i
                pmag = mag
        if pmag <= thresh:
            raise SingularMatrix(f"pivot {pmag:.3e} below threshold {thresh:.3e}")
        if piv != k:
            for j in range(n):
                tmp = L[k, j]; L[k, j] = L[piv, j]; L[piv, j] = tmp
            for j in range(m):
                tmp = R[k, j]; R[k, j] = R[piv, j]; R[piv, j] = tmp
        inv_p = 1.0 / L[k, k]
        for i in range(k + 1, n):
            mult = L[i, k] * inv_p
            if mult != 0:
                for j in range(k + 1, n):
                    L[i, j] = L[i, j] - mult * L[k, j]
                for j in range(m):
                    R[i, j] = R[i, j] - mult * R[k, j]
    for k in range(n - 1, -1, -1):
        inv_p = 1.0 / L[k, k]
        for j in range(m):
            s = R[k, j]
            for i in range(k + 1, n):
                s = s - L[k, i] * R[i, j]
            R[k, j] = s * inv_p
    return rhs[:, 0] if squeeze else rhs


def det(a):
    """Determinant via partial-pivot elimination; never raises."""
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] lu = np.array(a, dtype=np.complex128, order="C")
    cdef double complex[:, ::1] L = lu
    cdef Py_ssize_t n = lu.shape[0]
    cdef Py_ssize_t i, j, k, piv
    cdef double pmag, mag, sign = 1.0
    cdef double complex prod = 1.0, mult, inv_p, tmp
    for k in range(n):
        piv = k
        pmag = _cabs(L[k, k])
        for i in range(k + 1, n):
            mag = _cabs(L[i, k])
            if mag > pmag:
                piv = i
                pmag = mag
        if pmag == 0.0:
            return 0j
        if piv != k:
            for j in range(n):
                tmp = L[k, j]; L[k, j] = L[piv, j]; L[piv, j] = tmp
            sign = -sign
        prod = prod * L[k, k]
        inv_p = 1.0 / L[k, k]
        for i in range(k + 1, n):
            mult = L[i, k] * inv_p
            if mult != 0:
                for j in range(k + 1, n):
                    L[i, j] = L[i, j] - mult * L[k, j]
    return complex(sign * prod)


cdef void _hessenberg(double complex[:, ::1] h, Py_ssize_t n) nogil:
    cdef Py_ssize_t i, j, k
    cdef double sq, norm_x, vnorm_sq
    cdef double complex x0, phase, alpha, s
    cdef double complex v[64]
    for k in range(n - 2):
        sq = 0.0
        for i in range(k + 1, n):
            sq += _cabs(h[i, k]) ** 2
        norm_x = sqrt(sq)
        if norm_x == 0.0:
            continue
        x0 = h[k + 1, k]
        if x0 != 0:
            phase = x0 / _cabs(x0)
        else:
            phase = 1.0
        alpha = -phase * norm_x
        for i in range(n):
            v[i] = 0
        v[k + 1] = x0 - alpha
        for i in range(k + 2, n):
            v[i] = h[i, k]
        vnorm_sq = sq - _cabs(x0) ** 2 + _cabs(v[k + 1]) ** 2
        if vnorm_sq <= 0.0:
            continue
        for j in range(k, n):
            s = 0
            for i in range(k + 1, n):
                s = s + v[i].conjugate() * h[i, j]
            s = s * (2.0 / vnorm_sq)
            for i in range(k + 1, n):
                h[i, j] = h[i, j] - v[i] * s
        for i in range(n):
            s = 0
            for j in range(k + 1, n):
                s = s + h[i, j] * v[j]
            s = s * (2.0 / vnorm_sq)
            for j in range(k + 1, n):
                h[i, j] = h[i, j] - s * v[j].conjugate()
        for i in range(k + 2, n):
            h[i, k] = 0


def eigenvalues(a, step_cap=None):
    """All eigenvalues of a square matrix, with multiplicity.

    Shifted QR iteration (Wilkinson shifts, Givens sweeps) on the
    Hessenberg form. Raises NoConvergence past ``step_cap`` QR sweeps
    (default STEP_CAP_FACTOR * n**2). Matrices larger than 64x64 are
    outside this kernel's remit.
    """
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] harr = np.array(a, dtype=np.complex128, order="C")
    cdef Py_ssize_t n = harr.shape[0]
    if n == 0:
        return np.zeros(0, dtype=np.complex128)
    if n > 64:
        raise ValueError("compiled kernel supports matrices up to 64x64")
    cdef long cap
    if step_cap is None:
        cap = STEP_CAP_FACTOR * n * n
    else:
        cap = int(step_cap)
    cdef double complex[:, ::1] h = harr
    _hessenberg(h, n)
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] wout = np.zeros(n, dtype=np.complex128)
    cdef double complex[::1] w = wout
    cdef double hnorm = _max_abs(h, n)
    cdef Py_ssize_t hi = n - 1, lo, i, j, k, top
    cdef long steps = 0, stall = 0
    cdef double tol, c
    cdef double rot_c[64]
    cdef double complex rot_s[64]
    cdef double complex tr, disc, l1, l2, shift, s, sc, r, t1, t2, f, g
    cdef double af, d
    while hi >= 0:
        if hi == 0:
            w[0] = h[0, 0]
            break
        lo = hi
        while lo > 0:
            tol = _EPS * (_cabs(h[lo - 1, lo - 1]) + _cabs(h[lo, lo]))
            if tol == 0.0:
                tol = _EPS * hnorm
            if _cabs(h[lo, lo - 1]) <= tol:
                h[lo, lo - 1] = 0
                break
            lo -= 1
        if lo == hi:
            w[hi] = h[hi, hi]
            hi -= 1
            stall = 0
            continue
        if lo == hi - 1:
            tr = h[lo, lo] + h[hi, hi]
            disc = _csqrt(tr * tr - 4.0 * (h[lo, lo] * h[hi, hi] - h[lo, hi] * h[hi, lo]))
            w[hi - 1] = (tr + disc) * 0.5
            w[hi] = (tr - disc) * 0.5
            hi -= 2
            stall = 0
            continue
        steps += 1
        stall += 1
        if steps > cap:
            raise NoConvergence(f"QR iteration exceeded {cap} steps")
        if stall % 15 == 0:
            shift = h[hi, hi] + 0.75 * _cabs(h[hi, hi - 1])
        else:
            tr = h[hi - 1, hi - 1] + h[hi, hi]
            disc = _csqrt(tr * tr - 4.0 * (h[hi - 1, hi - 1] * h[hi, hi] - h[hi - 1, hi] * h[hi, hi - 1]))
            l1 = (tr + disc) * 0.5
            l2 = (tr - disc) * 0.5
            if _cabs(l1 - h[hi, hi]) <= _cabs(l2 - h[hi, hi]):
                shift = l1
            else:
                shift = l2
        for k in range(lo, hi + 1):
            h[k, k] = h[k, k] - shift
        for k in range(lo, hi):
            f = h[k, k]
            g = h[k + 1, k]
            if g == 0:
                c = 1.0; s = 0; r = f
            elif f == 0:
                c = 0.0; s = g.conjugate() / _cabs(g); r = _cabs(g)
            else:
                af = _cabs(f)
                d = sqrt(af * af + _cabs(g) ** 2)
                c = af / d
                s = (f / af) * g.conjugate() / d
                r = (f / af) * d
            rot_c[k - lo] = c
            rot_s[k - lo] = s
            h[k, k] = r
            h[k + 1, k] = 0
            sc = s.conjugate()
            for j in range(k + 1, hi + 1):
                t1 = h[k, j]; t2 = h[k + 1, j]
                h[k, j] = c * t1 + s * t2
                h[k + 1, j] = -sc * t1 + c * t2
        for k in range(lo, hi):
            c = rot_c[k - lo]
            s = rot_s[k - lo]
            sc = s.conjugate()
            top = k + 2
            if top > hi:
                top = hi
            for i in range(lo, top + 1):
                t1 = h[i, k]; t2 = h[i, k + 1]
                h[i, k] = c * t1 + sc * t2
                h[i, k + 1] = -s * t1 + c * t2
        for k in range(lo, hi + 1):
            h[k, k] = h[k, k] + shift
    return wout


def spectral_radius(a, step_cap=None):
    vals = eigenvalues(a, step_cap)
    if vals.size == 0:
        return 0.0
    return float(np.max(np.abs(vals)))
