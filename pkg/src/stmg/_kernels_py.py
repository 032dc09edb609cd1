"""Dense complex kernels, interpreted reference backend.

Same algorithms as the compiled extension (`stmg._kernels`): partial-pivot
LU and a shifted-QR eigenvalue iteration on a Hessenberg reduction. Kept in
plain Python loops so the compiled module has a line-for-line reference and
the package stays usable without a C toolchain. Matrices are handled as
nested lists internally; the public functions accept and return ndarrays.
"""

from __future__ import annotations

import cmath
import math

import numpy as np

from stmg.errors import NoConvergence, SingularMatrix

BACKEND = "python"

#: machine epsilon, used for QR deflation thresholds
_EPS = 2.220446049250313e-16
#: relative pivot threshold below which a matrix is declared singular
PIVOT_RTOL = 1e-14
#: QR steps allowed per matrix: STEP_CAP_FACTOR * n**2
STEP_CAP_FACTOR = 100


def _to_rows(a):
    return [list(row) for row in np.asarray(a, dtype=complex).tolist()]


def _max_abs(rows):
    m = 0.0
    for row in rows:
        for v in row:
            av = abs(v)
            if av > m:
                m = av
    return m


def lu_solve(a, b):
    """Solve a @ x = b by LU with partial pivoting.

    Raises SingularMatrix when a pivot drops below PIVOT_RTOL times the
    largest initial entry magnitude.
    """
    lu = _to_rows(a)
    n = len(lu)
    barr = np.asarray(b, dtype=complex)
    squeeze = barr.ndim == 1
    rhs = _to_rows(barr.reshape(n, -1))
    m = len(rhs[0])
    thresh = PIVOT_RTOL * _max_abs(lu)
    for k in range(n):
        piv, pmag = k, abs(lu[k][k])
        for i in range(k + 1, n):
            mag = abs(lu[i][k])
            if mag > pmag:
                piv, pmag = i, mag
        if pmag <= thresh:
            raise SingularMatrix(f"pivot {pmag:.3e} below threshold {thresh:.3e}")
        if piv != k:
            lu[k], lu[piv] = lu[piv], lu[k]
            rhs[k], rhs[piv] = rhs[piv], rhs[k]
        inv_p = 1.0 / lu[k][k]
        for i in range(k + 1, n):
            mult = lu[i][k] * inv_p
            if mult != 0:
                lu_i, lu_k = lu[i], lu[k]
                for j in range(k + 1, n):
                    lu_i[j] -= mult * lu_k[j]
                r_i, r_k = rhs[i], rhs[k]
                for j in range(m):
                    r_i[j] -= mult * r_k[j]
    for k in range(n - 1, -1, -1):
        inv_p = 1.0 / lu[k][k]
        r_k = rhs[k]
        for j in range(m):
            s = r_k[j]
            for i in range(k + 1, n):
                s -= lu[k][i] * rhs[i][j]
            r_k[j] = s * inv_p
    out = np.array(rhs, dtype=complex).reshape(n, m)
    return out[:, 0] if squeeze else out


def det(a):
    """Determinant via partial-pivot elimination; never raises."""
    lu = _to_rows(a)
    n = len(lu)
    sign = 1.0
    prod = 1.0 + 0.0j
    for k in range(n):
        piv, pmag = k, abs(lu[k][k])
        for i in range(k + 1, n):
            mag = abs(lu[i][k])
            if mag > pmag:
                piv, pmag = i, mag
        if pmag == 0.0:
            return 0.0 + 0.0j
        if piv != k:
            lu[k], lu[piv] = lu[piv], lu[k]
            sign = -sign
        prod *= lu[k][k]
        inv_p = 1.0 / lu[k][k]
        for i in range(k + 1, n):
            mult = lu[i][k] * inv_p
            if mult != 0:
                lu_i, lu_k = lu[i], lu[k]
                for j in range(k + 1, n):
                    lu_i[j] -= mult * lu_k[j]
    return sign * prod


def _hessenberg(h, n):
    """In-place Householder reduction to upper Hessenberg form."""
    for k in range(n - 2):
        sq = 0.0
        for i in range(k + 1, n):
            sq += abs(h[i][k]) ** 2
        norm_x = math.sqrt(sq)
        if norm_x == 0.0:
            continue
        x0 = h[k + 1][k]
        phase = x0 / abs(x0) if x0 != 0 else 1.0 + 0.0j
        alpha = -phase * norm_x
        v = [0.0 + 0.0j] * n
        v[k + 1] = x0 - alpha
        for i in range(k + 2, n):
            v[i] = h[i][k]
        vnorm_sq = sq - abs(x0) ** 2 + abs(v[k + 1]) ** 2
        if vnorm_sq <= 0.0:
            continue
        inv_vsq = 2.0 / vnorm_sq
        # left: rows k+1..n-1, columns k..n-1
        for j in range(k, n):
            s = 0.0 + 0.0j
            for i in range(k + 1, n):
                s += v[i].conjugate() * h[i][j]
            s *= inv_vsq
            for i in range(k + 1, n):
                h[i][j] -= v[i] * s
        # right: all rows, columns k+1..n-1
        for i in range(n):
            s = 0.0 + 0.0j
            h_i = h[i]
            for j in range(k + 1, n):
                s += h_i[j] * v[j]
            s *= inv_vsq
            for j in range(k + 1, n):
                h_i[j] -= s * v[j].conjugate()
        for i in range(k + 2, n):
            h[i][k] = 0.0 + 0.0j


def _rotg(f, g):
    """Complex Givens rotation with real cosine: G @ (f, g) = (r, 0)."""
    if g == 0:
        return 1.0, 0.0 + 0.0j, f
    if f == 0:
        ag = abs(g)
        return 0.0, g.conjugate() / ag, ag + 0.0j
    af = abs(f)
    d = math.sqrt(af * af + abs(g) ** 2)
    c = af / d
    fs = f / af
    return c, fs * g.conjugate() / d, fs * d


def _eig2(a, b, c, d):
    """Eigenvalues of [[a, b], [c, d]]."""
    tr = a + d
    disc = cmath.sqrt(tr * tr - 4.0 * (a * d - b * c))
    return (tr + disc) * 0.5, (tr - disc) * 0.5


def eigenvalues(a, step_cap=None):
    """All eigenvalues of a square matrix, with multiplicity.

    Shifted QR iteration (Wilkinson shifts, Givens sweeps) on the
    Hessenberg form. Raises NoConvergence past ``step_cap`` QR sweeps
    (default STEP_CAP_FACTOR * n**2).
    """
    h = _to_rows(a)
    n = len(h)
    if n == 0:
        return np.zeros(0, dtype=complex)
    if step_cap is None:
        step_cap = STEP_CAP_FACTOR * n * n
    _hessenberg(h, n)
    hnorm = _max_abs(h)
    w = [0.0 + 0.0j] * n
    hi = n - 1
    steps = 0
    stall = 0
    while hi >= 0:
        if hi == 0:
            w[0] = h[0][0]
            break
        # split off converged subdiagonals, then locate the active block
        lo = hi
        while lo > 0:
            tol = _EPS * (abs(h[lo - 1][lo - 1]) + abs(h[lo][lo]))
            if tol == 0.0:
                tol = _EPS * hnorm
            if abs(h[lo][lo - 1]) <= tol:
                h[lo][lo - 1] = 0.0 + 0.0j
                break
            lo -= 1
        if lo == hi:
            w[hi] = h[hi][hi]
            hi -= 1
            stall = 0
            continue
        if lo == hi - 1:
            w[hi - 1], w[hi] = _eig2(h[lo][lo], h[lo][hi], h[hi][lo], h[hi][hi])
            hi -= 2
            stall = 0
            continue
        steps += 1
        stall += 1
        if steps > step_cap:
            raise NoConvergence(f"QR iteration exceeded {step_cap} steps")
        if stall % 15 == 0:
            shift = h[hi][hi] + 0.75 * abs(h[hi][hi - 1])
        else:
            l1, l2 = _eig2(h[hi - 1][hi - 1], h[hi - 1][hi], h[hi][hi - 1], h[hi][hi])
            shift = l1 if abs(l1 - h[hi][hi]) <= abs(l2 - h[hi][hi]) else l2
        for k in range(lo, hi + 1):
            h[k][k] -= shift
        rot_c = [0.0] * (hi - lo)
        rot_s = [0.0 + 0.0j] * (hi - lo)
        for k in range(lo, hi):
            c, s, r = _rotg(h[k][k], h[k + 1][k])
            rot_c[k - lo], rot_s[k - lo] = c, s
            h[k][k] = r
            h[k + 1][k] = 0.0 + 0.0j
            h_k, h_k1 = h[k], h[k + 1]
            sc = s.conjugate()
            for j in range(k + 1, hi + 1):
                t1, t2 = h_k[j], h_k1[j]
                h_k[j] = c * t1 + s * t2
                h_k1[j] = -sc * t1 + c * t2
        for k in range(lo, hi):
            c, s = rot_c[k - lo], rot_s[k - lo]
            sc = s.conjugate()
            top = min(k + 2, hi)
            for i in range(lo, top + 1):
                h_i = h[i]
                t1, t2 = h_i[k], h_i[k + 1]
                h_i[k] = c * t1 + sc * t2
                h_i[k + 1] = -s * t1 + c * t2
        for k in range(lo, hi + 1):
            h[k][k] += shift
    return np.array(w, dtype=complex)


def spectral_radius(a, step_cap=None):
    vals = eigenvalues(a, step_cap)
    return float(np.max(np.abs(vals))) if vals.size else 0.0
