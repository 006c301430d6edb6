# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled versions of the hot kernels (``_fallback.py`` documents the shared interface)."""
import numpy as np
cimport numpy as cnp

cnp.import_array()


cdef int _invert(double[:, :] A, double[:, :] out, int d) noexcept nogil:
    cdef double det
    if d == 1:
        if A[0, 0] == 0.0:
            return 1
        out[0, 0] = 1.0 / A[0, 0]
        return 0
    if d == 2:
        det = A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0]
        if det == 0.0:
            return 1
        out[0, 0] = A[1, 1] / det
        out[1, 1] = A[0, 0] / det
        out[0, 1] = -A[0, 1] / det
        out[1, 0] = -A[1, 0] / det
        return 0
    det = (A[0, 0] * (A[1, 1] * A[2, 2] - A[1, 2] * A[2, 1])
           - A[0, 1] * (A[1, 0] * A[2, 2] - A[1, 2] * A[2, 0])
           + A[0, 2] * (A[1, 0] * A[2, 1] - A[1, 1] * A[2, 0]))
    if det == 0.0:
        return 1
    out[0, 0] = (A[1, 1] * A[2, 2] - A[1, 2] * A[2, 1]) / det
    out[0, 1] = (A[0, 2] * A[2, 1] - A[0, 1] * A[2, 2]) / det
    out[0, 2] = (A[0, 1] * A[1, 2] - A[0, 2] * A[1, 1]) / det
    out[1, 0] = (A[1, 2] * A[2, 0] - A[1, 0] * A[2, 2]) / det
    out[1, 1] = (A[0, 0] * A[2, 2] - A[0, 2] * A[2, 0]) / det
    out[1, 2] = (A[0, 2] * A[1, 0] - A[0, 0] * A[1, 2]) / det
    out[2, 0] = (A[1, 0] * A[2, 1] - A[1, 1] * A[2, 0]) / det
    out[2, 1] = (A[0, 1] * A[2, 0] - A[0, 0] * A[2, 1]) / det
    out[2, 2] = (A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0]) / det
    return 0


def metric_curvature(G, dG, ddG):
    """Compiled ``metric_curvature``; same signature and layout as the fallback."""
    cdef double[:, :, ::1] Gv = np.ascontiguousarray(G, dtype=np.float64)
    cdef double[:, :, :, ::1] dGv = np.ascontiguousarray(dG, dtype=np.float64)
    cdef double[:, :, :, :, ::1] ddGv = np.ascontiguousarray(ddG, dtype=np.float64)
    cdef Py_ssize_t N = Gv.shape[0]
    cdef int d = <int>Gv.shape[1]
    if d < 1 or d > 3:
        raise ValueError("dimension must be 1, 2 or 3")
    gamma_arr = np.zeros((N, d, d, d))
    riem_arr = np.zeros((N, d, d, d, d))
    ricci_arr = np.zeros((N, d, d))
    scalar_arr = np.zeros(N)
    cdef double[:, :, :, ::1] gamma = gamma_arr
    cdef double[:, :, :, :, ::1] riem = riem_arr
    cdef double[:, :, ::1] ricci = ricci_arr
    cdef double[::1] scalar = scalar_arr
    cdef double[:, ::1] Ginv = np.zeros((d, d))
    cdef double[:, :, ::1] gam1 = np.zeros((d, d, d))
    cdef Py_ssize_t n
    cdef int a, b, c, e, f, k
    cdef double s, t
    for n in range(N):
        if _invert(Gv[n], Ginv, d):
            raise np.linalg.LinAlgError("singular metric")
        for a in range(d):
            for b in range(d):
                for c in range(d):
                    gam1[a, b, c] = 0.5 * (dGv[n, b, c, a] + dGv[n, c, b, a] - dGv[n, a, b, c])
        for k in range(d):
            for b in range(d):
                for c in range(d):
                    s = 0.0
                    for a in range(d):
                        s += Ginv[k, a] * gam1[a, b, c]
                    gamma[n, k, b, c] = s
        for a in range(d):
            for b in range(d):
                for c in range(d):
                    for e in range(d):
                        # index e plays the role of the fourth slot "d"
                        s = 0.5 * (ddGv[n, b, c, a, e] + ddGv[n, a, e, b, c]
                                   - ddGv[n, a, c, b, e] - ddGv[n, b, e, a, c])
                        t = 0.0
                        for f in range(d):
                            t += gam1[f, e, a] * gamma[n, f, c, b] - gam1[f, c, a] * gamma[n, f, e, b]
                        riem[n, a, b, c, e] = s + t
        s = 0.0
        for b in range(d):
            for e in range(d):
                t = 0.0
                for a in range(d):
                    for c in range(d):
                        t += Ginv[a, c] * riem[n, a, b, c, e]
                ricci[n, b, e] = t
                s += Ginv[b, e] * t
        scalar[n] = s
    return gamma_arr, riem_arr, ricci_arr, scalar_arr


cdef void _navier2(double[:, :, ::1] U, double[:, :, ::1] out, double hx, double hy,
                   double lam, double mu) noexcept nogil:
    cdef Py_ssize_t i, j
    cdef Py_ssize_t nx = U.shape[0], ny = U.shape[1]
    cdef double lm = lam + mu
    cdef double ixx = 1.0 / (hx * hx), iyy = 1.0 / (hy * hy), ixy = 1.0 / (4.0 * hx * hy)
    cdef double uxx, uyy, vxx, vyy, uxy, vxy
    for i in range(1, nx - 1):
        for j in range(1, ny - 1):
            uxx = (U[i + 1, j, 0] - 2.0 * U[i, j, 0] + U[i - 1, j, 0]) * ixx
            uyy = (U[i, j + 1, 0] - 2.0 * U[i, j, 0] + U[i, j - 1, 0]) * iyy
            vxx = (U[i + 1, j, 1] - 2.0 * U[i, j, 1] + U[i - 1, j, 1]) * ixx
            vyy = (U[i, j + 1, 1] - 2.0 * U[i, j, 1] + U[i, j - 1, 1]) * iyy
            uxy = (U[i + 1, j + 1, 0] - U[i + 1, j - 1, 0] - U[i - 1, j + 1, 0] + U[i - 1, j - 1, 0]) * ixy
            vxy = (U[i + 1, j + 1, 1] - U[i + 1, j - 1, 1] - U[i - 1, j + 1, 1] + U[i - 1, j - 1, 1]) * ixy
            out[i, j, 0] = mu * (uxx + uyy) + lm * (uxx + vxy)
            out[i, j, 1] = mu * (vxx + vyy) + lm * (uxy + vyy)


cdef inline double _d2(double[:, :, :, ::1] U, Py_ssize_t i, Py_ssize_t j, Py_ssize_t k,
                       int comp, int ax, double inv) noexcept nogil:
    if ax == 0:
        return (U[i + 1, j, k, comp] - 2.0 * U[i, j, k, comp] + U[i - 1, j, k, comp]) * inv
    if ax == 1:
        return (U[i, j + 1, k, comp] - 2.0 * U[i, j, k, comp] + U[i, j - 1, k, comp]) * inv
    return (U[i, j, k + 1, comp] - 2.0 * U[i, j, k, comp] + U[i, j, k - 1, comp]) * inv


cdef inline double _dx(double[:, :, :, ::1] U, Py_ssize_t i, Py_ssize_t j, Py_ssize_t k,
                       int comp, int a, int b, double inv) noexcept nogil:
    # mixed second difference over axes a != b
    cdef double acc = 0.0
    cdef int sa, sb
    cdef Py_ssize_t ii, jj, kk
    for sa in range(-1, 2, 2):
        for sb in range(-1, 2, 2):
            ii = i
            jj = j
            kk = k
            if a == 0:
                ii += sa
            elif a == 1:
                jj += sa
            else:
                kk += sa
            if b == 0:
                ii += sb
            elif b == 1:
                jj += sb
            else:
                kk += sb
            acc += sa * sb * U[ii, jj, kk, comp]
    return acc * inv


cdef void _navier3(double[:, :, :, ::1] U, double[:, :, :, ::1] out, double[::1] h,
                   double lam, double mu) noexcept nogil:
    cdef Py_ssize_t i, j, k
    cdef int a, b
    cdef double acc, lap, grad
    cdef double inv2[3]
    cdef double invx[3][3]
    for a in range(3):
        inv2[a] = 1.0 / (h[a] * h[a])
        for b in range(3):
            invx[a][b] = 1.0 / (4.0 * h[a] * h[b])
    for i in range(1, U.shape[0] - 1):
        for j in range(1, U.shape[1] - 1):
            for k in range(1, U.shape[2] - 1):
                for a in range(3):
                    lap = 0.0
                    grad = 0.0
                    for b in range(3):
                        lap += _d2(U, i, j, k, a, b, inv2[b])
                        if b == a:
                            grad += _d2(U, i, j, k, a, a, inv2[a])
                        else:
                            grad += _dx(U, i, j, k, b, a, b, invx[a][b])
                    out[i, j, k, a] = mu * lap + (lam + mu) * grad


def navier_apply(U, h, lam, mu):
    """Compiled ``navier_apply``; same contract as the fallback."""
    U = np.ascontiguousarray(U, dtype=np.float64)
    d = U.shape[U.ndim - 1]
    hh = np.array(np.broadcast_to(np.asarray(h, dtype=np.float64), (d,)), dtype=np.float64)
    out = np.zeros_like(U)
    if d == 2 and U.ndim == 3:
        _navier2(U, out, hh[0], hh[1], float(lam), float(mu))
    elif d == 3 and U.ndim == 4:
        _navier3(U, out, hh, float(lam), float(mu))
    else:
        raise ValueError("U must have shape (nx, ny, 2) or (nx, ny, nz, 3)")
    return out
