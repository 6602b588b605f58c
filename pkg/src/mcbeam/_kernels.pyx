# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled beamforming kernels.

Same algorithm surface as ``mcbeam._kernels_py`` (cyclic Jacobi
eigendecomposition, Cholesky solve with one refinement pass, three-case
beamformer construction, candidate-gain sweep), implemented with typed C
loops. These dominate the per-slot cost of episode simulation: one protocol
slot evaluates 2^{n_cells} beamformer designs.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport fabs, sqrt

cnp.import_array()

BACKEND = "cython"

MAX_JACOBI_SWEEPS = 100
OFFDIAG_TOL = 1e-14

cdef int _MAX_SWEEPS = 100
cdef double _OFF_TOL = 1e-14

ctypedef double complex dcomplex


cdef inline double _abs2(dcomplex z) noexcept nogil:
    return z.real * z.real + z.imag * z.imag


cdef void _phase_fix_mv(dcomplex[:] v) noexcept nogil:
    cdef Py_ssize_t n = v.shape[0]
    cdef Py_ssize_t k = 0, i
    cdef double best = _abs2(v[0]), cur, mag, inv
    cdef dcomplex ph
    for i in range(1, n):
        cur = _abs2(v[i])
        if cur > best:
            best = cur
            k = i
    mag = sqrt(_abs2(v[k]))
    if mag > 0.0:
        inv = 1.0 / mag
        ph = v[k].conjugate() * inv
        for i in range(n):
            v[i] = v[i] * ph
        v[k] = v[k].real


cdef void _jacobi_core(dcomplex[:, ::1] a, dcomplex[:, ::1] v) noexcept nogil:
    """In-place cyclic Jacobi diagonalization; accumulates rotations in v."""
    cdef Py_ssize_t n = a.shape[0]
    cdef Py_ssize_t p, q, k, sweep
    cdef double fro = 0.0, off, tol, mag, app, aqq, tau, t, cs, sn
    cdef dcomplex apq, u, cu, zp, zq
    for p in range(n):
        for q in range(n):
            fro += _abs2(a[p, q])
    tol = _OFF_TOL * sqrt(fro)
    for sweep in range(_MAX_SWEEPS):
        off = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                off += 2.0 * _abs2(a[p, q])
        if sqrt(off) <= tol:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                mag = sqrt(_abs2(apq))
                if mag == 0.0:
                    continue
                app = a[p, p].real
                aqq = a[q, q].real
                if fabs(app) + mag == fabs(app) and fabs(aqq) + mag == fabs(aqq):
                    a[p, q] = 0.0
                    a[q, p] = 0.0
                    continue
                # unitary 2x2 rotation U = diag(u, 1) @ [[cs, sn], [-sn, cs]]
                u = apq * (1.0 / mag)
                tau = (aqq - app) * (0.5 / mag)
                if tau >= 0.0:
                    t = 1.0 / (tau + sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + sqrt(1.0 + tau * tau))
                cs = 1.0 / sqrt(1.0 + t * t)
                sn = t * cs
                cu = u.conjugate()
                for k in range(n):  # A <- A @ U
                    zp = a[k, p]
                    zq = a[k, q]
                    a[k, p] = cs * (u * zp) - sn * zq
                    a[k, q] = sn * (u * zp) + cs * zq
                for k in range(n):  # A <- U^H @ A
                    zp = a[p, k]
                    zq = a[q, k]
                    a[p, k] = cs * (cu * zp) - sn * zq
                    a[q, k] = sn * (cu * zp) + cs * zq
                a[p, q] = 0.0
                a[q, p] = 0.0
                a[p, p] = a[p, p].real
                a[q, q] = a[q, q].real
                for k in range(n):  # V <- V @ U
                    zp = v[k, p]
                    zq = v[k, q]
                    v[k, p] = cs * (u * zp) - sn * zq
                    v[k, q] = sn * (u * zp) + cs * zq


def jacobi_eig(a_in):
    """Eigendecomposition of a Hermitian matrix by cyclic Jacobi rotations.

    Returns ``(w, v)`` with eigenvalues ascending and phase-fixed unit-norm
    eigenvector columns, matching the pure-Python twin.
    """
    cdef cnp.ndarray a = np.array(a_in, dtype=np.complex128, order="C")
    cdef Py_ssize_t n = a.shape[0]
    cdef cnp.ndarray v = np.eye(n, dtype=np.complex128)
    cdef dcomplex[:, ::1] amv = a
    cdef dcomplex[:, ::1] vmv = v
    _jacobi_core(amv, vmv)

    cdef cnp.ndarray w = np.empty(n, dtype=np.float64)
    cdef double[::1] wmv = w
    cdef Py_ssize_t[::1] perm = np.empty(n, dtype=np.intp)
    cdef Py_ssize_t i, j, pos
    cdef double key
    for i in range(n):
        wmv[i] = amv[i, i].real
        perm[i] = i
    for i in range(1, n):  # stable insertion sort, ascending
        key = wmv[i]
        pos = perm[i]
        j = i - 1
        while j >= 0 and wmv[j] > key:
            wmv[j + 1] = wmv[j]
            perm[j + 1] = perm[j]
            j -= 1
        wmv[j + 1] = key
        perm[j + 1] = pos

    cdef cnp.ndarray vs = np.empty((n, n), dtype=np.complex128)
    cdef dcomplex[:, ::1] vsmv = vs
    for j in range(n):
        for i in range(n):
            vsmv[i, j] = vmv[i, perm[j]]
        _phase_fix_mv(vsmv[:, j])
    return w, vs


cdef int _chol_factor(dcomplex[:, ::1] b, dcomplex[:, ::1] low) noexcept nogil:
    """Lower Cholesky factor of Hermitian PD b; returns -1 on a bad pivot."""
    cdef Py_ssize_t n = b.shape[0]
    cdef Py_ssize_t i, j, k
    cdef double s, d, inv_d
    cdef dcomplex z
    for i in range(n):
        for j in range(n):
            low[i, j] = 0.0
    for j in range(n):
        s = b[j, j].real
        for k in range(j):
            s -= _abs2(low[j, k])
        if not (s > 0.0) or s != s:
            return -1
        d = sqrt(s)
        low[j, j] = d
        inv_d = 1.0 / d
        for i in range(j + 1, n):
            z = b[i, j]
            for k in range(j):
                z -= low[i, k] * low[j, k].conjugate()
            low[i, j] = z * inv_d
    return 0


cdef void _chol_substitute(dcomplex[:, ::1] low, dcomplex[::1] rhs,
                           dcomplex[::1] y, dcomplex[::1] x) noexcept nogil:
    cdef Py_ssize_t n = low.shape[0]
    cdef Py_ssize_t i, k
    cdef dcomplex z
    for i in range(n):
        z = rhs[i]
        for k in range(i):
            z -= low[i, k] * y[k]
        y[i] = z * (1.0 / low[i, i].real)
    for i in range(n - 1, -1, -1):
        z = y[i]
        for k in range(i + 1, n):
            z -= low[k, i].conjugate() * x[k]
        x[i] = z * (1.0 / low[i, i].real)


cdef void _solve_refined(dcomplex[:, ::1] b, dcomplex[:, ::1] low, dcomplex[::1] rhs,
                         dcomplex[::1] x, dcomplex[::1] y, dcomplex[::1] r) noexcept nogil:
    """Substitution plus one iterative-refinement pass (factor precomputed)."""
    cdef Py_ssize_t n = b.shape[0]
    cdef Py_ssize_t i, k
    cdef dcomplex z
    _chol_substitute(low, rhs, y, x)
    for i in range(n):
        z = rhs[i]
        for k in range(n):
            z -= b[i, k] * x[k]
        r[i] = z
    _chol_substitute(low, r, y, r)
    for i in range(n):
        x[i] = x[i] + r[i]


def chol_solve(b_in, rhs_in):
    """Solve ``b @ x = rhs`` for Hermitian positive-definite ``b``.

    Raises ``ArithmeticError`` when a Cholesky pivot is not strictly
    positive.
    """
    cdef cnp.ndarray b = np.ascontiguousarray(b_in, dtype=np.complex128)
    cdef cnp.ndarray rhs = np.ascontiguousarray(rhs_in, dtype=np.complex128)
    cdef Py_ssize_t n = b.shape[0]
    cdef cnp.ndarray x = np.empty(n, dtype=np.complex128)
    cdef cnp.ndarray low = np.empty((n, n), dtype=np.complex128)
    cdef cnp.ndarray y = np.empty(n, dtype=np.complex128)
    cdef cnp.ndarray r = np.empty(n, dtype=np.complex128)
    cdef dcomplex[:, ::1] bmv = b
    cdef dcomplex[:, ::1] lmv = low
    if _chol_factor(bmv, lmv) != 0:
        raise ArithmeticError("matrix is not positive definite")
    _solve_refined(bmv, lmv, rhs, x, y, r)
    return x


cdef int _rank1_core(dcomplex[::1] h, dcomplex[:, ::1] b, dcomplex[::1] w,
                     dcomplex[:, ::1] low, dcomplex[::1] y, dcomplex[::1] r) noexcept nogil:
    cdef Py_ssize_t n = h.shape[0]
    cdef Py_ssize_t i
    cdef double nrm = 0.0, inv
    if _chol_factor(b, low) != 0:
        return -1
    _solve_refined(b, low, h, w, y, r)
    for i in range(n):
        nrm += _abs2(w[i])
    if nrm == 0.0:
        # zero h: every unit vector ties; pick the first basis vector
        w[0] = 1.0
        for i in range(1, n):
            w[i] = 0.0
        return 0
    inv = 1.0 / sqrt(nrm)
    for i in range(n):
        w[i] = w[i] * inv
    _phase_fix_mv(w)
    return 0


def rank1_max_direction(h_in, b_in):
    """Unit vector maximizing |h^H w|^2 / (w^H b w): normalized b^{-1} h."""
    cdef cnp.ndarray h = np.ascontiguousarray(h_in, dtype=np.complex128)
    cdef cnp.ndarray b = np.ascontiguousarray(b_in, dtype=np.complex128)
    cdef Py_ssize_t n = h.shape[0]
    cdef cnp.ndarray w = np.empty(n, dtype=np.complex128)
    cdef cnp.ndarray low = np.empty((n, n), dtype=np.complex128)
    cdef cnp.ndarray y = np.empty(n, dtype=np.complex128)
    cdef cnp.ndarray r = np.empty(n, dtype=np.complex128)
    cdef int rc = _rank1_core(h, b, w, low, y, r)
    if rc == -1:
        raise ArithmeticError("matrix is not positive definite")
    return w


def gram(g_in):
    """Gram matrix g^H g of a (rows x cols) complex matrix."""
    cdef cnp.ndarray g = np.ascontiguousarray(g_in, dtype=np.complex128)
    cdef Py_ssize_t rows = g.shape[0], cols = g.shape[1]
    cdef cnp.ndarray out = np.zeros((cols, cols), dtype=np.complex128)
    cdef dcomplex[:, ::1] gmv = g
    cdef dcomplex[:, ::1] omv = out
    cdef Py_ssize_t r, a, c
    for r in range(rows):
        for a in range(cols):
            for c in range(cols):
                omv[a, c] = omv[a, c] + gmv[r, a].conjugate() * gmv[r, c]
    return out


cdef void _min_eigvec(dcomplex[:, ::1] gm_work, dcomplex[:, ::1] v, dcomplex[::1] w) noexcept nogil:
    """Smallest-eigenvalue eigenvector of a Hermitian matrix (destroys input)."""
    cdef Py_ssize_t n = gm_work.shape[0]
    cdef Py_ssize_t i, j, jmin = 0
    cdef double best, cur
    for i in range(n):
        for j in range(n):
            v[i, j] = 1.0 if i == j else 0.0
    _jacobi_core(gm_work, v)
    best = gm_work[0, 0].real
    for j in range(1, n):
        cur = gm_work[j, j].real
        if cur < best:
            best = cur
            jmin = j
    for i in range(n):
        w[i] = v[i, jmin]
    _phase_fix_mv(w)


def min_norm_from_gram(gm_in):
    """Unit vector minimizing w^H gm w: smallest-eigenvalue eigenvector."""
    cdef cnp.ndarray gm = np.array(gm_in, dtype=np.complex128, order="C")
    cdef Py_ssize_t n = gm.shape[0]
    cdef cnp.ndarray v = np.empty((n, n), dtype=np.complex128)
    cdef cnp.ndarray w = np.empty(n, dtype=np.complex128)
    _min_eigvec(gm, v, w)
    return w


cdef int _design_core(const unsigned char[::1] bits, Py_ssize_t i,
                      dcomplex[:, ::1] row, double n0, dcomplex[::1] w,
                      dcomplex[:, ::1] mat, dcomplex[:, ::1] low_or_v,
                      dcomplex[::1] y, dcomplex[::1] r) noexcept nogil:
    cdef Py_ssize_t n_c = row.shape[0], n_t = row.shape[1]
    cdef Py_ssize_t j, a, c
    cdef bint any_set = False
    for j in range(n_c):
        if bits[j]:
            any_set = True
            break
    if bits[i]:
        for a in range(n_t):
            for c in range(n_t):
                mat[a, c] = n0 if a == c else 0.0
        for j in range(n_c):
            if j != i and bits[j]:
                for a in range(n_t):
                    for c in range(n_t):
                        mat[a, c] = mat[a, c] + row[j, a] * row[j, c].conjugate()
        return _rank1_core(row[i], mat, w, low_or_v, y, r)
    if any_set:
        for a in range(n_t):
            for c in range(n_t):
                mat[a, c] = 0.0
        for j in range(n_c):
            if bits[j]:
                for a in range(n_t):
                    for c in range(n_t):
                        mat[a, c] = mat[a, c] + row[j, a] * row[j, c].conjugate()
        _min_eigvec(mat, low_or_v, w)
        return 0
    for a in range(n_t):
        w[a] = 0.0
    return 0


def design_beamformer(bits_in, i, row_in, double n0):
    """Three-case beamformer for cell ``i`` given its binary weights."""
    cdef cnp.ndarray bits = np.ascontiguousarray(bits_in, dtype=np.uint8)
    cdef cnp.ndarray row = np.ascontiguousarray(row_in, dtype=np.complex128)
    cdef Py_ssize_t n_t = row.shape[1]
    cdef cnp.ndarray w = np.empty(n_t, dtype=np.complex128)
    cdef cnp.ndarray mat = np.empty((n_t, n_t), dtype=np.complex128)
    cdef cnp.ndarray scratch = np.empty((n_t, n_t), dtype=np.complex128)
    cdef cnp.ndarray y = np.empty(n_t, dtype=np.complex128)
    cdef cnp.ndarray r = np.empty(n_t, dtype=np.complex128)
    cdef int rc = _design_core(bits, <Py_ssize_t>i, row, n0, w, mat, scratch, y, r)
    if rc == -1:
        raise ArithmeticError("matrix is not positive definite")
    return w


def candidate_gains(i, row_in, double n0):
    """Per-action squared channel gains |h_ij^H w^[c]|^2 for cell ``i``.

    Returns ``(gains, beams)`` with one row per action, using only cell
    ``i``'s row of the channel tensor.
    """
    cdef cnp.ndarray row = np.ascontiguousarray(row_in, dtype=np.complex128)
    cdef Py_ssize_t n_c = row.shape[0], n_t = row.shape[1]
    cdef Py_ssize_t n_actions = (<Py_ssize_t>1) << n_c
    cdef cnp.ndarray gains = np.zeros((n_actions, n_c), dtype=np.float64)
    cdef cnp.ndarray beams = np.zeros((n_actions, n_t), dtype=np.complex128)
    cdef cnp.ndarray bits = np.zeros(n_c, dtype=np.uint8)
    cdef cnp.ndarray mat = np.empty((n_t, n_t), dtype=np.complex128)
    cdef cnp.ndarray scratch = np.empty((n_t, n_t), dtype=np.complex128)
    cdef cnp.ndarray y = np.empty(n_t, dtype=np.complex128)
    cdef cnp.ndarray r = np.empty(n_t, dtype=np.complex128)
    cdef double[:, ::1] gmv = gains
    cdef dcomplex[:, ::1] bmv = beams
    cdef dcomplex[:, ::1] rmv = row
    cdef unsigned char[::1] bitsmv = bits
    cdef dcomplex[:, ::1] matmv = mat
    cdef dcomplex[:, ::1] scrmv = scratch
    cdef dcomplex[::1] ymv = y
    cdef dcomplex[::1] resmv = r
    cdef Py_ssize_t c, j, a, ii = <Py_ssize_t>i
    cdef dcomplex amp
    cdef int rc
    with nogil:
        for c in range(n_actions):
            for j in range(n_c):
                bitsmv[j] = <unsigned char>((c >> j) & 1)
            rc = _design_core(bitsmv, ii, rmv, n0, bmv[c], matmv, scrmv, ymv, resmv)
            if rc != 0:
                break
            for j in range(n_c):
                amp = 0.0
                for a in range(n_t):
                    amp = amp + rmv[j, a].conjugate() * bmv[c, a]
                gmv[c, j] = _abs2(amp)
    if rc == -1:
        raise ArithmeticError("matrix is not positive definite")
    return gains, beams
