"""Pure-Python twin of the compiled beamforming kernels.

Implements the same algorithms as ``mcbeam._kernels`` (cyclic Jacobi
eigendecomposition for complex Hermitian matrices, Cholesky solve with one
refinement pass, and the three-case beamformer construction) using numpy.
Selected automatically when the compiled extension is unavailable, or
explicitly via the ``MCBEAM_PURE_PY`` environment variable.

All functions assume validated inputs (C-contiguous complex128 arrays of the
right shape); argument checking lives in the public ``cxla``/``beamform``
modules.
"""

import numpy as np

BACKEND = "python"

MAX_JACOBI_SWEEPS = 100
OFFDIAG_TOL = 1e-14


def _phase_fix(vec):
    """Rotate ``vec`` in place so its largest-magnitude entry is real >= 0."""
    k = int(np.argmax(vec.real**2 + vec.imag**2))
    mag = np.sqrt(vec[k].real ** 2 + vec[k].imag ** 2)
    if mag > 0.0:
        vec *= np.conj(vec[k]) * (1.0 / mag)
        vec[k] = vec[k].real
    return vec


def jacobi_eig(a):
    """Eigendecomposition of a Hermitian matrix by cyclic Jacobi rotations.

    Returns ``(w, v)`` with eigenvalues ``w`` ascending and unit-norm
    eigenvector columns ``v``, each phase-fixed. Sweeps stop once the
    off-diagonal Frobenius norm drops below ``OFFDIAG_TOL * ||a||_F``.
    """
    n = a.shape[0]
    a = np.array(a, dtype=np.complex128, order="C")
    v = np.eye(n, dtype=np.complex128)
    tol = OFFDIAG_TOL * np.linalg.norm(a)
    for _ in range(MAX_JACOBI_SWEEPS):
        off = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                off += 2.0 * (a[p, q].real ** 2 + a[p, q].imag ** 2)
        if np.sqrt(off) <= tol:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                mag = np.sqrt(apq.real ** 2 + apq.imag ** 2)
                if mag == 0.0:
                    continue
                app = a[p, p].real
                aqq = a[q, q].real
                if abs(app) + mag == abs(app) and abs(aqq) + mag == abs(aqq):
                    # negligible against the diagonal: flush to zero
                    a[p, q] = 0.0
                    a[q, p] = 0.0
                    continue
                # unitary 2x2 rotation U = diag(u, 1) @ [[cs, sn], [-sn, cs]]
                u = apq * (1.0 / mag)
                tau = (aqq - app) * (0.5 / mag)
                if tau >= 0.0:
                    t = 1.0 / (tau + np.sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + np.sqrt(1.0 + tau * tau))
                cs = 1.0 / np.sqrt(1.0 + t * t)
                sn = t * cs
                cu = np.conj(u)
                # A <- A @ U (columns p, q)
                akp = a[:, p].copy()
                akq = a[:, q].copy()
                a[:, p] = cs * (u * akp) - sn * akq
                a[:, q] = sn * (u * akp) + cs * akq
                # A <- U^H @ A (rows p, q)
                apk = a[p, :].copy()
                aqk = a[q, :].copy()
                a[p, :] = cs * (cu * apk) - sn * aqk
                a[q, :] = sn * (cu * apk) + cs * aqk
                a[p, q] = 0.0
                a[q, p] = 0.0
                a[p, p] = a[p, p].real
                a[q, q] = a[q, q].real
                # V <- V @ U
                vkp = v[:, p].copy()
                vkq = v[:, q].copy()
                v[:, p] = cs * (u * vkp) - sn * vkq
                v[:, q] = sn * (u * vkp) + cs * vkq
    w = np.diag(a).real.copy()
    order = np.argsort(w, kind="stable")
    w = w[order]
    v = np.ascontiguousarray(v[:, order])
    for j in range(n):
        _phase_fix(v[:, j])
    return w, v


def chol_solve(b, rhs):
    """Solve ``b @ x = rhs`` for Hermitian positive-definite ``b``.

    Lower Cholesky factorization followed by forward/back substitution and
    one iterative-refinement pass. Raises ``ArithmeticError`` when a pivot
    is not strictly positive.
    """
    n = b.shape[0]
    low = np.zeros((n, n), dtype=np.complex128)
    for j in range(n):
        s = b[j, j].real - float(np.sum(np.abs(low[j, :j]) ** 2))
        if not (s > 0.0) or not np.isfinite(s):
            raise ArithmeticError("matrix is not positive definite")
        d = np.sqrt(s)
        low[j, j] = d
        inv_d = 1.0 / d
        for i in range(j + 1, n):
            z = b[i, j] - np.dot(low[i, :j], np.conj(low[j, :j]))
            low[i, j] = z * inv_d
    x = _chol_substitute(low, rhs)
    resid = rhs - b @ x
    return x + _chol_substitute(low, resid)


def _chol_substitute(low, rhs):
    n = low.shape[0]
    y = np.zeros(n, dtype=np.complex128)
    for i in range(n):
        y[i] = (rhs[i] - np.dot(low[i, :i], y[:i])) * (1.0 / low[i, i].real)
    x = np.zeros(n, dtype=np.complex128)
    for i in range(n - 1, -1, -1):
        x[i] = (y[i] - np.dot(np.conj(low[i + 1:, i]), x[i + 1:])) * (1.0 / low[i, i].real)
    return x


def rank1_max_direction(h, b):
    """Unit vector maximizing |h^H w|^2 / (w^H b w): normalized b^{-1} h.

    A zero ``h`` makes every unit vector optimal; the first basis vector is
    returned as the deterministic tie choice.
    """
    x = chol_solve(b, h)
    nrm = np.linalg.norm(x)
    if nrm == 0.0:
        w = np.zeros(h.shape[0], dtype=np.complex128)
        w[0] = 1.0
        return w
    w = x * (1.0 / nrm)
    return _phase_fix(w)


def gram(g):
    """Gram matrix g^H g of a (rows x cols) complex matrix."""
    return np.ascontiguousarray(np.conj(g.T) @ g)


def min_norm_from_gram(gm):
    """Unit vector minimizing w^H gm w: smallest-eigenvalue eigenvector."""
    _, v = jacobi_eig(gm)
    return np.ascontiguousarray(v[:, 0])


def design_beamformer(bits, i, local_row, n0):
    """Three-case beamformer for cell ``i`` given its binary weights.

    ``bits[i] == 1``: generalized-Rayleigh maximizer against the weighted
    leakage-plus-noise matrix. ``bits[i] == 0`` with any other bit set:
    minimal-leakage direction from the Gram of the selected rows. All bits
    zero: the zero vector.
    """
    n_c, n_t = local_row.shape
    if bits[i]:
        b = np.zeros((n_t, n_t), dtype=np.complex128)
        np.fill_diagonal(b, n0)
        for j in range(n_c):
            if j != i and bits[j]:
                hj = local_row[j]
                b += np.outer(hj, np.conj(hj))
        return rank1_max_direction(local_row[i], b)
    if np.any(bits):
        gm = np.zeros((n_t, n_t), dtype=np.complex128)
        for j in range(n_c):
            if bits[j]:
                hj = local_row[j]
                gm += np.outer(hj, np.conj(hj))
        return min_norm_from_gram(gm)
    return np.zeros(n_t, dtype=np.complex128)


def candidate_gains(i, local_row, n0):
    """Per-action squared channel gains |h_ij^H w^[c]|^2 for cell ``i``.

    Returns ``(gains, beams)`` with one row per action ``c`` (row ``c - 1``
    corresponds to action index ``c``), using only cell ``i``'s row of the
    channel tensor.
    """
    n_c, n_t = local_row.shape
    n_actions = 1 << n_c
    gains = np.zeros((n_actions, n_c))
    beams = np.zeros((n_actions, n_t), dtype=np.complex128)
    bits = np.zeros(n_c, dtype=np.uint8)
    row_conj = np.conj(local_row)
    for c in range(n_actions):
        for j in range(n_c):
            bits[j] = (c >> j) & 1
        w = design_beamformer(bits, i, local_row, n0)
        beams[c] = w
        amp = row_conj @ w
        gains[c] = amp.real ** 2 + amp.imag ** 2
    return gains, beams
