"""Dense complex linear algebra for the closed-form beamformer constructions.

Small Hermitian problems only (dimension <= 16). The numerical work is done
by the active kernel backend (see ``mcbeam.backend``); this module owns the
contracts: shape/finiteness/Hermiticity checks, error reporting, and the
deterministic phase convention (largest-magnitude entry real nonnegative).
"""

from dataclasses import dataclass

import numpy as np

from .backend import kernels

MAX_DIM = 16
HERMITIAN_RTOL = 1e-12


class ContractError(ValueError):
    """An input violates a documented precondition."""


class NumericalError(ArithmeticError):
    """A numerically well-posed-looking input turned out not to be."""


@dataclass(frozen=True)
class HermitianEigResult:
    """Eigenvalues (ascending) and unit-norm eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def _as_cmatrix(m, name="matrix"):
    m = np.ascontiguousarray(np.asarray(m, dtype=np.complex128))
    if m.ndim != 2:
        raise ContractError(f"{name} must be 2-D, got shape {m.shape}")
    if not np.all(np.isfinite(m.real)) or not np.all(np.isfinite(m.imag)):
        raise ContractError(f"{name} has non-finite entries")
    return m


def _as_cvector(v, name="vector"):
    v = np.ascontiguousarray(np.asarray(v, dtype=np.complex128))
    if v.ndim != 1 or v.size == 0:
        raise ContractError(f"{name} must be a nonempty 1-D vector")
    if not np.all(np.isfinite(v.real)) or not np.all(np.isfinite(v.imag)):
        raise ContractError(f"{name} has non-finite entries")
    return v


def _check_hermitian(m, name="matrix"):
    if m.shape[0] != m.shape[1]:
        raise ContractError(f"{name} must be square, got shape {m.shape}")
    if m.shape[0] > MAX_DIM:
        raise ContractError(f"{name} dimension {m.shape[0]} exceeds {MAX_DIM}")
    fro = np.linalg.norm(m)
    if np.linalg.norm(m - m.conj().T) > HERMITIAN_RTOL * fro:
        raise ContractError(f"{name} is not Hermitian within rtol {HERMITIAN_RTOL}")


def hermitian_eig(m):
    """Full eigendecomposition of a Hermitian matrix.

    Cyclic Jacobi rotations; eigenvalues returned ascending, eigenvectors as
    phase-fixed unit columns satisfying ``m @ v_k = w_k * v_k``.
    """
    m = _as_cmatrix(m)
    _check_hermitian(m)
    w, v = kernels.jacobi_eig(m)
    return HermitianEigResult(eigenvalues=w, eigenvectors=v)


def solve_hermitian_pd(b, v):
    """Solve ``b @ x = v`` for Hermitian positive-definite ``b``."""
    b = _as_cmatrix(b)
    _check_hermitian(b)
    v = _as_cvector(v)
    if v.shape[0] != b.shape[0]:
        raise ContractError(f"dimension mismatch: {b.shape} vs {v.shape}")
    try:
        return kernels.chol_solve(b, v)
    except ArithmeticError:
        smallest = kernels.jacobi_eig(b)[0][0]
        raise NumericalError(
            f"matrix is not positive definite (smallest eigenvalue {smallest:.6e})"
        ) from None


def max_gen_rayleigh_rank1(h, b):
    """Unit vector maximizing the rank-one generalized Rayleigh quotient.

    The maximizer of |h^H w|^2 / (w^H b w) over unit vectors is b^{-1} h up
    to normalization and a global phase; returned phase-fixed.
    """
    h = _as_cvector(h)
    b = _as_cmatrix(b)
    _check_hermitian(b)
    if h.shape[0] != b.shape[0]:
        raise ContractError(f"dimension mismatch: {b.shape} vs {h.shape}")
    if np.linalg.norm(h) == 0.0:
        raise ContractError("h must be nonzero")
    try:
        return kernels.rank1_max_direction(h, b)
    except ArithmeticError:
        smallest = kernels.jacobi_eig(b)[0][0]
        raise NumericalError(
            f"matrix is not positive definite (smallest eigenvalue {smallest:.6e})"
        ) from None


def min_norm_direction(g):
    """Unit vector minimizing ||g @ w||^2.

    Computed as the smallest-eigenvalue eigenvector of the Gram matrix
    ``g^H g``. Ties (e.g. a multi-dimensional null space) resolve to the
    lowest eigenvalue index after the stable ascending sort, which makes the
    result deterministic; an all-zero ``g`` yields the first basis vector.
    """
    g = _as_cmatrix(g)
    if g.shape[1] == 0:
        raise ContractError("g must have at least one column")
    if g.shape[1] > MAX_DIM:
        raise ContractError(f"g has {g.shape[1]} columns, exceeds {MAX_DIM}")
    return kernels.min_norm_from_gram(kernels.gram(g))
