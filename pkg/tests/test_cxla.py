"""Contracts and oracles for the dense complex linear algebra module."""

import numpy as np
import pytest

from mcbeam import cxla
from mcbeam.cxla import ContractError, NumericalError

from conftest import (
    align_phase,
    random_cvector,
    random_hermitian,
    random_hpd,
    random_unit_vectors,
)


def char_poly_roots_by_bisection(m, refine=60):
    """Independent eigenvalue oracle: bisect sign changes of det(m - x*I).

    The determinant of a Hermitian matrix shifted by a real scalar is real,
    and for distinct eigenvalues it changes sign at each one. Brackets come
    from a fine grid over the Gershgorin interval.
    """

    def det_shift(x):
        return np.linalg.det(m - x * np.eye(m.shape[0])).real

    radii = np.sum(np.abs(m), axis=1) - np.abs(np.diag(m))
    lo = float(np.min(np.diag(m).real - radii)) - 1e-6
    hi = float(np.max(np.diag(m).real + radii)) + 1e-6
    grid = np.linspace(lo, hi, 4001)
    vals = np.array([det_shift(x) for x in grid])
    roots = []
    for a, b, fa, fb in zip(grid[:-1], grid[1:], vals[:-1], vals[1:]):
        if fa == 0.0:
            roots.append(a)
            continue
        if fa * fb < 0.0:
            x0, x1, f0 = a, b, fa
            for _ in range(refine):
                mid = 0.5 * (x0 + x1)
                fm = det_shift(mid)
                if f0 * fm <= 0.0:
                    x1 = mid
                else:
                    x0, f0 = mid, fm
            roots.append(0.5 * (x0 + x1))
    return np.array(sorted(roots))


class TestHermitianEig:
    def test_identity(self):
        res = cxla.hermitian_eig(np.eye(3))
        np.testing.assert_allclose(res.eigenvalues, [1.0, 1.0, 1.0], rtol=0, atol=1e-14)
        v = res.eigenvectors
        np.testing.assert_allclose(v.conj().T @ v, np.eye(3), atol=1e-12)

    def test_diagonal_sorted_with_axis_vectors(self):
        res = cxla.hermitian_eig(np.diag([3.0, 1.0, 2.0]))
        np.testing.assert_allclose(res.eigenvalues, [1.0, 2.0, 3.0], atol=0)
        # eigenvector k must be the standard axis of the matching diagonal slot
        expected = np.eye(3)[:, [1, 2, 0]]
        np.testing.assert_allclose(res.eigenvectors, expected, atol=0)

    def test_random_4x4_matches_char_poly_bisection(self):
        rng = np.random.default_rng(411)
        m = random_hermitian(rng, 4)
        res = cxla.hermitian_eig(m)
        roots = char_poly_roots_by_bisection(m)
        assert roots.shape == (4,)
        np.testing.assert_allclose(res.eigenvalues, roots, rtol=1e-9, atol=1e-9)

    def test_reconstruction_and_orthonormality_sweep(self):
        rng = np.random.default_rng(42)
        for trial in range(1000):
            n = int(rng.integers(2, 9))
            m = random_hermitian(rng, n, scale=float(10 ** rng.uniform(-2, 2)))
            res = cxla.hermitian_eig(m)
            w, v = res.eigenvalues, res.eigenvectors
            fro = np.linalg.norm(m)
            assert np.linalg.norm(v @ np.diag(w) @ v.conj().T - m) <= 1e-10 * fro
            assert np.all(np.diff(w) >= 0.0)
            np.testing.assert_allclose(np.linalg.norm(v, axis=0), 1.0, atol=1e-12)
            np.testing.assert_allclose(
                v.conj().T @ v, np.eye(n), atol=1e-11 * max(1.0, fro)
            )
            # residual per pair
            assert np.linalg.norm(m @ v - v * w[None, :]) <= 1e-10 * max(1.0, fro)

    def test_contract_errors(self):
        with pytest.raises(ContractError):
            cxla.hermitian_eig(np.ones((2, 3)))
        with pytest.raises(ContractError):
            cxla.hermitian_eig(np.array([[1.0, 2.0], [3.0, 4.0]]))
        with pytest.raises(ContractError):
            cxla.hermitian_eig(np.eye(17))
        bad = np.eye(2, dtype=complex)
        bad[0, 0] = np.nan
        with pytest.raises(ContractError):
            cxla.hermitian_eig(bad)


class TestSolveHermitianPd:
    def test_identity_returns_rhs(self, rng):
        v = random_cvector(rng, 5)
        np.testing.assert_allclose(cxla.solve_hermitian_pd(np.eye(5), v), v, atol=1e-14)

    def test_scaled_identity_halves(self, rng):
        v = random_cvector(rng, 4)
        np.testing.assert_allclose(
            cxla.solve_hermitian_pd(2.0 * np.eye(4), v), v / 2.0, atol=1e-14
        )

    def test_residual_and_eig_inverse_oracle(self):
        rng = np.random.default_rng(5150)
        for _ in range(200):
            n = int(rng.integers(2, 9))
            b = random_hpd(rng, n)
            v = random_cvector(rng, n)
            x = cxla.solve_hermitian_pd(b, v)
            assert np.linalg.norm(b @ x - v) <= 1e-10 * np.linalg.norm(v)
            res = cxla.hermitian_eig(b)
            x_oracle = res.eigenvectors @ (
                (res.eigenvectors.conj().T @ v) / res.eigenvalues
            )
            np.testing.assert_allclose(x, x_oracle, rtol=1e-8, atol=1e-12)

    def test_indefinite_reports_smallest_eigenvalue(self):
        b = np.diag([1.0, -2.0, 3.0])
        with pytest.raises(NumericalError, match="smallest eigenvalue"):
            cxla.solve_hermitian_pd(b, np.ones(3))

    def test_dimension_mismatch(self):
        with pytest.raises(ContractError):
            cxla.solve_hermitian_pd(np.eye(3), np.ones(4))


class TestMaxGenRayleighRank1:
    def test_identity_gives_matched_filter(self, rng):
        h = random_cvector(rng, 4)
        w = cxla.max_gen_rayleigh_rank1(h, np.eye(4))
        expected = h / np.linalg.norm(h)
        np.testing.assert_allclose(align_phase(w, expected), expected, atol=1e-12)

    def test_invariant_to_positive_scaling(self, rng):
        h = random_cvector(rng, 3)
        w1 = cxla.max_gen_rayleigh_rank1(h, np.eye(3))
        w2 = cxla.max_gen_rayleigh_rank1(h, 7.3 * np.eye(3))
        np.testing.assert_allclose(w1, w2, atol=1e-12)

    def test_beats_random_search(self):
        rng = np.random.default_rng(77)
        for _ in range(50):
            h = random_cvector(rng, 3)
            b = random_hpd(rng, 3)
            w = cxla.max_gen_rayleigh_rank1(h, b)

            def quotient(ws):
                num = np.abs(ws @ np.conj(h)) ** 2
                den = np.einsum("ij,jk,ik->i", np.conj(ws), b, ws).real
                return num / den

            best_random = float(np.max(quotient(random_unit_vectors(rng, 10_000, 3))))
            ours = float(quotient(w[None, :])[0])
            assert ours >= best_random * (1.0 - 1e-9)

    def test_zero_h_rejected(self):
        with pytest.raises(ContractError):
            cxla.max_gen_rayleigh_rank1(np.zeros(3), np.eye(3))


class TestMinNormDirection:
    def test_single_row_finds_null_space(self, rng):
        g = random_cvector(rng, 3)[None, :]
        w = cxla.min_norm_direction(g)
        assert abs(np.linalg.norm(g @ w)) <= 1e-10 * np.linalg.norm(g)
        np.testing.assert_allclose(np.linalg.norm(w), 1.0, atol=1e-12)

    def test_full_rank_matches_smallest_gram_eigenvalue(self):
        rng = np.random.default_rng(31337)
        for _ in range(100):
            rows = int(rng.integers(3, 7))
            cols = int(rng.integers(2, min(rows, 4) + 1))
            g = rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))
            w = cxla.min_norm_direction(g)
            objective = float(np.linalg.norm(g @ w) ** 2)
            gram_eigs = cxla.hermitian_eig(g.conj().T @ g).eigenvalues
            assert abs(objective - gram_eigs[0]) <= 1e-9 * max(1.0, gram_eigs[-1])
            rand = random_unit_vectors(rng, 10_000, cols)
            best_random = float(np.min(np.linalg.norm(rand @ g.T, axis=1) ** 2))
            assert objective <= best_random * (1.0 + 1e-9)

    def test_zero_matrix_returns_first_basis_vector(self):
        w = cxla.min_norm_direction(np.zeros((4, 3)))
        np.testing.assert_allclose(w, np.eye(3)[:, 0], atol=0)

    def test_zero_rows_permitted(self, rng):
        g = np.vstack([np.zeros((2, 3)), random_cvector(rng, 3)[None, :]])
        w = cxla.min_norm_direction(g)
        assert abs(np.linalg.norm(g @ w)) <= 1e-10 * np.linalg.norm(g)


class TestDeterminismAndPhase:
    def test_bitwise_repeatable(self, rng):
        h = random_cvector(rng, 4)
        b = random_hpd(rng, 4)
        g = rng.standard_normal((5, 4)) + 1j * rng.standard_normal((5, 4))
        w1 = cxla.max_gen_rayleigh_rank1(h, b)
        w2 = cxla.max_gen_rayleigh_rank1(h, b)
        assert np.array_equal(w1, w2)
        d1 = cxla.min_norm_direction(g)
        d2 = cxla.min_norm_direction(g)
        assert np.array_equal(d1, d2)
        e1 = cxla.hermitian_eig(b)
        e2 = cxla.hermitian_eig(b)
        assert np.array_equal(e1.eigenvalues, e2.eigenvalues)
        assert np.array_equal(e1.eigenvectors, e2.eigenvectors)

    def test_phase_convention(self):
        rng = np.random.default_rng(9)
        for _ in range(50):
            h = random_cvector(rng, 4)
            b = random_hpd(rng, 4)
            for vec in (
                cxla.max_gen_rayleigh_rank1(h, b),
                cxla.min_norm_direction(
                    rng.standard_normal((5, 4)) + 1j * rng.standard_normal((5, 4))
                ),
            ):
                k = int(np.argmax(np.abs(vec)))
                assert vec[k].imag == 0.0
                assert vec[k].real >= 0.0
