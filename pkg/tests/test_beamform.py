"""Weight encoding, beamformer cases, the chi figure, SINR and sum-rate."""

import numpy as np
import pytest

from mcbeam import beamform as bf
from mcbeam.cxla import ContractError

from conftest import random_unit_vectors


def random_row(rng, n_c, n_t):
    return rng.standard_normal((n_c, n_t)) + 1j * rng.standard_normal((n_c, n_t))


class TestActionCoding:
    def test_examples(self):
        np.testing.assert_array_equal(bf.decode_action(1, 3), [0, 0, 0])
        for n in (2, 3, 6):
            np.testing.assert_array_equal(bf.decode_action(1 << n, n), np.ones(n))
        np.testing.assert_array_equal(bf.decode_action(4, 3), [1, 1, 0])

    def test_bijection(self):
        for n in range(1, 9):
            seen = set()
            for a in range(1, (1 << n) + 1):
                bits = bf.decode_action(a, n)
                assert bf.encode_action(bits) == a
                seen.add(tuple(bits))
            assert len(seen) == 1 << n

    def test_range_errors(self):
        with pytest.raises(ContractError):
            bf.decode_action(0, 3)
        with pytest.raises(ContractError):
            bf.decode_action(9, 3)


class TestDesignBeamformer:
    def test_own_weight_only_is_matched_filter(self, rng):
        row = random_row(rng, 3, 2)
        w = bf.design_beamformer([1, 0, 0], 0, row, 1.0)
        expected = row[0] / np.linalg.norm(row[0])
        k = np.argmax(np.abs(expected))
        expected *= np.conj(expected[k]) / np.abs(expected[k])
        np.testing.assert_allclose(w, expected, atol=1e-12)

    def test_zero_weights_give_zero_beam(self, rng):
        row = random_row(rng, 3, 2)
        w = bf.design_beamformer([0, 0, 0], 1, row, 1.0)
        assert np.all(w == 0.0)

    def test_single_interferer_perfect_null(self, rng):
        for n_t in (2, 3, 4):
            row = random_row(rng, 3, n_t)
            w = bf.design_beamformer([0, 1, 0], 0, row, 1.0)
            assert abs(np.vdot(row[1], w)) <= 1e-10 * np.linalg.norm(row[1])
            np.testing.assert_allclose(np.linalg.norm(w), 1.0, atol=1e-12)

    def test_chi_beats_random_search(self):
        rng = np.random.default_rng(8675309)
        for _ in range(40):
            n_c = int(rng.integers(2, 6))
            n_t = int(rng.integers(2, 5))
            row = random_row(rng, n_c, n_t)
            i = int(rng.integers(n_c))
            bits = rng.integers(0, 2, size=n_c).astype(np.uint8)
            bits[i] = 1
            n0 = float(10 ** rng.uniform(-2, 0))
            w = bf.design_beamformer(bits, i, row, n0)
            ours = bf.chi(bits, i, row, w, n0)
            rand = random_unit_vectors(rng, 10_000, n_t)
            best = max(bf.chi(bits, i, row, wr, n0) for wr in rand)
            assert ours >= best * (1.0 - 1e-9)

    def test_norm_invariant(self, rng):
        for _ in range(100):
            n_c, n_t = 4, 3
            row = random_row(rng, n_c, n_t)
            a = int(rng.integers(1, (1 << n_c) + 1))
            bits = bf.decode_action(a, n_c)
            w = bf.design_beamformer(bits, 2, row, 0.1)
            nrm2 = float(np.linalg.norm(w) ** 2)
            assert nrm2 <= 1.0 + 1e-12
            assert nrm2 == 0.0 or abs(nrm2 - 1.0) <= 1e-12

    def test_locality(self, rng):
        # corrupting every other BS's row of the tensor must not change the
        # agent's design: only h[i] is ever read
        h = rng.standard_normal((4, 4, 3)) + 1j * rng.standard_normal((4, 4, 3))
        clean = bf.design_beamformer([1, 0, 1, 1], 2, h[2], 0.5)
        gains_clean, beams_clean = bf.candidate_gains(2, h[2], 0.5)
        h_dirty = h.copy()
        h_dirty[[0, 1, 3]] = 1e300
        assert np.array_equal(
            bf.design_beamformer([1, 0, 1, 1], 2, h_dirty[2], 0.5), clean
        )
        gains_dirty, beams_dirty = bf.candidate_gains(2, h_dirty[2], 0.5)
        assert np.array_equal(gains_clean, gains_dirty)
        assert np.array_equal(beams_clean, beams_dirty)


class TestChi:
    def test_zero_beam_with_own_weight(self, rng):
        row = random_row(rng, 3, 2)
        assert bf.chi([1, 1, 0], 0, row, np.zeros(2, complex), 0.5) == 0.0

    def test_zero_beam_without_own_weight(self, rng):
        row = random_row(rng, 3, 2)
        assert bf.chi([0, 0, 0], 0, row, np.zeros(2, complex), 0.5) == 2.0

    def test_all_ones_is_plain_slnr(self, rng):
        row = random_row(rng, 4, 3)
        w = random_unit_vectors(rng, 1, 3)[0]
        n0 = 0.3
        got = bf.chi(np.ones(4, dtype=np.uint8), 1, row, w, n0)
        powers = np.abs(np.conj(row) @ w) ** 2
        slnr = powers[1] / (powers[0] + powers[2] + powers[3] + n0)
        np.testing.assert_allclose(got, slnr, rtol=1e-12)


class TestSinrAndRates:
    def test_all_zero_beams(self, rng):
        h = rng.standard_normal((3, 3, 2)) + 1j * rng.standard_normal((3, 3, 2))
        beams = np.zeros((3, 2), complex)
        for i in range(3):
            assert bf.sinr(h, beams, 1.0, i) == 0.0
        assert bf.sum_rate(h, beams, 1.0) == 0.0

    def test_single_cell(self, rng):
        h = rng.standard_normal((1, 1, 3)) + 1j * rng.standard_normal((1, 1, 3))
        w = random_unit_vectors(rng, 1, 3)
        got = bf.sinr(h, w, 0.7, 0)
        np.testing.assert_allclose(got, abs(np.vdot(h[0, 0], w[0])) ** 2 / 0.7, rtol=1e-12)

    def test_two_cell_hand_case(self):
        # scalar channels: h_11 = h_21 = h_22 = 1, h_12 = 0, unit beams
        h = np.zeros((2, 2, 1), complex)
        h[0, 0, 0] = 1.0
        h[1, 0, 0] = 1.0
        h[1, 1, 0] = 1.0
        beams = np.ones((2, 1), complex)
        gamma_1 = bf.sinr(h, beams, 1.0, 0)
        assert gamma_1 == 0.5
        gamma_2 = bf.sinr(h, beams, 1.0, 1)
        assert gamma_2 == 1.0
        np.testing.assert_allclose(
            bf.sum_rate(h, beams, 1.0), np.log2(1.5) + 1.0, rtol=1e-15
        )

    def test_unit_sinr_rate(self):
        # orthogonal scalar cells with |h|^2 = N0 give SINR 1 per cell
        h = np.zeros((2, 2, 1), complex)
        h[0, 0, 0] = 1.0
        h[1, 1, 0] = 1.0
        beams = np.ones((2, 1), complex)
        np.testing.assert_allclose(bf.sum_rate(h, beams, 1.0), 2.0, rtol=1e-15)

    def test_all_rates_matches_sinr(self, rng):
        h = rng.standard_normal((4, 4, 3)) + 1j * rng.standard_normal((4, 4, 3))
        beams = random_unit_vectors(rng, 4, 3)
        rates = bf.all_rates(h, beams, 0.2)
        for i in range(4):
            np.testing.assert_allclose(
                rates[i], np.log2(1.0 + bf.sinr(h, beams, 0.2, i)), rtol=1e-12
            )


class TestCandidateGains:
    def test_zero_action_all_zero(self, rng):
        row = random_row(rng, 3, 2)
        gains, beams = bf.candidate_gains(0, row, 1.0)
        assert np.all(gains[0] == 0.0)
        assert np.all(beams[0] == 0.0)

    def test_mrt_action_gain(self, rng):
        row = random_row(rng, 3, 2)
        i = 1
        a = bf.encode_action([0, 1, 0])
        gains, _ = bf.candidate_gains(i, row, 1.0)
        np.testing.assert_allclose(
            gains[a - 1][i], np.linalg.norm(row[i]) ** 2, rtol=1e-12
        )

    def test_cauchy_schwarz_bound(self, rng):
        for _ in range(30):
            n_c = int(rng.integers(2, 6))
            n_t = int(rng.integers(1, 4))
            row = random_row(rng, n_c, n_t)
            i = int(rng.integers(n_c))
            gains, _ = bf.candidate_gains(i, row, 0.5)
            assert np.all(gains >= 0.0)
            bound = np.linalg.norm(row, axis=1) ** 2
            assert np.all(gains <= bound[None, :] * (1.0 + 1e-12))

    def test_rows_match_design(self, rng):
        row = random_row(rng, 3, 2)
        gains, beams = bf.candidate_gains(2, row, 0.4)
        for a in range(1, 9):
            w = bf.design_beamformer(bf.decode_action(a, 3), 2, row, 0.4)
            assert np.array_equal(beams[a - 1], w)
