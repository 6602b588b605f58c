"""Reference policies, the greedy best response, and the joint oracle."""

import itertools

import numpy as np
import pytest
import scipy.stats

from mcbeam import baselines as bl
from mcbeam import beamform as bf
from mcbeam import cxla
from mcbeam import netmodel as nm
from mcbeam import protocol as pr


class DummyCtx:
    def __init__(self, n_cells):
        self.n_cells = n_cells
        self.state = None
        self.n0 = 1.0


def weakly_coupled_two_cell():
    """Nearly orthogonal direct links with small but costly cross-leakage.

    Derived by full 16-case enumeration below: keeping every weight set is
    the strict joint optimum, so greedy stays at all-ones too.
    """
    h = np.zeros((2, 2, 2), complex)
    h[0, 0] = [1.0, 0.0]
    h[0, 1] = [0.1, 0.3]
    h[1, 1] = [0.0, 1.0]
    h[1, 0] = [0.25, 0.1]
    return h, 1e-2


def enumerate_joint(h, n0):
    n = h.shape[0]
    table = {}
    for combo in itertools.product(range(1, (1 << n) + 1), repeat=n):
        beams = np.stack(
            [
                bf.design_beamformer(bf.decode_action(combo[j], n), j, h[j], n0)
                for j in range(n)
            ]
        )
        table[combo] = bf.sum_rate(h, beams, n0)
    return table


class TestMaxSlnrPolicy:
    def test_always_all_ones(self):
        pol = bl.MaxSlnrPolicy()
        for n in (2, 3, 5):
            ctx = DummyCtx(n)
            assert pol.choose(ctx) == 1 << n

    def test_matches_full_leakage_construction(self, rng):
        # all-ones weights reproduce the max-SLNR closed form with the full
        # leakage-plus-noise matrix
        h = rng.standard_normal((3, 3, 2)) + 1j * rng.standard_normal((3, 3, 2))
        n0 = 0.2
        w = bf.design_beamformer(np.ones(3, dtype=np.uint8), 1, h[1], n0)
        b = n0 * np.eye(2, dtype=complex)
        for j in (0, 2):
            b += np.outer(h[1, j], np.conj(h[1, j]))
        expected = cxla.max_gen_rayleigh_rank1(h[1, 1], b)
        np.testing.assert_allclose(w, expected, atol=1e-12)

    def test_state_independent(self, rng):
        pol = bl.MaxSlnrPolicy()
        ctx = DummyCtx(3)
        first = pol.choose(ctx)
        ctx.state = rng.standard_normal(33)
        assert pol.choose(ctx) == first


class TestBetaRandomPolicy:
    def test_uniform_histogram(self):
        pol = bl.BetaRandomPolicy(np.random.default_rng(17))
        ctx = DummyCtx(3)
        counts = np.zeros(8, dtype=int)
        for _ in range(100_000):
            counts[pol.choose(ctx) - 1] += 1
        assert scipy.stats.chisquare(counts).pvalue > 1e-4

    def test_seeded_determinism(self):
        a = bl.BetaRandomPolicy(np.random.default_rng(4))
        b = bl.BetaRandomPolicy(np.random.default_rng(4))
        ctx = DummyCtx(4)
        assert [a.choose(ctx) for _ in range(20)] == [b.choose(ctx) for _ in range(20)]

    def test_mean_rate_below_greedy_paired(self):
        cfg = nm.NetworkConfig(n_cells=3, n_tx=2)
        diffs = []
        for seed in range(40):
            geom = nm.generate_geometry(cfg, seed)
            rates = {}
            for name, pol in (
                ("greedy", bl.GreedyOraclePolicy()),
                ("random", bl.BetaRandomPolicy(np.random.default_rng(seed))),
            ):
                channels = nm.ChannelProcess(geom, cfg, 10_000 + seed)
                log = pr.run_episode(cfg, channels, pol, T=6)
                rates[name] = float(np.mean(log.sum_rates()))
            diffs.append(rates["greedy"] - rates["random"])
        assert np.mean(diffs) > 0.0
        assert np.mean(diffs) > 5 * np.std(diffs) / np.sqrt(len(diffs))


class TestGreedyBestResponse:
    def test_keeps_all_ones_on_weakly_coupled_instance(self):
        h, n0 = weakly_coupled_two_cell()
        table = enumerate_joint(h, n0)
        best = max(table, key=table.get)
        assert best == (4, 4)  # all-ones strictly optimal per enumeration
        runner_up = max(v for k, v in table.items() if k != best)
        assert table[best] > runner_up + 1e-9
        betas = np.ones((2, 2), dtype=np.uint8)
        assert bl.greedy_best_response(h, betas, 0, n0) == 4
        assert bl.greedy_best_response(h, betas, 1, n0) == 4

    def test_includes_stay_put(self, rng):
        h = rng.standard_normal((3, 3, 2)) + 1j * rng.standard_normal((3, 3, 2))
        n0 = 0.1
        betas = np.ones((3, 3), dtype=np.uint8)
        beams = np.stack(
            [bf.design_beamformer(betas[j], j, h[j], n0) for j in range(3)]
        )
        current = bf.sum_rate(h, beams, n0)
        a = bl.greedy_best_response(h, betas, 1, n0)
        beams[1] = bf.design_beamformer(bf.decode_action(a, 3), 1, h[1], n0)
        assert bf.sum_rate(h, beams, n0) >= current - 1e-12

    def test_matches_joint_for_single_cell(self, rng):
        h = rng.standard_normal((1, 1, 2)) + 1j * rng.standard_normal((1, 1, 2))
        n0 = 0.5
        betas = np.zeros((1, 1), dtype=np.uint8)
        a = bl.greedy_best_response(h, betas, 0, n0)
        joint_betas, joint_rate = bl.joint_exhaustive_oracle(h, n0)
        assert bf.decode_action(a, 1).tolist() == joint_betas[0].tolist()
        assert joint_betas[0, 0] == 1  # matched filter beats silence


class TestJointOracle:
    def test_single_cell_mrt(self, rng):
        h = rng.standard_normal((1, 1, 3)) + 1j * rng.standard_normal((1, 1, 3))
        betas, rate = bl.joint_exhaustive_oracle(h, 0.3)
        assert betas.tolist() == [[1]]
        np.testing.assert_allclose(
            rate, np.log2(1.0 + np.linalg.norm(h[0, 0]) ** 2 / 0.3), rtol=1e-12
        )

    def test_two_cell_all_ones(self):
        h, n0 = weakly_coupled_two_cell()
        betas, rate = bl.joint_exhaustive_oracle(h, n0)
        assert betas.tolist() == [[1, 1], [1, 1]]
        np.testing.assert_allclose(rate, enumerate_joint(h, n0)[(4, 4)], rtol=0)

    def test_dominates_max_slnr(self, rng):
        for _ in range(20):
            h = rng.standard_normal((3, 3, 2)) + 1j * rng.standard_normal((3, 3, 2))
            n0 = float(10 ** rng.uniform(-3, 0))
            _, rate = bl.joint_exhaustive_oracle(h, n0)
            ones = np.ones((3, 3), dtype=np.uint8)
            beams = np.stack(
                [bf.design_beamformer(ones[j], j, h[j], n0) for j in range(3)]
            )
            assert rate >= bf.sum_rate(h, beams, n0) - 1e-12

    def test_size_refusal(self):
        h = np.zeros((5, 5, 2), complex)
        with pytest.raises(bl.OracleSizeError, match="bound"):
            bl.joint_exhaustive_oracle(h, 1.0)

    def test_lexicographic_tie_break(self):
        # all channels zero: every assignment gives rate 0; the first
        # (lexicographically smallest) combo must win
        h = np.zeros((2, 2, 2), complex)
        betas, rate = bl.joint_exhaustive_oracle(h, 1.0)
        assert rate == 0.0
        assert betas.tolist() == [[0, 0], [0, 0]]
