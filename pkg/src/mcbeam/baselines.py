"""Reference policies and oracles for comparison runs.

Max-SLNR keeps every weight set (the protocol's starting point);
Beta-random draws the acting cell's weights uniformly each slot. The greedy
best-response and the joint exhaustive search are genie references that read
the full channel tensor and exist only as upper baselines for the
distributed scheme.
"""

import itertools

import numpy as np

from . import beamform
from .cxla import ContractError

JOINT_ORACLE_COMBO_LIMIT = 1 << 20


class OracleSizeError(ContractError):
    """The joint exhaustive search would exceed its enumeration bound."""


class MaxSlnrPolicy:
    """Always selects the all-ones weight vector, regardless of state."""

    def choose(self, ctx):
        return 1 << ctx.n_cells


class BetaRandomPolicy:
    """Uniformly random action for the acting cell, redrawn every slot."""

    def __init__(self, rng):
        self.rng = rng

    def choose(self, ctx):
        return 1 + int(self.rng.integers(1 << ctx.n_cells))


class GreedyOraclePolicy:
    """Genie per-slot best response using the full channel tensor."""

    def choose(self, ctx):
        return greedy_best_response(ctx.h, ctx.betas, ctx.agent, ctx.n0)


def greedy_best_response(h, betas, agent, n0):
    """Best action of ``agent`` with all other weight vectors held fixed.

    Evaluates the realized sum-rate of every candidate action against the
    current channels; ties go to the smallest action index. Includes the
    stay-put action, so on a static channel the resulting sum-rate never
    decreases.
    """
    n = betas.shape[0]
    beams = np.stack(
        [beamform.design_beamformer(betas[j], j, h[j], n0) for j in range(n)]
    )
    _, cand = beamform.candidate_gains(agent, h[agent], n0)
    best_action = None
    best_rate = -np.inf
    for a in range(1, (1 << n) + 1):
        beams[agent] = cand[a - 1]
        rate = beamform.sum_rate(h, beams, n0)
        if rate > best_rate:
            best_rate = rate
            best_action = a
    return best_action


def joint_exhaustive_oracle(h, n0):
    """Globally optimal joint weight assignment by brute force.

    Enumerates all (2^n)^n joint assignments in lexicographic order and
    returns ``(betas, sum_rate)`` for the first maximizer (ties therefore
    resolve to the lexicographically smallest assignment). Refuses
    instances beyond the enumeration bound.
    """
    n = h.shape[0]
    n_act = 1 << n
    combos = n_act**n
    if combos > JOINT_ORACLE_COMBO_LIMIT:
        raise OracleSizeError(
            f"{combos} joint assignments exceed the bound {JOINT_ORACLE_COMBO_LIMIT}"
        )
    cand = [beamform.candidate_gains(j, h[j], n0)[1] for j in range(n)]
    beams = np.empty((n, h.shape[2]), dtype=np.complex128)
    best_rate = -np.inf
    best_combo = None
    for combo in itertools.product(range(n_act), repeat=n):
        for j in range(n):
            beams[j] = cand[j][combo[j]]
        rate = beamform.sum_rate(h, beams, n0)
        if rate > best_rate:
            best_rate = rate
            best_combo = combo
    betas = np.stack(
        [beamform.decode_action(c + 1, n) for c in best_combo]
    )
    return betas, float(best_rate)
