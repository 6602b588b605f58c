"""Round-robin episode protocol and information-exchange accounting.

Slot 0 initializes every cell's weight vector to all-ones (the max-SLNR
point) and applies no action. From slot 1 on, BS ``t mod n_cells`` is the
agent: the previous agent's updated weight bits are the only inter-BS
message (n_cells bits), the agent evaluates all candidate actions from its
local channel row, and every BS re-solves its beamformer for the current
slot's channels. The reward is the realized sum-rate increase over the
previous slot.

Rewards and rates are computed by this harness from global channel state;
policies only ever receive a ``DecisionContext``, and the DQN policy reads
nothing but the state vector from it.
"""

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from . import beamform
from .agent import Transition, build_state, state_features
from .cxla import ContractError
from .netmodel import noise_power_w


@dataclass(frozen=True)
class BetaMessage:
    """The serialized per-slot inter-BS exchange: one cell's weight bits."""

    sender: int
    bits: tuple

    @property
    def n_bits(self):
        return len(self.bits)


@dataclass(frozen=True)
class SlotRecord:
    t: int
    agent: int
    action: int
    reward: float
    sum_rate: float
    rates: tuple
    cum_bits_proposed: int
    cum_bits_ifu: int


@dataclass
class EpisodeLog:
    n_cells: int
    records: list = field(default_factory=list)
    messages: list = field(default_factory=list)
    train_losses: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    @property
    def slots(self):
        return len(self.records) - 1

    def sum_rates(self):
        return np.array([r.sum_rate for r in self.records])

    def rewards(self):
        return np.array([r.reward for r in self.records])


@dataclass(frozen=True)
class DecisionContext:
    """Everything a policy may look at when choosing an action.

    Distributed policies must restrict themselves to ``state`` (and the
    scalar ``n0``); ``h`` and ``betas`` exist for genie baselines and are
    snapshots, safe to mutate.
    """

    slot: int
    agent: int
    n_cells: int
    n0: float
    state: np.ndarray
    h: np.ndarray
    betas: np.ndarray


def compute_reward(r_new, r_prev):
    """Sum-rate increase caused by the agent's update."""
    return r_new - r_prev


def info_bits_proposed(n_cells):
    """Bits exchanged per slot by the proposed scheme: the n_cells-bit
    weight vector of the previous agent."""
    if n_cells < 1:
        raise ContractError("n_cells must be >= 1")
    return n_cells


def info_bits_ifu(n_tx, n_cells, n_f):
    """Per-slot bits of the interference-free-user selection scheme:
    (n_cells - 1) * (n_f + ceil(log2(sum_a C(n_cells, a))), a = 1..n_tx."""
    if n_tx < 1 or n_cells < 1 or n_f < 0:
        raise ContractError("arguments must be positive (n_f may be 0)")
    subsets = sum(math.comb(n_cells, a) for a in range(1, n_tx + 1))
    return (n_cells - 1) * (n_f + math.ceil(math.log2(subsets)))


# Published per-slot bit counts for the IFU-selection scheme, keyed by
# (n_tx, n_cells, n_f). Only the last cell matches the printed general
# formula under a base-2 log; the others are reported alongside the formula
# value rather than asserted.
IFU_PUBLISHED_BITS = {
    (3, 6, 3): 110,
    (3, 7, 5): 168,
    (4, 6, 42): 160,
    (4, 7, 42): 294,
}


def _design_all(betas, h, n0):
    n = betas.shape[0]
    return np.stack(
        [beamform.design_beamformer(betas[j], j, h[j], n0) for j in range(n)]
    )


def run_episode(cfg, channels, policy, T, mode="eval", trainer=None, ifu_n_f=42, meta=None):
    """Run one episode of the round-robin protocol; returns its log.

    ``channels`` is a fresh ChannelProcess at slot 0; it is advanced once
    per slot. In train mode, completed transitions are pushed into the
    trainer and one train step runs per slot.
    """
    if T < 0:
        raise ContractError("T must be >= 0")
    if mode not in ("train", "eval"):
        raise ContractError(f"unknown mode {mode!r}")
    if mode == "train" and trainer is None:
        raise ContractError("train mode requires a trainer")
    n = cfg.n_cells
    n0 = noise_power_w(cfg)
    all_ones_action = 1 << n

    betas = np.ones((n, n), dtype=np.uint8)
    h = channels.tensor.h
    beams = _design_all(betas, h, n0)
    rates = beamform.all_rates(h, beams, n0)
    r_prev = float(np.sum(rates))

    log = EpisodeLog(n_cells=n, meta=dict(meta or {}))
    log.records.append(
        SlotRecord(0, 0, all_ones_action, 0.0, r_prev, tuple(rates), 0, 0)
    )

    ifu_bits = info_bits_ifu(cfg.n_tx, n, ifu_n_f)
    cum_proposed = 0
    cum_ifu = 0
    pending = None  # (features, action, reward) awaiting the next state

    for t in range(1, T + 1):
        h = channels.advance().h
        i = t % n
        prev_agent = (t - 1) % n
        msg = BetaMessage(prev_agent, tuple(int(b) for b in betas[prev_agent]))
        assert msg.n_bits == info_bits_proposed(n)
        log.messages.append(msg)
        cum_proposed += msg.n_bits
        cum_ifu += ifu_bits

        gains, cand_beams = beamform.candidate_gains(i, h[i], n0)
        state = build_state(betas, gains, i)

        if mode == "train":
            feats = state_features(state, n0, n)
            if pending is not None:
                trainer.push(Transition(pending[0], pending[1], pending[2], feats, False))
            loss = trainer.train_once()
            if loss is not None:
                log.train_losses.append(loss)
        else:
            feats = None

        ctx = DecisionContext(
            slot=t, agent=i, n_cells=n, n0=n0, state=state, h=h, betas=betas.copy()
        )
        action = int(policy.choose(ctx))
        if not 1 <= action <= (1 << n):
            raise ContractError(f"policy returned action {action} out of range")

        betas[i] = beamform.decode_action(action, n)
        beams[i] = cand_beams[action - 1]
        for j in range(n):
            if j != i:
                beams[j] = beamform.design_beamformer(betas[j], j, h[j], n0)
        rates = beamform.all_rates(h, beams, n0)
        r_new = float(np.sum(rates))
        reward = compute_reward(r_new, r_prev)

        if mode == "train":
            pending = (feats, action, reward)
        log.records.append(
            SlotRecord(t, i, action, reward, r_new, tuple(rates), cum_proposed, cum_ifu)
        )
        r_prev = r_new

    if mode == "train" and pending is not None:
        empty = np.zeros_like(pending[0])
        trainer.push(Transition(pending[0], pending[1], pending[2], empty, True))
    return log


def episode_csv_header(n_cells):
    rate_cols = [f"rate_{j + 1}" for j in range(n_cells)]
    return ["episode", "t", "agent", "action", "reward", "sum_rate"] + rate_cols + [
        "cum_bits_proposed",
        "cum_bits_ifu",
    ]


def write_episode_csv(logs, path):
    """Serialize episode logs: one row per slot, rates expanded per cell."""
    logs = list(logs)
    if not logs:
        raise ContractError("no episodes to write")
    n = logs[0].n_cells
    with open(path, "w", newline="") as f:
        wr = csv.writer(f)
        wr.writerow(episode_csv_header(n))
        for ep, log in enumerate(logs):
            for rec in log.records:
                wr.writerow(
                    [ep, rec.t, rec.agent, rec.action,
                     repr(float(rec.reward)), repr(float(rec.sum_rate))]
                    + [repr(float(r)) for r in rec.rates]
                    + [rec.cum_bits_proposed, rec.cum_bits_ifu]
                )
