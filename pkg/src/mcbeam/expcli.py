"""Command-line front end: training, evaluation, sweeps and CSV emission.

Configuration is a flat ``key = value`` text file with dotted sections
(see ``CONFIG_DEFAULTS`` for every key and its default); unknown keys are
rejected outright so a config file can never silently drift. All
randomness fans out from one master seed through counter-based
``SeedSequence`` spawn keys, so train/eval instance streams are disjoint
by construction and parallel and serial runs agree. Every command is a
deterministic function of (config, seeds, checkpoint) in single-threaded
mode; outputs are CSV files plus binary checkpoints.
"""

import argparse
import csv
import sys
from dataclasses import dataclass, replace
from multiprocessing import Pool
from pathlib import Path

import numpy as np

from . import beamform
from .agent import (
    DqnPolicy,
    DqnTrainer,
    QNetwork,
    TrainerConfig,
    assign_params,
    epsilon_schedule,
    flatten_params,
    load_checkpoint,
    network_widths,
    save_checkpoint,
)
from .baselines import (
    BetaRandomPolicy,
    GreedyOraclePolicy,
    MaxSlnrPolicy,
    OracleSizeError,
    greedy_best_response,
    joint_exhaustive_oracle,
)
from .cxla import ContractError
from .netmodel import ChannelProcess, NetworkConfig, generate_geometry, noise_power_w
from .protocol import (
    IFU_PUBLISHED_BITS,
    info_bits_ifu,
    info_bits_proposed,
    run_episode,
    write_episode_csv,
)

DEFAULT_POWERS = "27,28,29,30,31,32,33"

CONFIG_DEFAULTS = {
    "network.n_cells": 4,
    "network.n_tx": 3,
    "network.cell_radius_m": 70.0,
    "network.tx_power_dbm": 30.0,
    "network.noise_density_dbm_hz": -174.0,
    "network.bandwidth_hz": 10e6,
    "network.carrier_hz": 2e9,
    "network.slot_s": 1e-3,
    "network.user_speed_kmh": 5.0,
    "network.pathloss_a_db": 34.53,
    "network.pathloss_b": 38.0,
    "network.min_bs_user_dist_m": 3.0,
    "train.episodes": 20_000,
    "train.set_size": 5_000,
    "train.checkpoint_every": 0,  # 0: only the final checkpoint
    "eval.episodes": 20_000,
    "eval.set_size": 20_000,
    "eval.log_episodes": False,
    "episode.slots": 0,  # 0: resolve to 5 * n_cells
    "seed.master": 12345,
    "agent.lr": 0.003,
    "agent.gamma": 0.99,
    "agent.batch_size": 64,
    "agent.replay_capacity": 50_000,
    "agent.target_sync": 200,
    "agent.eps_start": 1.0,
    "agent.eps_end": 0.05,
    "agent.eps_decay_frac": 0.3,
    "protocol.ifu_n_f": 42,
}

# spawn-key domains of the master-seed fan-out
DOMAIN_TRAIN = 0
DOMAIN_EVAL = 1
DOMAIN_NET_INIT = 2
DOMAIN_EXPLORE = 3
DOMAIN_REPLAY = 4
DOMAIN_EVAL_POLICY = 5

EVAL_POLICIES = ("dqn", "max_slnr", "beta_random", "greedy")


class CliError(Exception):
    """User-facing failure; rendered as a single machine-readable line."""


def parse_config_file(path):
    """Read a flat dotted key=value file; returns the merged value map.

    Fails fast with an itemized message on unknown keys or bad values.
    """
    values = dict(CONFIG_DEFAULTS)
    problems = []
    with open(path) as f:
        for lineno, raw in enumerate(f, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                problems.append(f"line {lineno}: expected 'key = value'")
                continue
            key, _, value = line.partition("=")
            key = key.strip()
            value = value.strip()
            if key not in CONFIG_DEFAULTS:
                problems.append(f"unknown config key '{key}'")
                continue
            try:
                values[key] = _coerce(value, CONFIG_DEFAULTS[key], key)
            except ValueError as exc:
                problems.append(str(exc))
    if problems:
        raise CliError("invalid config: " + "; ".join(problems))
    return values


def _coerce(text, default, key):
    if isinstance(default, bool):
        low = text.lower()
        if low in ("true", "1", "yes"):
            return True
        if low in ("false", "0", "no"):
            return False
        raise ValueError(f"key '{key}' expects a boolean, got '{text}'")
    if isinstance(default, int):
        try:
            return int(text, 10)
        except ValueError:
            raise ValueError(f"key '{key}' expects an integer, got '{text}'") from None
    if isinstance(default, float):
        try:
            return float(text)
        except ValueError:
            raise ValueError(f"key '{key}' expects a number, got '{text}'") from None
    return text


@dataclass(frozen=True)
class ExperimentConfig:
    network: NetworkConfig
    train_episodes: int
    train_set_size: int
    checkpoint_every: int
    eval_episodes: int
    eval_set_size: int
    log_episodes: bool
    slots: int
    master_seed: int
    trainer: TrainerConfig
    eps_start: float
    eps_end: float
    eps_decay_frac: float
    ifu_n_f: int
    static_channel: bool = False


def experiment_config(values, static_channel=False, seed_override=None):
    """Build the typed config from a value map (defaults already merged)."""
    network = NetworkConfig(
        n_cells=values["network.n_cells"],
        n_tx=values["network.n_tx"],
        cell_radius_m=values["network.cell_radius_m"],
        tx_power_dbm=values["network.tx_power_dbm"],
        noise_density_dbm_hz=values["network.noise_density_dbm_hz"],
        bandwidth_hz=values["network.bandwidth_hz"],
        carrier_hz=values["network.carrier_hz"],
        slot_s=values["network.slot_s"],
        user_speed_kmh=values["network.user_speed_kmh"],
        pathloss_a_db=values["network.pathloss_a_db"],
        pathloss_b=values["network.pathloss_b"],
        min_bs_user_dist_m=values["network.min_bs_user_dist_m"],
    )
    for key in ("train.episodes", "train.set_size", "eval.episodes", "eval.set_size"):
        if values[key] < 1:
            raise CliError(f"invalid config: key '{key}' must be >= 1")
    slots = values["episode.slots"]
    if slots < 0:
        raise CliError("invalid config: key 'episode.slots' must be >= 0")
    if slots == 0:
        slots = 5 * network.n_cells
    trainer = TrainerConfig(
        lr=values["agent.lr"],
        gamma=values["agent.gamma"],
        batch_size=values["agent.batch_size"],
        replay_capacity=values["agent.replay_capacity"],
        target_sync=values["agent.target_sync"],
    )
    return ExperimentConfig(
        network=network,
        train_episodes=values["train.episodes"],
        train_set_size=values["train.set_size"],
        checkpoint_every=values["train.checkpoint_every"],
        eval_episodes=values["eval.episodes"],
        eval_set_size=values["eval.set_size"],
        log_episodes=values["eval.log_episodes"],
        slots=slots,
        master_seed=values["seed.master"] if seed_override is None else seed_override,
        trainer=trainer,
        eps_start=values["agent.eps_start"],
        eps_end=values["agent.eps_end"],
        eps_decay_frac=values["agent.eps_decay_frac"],
        ifu_n_f=values["protocol.ifu_n_f"],
        static_channel=static_channel,
    )


def load_experiment_config(path=None, static_channel=False, seed_override=None):
    values = parse_config_file(path) if path else dict(CONFIG_DEFAULTS)
    return experiment_config(values, static_channel, seed_override)


def child_seed(master, *key):
    """Counter-based seed splitting: a SeedSequence keyed by (master, key)."""
    return np.random.SeedSequence(master, spawn_key=tuple(int(k) for k in key))


def instance_seed_key(domain, index):
    return (domain, index)


def build_env(cfg, domain, index):
    """Geometry plus a fresh channel process for one environment instance."""
    geom_seed = child_seed(cfg.master_seed, domain, index, 0)
    chan_seed = child_seed(cfg.master_seed, domain, index, 1)
    geom = generate_geometry(cfg.network, geom_seed)
    rho = 1.0 if cfg.static_channel else None
    return geom, ChannelProcess(geom, cfg.network, chan_seed, rho=rho)


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as f:
        wr = csv.writer(f)
        wr.writerow(header)
        wr.writerows(rows)


def _fmt(x):
    return repr(float(x))


def cmd_train(cfg, out_dir):
    """Train the shared DQN; writes checkpoints and per-episode metrics."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    n = cfg.network.n_cells
    net = QNetwork(
        network_widths(n), rng=np.random.default_rng(child_seed(cfg.master_seed, DOMAIN_NET_INIT))
    )
    trainer = DqnTrainer(net, cfg.trainer, seed=child_seed(cfg.master_seed, DOMAIN_REPLAY))
    policy = DqnPolicy(
        net, n, epsilon=cfg.eps_start, rng=np.random.default_rng(child_seed(cfg.master_seed, DOMAIN_EXPLORE))
    )
    meta = {"n_cells": n, "n_tx": cfg.network.n_tx, "master_seed": cfg.master_seed}
    rows = []
    for ep in range(cfg.train_episodes):
        instance = ep % cfg.train_set_size
        _, channels = build_env(cfg, DOMAIN_TRAIN, instance)
        policy.epsilon = epsilon_schedule(
            ep, cfg.train_episodes, cfg.eps_start, cfg.eps_end, cfg.eps_decay_frac
        )
        log = run_episode(
            cfg.network, channels, policy, cfg.slots,
            mode="train", trainer=trainer, ifu_n_f=cfg.ifu_n_f,
        )
        final = log.records[-1]
        loss_mean = float(np.mean(log.train_losses)) if log.train_losses else ""
        rows.append(
            [
                ep,
                instance,
                _fmt(policy.epsilon),
                trainer.steps,
                _fmt(loss_mean) if loss_mean != "" else "",
                _fmt(float(np.sum(log.rewards()))),
                _fmt(final.sum_rate),
                _fmt(final.sum_rate / n),
            ]
        )
        if cfg.checkpoint_every and (ep + 1) % cfg.checkpoint_every == 0:
            save_checkpoint(out / f"checkpoint_ep{ep + 1:06d}.qnet", net, trainer.adam, meta)
    save_checkpoint(out / "checkpoint.qnet", net, trainer.adam, meta)
    _write_csv(
        out / "train_metrics.csv",
        ["episode", "instance", "epsilon", "train_steps", "loss_mean",
         "reward_sum", "sum_rate_final", "per_cell_rate_final"],
        rows,
    )
    return out / "checkpoint.qnet"


def _load_net(cfg, checkpoint_path):
    try:
        net, _, _ = load_checkpoint(checkpoint_path)
    except FileNotFoundError:
        raise CliError(f"checkpoint not found: {checkpoint_path}") from None
    expected = network_widths(cfg.network.n_cells)
    if net.widths != expected:
        raise CliError(
            f"checkpoint shape {net.widths} does not match config widths {expected}"
        )
    return net


def _episode_policies(cfg, net, episode):
    rng = np.random.default_rng(child_seed(cfg.master_seed, DOMAIN_EVAL_POLICY, episode))
    return {
        "dqn": DqnPolicy(net, cfg.network.n_cells, epsilon=0.0),
        "max_slnr": MaxSlnrPolicy(),
        "beta_random": BetaRandomPolicy(rng),
        "greedy": GreedyOraclePolicy(),
    }


def _eval_episode(cfg, net, episode, keep_logs):
    """Per-slot per-cell average rates of every policy on one instance."""
    instance = episode % cfg.eval_set_size
    policies = _episode_policies(cfg, net, episode)
    rates = {}
    logs = {}
    for name in EVAL_POLICIES:
        _, channels = build_env(cfg, DOMAIN_EVAL, instance)
        log = run_episode(
            cfg.network, channels, policies[name], cfg.slots, ifu_n_f=cfg.ifu_n_f
        )
        rates[name] = log.sum_rates() / cfg.network.n_cells
        if keep_logs:
            logs[name] = log
    return rates, logs


_POOL_CTX = {}


def _pool_init(cfg, widths, params, keep_logs):
    net = QNetwork(widths)
    assign_params(net, params)
    _POOL_CTX["args"] = (cfg, net, keep_logs)


def _pool_eval(episode):
    cfg, net, keep_logs = _POOL_CTX["args"]
    return _eval_episode(cfg, net, episode, keep_logs)


def _run_eval_episodes(cfg, net, threads, keep_logs=False):
    """Evaluate all episodes, optionally on a worker pool.

    Episodes are seed-isolated and reduced in index order, so the pooled
    result matches the serial one.
    """
    episodes = range(cfg.eval_episodes)
    if threads > 1:
        with Pool(
            threads, initializer=_pool_init,
            initargs=(cfg, network_widths(cfg.network.n_cells), flatten_params(net), keep_logs),
        ) as pool:
            results = pool.map(_pool_eval, episodes)
    else:
        results = [_eval_episode(cfg, net, ep, keep_logs) for ep in episodes]
    rate_sums = {name: np.zeros(cfg.slots + 1) for name in EVAL_POLICIES}
    logs = {name: [] for name in EVAL_POLICIES}
    for rates, eplogs in results:
        for name in EVAL_POLICIES:
            rate_sums[name] += rates[name]
            if keep_logs:
                logs[name].append(eplogs[name])
    means = {name: rate_sums[name] / cfg.eval_episodes for name in EVAL_POLICIES}
    return means, logs


def _assert_disjoint_seed_domains(cfg):
    train_keys = {instance_seed_key(DOMAIN_TRAIN, i) for i in range(cfg.train_set_size)}
    eval_keys = {instance_seed_key(DOMAIN_EVAL, j) for j in range(cfg.eval_set_size)}
    assert not train_keys & eval_keys, "train and eval instance seeds overlap"


def cmd_eval(cfg, checkpoint_path, out_dir, threads=1):
    """Mean per-cell average rate per slot for the DQN and all baselines."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    net = _load_net(cfg, checkpoint_path)
    _assert_disjoint_seed_domains(cfg)
    means, logs = _run_eval_episodes(cfg, net, threads, keep_logs=cfg.log_episodes)
    rows = [
        [t] + [_fmt(means[name][t]) for name in EVAL_POLICIES]
        for t in range(cfg.slots + 1)
    ]
    _write_csv(
        out / "eval_rates.csv",
        ["t"] + [f"per_cell_rate_{name}" for name in EVAL_POLICIES],
        rows,
    )
    if cfg.log_episodes:
        for name in EVAL_POLICIES:
            write_episode_csv(logs[name], out / f"eval_episodes_{name}.csv")
    return out / "eval_rates.csv"


def cmd_sweep_power(cfg, checkpoint_path, out_dir, powers, threads=1):
    """Final-slot per-cell average rate per transmit power, shared seeds."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    net = _load_net(cfg, checkpoint_path)
    rows = []
    for dbm in powers:
        pcfg = replace(
            cfg,
            network=replace(cfg.network, tx_power_dbm=float(dbm)),
            log_episodes=False,
        )
        means, _ = _run_eval_episodes(pcfg, net, threads)
        finals = {name: means[name][-1] for name in EVAL_POLICIES}
        rows.append(
            [_fmt(dbm)]
            + [_fmt(finals[name]) for name in EVAL_POLICIES]
            + [_fmt(finals["dqn"] - finals["max_slnr"])]
        )
    _write_csv(
        out / "power_sweep.csv",
        ["tx_power_dbm"]
        + [f"per_cell_rate_{name}" for name in EVAL_POLICIES]
        + ["gap_dqn_minus_max_slnr"],
        rows,
    )
    return out / "power_sweep.csv"


def cmd_info_exchange(cfg, slots, out_dir):
    """Cumulative exchanged-bit series plus the published cross-reference."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    n = cfg.network.n_cells
    per_slot_proposed = info_bits_proposed(n)
    per_slot_ifu = info_bits_ifu(cfg.network.n_tx, n, cfg.ifu_n_f)
    rows = []
    for t in range(slots + 1):
        # primary convention: no exchange at t = 0; the *_from_t0 columns
        # count an exchange on every slot including the first
        rows.append(
            [
                t,
                per_slot_proposed,
                per_slot_proposed * t,
                per_slot_proposed * (t + 1),
                per_slot_ifu,
                per_slot_ifu * t,
                per_slot_ifu * (t + 1),
            ]
        )
    _write_csv(
        out / "info_exchange.csv",
        ["t", "bits_proposed_per_slot", "cum_bits_proposed", "cum_bits_proposed_from_t0",
         "bits_ifu_per_slot", "cum_bits_ifu", "cum_bits_ifu_from_t0"],
        rows,
    )
    table_rows = []
    for (n_tx, n_cells, n_f), published in sorted(IFU_PUBLISHED_BITS.items()):
        formula = info_bits_ifu(n_tx, n_cells, n_f)
        table_rows.append(
            [n_tx, n_cells, n_f, info_bits_proposed(n_cells), formula, published,
             int(formula == published)]
        )
    _write_csv(
        out / "info_exchange_table.csv",
        ["n_tx", "n_cells", "n_f", "bits_proposed", "bits_ifu_formula",
         "bits_ifu_published", "formula_matches_published"],
        table_rows,
    )
    return out / "info_exchange.csv"


def _greedy_converged(h, n0, n_cells, max_rounds=20):
    """Round-robin best response on a static channel until a fixed point."""
    betas = np.ones((n_cells, n_cells), dtype=np.uint8)
    for _ in range(max_rounds):
        changed = False
        for i in range(n_cells):
            action = greedy_best_response(h, betas, i, n0)
            bits = beamform.decode_action(action, n_cells)
            if not np.array_equal(bits, betas[i]):
                betas[i] = bits
                changed = True
        if not changed:
            break
    beams = np.stack(
        [beamform.design_beamformer(betas[j], j, h[j], n0) for j in range(n_cells)]
    )
    return beamform.sum_rate(h, beams, n0)


def cmd_oracle_compare(cfg, out_dir, checkpoint_path=None):
    """Joint exhaustive optimum vs greedy, Max-SLNR, and optionally the DQN.

    Channels are held static so the greedy fixed point is well defined.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    n = cfg.network.n_cells
    combos = (1 << n) ** n
    if combos > (1 << 20):
        raise CliError(
            f"oracle-compare refused: {combos} joint assignments exceed the bound {1 << 20}"
        )
    net = _load_net(cfg, checkpoint_path) if checkpoint_path else None
    scfg = replace(cfg, static_channel=True)
    n0 = noise_power_w(cfg.network)
    header = ["instance", "rate_joint", "rate_greedy", "rate_max_slnr"]
    if net is not None:
        header.append("rate_dqn")
    rows = []
    for inst in range(cfg.eval_episodes):
        _, channels = build_env(scfg, DOMAIN_EVAL, inst % cfg.eval_set_size)
        h = channels.tensor.h
        _, rate_joint = joint_exhaustive_oracle(h, n0)
        rate_greedy = _greedy_converged(h, n0, n)
        all_ones = np.ones((n, n), dtype=np.uint8)
        beams = np.stack(
            [beamform.design_beamformer(all_ones[j], j, h[j], n0) for j in range(n)]
        )
        rate_max_slnr = beamform.sum_rate(h, beams, n0)
        row = [inst, _fmt(rate_joint), _fmt(rate_greedy), _fmt(rate_max_slnr)]
        if net is not None:
            _, channels = build_env(scfg, DOMAIN_EVAL, inst % cfg.eval_set_size)
            policy = DqnPolicy(net, n, epsilon=0.0)
            log = run_episode(cfg.network, channels, policy, cfg.slots, ifu_n_f=cfg.ifu_n_f)
            row.append(_fmt(log.records[-1].sum_rate))
        rows.append(row)
    _write_csv(out / "oracle_compare.csv", header, rows)
    return out / "oracle_compare.csv"


def _add_common(sub):
    sub.add_argument("--config", help="config file path (defaults apply when omitted)")
    sub.add_argument("--out", default="out", help="output directory")
    sub.add_argument("--seed", type=int, help="override seed.master")
    sub.add_argument("--threads", type=int, default=1,
                     help="worker count for evaluation; 1 keeps runs bit-reproducible")
    sub.add_argument("--static-channel", action="store_true",
                     help="freeze fading (rho = 1)")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="mcbeam",
        description="Distributed DQN beamforming simulator for multicell MISO downlinks",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    p_train = sub.add_parser("train", help="train the shared DQN")
    _add_common(p_train)
    p_eval = sub.add_parser("eval", help="evaluate a checkpoint against the baselines")
    _add_common(p_eval)
    p_eval.add_argument("--checkpoint", required=True)
    p_sweep = sub.add_parser("sweep-power", help="rate vs transmit power")
    _add_common(p_sweep)
    p_sweep.add_argument("--checkpoint", required=True)
    p_sweep.add_argument("--powers", default=DEFAULT_POWERS,
                         help="comma-separated dBm list")
    p_info = sub.add_parser("info-exchange", help="exchanged-bit accounting")
    _add_common(p_info)
    p_info.add_argument("--slots", type=int, help="horizon (default: episode.slots)")
    p_oracle = sub.add_parser("oracle-compare", help="joint oracle vs baselines")
    _add_common(p_oracle)
    p_oracle.add_argument("--checkpoint")
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.threads < 1:
            raise CliError("--threads must be >= 1")
        cfg = load_experiment_config(args.config, args.static_channel, args.seed)
        if args.command == "train":
            cmd_train(cfg, args.out)
        elif args.command == "eval":
            cmd_eval(cfg, args.checkpoint, args.out, args.threads)
        elif args.command == "sweep-power":
            powers = [float(p) for p in args.powers.split(",") if p.strip()]
            if not powers:
                raise CliError("--powers must list at least one dBm value")
            cmd_sweep_power(cfg, args.checkpoint, args.out, powers, args.threads)
        elif args.command == "info-exchange":
            slots = args.slots if args.slots is not None else cfg.slots
            if slots < 0:
                raise CliError("--slots must be >= 0")
            cmd_info_exchange(cfg, slots, args.out)
        elif args.command == "oracle-compare":
            cmd_oracle_compare(cfg, args.out, args.checkpoint)
    except (CliError, ContractError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0
