"""The shared deep Q-network: one parameter set used by every base station.

A plain fully connected ReLU network (7 weight layers), trained with
uniform experience replay, a hard-synced target copy, and Adam on the mean
squared Bellman error of the taken action. Written directly on numpy in
double precision: gradients are exact backprop (verified against central
finite differences in the tests) and checkpoints are flat little-endian
containers that round-trip bit-for-bit.

States concatenate the previous slot's weight bits of all cells (agent's
own first) with the candidate gain vectors of every action. The gain block
spans many orders of magnitude in watts, so the network consumes
``log1p(gain / noise_power)`` features; ``build_state`` keeps raw gains and
``state_features`` applies the transform.
"""

from dataclasses import dataclass

import json
import struct

import numpy as np

from .cxla import ContractError

HIDDEN_WIDTHS = (512, 512, 256, 256, 128, 128)

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8

_MAGIC = b"MCBQNET1"


class TrainingFault(RuntimeError):
    """Training produced a non-finite loss."""


def network_widths(n_cells):
    """Layer widths for a given cell count: state in, action values out."""
    state = n_cells * (n_cells + (1 << n_cells))
    return (state, *HIDDEN_WIDTHS, 1 << n_cells)


class QNetwork:
    """Fully connected ReLU network; linear output layer.

    ``rng`` triggers He-uniform initialization; without it all parameters
    start at zero.
    """

    def __init__(self, widths, rng=None):
        widths = tuple(int(w) for w in widths)
        if len(widths) < 2 or any(w <= 0 for w in widths):
            raise ContractError(f"bad layer widths {widths}")
        self.widths = widths
        self.weights = []
        self.biases = []
        for fan_in, fan_out in zip(widths[:-1], widths[1:]):
            if rng is None:
                w = np.zeros((fan_out, fan_in))
            else:
                limit = np.sqrt(6.0 / fan_in)
                w = rng.uniform(-limit, limit, size=(fan_out, fan_in))
            self.weights.append(w)
            self.biases.append(np.zeros(fan_out))

    @property
    def n_actions(self):
        return self.widths[-1]

    def forward(self, x):
        """Q-values for a state vector or a (batch, state) matrix."""
        x = np.asarray(x, dtype=np.float64)
        single = x.ndim == 1
        a = x[None, :] if single else x
        if a.shape[1] != self.widths[0]:
            raise ContractError(
                f"state length {a.shape[1]} does not match input width {self.widths[0]}"
            )
        last = len(self.weights) - 1
        for layer, (w, b) in enumerate(zip(self.weights, self.biases)):
            a = a @ w.T + b
            if layer < last:
                np.maximum(a, 0.0, out=a)
        return a[0] if single else a


def clone_network(net):
    out = QNetwork(net.widths)
    sync_target(net, out)
    return out


def sync_target(net, target_net):
    """Hard-copy all parameters of ``net`` into ``target_net``."""
    if net.widths != target_net.widths:
        raise ContractError("network shapes do not match")
    for src, dst in zip(net.weights, target_net.weights):
        dst[...] = src
    for src, dst in zip(net.biases, target_net.biases):
        dst[...] = src


def flatten_params(net):
    return np.concatenate(
        [w.ravel() for w in net.weights] + [b.ravel() for b in net.biases]
    )


def assign_params(net, vec):
    vec = np.asarray(vec, dtype=np.float64)
    pos = 0
    for w in net.weights:
        w[...] = vec[pos : pos + w.size].reshape(w.shape)
        pos += w.size
    for b in net.biases:
        b[...] = vec[pos : pos + b.size]
        pos += b.size
    if pos != vec.size:
        raise ContractError("parameter vector length mismatch")


def q_forward(net, s):
    """Action values of one state."""
    s = np.asarray(s, dtype=np.float64)
    if s.ndim != 1:
        raise ContractError("q_forward expects a single state vector")
    return net.forward(s)


def select_action(net, s, epsilon, rng=None):
    """Epsilon-greedy action (1-based); greedy ties go to the lowest index."""
    if not 0.0 <= epsilon <= 1.0:
        raise ContractError(f"epsilon must be in [0, 1], got {epsilon}")
    if epsilon > 0.0:
        if rng is None:
            raise ContractError("exploration requires an rng")
        if rng.random() < epsilon:
            return 1 + int(rng.integers(net.n_actions))
    return 1 + int(np.argmax(q_forward(net, s)))


def build_state(betas_prev, gains, i):
    """State vector of agent ``i``: its own previous weights, then the other
    cells' in ascending cell order, then all candidate gain vectors."""
    betas_prev = np.asarray(betas_prev, dtype=np.float64)
    gains = np.asarray(gains, dtype=np.float64)
    n = betas_prev.shape[0]
    if betas_prev.shape != (n, n):
        raise ContractError(f"betas must be (n, n), got {betas_prev.shape}")
    if gains.shape != (1 << n, n):
        raise ContractError(f"gains must be ({1 << n}, {n}), got {gains.shape}")
    others = [betas_prev[j] for j in range(n) if j != i]
    return np.concatenate([betas_prev[i], *others, gains.ravel()])


def state_features(state, n0, n_cells):
    """Network input: weight bits unchanged, gains as log1p(gain / noise)."""
    feats = np.array(state, dtype=np.float64)
    beta_block = n_cells * n_cells
    feats[beta_block:] = np.log1p(feats[beta_block:] / n0)
    return feats


@dataclass
class Transition:
    state: np.ndarray
    action: int  # 1-based
    reward: float
    next_state: np.ndarray
    terminal: bool


class ReplayBuffer:
    """Fixed-capacity ring with uniform sampling."""

    def __init__(self, capacity=50_000):
        if capacity < 1:
            raise ContractError("capacity must be positive")
        self.capacity = capacity
        self._data = []
        self._pos = 0

    def __len__(self):
        return len(self._data)

    def push(self, tr):
        if len(self._data) < self.capacity:
            self._data.append(tr)
        else:
            self._data[self._pos] = tr
            self._pos = (self._pos + 1) % self.capacity

    def sample(self, batch_size, rng):
        if len(self._data) < batch_size:
            raise ContractError("not enough transitions to sample")
        idx = rng.integers(0, len(self._data), size=batch_size)
        return [self._data[k] for k in idx]


def _forward_cached(net, x):
    acts = [x]
    last = len(net.weights) - 1
    for layer, (w, b) in enumerate(zip(net.weights, net.biases)):
        z = acts[-1] @ w.T + b
        if layer < last:
            z = np.maximum(z, 0.0)
        acts.append(z)
    return acts

def _backward(net, acts, dout):
    n_layers = len(net.weights)
    grads_w = [None] * n_layers
    grads_b = [None] * n_layers
    delta = dout
    for layer in range(n_layers - 1, -1, -1):
        grads_w[layer] = delta.T @ acts[layer]
        grads_b[layer] = delta.sum(axis=0)
        if layer > 0:
            delta = (delta @ net.weights[layer]) * (acts[layer] > 0.0)
    return grads_w, grads_b


def loss_and_grads(net, states, actions, targets):
    """MSE on the taken actions' Q-values and its parameter gradients."""
    states = np.asarray(states, dtype=np.float64)
    actions = np.asarray(actions, dtype=np.int64)
    targets = np.asarray(targets, dtype=np.float64)
    batch = states.shape[0]
    acts = _forward_cached(net, states)
    q = acts[-1]
    rows = np.arange(batch)
    err = q[rows, actions - 1] - targets
    loss = float(np.mean(err**2))
    dq = np.zeros_like(q)
    dq[rows, actions - 1] = 2.0 * err / batch
    grads_w, grads_b = _backward(net, acts, dq)
    return loss, grads_w, grads_b


class Adam:
    """Adam optimizer state for one QNetwork (beta1=0.9, beta2=0.999)."""

    def __init__(self, net):
        self.m_w = [np.zeros_like(w) for w in net.weights]
        self.v_w = [np.zeros_like(w) for w in net.weights]
        self.m_b = [np.zeros_like(b) for b in net.biases]
        self.v_b = [np.zeros_like(b) for b in net.biases]
        self.t = 0

    def step(self, net, grads_w, grads_b, lr):
        self.t += 1
        c1 = 1.0 - ADAM_BETA1**self.t
        c2 = 1.0 - ADAM_BETA2**self.t
        params = list(zip(net.weights, grads_w, self.m_w, self.v_w)) + list(
            zip(net.biases, grads_b, self.m_b, self.v_b)
        )
        for p, g, m, v in params:
            m *= ADAM_BETA1
            m += (1.0 - ADAM_BETA1) * g
            v *= ADAM_BETA2
            v += (1.0 - ADAM_BETA2) * g * g
            p -= lr * (m / c1) / (np.sqrt(v / c2) + ADAM_EPS)


def train_step(net, target_net, batch, adam, lr=0.003, gamma=0.99):
    """One DQN update on ``net``: Bellman targets from the target copy,
    MSE loss on the taken action, a single Adam step. Returns the loss."""
    if not batch:
        raise ContractError("batch must be nonempty")
    states = np.stack([tr.state for tr in batch])
    actions = np.array([tr.action for tr in batch], dtype=np.int64)
    rewards = np.array([tr.reward for tr in batch])
    next_states = np.stack([tr.next_state for tr in batch])
    live = np.array([0.0 if tr.terminal else 1.0 for tr in batch])
    future = target_net.forward(next_states).max(axis=1)
    targets = rewards + gamma * future * live
    loss, grads_w, grads_b = loss_and_grads(net, states, actions, targets)
    if not np.isfinite(loss):
        raise TrainingFault(f"non-finite loss {loss}")
    adam.step(net, grads_w, grads_b, lr)
    return loss


@dataclass(frozen=True)
class TrainerConfig:
    lr: float = 0.003
    gamma: float = 0.99
    batch_size: int = 64
    replay_capacity: int = 50_000
    target_sync: int = 200


class DqnTrainer:
    """Bundles the target copy, optimizer, replay buffer and step counter."""

    def __init__(self, net, cfg=None, seed=0):
        self.net = net
        self.cfg = cfg if cfg is not None else TrainerConfig()
        self.target = clone_network(net)
        self.adam = Adam(net)
        self.buffer = ReplayBuffer(self.cfg.replay_capacity)
        self.steps = 0
        self._rng = np.random.default_rng(seed)

    def push(self, tr):
        self.buffer.push(tr)

    def train_once(self):
        """One train step if the buffer is warm; returns the loss or None."""
        if len(self.buffer) < self.cfg.batch_size:
            return None
        batch = self.buffer.sample(self.cfg.batch_size, self._rng)
        loss = train_step(
            self.net, self.target, batch, self.adam, self.cfg.lr, self.cfg.gamma
        )
        self.steps += 1
        if self.steps % self.cfg.target_sync == 0:
            sync_target(self.net, self.target)
        return loss


def epsilon_schedule(episode, total_episodes, start=1.0, end=0.05, decay_frac=0.3):
    """Linear decay over the first ``decay_frac`` of training, then flat."""
    cutoff = max(1, int(round(decay_frac * total_episodes)))
    if episode >= cutoff:
        return end
    return start + (end - start) * (episode / cutoff)


class DqnPolicy:
    """Action source backed by the shared network.

    Decides from the state vector alone (plus the noise power used for
    feature scaling); never touches the channel tensor.
    """

    def __init__(self, net, n_cells, epsilon=0.0, rng=None):
        self.net = net
        self.n_cells = n_cells
        self.epsilon = epsilon
        self.rng = rng

    def choose(self, ctx):
        feats = state_features(ctx.state, ctx.n0, self.n_cells)
        return select_action(self.net, feats, self.epsilon, self.rng)


def save_checkpoint(path, net, adam=None, meta=None):
    """Write a parameter container that round-trips bit-for-bit.

    Layout: magic, little-endian u32 header length, canonical JSON header,
    then raw '<f8' arrays (all weights, all biases, then the Adam moments
    in the same order when present).
    """
    header = {
        "format": 1,
        "widths": list(net.widths),
        "has_adam": adam is not None,
        "adam_t": 0 if adam is None else adam.t,
        "meta": meta if meta is not None else {},
    }
    blob = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("ascii")
    with open(path, "wb") as f:
        f.write(_MAGIC)
        f.write(struct.pack("<I", len(blob)))
        f.write(blob)
        arrays = list(net.weights) + list(net.biases)
        if adam is not None:
            arrays += adam.m_w + adam.m_b + adam.v_w + adam.v_b
        for arr in arrays:
            f.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def load_checkpoint(path):
    """Read a checkpoint; returns ``(net, adam_or_none, meta)``."""
    with open(path, "rb") as f:
        if f.read(len(_MAGIC)) != _MAGIC:
            raise ContractError(f"{path} is not a checkpoint file")
        (blob_len,) = struct.unpack("<I", f.read(4))
        header = json.loads(f.read(blob_len).decode("ascii"))
        net = QNetwork(header["widths"])
        adam = Adam(net) if header["has_adam"] else None

        def read_into(arr):
            raw = f.read(arr.size * 8)
            if len(raw) != arr.size * 8:
                raise ContractError(f"{path} is truncated")
            arr[...] = np.frombuffer(raw, dtype="<f8").reshape(arr.shape)

        arrays = list(net.weights) + list(net.biases)
        if adam is not None:
            adam.t = int(header["adam_t"])
            arrays += adam.m_w + adam.m_b + adam.v_w + adam.v_b
        for arr in arrays:
            read_into(arr)
        if f.read(1):
            raise ContractError(f"{path} has trailing bytes")
    return net, adam, header["meta"]
