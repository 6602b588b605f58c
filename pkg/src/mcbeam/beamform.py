"""Binary weight coefficients, beamformer construction, SINR and sum-rate.

Each cell i carries a binary weight vector beta_i over the cells; beta_ij
selects whether the channel to user j counts in cell i's beamformer
objective. Actions are 1-based indices into the 2^{n_cells} possible weight
vectors (LSB-first bit order). The beamformer itself is the three-case
closed form: generalized-Rayleigh maximizer when the own weight is set,
minimal-leakage direction when only interference weights are set, and the
zero vector otherwise. Rates are log2(1 + SINR), so sum-rates read in
bits/s/Hz.
"""

import numpy as np

from .backend import kernels
from .cxla import ContractError


def n_actions(n_cells):
    return 1 << n_cells


def decode_action(a, n_cells):
    """Binary weight bits for action ``a``; LSB of (a - 1) is beta_i1."""
    if not 1 <= a <= (1 << n_cells):
        raise ContractError(f"action {a} out of range [1, {1 << n_cells}]")
    c = a - 1
    return np.array([(c >> j) & 1 for j in range(n_cells)], dtype=np.uint8)


def encode_action(bits):
    """Inverse of decode_action."""
    bits = np.asarray(bits)
    c = 0
    for j in range(bits.shape[0]):
        if bits[j]:
            c |= 1 << j
    return c + 1


def design_beamformer(bits, i, local_row, n0):
    """Beamforming vector of cell ``i`` for its weight bits.

    Uses only cell i's own row of the channel tensor (local CSI). Returns a
    unit-norm vector, or the zero vector when no weight is set.
    """
    local_row = np.ascontiguousarray(local_row, dtype=np.complex128)
    bits = np.ascontiguousarray(bits, dtype=np.uint8)
    if bits.shape[0] != local_row.shape[0]:
        raise ContractError(
            f"got {bits.shape[0]} weights for {local_row.shape[0]} cells"
        )
    if not 0 <= i < local_row.shape[0]:
        raise ContractError(f"cell index {i} out of range")
    return kernels.design_beamformer(bits, i, local_row, float(n0))


def chi(bits, i, local_row, w, n0):
    """Generalized weighted SLNR of beam ``w`` for cell ``i``.

    Own-signal power over weighted leakage plus noise when beta_ii is set;
    the pure inverse-leakage figure otherwise.
    """
    bits = np.asarray(bits)
    amps = np.conj(local_row) @ w
    powers = amps.real**2 + amps.imag**2
    leak = float(np.sum(bits * powers) - bits[i] * powers[i])
    if bits[i]:
        return float(bits[i] * powers[i]) / (leak + n0)
    return 1.0 / (leak + n0)


def sinr(h, beams, n0, i):
    """SINR of user i given all cells' beamformers against tensor ``h``."""
    n_c = h.shape[0]
    p = np.empty(n_c)
    for k in range(n_c):
        amp = np.vdot(h[k, i], beams[k])
        p[k] = amp.real**2 + amp.imag**2
    interference = float(np.sum(p) - p[i])
    return float(p[i]) / (interference + n0)


def all_rates(h, beams, n0):
    """Per-cell rates log2(1 + SINR_i) for all cells at once."""
    amps = np.einsum("kit,kt->ki", np.conj(h), beams)
    p = amps.real**2 + amps.imag**2
    desired = np.diagonal(p)
    interference = p.sum(axis=0) - desired
    return np.log2(1.0 + desired / (interference + n0))


def sum_rate(h, beams, n0):
    """Achievable sum-rate in bits/s/Hz; per-cell average is this / n_cells."""
    return float(np.sum(all_rates(h, beams, n0)))


def candidate_gains(i, local_row, n0):
    """Squared gains |h_ij^H w^[c]|^2 for every action c of cell ``i``.

    Returns ``(gains, beams)``, each with row c-1 for action c. Reads only
    the local row, so a BS can evaluate all its candidates without any
    exchange.
    """
    local_row = np.ascontiguousarray(local_row, dtype=np.complex128)
    return kernels.candidate_gains(int(i), local_row, float(n0))
