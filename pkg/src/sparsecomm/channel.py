"""AWGN and multi-user channel models with explicit E_b/N_0 accounting.

The single-user channel adds white Gaussian noise of variance N_0/2 per real
dimension, where N_0 = E_b * 10^(-EbN0_dB / 10) and E_b comes from the coding
scheme (K / N_b for unit-norm columns and unit-energy symbols).  Noiseless
operation is an explicit flag, not a large-SNR limit, so exact-recovery tests
see literally zero noise.

Multi-user settings reuse the same machinery:

* multiple access -- receiver sees the gain-weighted sum of every user's
  codeword plus one noise draw;
* broadcast -- one transmitter sends the sum of all users' codewords, each
  receiver adds its own noise of variance sigma_i^2;
* interference -- receiver i sees its own codeword plus cross-gain-weighted
  codewords of the others plus noise.

All randomness flows through explicit generators; per-trial streams derive
from a master seed and the trial index, so outcomes are independent of how
trials are batched across workers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .codec import Constellation, SparseMessage, synthesize
from .dictionaries import Dictionary


class ChannelError(ValueError):
    """Bad channel configuration (gains, assignments, noise spec)."""


@dataclass(frozen=True)
class ChannelSpec:
    """Noise level for a scheme with a known energy per bit.

    ``ebn0_db=None`` means noiseless.  ``complex_valued`` mirrors the
    dictionary: complex observations get independent real/imaginary noise of
    variance N_0/2 each, real observations a single real component.
    """

    ebn0_db: float | None
    energy_per_bit: float
    complex_valued: bool

    @property
    def noiseless(self) -> bool:
        return self.ebn0_db is None

    @property
    def n0(self) -> float:
        if self.noiseless:
            return 0.0
        return self.energy_per_bit * 10.0 ** (-self.ebn0_db / 10.0)

    @property
    def sigma_per_real_dim(self) -> float:
        return np.sqrt(self.n0 / 2.0)


def trial_rng(master_seed: int, trial_index: int) -> np.random.Generator:
    """Independent, reproducible stream for one Monte Carlo trial.

    Streams are derived counter-style from (master seed, trial index), so any
    partitioning of trials across workers draws identical randomness.
    """
    return np.random.default_rng(np.random.SeedSequence((master_seed, trial_index)))


def _noise(shape, sigma: float, rng: np.random.Generator, complex_valued: bool):
    if complex_valued:
        re = rng.standard_normal(shape)
        im = rng.standard_normal(shape)
        return sigma * (re + 1j * im)
    return sigma * rng.standard_normal(shape)


def awgn(codeword: np.ndarray, spec: ChannelSpec, rng: np.random.Generator) -> np.ndarray:
    """y = s + v with v white Gaussian, variance N_0/2 per real dimension."""
    if spec.noiseless:
        return np.array(codeword, copy=True)
    return codeword + _noise(codeword.shape, spec.sigma_per_real_dim, rng, spec.complex_valued)


# ---------------------------------------------------------------------------
# Multi-user assignments and encoding
# ---------------------------------------------------------------------------

def validate_assignments(assignments, n_subblocks: int, require_cover: bool = False):
    """Check per-user subblock index lists are disjoint (and optionally cover)."""
    seen = set()
    for user, blocks in enumerate(assignments):
        for b in blocks:
            if not 0 <= b < n_subblocks:
                raise ChannelError(f"user {user} assigned unknown subblock {b}")
            if b in seen:
                raise ChannelError(f"subblock {b} assigned to more than one user")
            seen.add(b)
    if require_cover and len(seen) != n_subblocks:
        raise ChannelError("assignments must cover every subblock")


def user_bit_counts(d: Dictionary, assignments, constellation: Constellation) -> list[int]:
    """Bits carried by each user: K_i floor(log2 M) + sum floor(log2 L_k)."""
    blocks = d.subblock_lengths
    bps = constellation.bits_per_symbol
    return [len(a) * bps + sum(int(blocks[k]).bit_length() - 1 for k in a)
            for a in assignments]


def split_multiuser_bits(bits: np.ndarray, d: Dictionary, assignments,
                         constellation: Constellation) -> list[np.ndarray]:
    """Slice a single-user bit block into per-user bit blocks, per subblock.

    The single-user layout is [symbol group per subblock][support string per
    subblock]; user i receives the groups and strings of its own subblocks,
    keeping their relative order.  Splitting this way makes the multi-user
    superposition reproduce the single-user codeword for the same bit block.
    """
    blocks = d.subblock_lengths
    bps = constellation.bits_per_symbol
    k_total = len(blocks)
    widths = [int(b).bit_length() - 1 for b in blocks]
    support_starts = np.concatenate(([0], np.cumsum(widths)[:-1])) + k_total * bps
    out = []
    for assigned in assignments:
        pieces = [bits[k * bps:(k + 1) * bps] for k in assigned]
        pieces += [bits[support_starts[k]:support_starts[k] + widths[k]] for k in assigned]
        out.append(np.concatenate(pieces) if pieces else np.zeros(0, dtype=bits.dtype))
    return out


def encode_user_message(user_bits: np.ndarray, d: Dictionary, assigned,
                        constellation: Constellation) -> SparseMessage:
    """Encode one user's bits onto its assigned subblocks (global indices)."""
    blocks = d.subblock_lengths
    offsets = np.concatenate(([0], np.cumsum(blocks)[:-1]))
    bps = constellation.bits_per_symbol
    k_i = len(assigned)
    symbol_indices = []
    pos = 0
    for _ in range(k_i):
        value = 0
        for b in user_bits[pos:pos + bps]:
            value = (value << 1) | int(b)
        symbol_indices.append(value)
        pos += bps
    support = []
    for k in assigned:
        width = int(blocks[k]).bit_length() - 1
        value = 0
        for b in user_bits[pos:pos + width]:
            value = (value << 1) | int(b)
        support.append(value + 1 + int(offsets[k]))
        pos += width
    symbols = tuple(complex(constellation.symbols[i]) for i in symbol_indices)
    return SparseMessage(tuple(support), symbols)


# ---------------------------------------------------------------------------
# Multiple access, broadcast, interference
# ---------------------------------------------------------------------------

def mac_combine(codewords, spec: ChannelSpec, rng: np.random.Generator,
                channel_gains=None, transmit_gains=None) -> np.ndarray:
    """Receiver observation y = sum_i h_i g_i s_i + v.

    ``channel_gains`` h_i and ``transmit_gains`` g_i default to one; unit
    effective gains leave each codeword untouched bit for bit, so with a
    shared noise stream the observation coincides exactly with the
    corresponding single-user transmission.
    """
    n_users = len(codewords)
    h = [1.0] * n_users if channel_gains is None else list(channel_gains)
    g = [1.0] * n_users if transmit_gains is None else list(transmit_gains)
    if len(h) != n_users or len(g) != n_users:
        raise ChannelError("need one gain per user")
    total = np.zeros(codewords[0].shape,
                     dtype=np.complex128 if spec.complex_valued else np.float64)
    for s_i, h_i, g_i in zip(codewords, h, g):
        eff = h_i * g_i
        total = total + (s_i if eff == 1.0 else eff * s_i)
    return awgn(total, spec, rng)


def bc_transmit(messages, d: Dictionary, assignments) -> np.ndarray:
    """Superposition codeword: the sum of every user's codeword."""
    validate_assignments(assignments, len(d.subblock_lengths))
    blocks = d.subblock_lengths
    bounds = np.cumsum((0,) + tuple(blocks))
    total = np.zeros(d.n_rows, dtype=np.float64 if d.is_real else np.complex128)
    for msg, assigned in zip(messages, assignments):
        owned = sorted(assigned)
        for alpha in msg.support:
            block = int(np.searchsorted(bounds, alpha - 1, side="right")) - 1
            if block not in owned:
                raise ChannelError(
                    f"support index {alpha} lies outside the user's subblocks")
        total = total + synthesize(msg, d)
    return total


def bc_observe(codeword: np.ndarray, sigma2: float, rng: np.random.Generator,
               complex_valued: bool) -> np.ndarray:
    """One receiver's view of the broadcast: y_i = s + n_i, Var(n_i) = sigma_i^2."""
    if sigma2 < 0:
        raise ChannelError("noise variance must be nonnegative")
    if sigma2 == 0:
        return np.array(codeword, copy=True)
    return codeword + _noise(codeword.shape, np.sqrt(sigma2 / 2.0), rng, complex_valued)


def ic_observe(codewords, receiver: int, interference: np.ndarray, sigma2: float,
               rng: np.random.Generator, complex_valued: bool) -> np.ndarray:
    """Interference-channel observation y_i = s_i + sum_{j!=i} h_{i,j} s_j + n_i.

    ``interference[i, j]`` is the gain from transmitter j to receiver i; the
    diagonal must be one (own-link normalization).
    """
    interference = np.asarray(interference)
    n_users = len(codewords)
    if interference.shape != (n_users, n_users):
        raise ChannelError("interference matrix must be P x P")
    if np.any(interference.diagonal() != 1.0):
        raise ChannelError("own-link gains h_{i,i} must equal one")
    total = codewords[receiver].astype(np.complex128 if complex_valued else np.float64,
                                       copy=True)
    for j, s_j in enumerate(codewords):
        if j == receiver:
            continue
        total = total + interference[receiver, j] * s_j
    return bc_observe(total, sigma2, rng, complex_valued)
