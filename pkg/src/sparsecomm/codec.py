"""Bit-to-sparse-message codecs and codeword synthesis.

Information bits are carried by the support (which columns are active) and the
nonzero values (which constellation symbols) of a K-sparse length-L vector.
Two mappings are provided:

* ``sc``  -- the support ranges over all C(L, K) subsets; support bits are the
  colexicographic rank of the subset (combinatorial number system), so no
  lookup table is needed.
* ``ssc`` -- the dictionary is split into K subblocks and exactly one column
  is picked per subblock; support bits index the column within its subblock.

Both schemes put the K * floor(log2 M) symbol bits first.  All operations are
pure and exactly invertible, and capacities use exact big-integer arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .dictionaries import Dictionary


class CodecError(ValueError):
    """Invalid bits, message, or scheme configuration."""


@dataclass(frozen=True)
class Constellation:
    """Ordered M-ary symbol alphabet with unit-energy symbols."""

    name: str
    symbols: np.ndarray

    def __post_init__(self):
        self.symbols.setflags(write=False)
        if len(set(self.symbols.tolist())) != self.size:
            raise CodecError("constellation symbols must be distinct")
        if np.any(np.abs(np.abs(self.symbols) - 1.0) > 1e-12):
            raise CodecError("constellation symbols must have unit energy")

    @property
    def size(self) -> int:
        return self.symbols.size

    @property
    def bits_per_symbol(self) -> int:
        return self.size.bit_length() - 1

    @property
    def is_real(self) -> bool:
        return bool(np.all(self.symbols.imag == 0.0))

    @classmethod
    def unmodulated(cls) -> "Constellation":
        # M = 1: every nonzero entry is +1 and symbols carry no bits.
        return cls("m1", np.array([1.0 + 0.0j]))

    @classmethod
    def bpsk(cls) -> "Constellation":
        return cls("bpsk", np.array([1.0 + 0.0j, -1.0 + 0.0j]))

    @classmethod
    def qpsk(cls) -> "Constellation":
        return cls("qpsk", np.exp(1j * np.pi * np.array([1, 3, 5, 7]) / 4))

    @classmethod
    def mpsk(cls, order: int) -> "Constellation":
        if order < 1:
            raise CodecError("constellation order must be >= 1")
        if order == 1:
            return cls.unmodulated()
        if order == 2:
            return cls.bpsk()
        if order == 4:
            return cls.qpsk()
        return cls(f"{order}psk", np.exp(2j * np.pi * np.arange(order) / order))

    @classmethod
    def from_name(cls, name: str) -> "Constellation":
        table = {"m1": cls.unmodulated, "bpsk": cls.bpsk, "qpsk": cls.qpsk}
        if name in table:
            return table[name]()
        if name.endswith("psk"):
            return cls.mpsk(int(name[:-3]))
        raise CodecError(f"unknown constellation {name!r}")


@dataclass(frozen=True)
class SparseMessage:
    """Support indices (1-based, ascending) and their constellation symbols."""

    support: tuple
    symbols: tuple

    def __post_init__(self):
        if len(self.support) != len(self.symbols):
            raise CodecError("support and symbols must have equal length")
        if len(set(self.support)) != len(self.support):
            raise CodecError("support indices must be distinct")
        order = np.argsort(np.asarray(self.support, dtype=np.int64), kind="stable")
        object.__setattr__(self, "support", tuple(int(self.support[i]) for i in order))
        object.__setattr__(self, "symbols", tuple(complex(self.symbols[i]) for i in order))

    @property
    def sparsity(self) -> int:
        return len(self.support)


@dataclass(frozen=True)
class SchemeSpec:
    """An encoding scheme bound to a dictionary, sparsity and constellation."""

    scheme: str
    dictionary: Dictionary
    sparsity: int
    constellation: Constellation

    def __post_init__(self):
        if self.scheme not in ("sc", "ssc"):
            raise CodecError(f"unknown scheme {self.scheme!r}")
        if not 1 <= self.sparsity <= self.dictionary.n_rows:
            raise CodecError("sparsity must be in [1, N]")
        if self.scheme == "ssc":
            blocks = self.dictionary.subblock_lengths
            if len(blocks) != self.sparsity:
                raise CodecError(
                    f"ssc needs a dictionary partitioned into {self.sparsity} subblocks "
                    f"(found {len(blocks)})")

    @cached_property
    def n_bits(self) -> int:
        if self.scheme == "sc":
            return bits_capacity_sc(self.dictionary.n_cols, self.sparsity,
                                    self.constellation.size)
        return bits_capacity_ssc(self.dictionary.subblock_lengths, self.constellation.size)

    @property
    def code_rate_bpd(self) -> float:
        # bits per real dimension: complex dictionaries burn 2N real dimensions
        real_dims = self.dictionary.n_rows if self.is_real else 2 * self.dictionary.n_rows
        return self.n_bits / real_dims

    @property
    def is_real(self) -> bool:
        return self.dictionary.is_real and self.constellation.is_real

    @property
    def conventional_label(self) -> str:
        real_dims = self.dictionary.n_rows if self.dictionary.is_real else 2 * self.dictionary.n_rows
        return f"({real_dims},{self.n_bits})"


def make_scheme(dictionary: Dictionary, scheme: str, sparsity: int,
                constellation: Constellation) -> SchemeSpec:
    """Build a SchemeSpec, partitioning the dictionary for ssc if needed."""
    if scheme == "ssc" and len(dictionary.subblock_lengths) != sparsity:
        dictionary = dictionary.partition(sparsity)
    return SchemeSpec(scheme, dictionary, sparsity, constellation)


# ---------------------------------------------------------------------------
# Capacities
# ---------------------------------------------------------------------------

def bits_capacity_sc(n_cols: int, sparsity: int, m_ary: int) -> int:
    """K floor(log2 M) + floor(log2 C(L, K)), exact integer arithmetic."""
    if not 1 <= sparsity <= n_cols:
        raise CodecError("sparsity must be in [1, L]")
    if m_ary < 1:
        raise CodecError("constellation size must be >= 1")
    subsets = math.comb(n_cols, sparsity)
    return sparsity * (m_ary.bit_length() - 1) + (subsets.bit_length() - 1)


def bits_capacity_ssc(subblocks, m_ary: int) -> int:
    """K floor(log2 M) + sum_k floor(log2 L_k)."""
    blocks = list(subblocks)
    if not blocks:
        raise CodecError("empty subblock partition")
    if any(b < 1 for b in blocks):
        raise CodecError("subblock lengths must be >= 1")
    if m_ary < 1:
        raise CodecError("constellation size must be >= 1")
    return len(blocks) * (m_ary.bit_length() - 1) + sum(int(b).bit_length() - 1 for b in blocks)


# ---------------------------------------------------------------------------
# Bit helpers
# ---------------------------------------------------------------------------

def _as_bits(bits, expected: int) -> np.ndarray:
    arr = np.asarray([int(b) for b in bits] if isinstance(bits, str) else bits,
                     dtype=np.uint8)
    if arr.ndim != 1 or arr.size != expected:
        raise CodecError(f"expected a bit string of length {expected}, got {arr.size}")
    if np.any(arr > 1):
        raise CodecError("bits must be 0 or 1")
    return arr


def _bits_to_int(bits: np.ndarray) -> int:
    value = 0
    for b in bits.tolist():
        value = (value << 1) | b
    return value


def _int_to_bits(value: int, width: int) -> np.ndarray:
    if value < 0 or (width == 0 and value != 0) or value.bit_length() > width:
        raise CodecError(f"value {value} does not fit in {width} bits")
    return np.array([(value >> (width - 1 - i)) & 1 for i in range(width)], dtype=np.uint8)


def _split_symbol_bits(bits: np.ndarray, spec: SchemeSpec):
    bps = spec.constellation.bits_per_symbol
    k = spec.sparsity
    symbol_indices = [
        _bits_to_int(bits[i * bps:(i + 1) * bps]) for i in range(k)
    ] if bps else [0] * k
    return symbol_indices, bits[k * bps:]


# ---------------------------------------------------------------------------
# Subblock (ssc) mapping
# ---------------------------------------------------------------------------

def encode_ssc(bits, spec: SchemeSpec) -> SparseMessage:
    """Map N_b bits to one column per subblock plus K constellation symbols.

    The first K floor(log2 M) bits pick symbols (natural binary index per
    consecutive group); the rest is segmented into big-endian strings of
    floor(log2 L_k) bits whose value N_k selects column N_k + 1 within
    subblock k, giving the global index N_k + 1 + sum_{i<k} L_i.
    """
    arr = _as_bits(bits, spec.n_bits)
    symbol_indices, rest = _split_symbol_bits(arr, spec)
    support = []
    offset = 0
    pos = 0
    for length in spec.dictionary.subblock_lengths:
        width = int(length).bit_length() - 1
        local = _bits_to_int(rest[pos:pos + width])
        support.append(local + 1 + offset)
        pos += width
        offset += length
    symbols = [spec.constellation.symbols[i] for i in symbol_indices]
    return SparseMessage(tuple(support), tuple(symbols))


def decode_ssc_bits(msg: SparseMessage, spec: SchemeSpec) -> np.ndarray:
    """Exact inverse of :func:`encode_ssc`.

    Raises if a support index is not representable in its subblock's bit
    budget, which flags a decoder output outside the coded region (possible
    only when a subblock length is not a power of two).
    """
    blocks = spec.dictionary.subblock_lengths
    if msg.sparsity != len(blocks):
        raise CodecError("message sparsity does not match the subblock count")
    bounds = np.cumsum((0,) + tuple(blocks))
    out = []
    symbol_bits = []
    for k, alpha in enumerate(msg.support):
        if not bounds[k] < alpha <= bounds[k + 1]:
            raise CodecError(f"support index {alpha} falls outside subblock {k + 1}")
        local = alpha - 1 - int(bounds[k])
        width = int(blocks[k]).bit_length() - 1
        if local >= (1 << width):
            raise CodecError(
                f"column {alpha} is outside the coded region of subblock {k + 1}")
        out.append(_int_to_bits(local, width))
        symbol_bits.append(_symbol_index_bits(msg.symbols[k], spec))
    return np.concatenate(symbol_bits + out) if symbol_bits else np.concatenate(out)


def _symbol_index_bits(symbol: complex, spec: SchemeSpec) -> np.ndarray:
    table = spec.constellation.symbols
    idx = int(np.argmin(np.abs(table - symbol)))
    if abs(table[idx] - symbol) > 1e-9:
        raise CodecError(f"symbol {symbol} is not in the constellation")
    return _int_to_bits(idx, spec.constellation.bits_per_symbol)


# ---------------------------------------------------------------------------
# Combinatorial number system (sc) mapping
# ---------------------------------------------------------------------------

def subset_rank_colex(support) -> int:
    """Colexicographic rank of an ascending 1-based index subset."""
    return sum(math.comb(c - 1, i + 1) for i, c in enumerate(support))


def subset_unrank_colex(rank: int, n_cols: int, sparsity: int) -> tuple:
    """The ascending 1-based subset with the given colexicographic rank."""
    if rank < 0 or rank >= math.comb(n_cols, sparsity):
        raise CodecError(f"rank {rank} outside [0, C({n_cols},{sparsity}))")
    out = []
    top = n_cols
    remaining = rank
    for i in range(sparsity, 0, -1):
        c = top
        while math.comb(c - 1, i) > remaining:
            c -= 1
        out.append(c)
        remaining -= math.comb(c - 1, i)
        top = c - 1
    return tuple(reversed(out))


def encode_sc(bits, spec: SchemeSpec) -> SparseMessage:
    """Map N_b bits to an arbitrary K-subset support plus K symbols.

    Symbol bits lead as in ssc; the remaining bits, read as a big-endian
    integer, are the colexicographic rank of the support subset.
    """
    arr = _as_bits(bits, spec.n_bits)
    symbol_indices, rest = _split_symbol_bits(arr, spec)
    rank = _bits_to_int(rest)
    support = subset_unrank_colex(rank, spec.dictionary.n_cols, spec.sparsity)
    symbols = [spec.constellation.symbols[i] for i in symbol_indices]
    return SparseMessage(support, tuple(symbols))


def decode_sc_bits(msg: SparseMessage, spec: SchemeSpec) -> np.ndarray:
    """Inverse of :func:`encode_sc`; raises if the subset rank overflows the
    bit budget (a decoder output outside the coded region)."""
    if msg.sparsity != spec.sparsity:
        raise CodecError("message sparsity does not match the scheme")
    rank = subset_rank_colex(msg.support)
    support_width = spec.n_bits - spec.sparsity * spec.constellation.bits_per_symbol
    if rank >= (1 << support_width):
        raise CodecError(f"support rank {rank} outside the coded region")
    symbol_bits = [_symbol_index_bits(s, spec) for s in msg.symbols]
    return np.concatenate(symbol_bits + [_int_to_bits(rank, support_width)])


def encode(bits, spec: SchemeSpec) -> SparseMessage:
    return encode_ssc(bits, spec) if spec.scheme == "ssc" else encode_sc(bits, spec)


def decode_bits(msg: SparseMessage, spec: SchemeSpec) -> np.ndarray:
    return decode_ssc_bits(msg, spec) if spec.scheme == "ssc" else decode_sc_bits(msg, spec)


# ---------------------------------------------------------------------------
# Codeword synthesis and energy accounting
# ---------------------------------------------------------------------------

def synthesize(msg: SparseMessage, dictionary: Dictionary) -> np.ndarray:
    """Codeword s = sum_k beta_k a_{alpha_k}.

    Accumulated column by column in ascending support order so that summing
    per-user partial codewords in index order reproduces the single-user
    codeword bit for bit.
    """
    real_output = dictionary.is_real and all(s.imag == 0.0 for s in msg.symbols)
    dtype = np.float64 if real_output else np.complex128
    out = np.zeros(dictionary.n_rows, dtype=dtype)
    for alpha, beta in zip(msg.support, msg.symbols):
        if not 1 <= alpha <= dictionary.n_cols:
            raise CodecError(f"support index {alpha} outside [1, {dictionary.n_cols}]")
        coeff = beta.real if real_output else beta
        out += coeff * dictionary.entries[:, alpha - 1]
    return out


def energy_per_bit(spec: SchemeSpec) -> float:
    """E_b = K / N_b for unit-norm columns and unit-energy symbols."""
    return spec.sparsity / spec.n_bits


def random_message_bits(spec: SchemeSpec, rng: np.random.Generator) -> np.ndarray:
    """Uniform information bits of the scheme's block length."""
    return rng.integers(0, 2, size=spec.n_bits, dtype=np.uint8)
