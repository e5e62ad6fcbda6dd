"""Low-coherence dictionary matrices for sparse-signal coding.

A dictionary is an N x L matrix with unit-norm columns; codewords are sparse
linear combinations of its columns.  Two families are built here:

* ``gold`` -- real +-1 dictionaries from all circular shifts of a Gold code
  family (a preferred pair of m-sequences and their XOR combinations), with
  an optional standard-basis column bringing the column count to a power of 2.
* ``mub`` -- complex dictionaries concatenating the N mutually unbiased bases
  of C^N (N a power of two), built through Galois-ring GR(4, n) character
  sums so every entry is a fourth root of unity over sqrt(N).

Dictionaries are immutable after construction (entry arrays are marked
read-only) and safe to share across threads and processes.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field, replace

import numpy as np

KIND_GOLD = "gold"
KIND_MUB = "mub"
KIND_MUB_RANDOM_PHASE = "mub-random-phase"

# Preferred pairs of primitive polynomials (bit i = coefficient of x^i).
# The pair property is not trusted: build_gold checks the three-valued
# correlation bound and rejects pairs that exceed it.
GOLD_PREFERRED_PAIRS = {
    3: (0b1011, 0b1101),          # x^3+x+1, x^3+x^2+1
    5: (0b100101, 0b111101),      # x^5+x^2+1, x^5+x^4+x^3+x^2+1
    6: (0b1000011, 0b1100111),    # x^6+x+1, x^6+x^5+x^2+x+1
    7: (0b10001001, 0b10001111),  # x^7+x^3+1, x^7+x^3+x^2+x+1
}

_I_POWERS = np.array([1.0, 1.0j, -1.0, -1.0j], dtype=np.complex128)


class DictionaryError(ValueError):
    """Construction or validation failure for a dictionary matrix."""


class GramSizeError(DictionaryError):
    """Dense Gram matrix refused; use gram_columns() instead."""


@dataclass(eq=False)
class Dictionary:
    """N x L matrix with unit-norm columns plus provenance metadata.

    ``subblock_lengths`` is empty until :meth:`partition` is called; when set,
    each length is a power of two and their sum is at most L.  ``meta`` holds
    construction parameters (polynomials, log2 dimension, ...) sufficient to
    regenerate the matrix.
    """

    kind: str
    entries: np.ndarray
    is_real: bool
    subblock_lengths: tuple = ()
    phase_seed: int | None = None
    meta: dict = field(default_factory=dict)
    _mu: float | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.entries.setflags(write=False)

    @property
    def n_rows(self) -> int:
        return self.entries.shape[0]

    @property
    def n_cols(self) -> int:
        return self.entries.shape[1]

    def partition(self, k: int) -> "Dictionary":
        """Return a copy of this dictionary carrying a k-subblock plan."""
        lengths = partition_subblocks(self.n_cols, k)
        return replace(self, subblock_lengths=lengths, _mu=self._mu)

    def subblock_offsets(self) -> np.ndarray:
        """Start offset (0-based) of each subblock."""
        if not self.subblock_lengths:
            raise DictionaryError("dictionary has no subblock plan")
        return np.concatenate(([0], np.cumsum(self.subblock_lengths)[:-1]))

    def subblock_of_column(self) -> np.ndarray:
        """Map each 0-based column index to its subblock id (-1 if outside)."""
        ids = np.full(self.n_cols, -1, dtype=np.int64)
        start = 0
        for b, length in enumerate(self.subblock_lengths):
            ids[start:start + length] = b
            start += length
        return ids


# ---------------------------------------------------------------------------
# m-sequences and Gold code dictionaries
# ---------------------------------------------------------------------------

def lfsr_msequence(poly: int, init_state: int = 1) -> np.ndarray:
    """One period of a maximal-length sequence from a Fibonacci LFSR.

    ``poly`` is the primitive polynomial as a bitmask (bit i = coefficient of
    x^i, bit n set).  The register shifts right, the output is the low bit and
    feedback (parity of the tapped bits) enters at bit n-1.  Raises if the
    polynomial is not primitive, i.e. the register does not run through all
    2^n - 1 nonzero states.
    """
    degree = poly.bit_length() - 1
    if not 2 <= degree <= 16:
        raise DictionaryError(f"LFSR degree {degree} outside [2, 16]")
    if init_state == 0:
        raise DictionaryError("LFSR initial state must be nonzero")
    if not 0 < init_state < (1 << degree):
        raise DictionaryError("LFSR initial state wider than the register")
    taps = poly & ((1 << degree) - 1)
    period = (1 << degree) - 1
    out = np.empty(period, dtype=np.uint8)
    state = init_state
    for i in range(period):
        out[i] = state & 1
        feedback = bin(state & taps).count("1") & 1
        state = (state >> 1) | (feedback << (degree - 1))
    if state != init_state:
        raise DictionaryError(f"polynomial {poly:#x} is not primitive")
    return out


def gold_family_sequences(degree: int, polys: tuple[int, int] | None = None) -> np.ndarray:
    """The 2^n + 1 Gold family members as +-1 rows of shape (2^n + 1, 2^n - 1).

    Row 0 and row 1 are the two m-sequences of the preferred pair; row 2 + t
    is their XOR with the second sequence circularly delayed by t.  Bit 0 maps
    to +1 and bit 1 to -1.
    """
    if polys is None:
        try:
            polys = GOLD_PREFERRED_PAIRS[degree]
        except KeyError:
            raise DictionaryError(f"no preferred polynomial pair for degree {degree}") from None
    seq_a = lfsr_msequence(polys[0])
    seq_b = lfsr_msequence(polys[1])
    n_chips = seq_a.size
    bits = np.empty((n_chips + 2, n_chips), dtype=np.uint8)
    bits[0] = seq_a
    bits[1] = seq_b
    for shift in range(n_chips):
        bits[2 + shift] = seq_a ^ np.roll(seq_b, shift)
    return (1 - 2 * bits.astype(np.int8)).astype(np.int8)


def gold_correlation_table(family: np.ndarray) -> np.ndarray:
    """Circular cross-correlations between all family rows at all lags.

    ``table[p, q, d] = sum_j family[p, j] * family[q, (j + d) mod N]``,
    computed by FFT and rounded to the exact integer values.
    """
    n_chips = family.shape[1]
    spectra = np.fft.rfft(family.astype(np.float64), axis=1)
    table = np.fft.irfft(np.conj(spectra)[:, None, :] * spectra[None, :, :], n=n_chips, axis=2)
    return np.rint(table)


def _gold_peak_bound(degree: int) -> int:
    # Three-valued bound for a preferred pair: 2^ceil((n+1)/2) + 1.
    return (1 << ((degree + 2) // 2)) + 1


def build_gold(degree: int, include_identity_column: bool = True,
               polys: tuple[int, int] | None = None) -> Dictionary:
    """Dictionary of all circular shifts of a degree-n Gold code family.

    N = 2^n - 1 rows and (2^n + 1) * N columns, each column a +-1 sequence
    scaled to unit norm; ``include_identity_column`` appends the first
    standard-basis vector, making the column count the power of two 2^{2n}.
    The preferred-pair property of the polynomials (the built-in pair unless
    ``polys`` overrides it) is verified through the exact three-valued
    correlation bound.
    """
    if polys is None:
        if degree not in GOLD_PREFERRED_PAIRS:
            raise DictionaryError(
                f"unsupported Gold degree {degree}; have {sorted(GOLD_PREFERRED_PAIRS)}")
        polys = GOLD_PREFERRED_PAIRS[degree]
    family = gold_family_sequences(degree, polys)
    n_seqs, n_chips = family.shape

    table = gold_correlation_table(family)
    off_peak = table.copy()
    off_peak[np.arange(n_seqs), np.arange(n_seqs), 0] = 0  # column paired with itself
    peak = int(np.max(np.abs(off_peak)))
    bound = _gold_peak_bound(degree)
    if peak > bound:
        raise DictionaryError(
            f"polynomials {polys} are not a preferred pair: peak correlation "
            f"{peak} exceeds the Gold bound {bound}")

    scale = 1.0 / np.sqrt(n_chips)
    n_cols = n_seqs * n_chips + (1 if include_identity_column else 0)
    entries = np.empty((n_chips, n_cols), dtype=np.float64)
    for s in range(n_seqs):
        for t in range(n_chips):
            entries[:, s * n_chips + t] = np.roll(family[s], t) * scale
    if include_identity_column:
        e_first = np.zeros(n_chips)
        e_first[0] = 1.0
        entries[:, -1] = e_first

    return Dictionary(
        kind=KIND_GOLD,
        entries=entries,
        is_real=True,
        meta={
            "degree": degree,
            "poly_a": polys[0],
            "poly_b": polys[1],
            "identity_column": include_identity_column,
            "correlation_peak": peak,
        },
        _mu=peak / n_chips,
    )


# ---------------------------------------------------------------------------
# Mutually unbiased bases via the Galois ring GR(4, n)
# ---------------------------------------------------------------------------

def _hensel_lift(poly: int, degree: int) -> np.ndarray:
    """Lift a binary primitive polynomial to Z4 (Graeffe construction).

    Returns monic coefficients c[0..n] over Z4 such that the residue class of
    x in Z4[x]/(c) has multiplicative order 2^n - 1.
    """
    h = np.array([(poly >> i) & 1 for i in range(degree + 1)], dtype=np.int64)
    even = np.where(np.arange(degree + 1) % 2 == 0, h, 0)
    odd = np.where(np.arange(degree + 1) % 2 == 1, h, 0)
    diff = (np.convolve(even, even) - np.convolve(odd, odd)) % 4
    lifted = diff[::2][: degree + 1] % 4
    if lifted[degree] != 1:
        lifted = (-lifted) % 4
    return lifted


def _ring_mulmod(a: np.ndarray, b: np.ndarray, modulus: np.ndarray) -> np.ndarray:
    """Multiply two GR(4, n) elements (coefficient arrays mod 4)."""
    degree = modulus.size - 1
    prod = np.convolve(a, b) % 4
    prod = np.concatenate([prod, np.zeros(max(0, 2 * degree - prod.size + 1), dtype=prod.dtype)])
    for d in range(prod.size - 1, degree - 1, -1):
        coeff = prod[d]
        if coeff:
            prod[d - degree:d] = (prod[d - degree:d] - coeff * modulus[:degree]) % 4
            prod[d] = 0
    return prod[:degree] % 4


def _teichmuller_traces(degree: int) -> np.ndarray:
    """Trace values tau[p] = Tr(xi^p) in Z4 for the Teichmuller generator xi.

    The trace of a Teichmuller element xi^p is the ring sum of its Frobenius
    conjugates xi^{p * 2^k}; by construction it is a constant polynomial, and
    that constant (an element of Z4) is returned for every p.
    """
    binary_primitive = {1: 0b11, 2: 0b111, 3: 0b1011, 4: 0b10011,
                        5: 0b100101, 6: 0b1000011, 7: 0b10001001, 8: 0b100011101}
    modulus = _hensel_lift(binary_primitive[degree], degree)
    period = (1 << degree) - 1

    xi = np.zeros(degree, dtype=np.int64)
    if degree == 1:
        xi[0] = (-modulus[0]) % 4  # x = -c0 in Z4[x]/(x + c0)
    else:
        xi[1] = 1
    powers = np.zeros((period, degree), dtype=np.int64)
    powers[0, 0] = 1
    for p in range(1, period):
        powers[p] = _ring_mulmod(powers[p - 1], xi, modulus)
    if not np.array_equal(_ring_mulmod(powers[period - 1], xi, modulus), powers[0]):
        raise DictionaryError(f"Teichmuller generator order check failed for degree {degree}")

    traces = np.zeros(period, dtype=np.int64)
    for p in range(period):
        total = np.zeros(degree, dtype=np.int64)
        for k in range(degree):
            total = (total + powers[(p << k) % period]) % 4
        if np.any(total[1:]):
            raise DictionaryError("Galois-ring trace did not land in Z4")
        traces[p] = total[0]
    return traces


def mub_exponent_table(log2_dim: int) -> np.ndarray:
    """Fourth-root exponents of the MUB dictionary for N = 2^m.

    Returns an (N, N*N) uint8 array E with dictionary entries
    i^E[r, c] / sqrt(N).  Columns are grouped basis by basis; within basis a,
    column b has component exponents Tr((t_a + 2 t_b) t_r) over the
    Teichmuller points t_0 = 0, t_{j+1} = xi^j.
    """
    dim = 1 << log2_dim
    period = dim - 1
    traces = _teichmuller_traces(log2_dim)

    # pair_trace[i, r] = Tr(t_i * t_r): zero when either point is zero.
    pair_trace = np.zeros((dim, dim), dtype=np.int64)
    nz = np.arange(1, dim)
    pair_trace[1:, 1:] = traces[((nz[:, None] - 1) + (nz[None, :] - 1)) % period]

    exponents = np.empty((dim, dim * dim), dtype=np.uint8)
    for a in range(dim):
        block = (pair_trace[a][:, None] + 2 * pair_trace.T) % 4
        exponents[:, a * dim:(a + 1) * dim] = block.astype(np.uint8)
    return exponents


def _scaled_entries(d: Dictionary) -> np.ndarray:
    return d.entries * np.sqrt(d.n_rows)


def unbiasedness_deviation(d: Dictionary, basis_pairs=None) -> tuple[float, float]:
    """Worst-case deviation of a MUB dictionary from its defining property.

    Returns ``(within, cross)`` where ``within`` is the largest deviation of
    any same-basis Gram block from the identity and ``cross`` the largest
    deviation of any cross-basis inner-product magnitude from 1/sqrt(N).
    ``basis_pairs`` restricts the check to the given (i, j) pairs; by default
    every pair is checked.
    """
    dim = d.n_rows
    n_bases = d.n_cols // dim
    scaled = _scaled_entries(d)
    bases = [scaled[:, a * dim:(a + 1) * dim] for a in range(n_bases)]
    if basis_pairs is None:
        basis_pairs = [(i, j) for i in range(n_bases) for j in range(i, n_bases)]
    within = 0.0
    cross = 0.0
    target = dim  # |<x, y>|^2 * N^2 for unbiased unit vectors
    for i, j in basis_pairs:
        block = bases[i].conj().T @ bases[j]
        if i == j:
            within = max(within, float(np.max(np.abs(block - dim * np.eye(dim)))) / dim)
        else:
            mags_sq = block.real**2 + block.imag**2
            cross = max(cross, float(np.max(np.abs(np.sqrt(mags_sq) - np.sqrt(target)))) / dim)
    return within, cross


def quaternary_closure_report(d: Dictionary, basis_pairs=None) -> dict:
    """Check the conjecture that cross-basis inner products are quaternary.

    For every checked cross-basis pair, the inner product times sqrt(N) is
    compared against {1, -1, i, -i}; the report counts conforming products
    and records the worst deviation.  This property can fail (it requires N
    to be a perfect square for quaternary entries), so callers treat the
    report as informational.
    """
    dim = d.n_rows
    n_bases = d.n_cols // dim
    scaled = _scaled_entries(d)
    if basis_pairs is None:
        basis_pairs = [(i, j) for i in range(n_bases) for j in range(i + 1, n_bases)]
    worst = 0.0
    total = 0
    conforming = 0
    root_n = np.sqrt(dim)
    for i, j in basis_pairs:
        block = scaled[:, i * dim:(i + 1) * dim].conj().T @ scaled[:, j * dim:(j + 1) * dim]
        normalized = block / root_n  # (N <x,y>) / sqrt(N) = <x,y> * sqrt(N)
        dev = np.min(np.abs(normalized[..., None] - _I_POWERS[None, None, :]), axis=2)
        worst = max(worst, float(dev.max()))
        total += dev.size
        conforming += int(np.count_nonzero(dev < 1e-10))
    return {"pairs_checked": len(basis_pairs), "products": total,
            "conforming": conforming, "max_deviation": worst,
            "holds": conforming == total}


def _sampled_basis_pairs(n_bases: int, count: int = 128) -> list[tuple[int, int]]:
    pairs = [(i, i) for i in range(n_bases)]
    pairs += [(i, (i + 1) % n_bases) for i in range(n_bases - 1)]
    rng = np.random.default_rng(0)
    for _ in range(count):
        i, j = rng.integers(0, n_bases, 2)
        if i != j:
            pairs.append((min(i, j), max(i, j)))
    return sorted(set(pairs))


def build_mub(log2_dim: int, self_check: str = "auto") -> Dictionary:
    """Dictionary concatenating the N mutually unbiased bases of C^N, N = 2^m.

    Every entry lies in {+1, -1, +i, -i}/sqrt(N) and the coherence is
    1/sqrt(N).  ``self_check`` is "full", "sampled" or "auto" (full up to
    N = 128, sampled above); the check verifies within-basis orthonormality
    and cross-basis unbiasedness on exact integer arithmetic and raises on
    any violation.
    """
    if not 1 <= log2_dim <= 8:
        raise DictionaryError(f"log2 dimension {log2_dim} outside [1, 8]")
    if self_check not in ("full", "sampled", "auto", "none"):
        raise DictionaryError(f"unknown self_check mode {self_check!r}")
    dim = 1 << log2_dim
    exponents = mub_exponent_table(log2_dim)
    entries = _I_POWERS[exponents] / np.sqrt(dim)
    d = Dictionary(
        kind=KIND_MUB,
        entries=entries,
        is_real=False,
        meta={"log2_dim": log2_dim},
        _mu=1.0 / np.sqrt(dim),
    )
    if self_check == "auto":
        self_check = "full" if dim <= 128 else "sampled"
    if self_check != "none":
        pairs = None if self_check == "full" else _sampled_basis_pairs(dim)
        within, cross = unbiasedness_deviation(d, pairs)
        if within > 1e-10 or cross > 1e-10:
            raise DictionaryError(
                f"MUB self-check failed for N={dim}: within-basis deviation "
                f"{within:.3e}, cross-basis deviation {cross:.3e}")
    return d


def apply_random_phase(d: Dictionary, seed: int) -> Dictionary:
    """Rotate every column by a seeded uniform random phase.

    Column i is scaled by exp(j theta_i) with theta_i i.i.d. uniform over
    [0, 2 pi) drawn from ``numpy.random.default_rng(seed)``.  Norms, Gram
    magnitudes and coherence are unchanged; the seed is recorded so encoder
    and decoder can rebuild the same matrix.
    """
    if d.kind != KIND_MUB:
        raise DictionaryError(f"random phase applies to '{KIND_MUB}' dictionaries, got {d.kind!r}")
    phases = column_phases(seed, d.n_cols)
    return Dictionary(
        kind=KIND_MUB_RANDOM_PHASE,
        entries=d.entries * phases[None, :],
        is_real=False,
        subblock_lengths=d.subblock_lengths,
        phase_seed=int(seed),
        meta=dict(d.meta),
        _mu=d._mu,
    )


def column_phases(seed: int, n_cols: int) -> np.ndarray:
    """The deterministic per-column phase factors for a given seed."""
    theta = np.random.default_rng(seed).uniform(0.0, 2.0 * np.pi, n_cols)
    return np.exp(1j * theta)


# ---------------------------------------------------------------------------
# Coherence, Gram access, subblock planning
# ---------------------------------------------------------------------------

def mutual_coherence(d: Dictionary, block: int = 512) -> float:
    """max_{p != q} |<a_p, a_q>| over all column pairs, cached on the dictionary.

    Computed blockwise against the full matrix so memory stays bounded for
    large L.  Columns are unit-norm, so no normalization is applied beyond
    the construction guarantee.
    """
    if d.n_cols < 2:
        raise DictionaryError("coherence needs at least two columns")
    conj_t = d.entries.T if d.is_real else d.entries.conj().T
    best = 0.0
    for start in range(0, d.n_cols, block):
        stop = min(start + block, d.n_cols)
        sub = np.abs(conj_t @ d.entries[:, start:stop])
        width = stop - start
        sub[start + np.arange(width), np.arange(width)] = 0.0
        best = max(best, float(sub.max()))
    d._mu = best
    return best


def gram(d: Dictionary, max_cols: int = 4096) -> np.ndarray:
    """Dense Gram matrix A^H A; refused above ``max_cols`` columns."""
    if d.n_cols > max_cols:
        raise GramSizeError(
            f"dense Gram for L={d.n_cols} refused (limit {max_cols}); "
            "use gram_columns() to stream")
    conj_t = d.entries.T if d.is_real else d.entries.conj().T
    return conj_t @ d.entries


def gram_columns(d: Dictionary, indices) -> np.ndarray:
    """Columns of the Gram matrix, computed on demand: (A^H A)[:, indices]."""
    idx = np.atleast_1d(np.asarray(indices, dtype=np.int64))
    conj_t = d.entries.T if d.is_real else d.entries.conj().T
    return conj_t @ d.entries[:, idx]


def partition_subblocks(total_cols: int, k: int) -> tuple[int, ...]:
    """Split ``total_cols`` columns into k power-of-two subblocks.

    Iterative rule: start with the largest power of two not exceeding the
    column count; at each step either open a new subblock from the remaining
    columns (when at least half the current largest block remains) or halve
    the largest block.  The result maximizes the total of floor(log2 L_k)
    over all power-of-two compositions and is returned sorted descending.
    """
    if total_cols < 2:
        raise DictionaryError("need at least two columns to partition")
    if not 1 <= k <= total_cols // 2:
        raise DictionaryError(f"sparsity {k} outside [1, {total_cols // 2}] for {total_cols} columns")
    lengths = [1 << (total_cols.bit_length() - 1)]
    for _ in range(k - 1):
        lengths.sort()
        remaining = total_cols - sum(lengths)
        largest = lengths[-1]
        if remaining >= largest // 2 and remaining >= 1:
            lengths.append(1 << (remaining.bit_length() - 1))
        else:
            lengths[-1] = largest // 2
            lengths.append(largest // 2)
    return tuple(sorted(lengths, reverse=True))


# ---------------------------------------------------------------------------
# Binary cache files
# ---------------------------------------------------------------------------

_MAGIC = b"SCDICT01"
_KIND_CODES = {KIND_GOLD: 0, KIND_MUB: 1, KIND_MUB_RANDOM_PHASE: 2}
_KIND_NAMES = {v: k for k, v in _KIND_CODES.items()}
_FLAG_IDENTITY = 1
_FLAG_PHASE_SEED = 2


def _pack_exponents(exponents: np.ndarray) -> bytes:
    flat = exponents.reshape(-1)
    pad = (-flat.size) % 4
    flat = np.concatenate([flat, np.zeros(pad, dtype=np.uint8)])
    quads = flat.reshape(-1, 4)
    packed = (quads[:, 0] | (quads[:, 1] << 2) | (quads[:, 2] << 4) | (quads[:, 3] << 6))
    return packed.astype(np.uint8).tobytes()


def _unpack_exponents(blob: bytes, count: int) -> np.ndarray:
    packed = np.frombuffer(blob, dtype=np.uint8)
    quads = np.empty((packed.size, 4), dtype=np.uint8)
    quads[:, 0] = packed & 3
    quads[:, 1] = (packed >> 2) & 3
    quads[:, 2] = (packed >> 4) & 3
    quads[:, 3] = (packed >> 6) & 3
    return quads.reshape(-1)[:count]


def save_dictionary(d: Dictionary, path) -> None:
    """Write a compact binary cache: header plus 1- or 2-bit entry codes.

    Gold entries are stored as sign bits (1 bit each, identity column
    regenerated from its header flag); quaternary entries as 2-bit powers of
    i.  Random-phase dictionaries store the base matrix codes plus the seed.
    """
    n_rows, n_cols = d.entries.shape
    if d.kind == KIND_GOLD:
        payload_cols = n_cols - (1 if d.meta.get("identity_column") else 0)
        signs = d.entries[:, :payload_cols] < 0
        payload = np.packbits(signs.reshape(-1)).tobytes()
    else:
        base = d.entries
        if d.kind == KIND_MUB_RANDOM_PHASE:
            base = base / column_phases(d.phase_seed, n_cols)[None, :]
        exponents = np.round(np.angle(base * np.sqrt(n_rows)) / (np.pi / 2)).astype(np.int64) % 4
        payload = _pack_exponents(exponents.astype(np.uint8))

    flags = 0
    if d.meta.get("identity_column"):
        flags |= _FLAG_IDENTITY
    if d.phase_seed is not None:
        flags |= _FLAG_PHASE_SEED
    header = struct.pack(
        "<8sBBBBIIQII",
        _MAGIC,
        _KIND_CODES[d.kind],
        d.meta.get("degree", d.meta.get("log2_dim", 0)),
        flags,
        len(d.subblock_lengths),
        n_rows,
        n_cols,
        d.phase_seed if d.phase_seed is not None else 0,
        d.meta.get("poly_a", 0),
        d.meta.get("poly_b", 0),
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(struct.pack(f"<{len(d.subblock_lengths)}I", *d.subblock_lengths))
        fh.write(payload)


def load_dictionary(path) -> Dictionary:
    """Rebuild a dictionary saved by :func:`save_dictionary`, bit-exactly."""
    with open(path, "rb") as fh:
        header = fh.read(struct.calcsize("<8sBBBBIIQII"))
        if len(header) < struct.calcsize("<8sBBBBIIQII") or header[:8] != _MAGIC:
            raise DictionaryError(f"not a dictionary cache file: {path}")
        _, kind_code, param, flags, n_sub, n_rows, n_cols, seed, poly_a, poly_b = \
            struct.unpack("<8sBBBBIIQII", header)
        subblocks = struct.unpack(f"<{n_sub}I", fh.read(4 * n_sub))
        payload = fh.read()

    kind = _KIND_NAMES[kind_code]
    if kind == KIND_GOLD:
        has_identity = bool(flags & _FLAG_IDENTITY)
        payload_cols = n_cols - (1 if has_identity else 0)
        signs = np.unpackbits(np.frombuffer(payload, dtype=np.uint8),
                              count=n_rows * payload_cols).reshape(n_rows, payload_cols)
        entries = np.empty((n_rows, n_cols), dtype=np.float64)
        entries[:, :payload_cols] = (1.0 - 2.0 * signs) / np.sqrt(n_rows)
        if has_identity:
            e_first = np.zeros(n_rows)
            e_first[0] = 1.0
            entries[:, -1] = e_first
        d = Dictionary(kind=kind, entries=entries, is_real=True,
                       subblock_lengths=tuple(subblocks),
                       meta={"degree": param, "poly_a": poly_a, "poly_b": poly_b,
                             "identity_column": has_identity})
        return d

    exponents = _unpack_exponents(payload, n_rows * n_cols).reshape(n_rows, n_cols)
    entries = _I_POWERS[exponents] / np.sqrt(n_rows)
    base = Dictionary(kind=KIND_MUB, entries=entries, is_real=False,
                      subblock_lengths=tuple(subblocks), meta={"log2_dim": param})
    if kind == KIND_MUB_RANDOM_PHASE:
        d = apply_random_phase(base, seed)
        return replace(d, subblock_lengths=tuple(subblocks))
    return base
