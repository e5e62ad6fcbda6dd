"""Greedy sparse-recovery decoders and an exhaustive ML oracle.

The workhorse is ``mad`` (match and decode): per iteration it correlates the
residual with every unused column, jointly picks the column/symbol pair with
the largest score Re{c_i conj(b_m)} - |b_m|^2 / 2, and subtracts the detected
contribution from the residual.  ``parallel_mad`` branches the first (most
error-prone) detection across the top T candidate columns and keeps the
branch whose recovered codeword is closest to the observation.  ``omp`` is
the classic orthogonal-matching-pursuit baseline with per-iteration least
squares and final quantization to the constellation.

Everything is implemented on batched kernels operating on (B, L) arrays so a
Monte Carlo harness can decode thousands of observations per call; the public
single-observation functions wrap the same kernels with B = 1, which keeps
both paths trivially consistent.  The (B, L) orientation keeps every hot loop
(symbol scoring, masked argmax, Gram-row gathers) on contiguous memory.

Correlation bookkeeping: after the first iteration, correlations can be
updated through Gram-matrix entries instead of recomputed from the residual
(``<r - b a, a_i> = <r, a_i> - b <a, a_i>``).  Gram rows come from a provider
chosen to fit the dictionary: integer-coded dense forms for the quaternary
and Gold alphabets (exact small-integer entries, one or two bytes each), or
a plain matrix product as the fallback.
"""

from __future__ import annotations

import itertools
import math
import weakref
from dataclasses import dataclass

import numpy as np

from .codec import Constellation, SparseMessage
from .dictionaries import (Dictionary, KIND_GOLD, KIND_MUB, KIND_MUB_RANDOM_PHASE,
                           column_phases, gold_family_sequences, gold_correlation_table)

QUATERNARY_DENSE_MAX_COLS = 4096


class DecodeError(ValueError):
    """Invalid decoder configuration or observation."""


@dataclass(frozen=True)
class DecodeConfig:
    """Options shared by the greedy decoders.

    ``paths`` is the branching factor T of parallel MAD; ``subblock_discard``
    restricts detections to one column per dictionary subblock (and requires a
    partitioned dictionary); ``gram_recursion=None`` lets the decoder pick the
    correlation-update strategy (recursion via a Gram provider), ``False``
    forces a residual recomputation every iteration.
    """

    sparsity: int
    constellation: Constellation
    subblock_discard: bool = False
    paths: int = 1
    gram_recursion: bool | None = None

    def __post_init__(self):
        if self.paths < 1:
            raise DecodeError("parallel path count must be >= 1")
        if self.sparsity < 1:
            raise DecodeError("sparsity must be >= 1")


@dataclass(frozen=True)
class MatchMetrics:
    """Correlations c_i and per-column/per-symbol scores p_{i,m}."""

    correlations: np.ndarray
    scores: np.ndarray


# ---------------------------------------------------------------------------
# Cached conjugate entries (for (B, L)-oriented correlation products)
# ---------------------------------------------------------------------------

_CONJ_CACHE = weakref.WeakKeyDictionary()


def _conj_entries(d: Dictionary) -> np.ndarray:
    if d.is_real:
        return d.entries
    cached = _CONJ_CACHE.get(d)
    if cached is None:
        cached = d.entries.conj()
        _CONJ_CACHE[d] = cached
    return cached


def _correlate_rows(d: Dictionary, arr: np.ndarray) -> np.ndarray:
    """Correlations <arr_b, a_i> for every column, as rows: (N, B) -> (B, L)."""
    return np.matmul(arr.T, _conj_entries(d))


# ---------------------------------------------------------------------------
# Gram providers (serve rows of the conjugated Gram: row b holds <a_idx[b], a_i>)
# ---------------------------------------------------------------------------

class DenseGram:
    """Materialized conjugate Gram (small or irregular dictionaries)."""

    def __init__(self, d: Dictionary):
        conj_t = d.entries.T if d.is_real else d.entries.conj().T
        g = conj_t @ d.entries
        self._g_conj = g if d.is_real else np.conj(g)

    def rows(self, idx: np.ndarray) -> np.ndarray:
        return self._g_conj[idx]


class QuaternaryDenseGram:
    """Gram stored as int8 real/imag parts of N <a_p, a_q> (exact).

    Works for quaternary-alphabet dictionaries where every scaled Gram entry
    is a Gaussian integer with |entry|^2 <= N; the imaginary part is stored
    conjugated so a row gather directly yields ``<a_p, a_i>`` over i.  An
    optional per-column phase vector extends it to random-phase variants.
    """

    def __init__(self, d: Dictionary):
        base = d.entries
        phases = None
        if d.kind == KIND_MUB_RANDOM_PHASE:
            phases = column_phases(d.phase_seed, d.n_cols)
            base = base / phases[None, :]
        scaled = base * np.sqrt(d.n_rows)
        g_int = scaled.conj().T @ scaled
        self._re = np.rint(g_int.real).astype(np.int8)
        self._im_conj = np.rint(-g_int.imag).astype(np.int8)
        if np.max(np.abs(self._re - g_int.real)) > 1e-6 or \
           np.max(np.abs(self._im_conj + g_int.imag)) > 1e-6:
            raise DecodeError("dictionary Gram is not integer-coded; use another provider")
        self._inv_n = 1.0 / d.n_rows
        self._phases = phases
        self._phases_conj = np.conj(phases) if phases is not None else None

    def rows(self, idx: np.ndarray) -> np.ndarray:
        g = np.empty(self._re[idx].shape, dtype=np.complex128)
        g.real = np.multiply(self._re[idx], self._inv_n)
        g.imag = np.multiply(self._im_conj[idx], self._inv_n)
        if self._phases is not None:
            g *= self._phases[idx][:, None]
            g *= self._phases_conj[None, :]
        return g


class GoldCorrelationGram:
    """Gram of a Gold dictionary, stored as exact int8 correlation codes.

    Every column is a circular shift of one of the 2^n + 1 base sequences, so
    ``N <a_p, a_q>`` is a base-pair circular correlation: a small integer from
    the three-valued Gold spectrum.  Expanding the (n_seqs, n_seqs, N) table
    into circulant blocks gives the full symmetric Gram in one byte per entry
    (268 MB at n = 7, versus 4.3 GB in float64); the appended standard-basis
    column holds first-chip codes scaled by sqrt(N) instead.
    """

    def __init__(self, d: Dictionary):
        family = gold_family_sequences(d.meta["degree"], (d.meta["poly_a"], d.meta["poly_b"]))
        table = gold_correlation_table(family).astype(np.int8)
        n = d.n_rows
        n_seqs = family.shape[0]
        self._n = n
        self._has_identity = bool(d.meta.get("identity_column"))
        self._id_col = d.n_cols - 1 if self._has_identity else None

        g8 = np.empty((d.n_cols, d.n_cols), dtype=np.int8)
        lag = (np.arange(n)[:, None] - np.arange(n)[None, :]) % n
        span = n_seqs * n
        for s_i in range(n_seqs):
            block = table[s_i][:, lag]                    # (n_seqs, n, n)
            g8[s_i * n:(s_i + 1) * n, :span] = block.transpose(1, 0, 2).reshape(n, span)
        if self._has_identity:
            # codes against the standard-basis column are sqrt(N) <.,.>: +-1 chips
            chips = family[np.arange(span) // n, (-(np.arange(span) % n)) % n]
            g8[:span, self._id_col] = chips
            g8[self._id_col, :span] = chips
            g8[self._id_col, self._id_col] = 0  # rewritten on access
        self._g8 = g8

    def rows(self, idx: np.ndarray) -> np.ndarray:
        return self.rows_scaled(idx, None)

    def rows_scaled(self, idx: np.ndarray, scale) -> np.ndarray:
        """Gram rows with an optional per-row factor fused into the int8
        conversion pass (saves a full float64 sweep in the decode loop)."""
        factor = 1.0 / self._n if scale is None else scale[:, None] * (1.0 / self._n)
        g = np.multiply(self._g8[idx], factor)            # int8 rows -> float64
        if self._has_identity:
            inv_sqrt = 1.0 / np.sqrt(self._n)
            id_factor = inv_sqrt if scale is None else scale * inv_sqrt
            g[:, self._id_col] = self._g8[idx, self._id_col] * id_factor
            ident = idx == self._id_col
            if np.any(ident):
                row = self._g8[self._id_col] * inv_sqrt
                row[self._id_col] = 1.0
                g[ident, :] = row[None, :] if scale is None \
                    else scale[ident, None] * row[None, :]
        return g


class MatvecGram:
    """Fallback: Gram rows via (A[:, idx])^T conj(A)."""

    def __init__(self, d: Dictionary):
        self._d = d

    def rows(self, idx: np.ndarray) -> np.ndarray:
        return np.matmul(self._d.entries[:, idx].T, _conj_entries(self._d))


_PROVIDER_CACHE = weakref.WeakKeyDictionary()


def make_gram_provider(d: Dictionary):
    """Pick the cheapest exact Gram-row provider for a dictionary.

    Providers are cached per dictionary instance; dictionaries are immutable,
    so repeated decodes share one provider.
    """
    provider = _PROVIDER_CACHE.get(d)
    if provider is not None:
        return provider
    try:
        if d.kind == KIND_GOLD and "degree" in d.meta:
            provider = GoldCorrelationGram(d)
        elif d.kind in (KIND_MUB, KIND_MUB_RANDOM_PHASE) and d.n_cols <= QUATERNARY_DENSE_MAX_COLS:
            provider = QuaternaryDenseGram(d)
        else:
            provider = MatvecGram(d)
    except DecodeError:
        provider = MatvecGram(d)  # hand-built matrices without coded structure
    _PROVIDER_CACHE[d] = provider
    return provider


# ---------------------------------------------------------------------------
# Scoring
# ---------------------------------------------------------------------------

_QPSK_SYMBOLS = np.exp(1j * np.pi * np.array([1, 3, 5, 7]) / 4)


def _use_real_path(d: Dictionary, constellation: Constellation) -> bool:
    return d.is_real and constellation.is_real


def _symbol_scores(corr: np.ndarray, symbols: np.ndarray, real_path: bool):
    """Best score and symbol index per column: max_m Re{c conj(b_m)} - 1/2.

    Ties go to the lowest symbol index (strict improvement when scanning in
    index order).  Unit-energy constellations make the bias term constant.
    The M=1, BPSK and QPSK cases take shortcuts: rotating by a fourth root of
    unity is an exact swap/negate, so the shortcut evaluates the same metric
    without per-symbol complex multiplies.
    """
    if symbols.size == 1 and real_path:
        return corr - 0.5, np.zeros(corr.shape, dtype=np.int8)
    if real_path and symbols.size == 2 and symbols[0] == 1.0 and symbols[1] == -1.0:
        scores = np.abs(corr)
        scores -= 0.5
        return scores, (corr < 0).view(np.int8)
    if not real_path and symbols.size == 4 and np.array_equal(symbols, _QPSK_SYMBOLS):
        z = corr * np.conj(_QPSK_SYMBOLS[0])
        re, im = z.real, z.imag
        best = re.copy()
        best_m = np.zeros(corr.shape, dtype=np.int8)
        for m, cand in ((1, im), (2, -re), (3, -im)):
            better = cand > best
            np.copyto(best, cand, where=better)
            best_m[better] = m
        best -= 0.5
        return best, best_m

    def proj(m):
        if real_path:
            return corr * symbols[m].real
        return (corr * np.conj(symbols[m])).real

    best = proj(0)
    best_m = np.zeros(corr.shape, dtype=np.int8)
    for m in range(1, symbols.size):
        cand = proj(m)
        better = cand > best
        np.copyto(best, cand, where=better)
        best_m[better] = m
    return best - 0.5, best_m


def match_metrics(residual: np.ndarray, d: Dictionary, constellation: Constellation,
                  excluded=()) -> MatchMetrics:
    """Correlate one residual with every column and score all symbol pairs.

    ``scores[i, m] = Re{c_i conj(b_m)} - |b_m|^2 / 2`` with excluded columns
    pinned to -inf.
    """
    residual = np.asarray(residual)
    if residual.shape != (d.n_rows,):
        raise DecodeError(f"residual must have length {d.n_rows}")
    corr = _correlate_rows(d, residual.astype(np.complex128)[:, None])[0]
    symbols = constellation.symbols
    scores = (corr[:, None] * np.conj(symbols)[None, :]).real - np.abs(symbols)[None, :] ** 2 / 2
    idx = np.asarray(sorted(excluded), dtype=np.int64)
    if idx.size:
        scores[idx - 1, :] = -np.inf
    return MatchMetrics(correlations=corr, scores=scores)


# ---------------------------------------------------------------------------
# Batched greedy kernels
# ---------------------------------------------------------------------------

class _BatchState:
    """Immutable per-call context shared by the batched decoders."""

    def __init__(self, d: Dictionary, cfg: DecodeConfig, y: np.ndarray):
        self.d = d
        self.cfg = cfg
        self.real_path = _use_real_path(d, cfg.constellation)
        self.symbols = cfg.constellation.symbols
        if cfg.sparsity > d.n_rows:
            raise DecodeError(f"sparsity {cfg.sparsity} exceeds codeword length {d.n_rows}")
        self.block_ids = None
        if cfg.subblock_discard:
            if not d.subblock_lengths:
                raise DecodeError("subblock_discard requires a partitioned dictionary")
            if cfg.sparsity > len(d.subblock_lengths):
                raise DecodeError("sparsity exceeds the number of subblocks")
            self.block_ids = d.subblock_of_column()
        self.y = y.real if self.real_path and np.iscomplexobj(y) else y
        self.use_recursion = cfg.gram_recursion is not False
        self.provider = make_gram_provider(d) if self.use_recursion else None

    def initial_excluded(self, batch: int) -> np.ndarray:
        excluded = np.zeros((batch, self.d.n_cols), dtype=bool)
        if self.block_ids is not None:
            excluded[:, self.block_ids < 0] = True
        return excluded

    def exclude_detection(self, excluded, chosen):
        if self.block_ids is not None:
            excluded |= self.block_ids[None, :] == self.block_ids[chosen][:, None]
        else:
            excluded[np.arange(chosen.size), chosen] = True

    def beta_of(self, m_hat: np.ndarray) -> np.ndarray:
        beta = self.symbols[m_hat]
        return beta.real if self.real_path else beta


def _apply_update(state: _BatchState, corr, resid, chosen, beta):
    """One detected (column, symbol) per batch item; update corr or residual."""
    if state.use_recursion:
        if hasattr(state.provider, "rows_scaled") and not np.iscomplexobj(beta):
            g = state.provider.rows_scaled(chosen, np.asarray(beta, dtype=np.float64))
        else:
            g = state.provider.rows(chosen)
            np.multiply(g, beta[:, None], out=g)
        np.subtract(corr, g, out=corr)
    else:
        resid -= beta[None, :] * state.d.entries[:, chosen]
        corr[...] = _correlate_rows(state.d, resid)


def _run_mad_iterations(state: _BatchState, corr, resid, excluded, sup, sym, start: int):
    """Drive detections start..K-1, updating corr/resid/excluded in place."""
    k = state.cfg.sparsity
    batch = corr.shape[0]
    rows_idx = np.arange(batch)
    for it in range(start, k):
        scores, best_m = _symbol_scores(corr, state.symbols, state.real_path)
        scores[excluded] = -np.inf
        chosen = np.argmax(scores, axis=1)
        if np.any(np.isneginf(scores[rows_idx, chosen])):
            raise DecodeError("ran out of admissible columns before reaching sparsity")
        m_hat = best_m[rows_idx, chosen]
        sup[it] = chosen
        sym[it] = m_hat
        state.exclude_detection(excluded, chosen)
        if it < k - 1:
            _apply_update(state, corr, resid, chosen, state.beta_of(m_hat))
    return sup, sym


def mad_batch(y_batch: np.ndarray, d: Dictionary, cfg: DecodeConfig,
              partial_support: np.ndarray | None = None,
              partial_symbols: np.ndarray | None = None,
              _state: _BatchState | None = None, _corr0: np.ndarray | None = None):
    """Batched MAD decode of observations stacked as columns of (N, B).

    Optional partial information seeds the first ``t0`` detections for every
    batch item: ``partial_support``/``partial_symbols`` are (t0, B) arrays of
    0-based column indices and symbol indices.  Returns (support, symbols)
    index arrays of shape (K, B).
    """
    state = _state if _state is not None else _BatchState(d, cfg, y_batch)
    batch = state.y.shape[1]
    k = cfg.sparsity
    sup = np.zeros((k, batch), dtype=np.int64)
    sym = np.zeros((k, batch), dtype=np.int8)
    t0 = 0
    if partial_support is not None:
        t0 = partial_support.shape[0]
        if t0 > k:
            raise DecodeError("partial information longer than the sparsity level")
        sup[:t0] = partial_support
        sym[:t0] = partial_symbols

    resid = state.y.copy() if not state.use_recursion else None
    excluded = state.initial_excluded(batch)
    if state.use_recursion and _corr0 is not None:
        corr = _corr0.copy()
    else:
        corr = _correlate_rows(d, state.y if state.use_recursion else resid)
    for it in range(t0):
        state.exclude_detection(excluded, sup[it])
        _apply_update(state, corr, resid, sup[it], state.beta_of(sym[it]))
    _run_mad_iterations(state, corr, resid, excluded, sup, sym, t0)
    return sup, sym


def _top_candidates(scores: np.ndarray, t: int) -> np.ndarray:
    """Per batch item, the T best-scoring columns as a (B, T) array ordered by
    descending score with ties broken toward the lowest column index
    (deterministic even at boundary ties)."""
    batch, n = scores.shape
    if t > n:
        raise DecodeError(f"path count {t} exceeds {n} columns")
    if np.any(np.sum(np.isfinite(scores), axis=1) < t):
        raise DecodeError("path count exceeds the admissible columns")
    boundary = np.partition(scores, n - t, axis=1)[:, n - t]
    above = scores > boundary[:, None]
    need = t - above.sum(axis=1)
    at_boundary = scores == boundary[:, None]
    fill = at_boundary & (np.cumsum(at_boundary, axis=1) <= need[:, None])
    selected = above | fill
    items, cols = np.nonzero(selected)
    assert items.size == t * batch
    cand = cols.reshape(batch, t)                     # ascending column index
    cand_scores = np.take_along_axis(scores, cand, axis=1)
    order = np.argsort(-cand_scores, axis=1, kind="stable")
    return np.take_along_axis(cand, order, axis=1)


def parallel_mad_batch(y_batch: np.ndarray, d: Dictionary, cfg: DecodeConfig):
    """Batched parallel MAD: T first-iteration branches, closest codeword wins."""
    state = _BatchState(d, cfg, y_batch)
    batch = state.y.shape[1]
    rows_idx = np.arange(batch)
    corr0 = _correlate_rows(d, state.y)
    scores0, best_m0 = _symbol_scores(corr0, state.symbols, state.real_path)
    scores0[state.initial_excluded(batch)] = -np.inf
    candidates = _top_candidates(scores0, cfg.paths)

    best_dist = np.full(batch, np.inf)
    best_sup = np.zeros((cfg.sparsity, batch), dtype=np.int64)
    best_sym = np.zeros((cfg.sparsity, batch), dtype=np.int8)
    for branch in range(cfg.paths):
        seed = candidates[:, branch]
        seed_sup = seed[None, :]
        seed_sym = best_m0[rows_idx, seed][None, :]
        sup, sym = mad_batch(y_batch, d, cfg, seed_sup, seed_sym,
                             _state=state, _corr0=corr0 if state.use_recursion else None)
        synth = np.zeros_like(state.y)
        for it in range(cfg.sparsity):
            beta = state.beta_of(sym[it])
            synth += beta[None, :] * d.entries[:, sup[it]]
        dist = np.linalg.norm(state.y - synth, axis=0)
        better = dist < best_dist  # strict: ties keep the higher-score branch
        best_dist[better] = dist[better]
        best_sup[:, better] = sup[:, better]
        best_sym[:, better] = sym[:, better]
    return best_sup, best_sym


def omp_batch(y_batch: np.ndarray, d: Dictionary, cfg: DecodeConfig,
              cond_limit: float = 1e8):
    """Batched orthogonal matching pursuit with final constellation snapping.

    Per iteration the column with the largest |<r, a_i>| is added, the
    least-squares coefficients of all selected columns are refit (normal
    equations, pseudo-inverse above ``cond_limit``), and the residual becomes
    the projection of y onto the orthogonal complement of the selection.
    """
    state = _BatchState(d, cfg, y_batch)
    batch = state.y.shape[1]
    rows_idx = np.arange(batch)
    k = cfg.sparsity
    excluded = state.initial_excluded(batch)
    resid = state.y.astype(np.float64 if state.real_path else np.complex128).copy()
    sup = np.zeros((k, batch), dtype=np.int64)
    coef = None
    for it in range(k):
        corr = _correlate_rows(d, resid)
        mags = np.abs(corr)
        mags[excluded] = -np.inf
        chosen = np.argmax(mags, axis=1)
        if np.any(np.isneginf(mags[rows_idx, chosen])):
            raise DecodeError("ran out of admissible columns before reaching sparsity")
        sup[it] = chosen
        state.exclude_detection(excluded, chosen)

        picked = d.entries[:, sup[:it + 1].T]                   # (N, B, t)
        picked = np.transpose(picked, (1, 0, 2))                # (B, N, t)
        picked_h = picked.conj().transpose(0, 2, 1) if not state.real_path \
            else picked.transpose(0, 2, 1)
        gram_s = picked_h @ picked                              # (B, t, t)
        rhs = (picked_h @ state.y.T[:, :, None])[..., 0]        # (B, t)
        conds = np.linalg.cond(gram_s)
        coef = np.empty_like(rhs)
        stable = conds <= cond_limit
        if np.any(stable):
            coef[stable] = np.linalg.solve(gram_s[stable], rhs[stable][..., None])[..., 0]
        if np.any(~stable):
            pinv = np.linalg.pinv(gram_s[~stable])
            coef[~stable] = (pinv @ rhs[~stable][..., None])[..., 0]
        resid = state.y - (picked @ coef[..., None])[..., 0].T
    # snap least-squares coefficients to the nearest constellation points
    dists = np.abs(coef[..., None] - state.symbols[None, None, :])
    sym = np.argmin(dists, axis=2).astype(np.int8).T
    return sup, sym


# ---------------------------------------------------------------------------
# Single-observation API
# ---------------------------------------------------------------------------

def _to_message(sup: np.ndarray, sym: np.ndarray, constellation: Constellation) -> SparseMessage:
    support = tuple(int(i) + 1 for i in sup[:, 0])
    symbols = tuple(complex(constellation.symbols[m]) for m in sym[:, 0])
    return SparseMessage(support, symbols)


def _partial_arrays(partial: SparseMessage | None, constellation: Constellation):
    if partial is None or partial.sparsity == 0:
        return None, None
    sup = np.array([[alpha - 1] for alpha in partial.support], dtype=np.int64)
    sym = np.empty((len(partial.support), 1), dtype=np.int8)
    for i, beta in enumerate(partial.symbols):
        idx = int(np.argmin(np.abs(constellation.symbols - beta)))
        if abs(constellation.symbols[idx] - beta) > 1e-9:
            raise DecodeError("partial symbol not in the constellation")
        sym[i, 0] = idx
    return sup, sym


def mad(y: np.ndarray, d: Dictionary, cfg: DecodeConfig,
        partial: SparseMessage | None = None) -> SparseMessage:
    """Greedy match-and-decode of one observation into an exactly-K message."""
    sup0, sym0 = _partial_arrays(partial, cfg.constellation)
    sup, sym = mad_batch(np.asarray(y)[:, None], d, cfg, sup0, sym0)
    return _to_message(sup, sym, cfg.constellation)


def parallel_mad(y: np.ndarray, d: Dictionary, cfg: DecodeConfig) -> SparseMessage:
    """T-branch MAD with minimum-distance selection of the final estimate."""
    sup, sym = parallel_mad_batch(np.asarray(y)[:, None], d, cfg)
    return _to_message(sup, sym, cfg.constellation)


def omp(y: np.ndarray, d: Dictionary, cfg: DecodeConfig) -> SparseMessage:
    """Orthogonal matching pursuit baseline."""
    sup, sym = omp_batch(np.asarray(y)[:, None], d, cfg)
    return _to_message(sup, sym, cfg.constellation)


def decode_with_trace(y: np.ndarray, d: Dictionary, cfg: DecodeConfig, algo: str):
    """Decode one observation and collect per-iteration diagnostics.

    Returns ``(message, diagnostics)`` where diagnostics lists, per detection,
    the chosen column (1-based), the symbol index, and the metric margin to
    the runner-up score.  The recovered message matches the plain decoder.
    """
    y = np.asarray(y)
    trace = {"algo": algo, "iterations": []}
    if algo in ("mad", "omp"):
        state = _BatchState(d, cfg, y[:, None])
        excluded = state.initial_excluded(1)
        resid = state.y.astype(np.float64 if state.real_path else np.complex128).copy()
        sup = []
        sym = []
        for it in range(cfg.sparsity):
            corr = _correlate_rows(d, resid)
            if algo == "mad":
                scores, best_m = _symbol_scores(corr, state.symbols, state.real_path)
            else:
                scores = np.abs(corr)
                best_m = np.zeros(corr.shape, dtype=np.int8)
            scores[excluded] = -np.inf
            flat = scores[0]
            chosen = int(np.argmax(flat))
            runner_up = np.partition(flat, flat.size - 2)[flat.size - 2]
            margin = float(flat[chosen] - runner_up) if np.isfinite(runner_up) else float("inf")
            m_hat = int(best_m[0, chosen])
            sup.append(chosen)
            sym.append(m_hat)
            trace["iterations"].append(
                {"column": chosen + 1, "symbol_index": m_hat, "margin": margin})
            state.exclude_detection(excluded, np.array([chosen]))
            if algo == "mad":
                beta = state.symbols[m_hat]
                if state.real_path:
                    beta = beta.real
                resid[:, 0] -= beta * d.entries[:, chosen]
            else:
                picked = d.entries[:, sup]
                coef = np.linalg.lstsq(picked, state.y[:, 0], rcond=None)[0]
                resid[:, 0] = state.y[:, 0] - picked @ coef
        if algo == "omp":
            final_sup, final_sym = omp_batch(y[:, None], d, cfg)
            msg = _to_message(final_sup, final_sym, cfg.constellation)
            for it, entry in enumerate(trace["iterations"]):
                entry["symbol_index"] = int(final_sym[it, 0])
            return msg, trace
        msg = _to_message(np.array(sup)[:, None], np.array(sym)[:, None], cfg.constellation)
        return msg, trace
    if algo == "pmad":
        msg = parallel_mad(y, d, cfg)
        sup, sym = parallel_mad_batch(y[:, None], d, cfg)
        trace["iterations"] = [
            {"column": int(c) + 1, "symbol_index": int(m), "margin": None}
            for c, m in zip(sup[:, 0], sym[:, 0])]
        return msg, trace
    if algo == "ml":
        msg = ml_oracle(y, d, cfg.sparsity, cfg.constellation)
        trace["iterations"] = [
            {"column": alpha, "symbol_index": int(np.argmin(
                np.abs(cfg.constellation.symbols - beta))), "margin": None}
            for alpha, beta in zip(msg.support, msg.symbols)]
        return msg, trace
    raise DecodeError(f"unknown algorithm {algo!r}")


def ml_oracle(y: np.ndarray, d: Dictionary, sparsity: int,
              constellation: Constellation, subblock_mode: bool = False,
              search_limit: int = 10 ** 6) -> SparseMessage:
    """Exhaustive maximum-likelihood decoder (test oracle).

    Minimizes ||y - A x|| over every admissible message; refuses search
    spaces larger than ``search_limit``.  Ties resolve to the lexicographically
    smallest (support, symbol indices) pair, scanned in that order.
    """
    y = np.asarray(y, dtype=np.complex128)
    symbols = constellation.symbols
    if subblock_mode:
        if len(d.subblock_lengths) != sparsity:
            raise DecodeError("subblock oracle needs a matching partition")
        offsets = np.concatenate(([0], np.cumsum(d.subblock_lengths)))
        supports = itertools.product(
            *[range(int(offsets[k]) + 1, int(offsets[k + 1]) + 1) for k in range(sparsity)])
        n_supports = int(np.prod([int(b) for b in d.subblock_lengths]))
    else:
        supports = itertools.combinations(range(1, d.n_cols + 1), sparsity)
        n_supports = math.comb(d.n_cols, sparsity)
    if n_supports * symbols.size ** sparsity > search_limit:
        raise DecodeError("oracle search space exceeds the guard limit")

    best = None
    best_dist = np.inf
    for support in supports:
        cols = d.entries[:, np.asarray(support) - 1]
        for combo in itertools.product(range(symbols.size), repeat=sparsity):
            cand = cols @ symbols[np.asarray(combo)]
            dist = float(np.linalg.norm(y - cand))
            if dist < best_dist - 1e-15:
                best_dist = dist
                best = (support, combo)
    support, combo = best
    return SparseMessage(tuple(support), tuple(complex(symbols[m]) for m in combo))
