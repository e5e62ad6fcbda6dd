"""Seeded Monte Carlo block-error-rate estimation and persistence.

A simulation config fixes the scheme (dictionary, sc/ssc, K, constellation),
the decoding algorithm, an E_b/N_0 grid and a stopping rule; the harness runs
trials until enough block errors accumulate and appends one CSV record per
grid point.  Reproducibility contract:

* every trial draws its information bits and channel noise from a private
  generator seeded by (master seed, trial index), so outcomes do not depend
  on how trials are distributed over workers;
* trials are decoded in fixed-size slices (``slice_size``), keeping the BLAS
  call shapes identical for any worker count;
* the stopping rule is evaluated on fixed batch boundaries (``batch_size``).

Together these make a rerun of the same config byte-identical in every CSV
column except wall_time, at any worker count.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import time
from dataclasses import dataclass, field

import numpy as np

from . import channel as chan
from . import codec
from . import decoders
from . import dictionaries as dicts

CSV_COLUMNS = ("scheme", "dict_kind", "N", "L", "K", "M", "algo", "T", "ebn0_db",
               "trials", "block_errors", "bler", "ci_low", "ci_high", "seed")
MULTIUSER_EXTRA_COLUMN = "user"
SCHEMA_VERSION = 1
_WILSON_Z = 1.959963984540054  # 97.5% normal quantile: 95% two-sided interval


class SimulationError(ValueError):
    """Invalid simulation configuration or resume state."""


@dataclass(frozen=True)
class StoppingRule:
    min_trials: int = 1000
    min_block_errors: int = 100
    max_trials: int = 10_000_000
    batch_size: int = 1000
    slice_size: int = 250

    def __post_init__(self):
        if self.min_block_errors < 1:
            raise SimulationError("min_block_errors must be >= 1")
        if not (1 <= self.batch_size and 1 <= self.slice_size <= self.batch_size):
            raise SimulationError("need 1 <= slice_size <= batch_size")

    def done(self, trials: int, errors: int) -> bool:
        if trials >= self.max_trials:
            return True
        return trials >= self.min_trials and errors >= self.min_block_errors


@dataclass(frozen=True)
class MultiUserConfig:
    """Multi-user channel description on top of a partitioned ssc scheme."""

    channel: str                       # mac | bc | ic
    assignments: tuple                 # tuple of tuples of subblock ids
    gains: tuple = ()                  # complex effective gains h_i g_i (mac)
    sigma2_scales: tuple = ()          # per-user noise variance / N_0 (bc, ic)
    interference: tuple = ()           # P x P gain rows (ic)

    def __post_init__(self):
        if self.channel not in ("mac", "bc", "ic"):
            raise SimulationError(f"unknown multi-user channel {self.channel!r}")


@dataclass(frozen=True)
class SimConfig:
    """Everything needed to reproduce one BLER curve."""

    dictionary: dict                   # {"kind": "gold", "n": 7} | {"kind": "mub", "m": 6} | {"path": ...}
    scheme: str
    sparsity: int
    constellation: str
    algo: str                          # mad | pmad | omp | ml
    ebn0_grid: tuple
    master_seed: int
    paths: int | None = None           # T for pmad (defaults to sparsity)
    random_phase_seed: int | None = None
    noiseless: bool = False
    stopping: StoppingRule = field(default_factory=StoppingRule)
    output: str | None = None
    multiuser: MultiUserConfig | None = None

    def __post_init__(self):
        if self.algo not in ("mad", "pmad", "omp", "ml"):
            raise SimulationError(f"unknown algorithm {self.algo!r}")
        if not self.ebn0_grid and not self.noiseless:
            raise SimulationError("E_b/N_0 grid must not be empty")

    @property
    def effective_paths(self) -> int:
        return self.paths if self.paths is not None else self.sparsity

    def canonical_dict(self) -> dict:
        data = {
            "schema": SCHEMA_VERSION,
            "dictionary": dict(self.dictionary),
            "scheme": self.scheme,
            "k": self.sparsity,
            "constellation": self.constellation,
            "algo": self.algo,
            "paths": self.effective_paths,
            "random_phase_seed": self.random_phase_seed,
            "noiseless": self.noiseless,
            "ebn0_grid": list(self.ebn0_grid),
            "stopping": {
                "min_trials": self.stopping.min_trials,
                "min_block_errors": self.stopping.min_block_errors,
                "max_trials": self.stopping.max_trials,
                "batch_size": self.stopping.batch_size,
                "slice_size": self.stopping.slice_size,
            },
            "master_seed": self.master_seed,
        }
        if self.multiuser is not None:
            data["multiuser"] = {
                "channel": self.multiuser.channel,
                "assignments": [list(a) for a in self.multiuser.assignments],
                "gains": [[g.real, g.imag] for g in self.multiuser.gains],
                "sigma2_scales": list(self.multiuser.sigma2_scales),
                "interference": [list(row) for row in self.multiuser.interference],
            }
        return data

    def digest(self) -> str:
        payload = json.dumps(self.canonical_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(payload.encode()).hexdigest()[:16]

    def to_json(self) -> str:
        data = self.canonical_dict()
        data["output"] = self.output
        return json.dumps(data, indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> "SimConfig":
        if data.get("schema", SCHEMA_VERSION) != SCHEMA_VERSION:
            raise SimulationError(f"unsupported config schema {data.get('schema')!r}")
        stopping = StoppingRule(**data.get("stopping", {}))
        multiuser = None
        if data.get("multiuser"):
            mu = data["multiuser"]
            multiuser = MultiUserConfig(
                channel=mu["channel"],
                assignments=tuple(tuple(a) for a in mu["assignments"]),
                gains=tuple(complex(g[0], g[1]) for g in mu.get("gains", [])),
                sigma2_scales=tuple(mu.get("sigma2_scales", [])),
                interference=tuple(tuple(row) for row in mu.get("interference", [])),
            )
        return cls(
            dictionary=dict(data["dictionary"]),
            scheme=data["scheme"],
            sparsity=data["k"],
            constellation=data["constellation"],
            algo=data["algo"],
            ebn0_grid=tuple(data.get("ebn0_grid", ())),
            master_seed=data["master_seed"],
            paths=data.get("paths"),
            random_phase_seed=data.get("random_phase_seed"),
            noiseless=data.get("noiseless", False),
            stopping=stopping,
            output=data.get("output"),
            multiuser=multiuser,
        )

    @classmethod
    def from_json(cls, text: str) -> "SimConfig":
        return cls.from_dict(json.loads(text))


@dataclass
class BlerRecord:
    """One Monte Carlo result point."""

    ebn0_db: float
    trials: int
    block_errors: int
    seed: int
    config: SimConfig
    user: str = "all"
    wall_time: float = 0.0

    @property
    def bler(self) -> float:
        return self.block_errors / self.trials

    @property
    def interval(self) -> tuple:
        return confidence_interval(self.block_errors, self.trials)


def confidence_interval(errors: int, trials: int) -> tuple:
    """95% Wilson score interval for a binomial proportion."""
    if trials < 1 or not 0 <= errors <= trials:
        raise SimulationError("need 0 <= errors <= trials, trials >= 1")
    z = _WILSON_Z
    p_hat = errors / trials
    denom = 1.0 + z * z / trials
    center = (p_hat + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p_hat * (1.0 - p_hat) / trials + z * z / (4.0 * trials * trials)) / denom
    low = 0.0 if errors == 0 else max(0.0, center - half)
    high = 1.0 if errors == trials else min(1.0, center + half)
    return (low, high)


# ---------------------------------------------------------------------------
# Trial engine: batched encode -> channel -> decode -> compare
# ---------------------------------------------------------------------------

def build_dictionary_from_config(spec: dict, random_phase_seed=None,
                                 sparsity=None, scheme="ssc") -> dicts.Dictionary:
    if "path" in spec:
        d = dicts.load_dictionary(spec["path"])
    elif spec.get("kind") == "gold":
        d = dicts.build_gold(spec["n"], spec.get("identity_column", True))
    elif spec.get("kind") == "mub":
        d = dicts.build_mub(spec["m"], self_check=spec.get("self_check", "auto"))
    else:
        raise SimulationError(f"cannot build dictionary from {spec!r}")
    if random_phase_seed is not None:
        d = dicts.apply_random_phase(d, random_phase_seed)
    if scheme == "ssc" and sparsity is not None and len(d.subblock_lengths) != sparsity:
        d = d.partition(sparsity)
    return d


class TrialEngine:
    """Vectorized encode/channel/decode pipeline for one SimConfig."""

    def __init__(self, cfg: SimConfig):
        self.cfg = cfg
        self.constellation = codec.Constellation.from_name(cfg.constellation)
        self.dictionary = build_dictionary_from_config(
            cfg.dictionary, cfg.random_phase_seed, cfg.sparsity, cfg.scheme)
        self.spec = codec.make_scheme(self.dictionary, cfg.scheme, cfg.sparsity,
                                      self.constellation)
        self.dictionary = self.spec.dictionary
        self.decode_cfg = decoders.DecodeConfig(
            sparsity=cfg.sparsity,
            constellation=self.constellation,
            subblock_discard=(cfg.scheme == "ssc"),
            paths=cfg.effective_paths,
        )
        self.eb = codec.energy_per_bit(self.spec)
        self.real_signal = self.spec.is_real
        self._prepare_encoder()
        self.multiuser = cfg.multiuser
        if self.multiuser is not None:
            if cfg.scheme != "ssc":
                raise SimulationError("multi-user simulation requires the ssc scheme")
            chan.validate_assignments(self.multiuser.assignments,
                                      len(self.dictionary.subblock_lengths),
                                      require_cover=True)

    # -- encoding ----------------------------------------------------------

    def _prepare_encoder(self):
        spec = self.spec
        bps = self.constellation.bits_per_symbol
        k = spec.sparsity
        self._bps = bps
        if spec.scheme == "ssc":
            blocks = self.dictionary.subblock_lengths
            self._widths = [int(b).bit_length() - 1 for b in blocks]
            self._offsets = np.concatenate(([0], np.cumsum(blocks)[:-1])).astype(np.int64)
        else:
            n_subsets = math.comb(self.dictionary.n_cols, k)
            if n_subsets.bit_length() > 62:
                raise SimulationError("sc subset space too large for the batched encoder")
            self._comb_cols = {}
            for i in range(1, k + 1):
                # comb(c - 1, i) for c = 1..L
                self._comb_cols[i] = np.array(
                    [math.comb(c - 1, i) for c in range(1, self.dictionary.n_cols + 1)],
                    dtype=np.int64)

    def _bits_to_values(self, bits: np.ndarray, start: int, width: int) -> np.ndarray:
        if width == 0:
            return np.zeros(bits.shape[0], dtype=np.int64)
        weights = (1 << np.arange(width - 1, -1, -1)).astype(np.int64)
        return bits[:, start:start + width].astype(np.int64) @ weights

    def encode_batch(self, bits: np.ndarray):
        """(B, N_b) bits -> 0-based support (K, B) and symbol indices (K, B)."""
        batch = bits.shape[0]
        k = self.spec.sparsity
        sym = np.zeros((k, batch), dtype=np.int8)
        for j in range(k):
            sym[j] = self._bits_to_values(bits, j * self._bps, self._bps)
        sup = np.empty((k, batch), dtype=np.int64)
        pos = k * self._bps
        if self.spec.scheme == "ssc":
            for j, width in enumerate(self._widths):
                sup[j] = self._bits_to_values(bits, pos, width) + self._offsets[j]
                pos += width
        else:
            width = self.spec.n_bits - pos
            ranks = self._bits_to_values(bits, pos, width)
            remaining = ranks.copy()
            upper = np.full(batch, self.dictionary.n_cols, dtype=np.int64)
            for i in range(k, 0, -1):
                table = self._comb_cols[i]
                c = np.searchsorted(table, remaining, side="right").astype(np.int64)
                c = np.minimum(c, upper)
                sup[i - 1] = c - 1
                remaining = remaining - table[c - 1]
                upper = c - 1
        return sup, sym

    def synthesize_batch(self, sup: np.ndarray, sym: np.ndarray) -> np.ndarray:
        """Column-by-column accumulation in ascending support order."""
        dtype = np.float64 if self.real_signal else np.complex128
        out = np.zeros((self.dictionary.n_rows, sup.shape[1]), dtype=dtype)
        table = self.constellation.symbols
        for j in range(sup.shape[0]):
            beta = table[sym[j]]
            if self.real_signal:
                beta = beta.real
            out += beta[None, :] * self.dictionary.entries[:, sup[j]]
        return out

    # -- channel -----------------------------------------------------------

    def channel_spec(self, ebn0_db) -> chan.ChannelSpec:
        return chan.ChannelSpec(ebn0_db=ebn0_db, energy_per_bit=self.eb,
                                complex_valued=not self.real_signal)

    def _draw_bits_and_noise(self, trial_indices) -> tuple:
        n_bits = self.spec.n_bits
        n_rows = self.dictionary.n_rows
        batch = len(trial_indices)
        bits = np.empty((batch, n_bits), dtype=np.uint8)
        if self.real_signal:
            noise = np.empty((n_rows, batch), dtype=np.float64)
        else:
            noise = np.empty((n_rows, batch), dtype=np.complex128)
        noiseless = self.cfg.noiseless
        extra = 0
        if self.multiuser is not None and self.multiuser.channel in ("bc", "ic"):
            extra = len(self.multiuser.assignments)
            per_user = np.empty((extra, n_rows, batch),
                                dtype=np.float64 if self.real_signal else np.complex128)
        for col, trial in enumerate(trial_indices):
            rng = chan.trial_rng(self.cfg.master_seed, int(trial))
            bits[col] = rng.integers(0, 2, size=n_bits, dtype=np.uint8)
            if noiseless:
                continue
            if self.real_signal:
                noise[:, col] = rng.standard_normal(n_rows)
                for u in range(extra):
                    per_user[u, :, col] = rng.standard_normal(n_rows)
            else:
                re = rng.standard_normal(n_rows)
                im = rng.standard_normal(n_rows)
                noise[:, col] = re + 1j * im
                for u in range(extra):
                    re = rng.standard_normal(n_rows)
                    im = rng.standard_normal(n_rows)
                    per_user[u, :, col] = re + 1j * im
        if noiseless:
            noise[...] = 0
            if extra:
                per_user[...] = 0
        return bits, noise, (per_user if extra else None)

    # -- decode + compare ---------------------------------------------------

    def decode_batch(self, y: np.ndarray):
        algo = self.cfg.algo
        if algo == "mad":
            return decoders.mad_batch(y, self.dictionary, self.decode_cfg)
        if algo == "pmad":
            return decoders.parallel_mad_batch(y, self.dictionary, self.decode_cfg)
        if algo == "omp":
            return decoders.omp_batch(y, self.dictionary, self.decode_cfg)
        sup = np.empty((self.cfg.sparsity, y.shape[1]), dtype=np.int64)
        sym = np.empty((self.cfg.sparsity, y.shape[1]), dtype=np.int8)
        for b in range(y.shape[1]):
            msg = decoders.ml_oracle(y[:, b], self.dictionary, self.cfg.sparsity,
                                     self.constellation,
                                     subblock_mode=(self.cfg.scheme == "ssc"))
            sup[:, b] = np.asarray(msg.support) - 1
            for j, beta in enumerate(msg.symbols):
                sym[j, b] = int(np.argmin(np.abs(self.constellation.symbols - beta)))
        return sup, sym

    @staticmethod
    def _sort_by_support(sup: np.ndarray, sym: np.ndarray):
        order = np.argsort(sup, axis=0, kind="stable")
        return np.take_along_axis(sup, order, axis=0), np.take_along_axis(sym, order, axis=0)

    def run_slice(self, ebn0_db, trial_indices) -> np.ndarray:
        """Block-error flags for one contiguous slice of trials."""
        bits, noise, _ = self._draw_bits_and_noise(trial_indices)
        sup_tx, sym_tx = self.encode_batch(bits)
        s = self.synthesize_batch(sup_tx, sym_tx)
        sigma = self.channel_spec(ebn0_db).sigma_per_real_dim
        y = s + sigma * noise
        sup_rx, sym_rx = self.decode_batch(y)
        sup_rx, sym_rx = self._sort_by_support(sup_rx, sym_rx)
        return np.any((sup_rx != sup_tx) | (sym_rx != sym_tx), axis=0)

    def run_multiuser_slice(self, ebn0_db, trial_indices) -> np.ndarray:
        """Per-user + overall error flags, shape (P + 1, B); row 0 is overall."""
        mu = self.multiuser
        n_users = len(mu.assignments)
        bits, noise, per_user_noise = self._draw_bits_and_noise(trial_indices)
        sup_tx, sym_tx = self.encode_batch(bits)

        # per-user codewords: rows of the subblock-sorted message belong to
        # the owner of that subblock, so user codewords are partial sums.
        spec = self.channel_spec(ebn0_db)
        sigma = spec.sigma_per_real_dim
        dtype = np.float64 if self.real_signal else np.complex128
        table = self.constellation.symbols
        user_codewords = []
        for assigned in mu.assignments:
            s_i = np.zeros((self.dictionary.n_rows, len(trial_indices)), dtype=dtype)
            for k in sorted(assigned):
                beta = table[sym_tx[k]]
                if self.real_signal:
                    beta = beta.real
                s_i += beta[None, :] * self.dictionary.entries[:, sup_tx[k]]
            user_codewords.append(s_i)

        flags = np.zeros((n_users + 1, len(trial_indices)), dtype=bool)
        if mu.channel == "mac":
            total = np.zeros_like(user_codewords[0])
            gains = mu.gains if mu.gains else (1.0,) * n_users
            for s_i, gain in zip(user_codewords, gains):
                total = total + (s_i if gain == 1.0 else gain * s_i)
            y = total + sigma * noise
            sup_rx, sym_rx = self.decode_batch(y)
            sup_rx, sym_rx = self._sort_by_support(sup_rx, sym_rx)
            wrong = (sup_rx != sup_tx) | (sym_rx != sym_tx)
            for u, assigned in enumerate(mu.assignments):
                flags[1 + u] = np.any(wrong[sorted(assigned)], axis=0)
            flags[0] = np.any(wrong, axis=0)
            return flags

        total = np.zeros_like(user_codewords[0])
        for s_i in user_codewords:
            total = total + s_i
        scales = mu.sigma2_scales if mu.sigma2_scales else (1.0,) * n_users
        for u in range(n_users):
            if mu.channel == "ic":
                h = np.asarray(mu.interference, dtype=np.complex128 if not self.real_signal
                               else np.float64)
                y_u = user_codewords[u].copy()
                for j in range(n_users):
                    if j != u:
                        y_u = y_u + h[u, j] * user_codewords[j]
            else:
                y_u = total
            y_u = y_u + sigma * np.sqrt(scales[u]) * per_user_noise[u]
            sup_rx, sym_rx = self.decode_batch(y_u)
            sup_rx, sym_rx = self._sort_by_support(sup_rx, sym_rx)
            flags[1 + u] = np.any((sup_rx != sup_tx) | (sym_rx != sym_tx), axis=0)
        flags[0] = np.any(flags[1:], axis=0)
        return flags

    def run_single(self, ebn0_db, trial_index) -> dict:
        """One trial with bit-level accounting (the run_trial operation)."""
        flags_slice = self.run_slice(ebn0_db, [trial_index])
        # recompute at message level for bit accounting
        bits, noise, _ = self._draw_bits_and_noise([trial_index])
        sup_tx, sym_tx = self.encode_batch(bits)
        s = self.synthesize_batch(sup_tx, sym_tx)
        sigma = self.channel_spec(ebn0_db).sigma_per_real_dim
        y = (s + sigma * noise)[:, 0]
        sup_rx, sym_rx = self.decode_batch(y[:, None])
        support = tuple(int(i) + 1 for i in np.sort(sup_rx[:, 0]))
        order = np.argsort(sup_rx[:, 0], kind="stable")
        symbols = tuple(complex(self.constellation.symbols[m]) for m in sym_rx[order, 0])
        msg = codec.SparseMessage(support, symbols)
        try:
            decoded_bits = codec.decode_bits(msg, self.spec)
            bit_errors = int(np.count_nonzero(decoded_bits != bits[0]))
        except codec.CodecError:
            bit_errors = self.spec.n_bits
        return {"block_error": bool(flags_slice[0]), "bit_errors": bit_errors,
                "observation": y, "message": msg}


# ---------------------------------------------------------------------------
# Worker pool plumbing
# ---------------------------------------------------------------------------

_WORKER_ENGINE = None


def _init_worker(cfg_json: str):
    global _WORKER_ENGINE
    _WORKER_ENGINE = TrialEngine(SimConfig.from_json(cfg_json))


def _run_slice_task(args):
    ebn0_db, start, stop, multiuser = args
    indices = range(start, stop)
    if multiuser:
        return _WORKER_ENGINE.run_multiuser_slice(ebn0_db, indices)
    return _WORKER_ENGINE.run_slice(ebn0_db, indices)


def _slice_bounds(start: int, count: int, slice_size: int):
    edges = list(range(start, start + count, slice_size)) + [start + count]
    return list(zip(edges[:-1], edges[1:]))


class _TrialRunner:
    """Runs slices either in-process or on a fork pool."""

    def __init__(self, cfg: SimConfig, workers: int):
        self.cfg = cfg
        self.workers = max(1, workers)
        self.pool = None
        if self.workers > 1:
            import multiprocessing as mp
            ctx = mp.get_context("fork")
            self.pool = ctx.Pool(self.workers, initializer=_init_worker,
                                 initargs=(cfg.to_json(),))
            self.engine = None
        else:
            self.engine = TrialEngine(cfg)

    def run(self, ebn0_db, start: int, count: int, multiuser: bool) -> np.ndarray:
        bounds = _slice_bounds(start, count, self.cfg.stopping.slice_size)
        if self.pool is None:
            if multiuser:
                parts = [self.engine.run_multiuser_slice(ebn0_db, range(a, b))
                         for a, b in bounds]
            else:
                parts = [self.engine.run_slice(ebn0_db, range(a, b)) for a, b in bounds]
        else:
            parts = self.pool.map(_run_slice_task,
                                  [(ebn0_db, a, b, multiuser) for a, b in bounds])
        return np.concatenate(parts, axis=-1)

    def close(self):
        if self.pool is not None:
            self.pool.close()
            self.pool.join()


# ---------------------------------------------------------------------------
# CSV persistence
# ---------------------------------------------------------------------------

def _record_row(rec: BlerRecord, multiuser: bool) -> str:
    cfg = rec.config
    d = cfg.dictionary
    kind = d.get("kind", "file")
    if cfg.random_phase_seed is not None and kind == "mub":
        kind = "mub-random-phase"
    n_rows, n_cols = _dict_shape(cfg)
    low, high = rec.interval
    values = [cfg.scheme, kind, n_rows, n_cols, cfg.sparsity,
              codec.Constellation.from_name(cfg.constellation).size,
              cfg.algo, cfg.effective_paths if cfg.algo == "pmad" else 1,
              rec.ebn0_db, rec.trials, rec.block_errors,
              repr(rec.bler), repr(low), repr(high), rec.seed]
    if multiuser:
        values.append(rec.user)
    values.append(repr(rec.wall_time))
    return ",".join(str(v) for v in values)


def _dict_shape(cfg: SimConfig) -> tuple:
    spec = cfg.dictionary
    if spec.get("kind") == "gold":
        n = (1 << spec["n"]) - 1
        cols = (n + 2) * n + (1 if spec.get("identity_column", True) else 0)
        return n, cols
    if spec.get("kind") == "mub":
        n = 1 << spec["m"]
        return n, n * n
    d = dicts.load_dictionary(spec["path"])
    return d.n_rows, d.n_cols


def _csv_header(multiuser: bool) -> str:
    cols = list(CSV_COLUMNS)
    if multiuser:
        cols.append(MULTIUSER_EXTRA_COLUMN)
    cols.append("wall_time")
    return ",".join(cols)


def _completed_points(path: str, digest: str) -> set:
    """(ebn0, user) pairs already recorded for this config digest."""
    done = set()
    if not os.path.exists(path):
        return done
    current = None
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line.startswith("# config "):
                current = line.split()[-1]
            elif line and not line.startswith("#") and not line.startswith("scheme,"):
                if current == digest:
                    parts = line.split(",")
                    user = parts[15] if len(parts) > len(CSV_COLUMNS) + 1 else "all"
                    done.add((parts[8], user))
    return done


# ---------------------------------------------------------------------------
# Top-level runs
# ---------------------------------------------------------------------------

def run_trial(cfg: SimConfig, ebn0_db, trial_index: int) -> dict:
    """Encode, transmit and decode a single indexed trial."""
    return TrialEngine(cfg).run_single(ebn0_db, trial_index)


def run_bler_sweep(cfg: SimConfig, workers: int = 1, resume: bool = False,
                   progress=None) -> list:
    """Monte Carlo BLER at every grid point, appending records to CSV.

    Per point, trials run in batches until the stopping rule is satisfied;
    records are flushed as soon as each point finishes, and a rerun with
    ``resume=True`` skips points already present for this config digest.
    """
    multiuser = cfg.multiuser is not None
    digest = cfg.digest()
    done = set()
    out_path = cfg.output
    fh = None
    if out_path:
        if resume:
            done = _completed_points(out_path, digest)
        elif os.path.exists(out_path):
            done = set()
        new_file = not os.path.exists(out_path)
        fh = open(out_path, "a")
        if new_file:
            fh.write(_csv_header(multiuser) + "\n")
        fh.write(f"# config {digest}\n")
        fh.flush()

    grid = cfg.ebn0_grid if not cfg.noiseless else (float("inf"),)
    runner = _TrialRunner(cfg, workers)
    records = []
    try:
        for ebn0_db in grid:
            if (str(ebn0_db), "all") in done:
                continue
            stopping = cfg.stopping
            n_flags = (len(cfg.multiuser.assignments) + 1) if multiuser else 1
            trials = 0
            errors = np.zeros(n_flags, dtype=np.int64)
            t0 = time.monotonic()
            while True:
                batch = min(stopping.batch_size, stopping.max_trials - trials)
                if batch <= 0:
                    break
                flags = runner.run(ebn0_db, trials, batch, multiuser)
                if flags.ndim == 1:
                    flags = flags[None, :]
                errors += flags.sum(axis=1)
                trials += batch
                if stopping.done(trials, int(errors[0])):
                    break
            wall = time.monotonic() - t0
            labels = ["all"] + [f"user{u}" for u in range(n_flags - 1)]
            for row in range(n_flags):
                rec = BlerRecord(ebn0_db=ebn0_db, trials=trials,
                                 block_errors=int(errors[row]), seed=cfg.master_seed,
                                 config=cfg, user=labels[row], wall_time=wall)
                records.append(rec)
                if fh:
                    fh.write(_record_row(rec, multiuser) + "\n")
            if fh:
                fh.flush()
            if progress:
                progress(records[-n_flags])
    finally:
        runner.close()
        if fh:
            fh.close()
    return records


def run_multiuser_sim(cfg: SimConfig, workers: int = 1, resume: bool = False,
                      progress=None) -> list:
    """BLER sweep over a multi-user channel (overall plus per-user records)."""
    if cfg.multiuser is None:
        raise SimulationError("config carries no multiuser section")
    return run_bler_sweep(cfg, workers=workers, resume=resume, progress=progress)


def read_records(path: str) -> list:
    """Parse a results CSV into dicts (one per row), tolerant of comments."""
    rows = []
    with open(path) as fh:
        header = None
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if line.startswith("scheme,"):
                header = line.split(",")
                continue
            parts = line.split(",")
            row = dict(zip(header, parts))
            for key in ("N", "L", "K", "M", "T", "trials", "block_errors"):
                row[key] = int(row[key])
            for key in ("ebn0_db", "bler", "ci_low", "ci_high", "wall_time"):
                row[key] = float(row[key])
            rows.append(row)
    return rows
