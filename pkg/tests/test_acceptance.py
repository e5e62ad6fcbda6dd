"""Acceptance gate: one test per release criterion, tolerances pinned.

Each test prints a single PASS/FAIL line (visible with ``pytest -s`` or in
the captured output on failure).  The suite is ordered cheap to expensive;
the headline Monte Carlo point runs last and takes tens of minutes on a
small machine.

Known red criterion: the Gold-dictionary coherence is checked against the
quoted closed form 2^((n+1)/2)/N.  The exact three-valued correlation bound
of a preferred pair is 2^((n+1)/2) + 1 (the family attains it), so the
constructed N=127 dictionary measures mu = 17/127 and the quoted 16/127 is
unattainable; the assertion is kept as stated and fails honestly.  See the
decisions ledger for the analysis.
"""

import dataclasses
import itertools
import math

import numpy as np
import pytest

from sparsecomm import codec
from sparsecomm import decoders
from sparsecomm.codec import Constellation, SparseMessage
from sparsecomm.dictionaries import (
    apply_random_phase, build_gold, build_mub, mutual_coherence,
    partition_subblocks, quaternary_closure_report, unbiasedness_deviation,
)
from sparsecomm.simulate import (
    MultiUserConfig, SimConfig, StoppingRule, TrialEngine, run_bler_sweep,
    run_multiuser_sim,
)

QPSK = Constellation.qpsk()
M1 = Constellation.unmodulated()


def report(name, ok, detail=""):
    print(f"ACCEPTANCE {name}: {'PASS' if ok else 'FAIL'} {detail}")
    return ok


def overlap_or_ordered(rec_a, rec_b):
    """True when rec_a's BLER is at or below rec_b's within 95% confidence."""
    if rec_a.bler <= rec_b.bler:
        return True
    return rec_a.interval[0] <= rec_b.interval[1]


@pytest.fixture(scope="module")
def mub64():
    return build_mub(6, self_check="none")


@pytest.fixture(scope="module")
def gold127():
    return build_gold(7)


def test_bit_capacity_exactness():
    """SC capacities {14, 39, 63} and SSC {14, 37, 58} for the N=64 case."""
    sc = [codec.bits_capacity_sc(4096, k, 4) for k in (1, 3, 5)]
    ssc = [codec.bits_capacity_ssc(partition_subblocks(4096, k), 4) for k in (1, 3, 5)]
    ok = sc == [14, 39, 63] and ssc == [14, 37, 58]
    assert report("bit-capacity-exactness", ok, f"sc={sc} ssc={ssc}")


def test_dictionary_metrology(mub64, gold127):
    """Gold n=7 (N, L, mu) and MUB m=2..7 coherence/unbiasedness/alphabet."""
    failures = []

    for m in range(2, 8):
        d = mub64 if m == 6 else build_mub(m, self_check="none")
        within, cross = unbiasedness_deviation(d)
        if within > 1e-10 or cross > 1e-10:
            failures.append(f"m={m} unbiasedness within={within:.2e} cross={cross:.2e}")
        mu = mutual_coherence(d)
        if abs(mu - 2.0 ** (-m / 2)) > 1e-12:
            failures.append(f"m={m} mu={mu}")
        scaled = d.entries * np.sqrt(d.n_rows)
        targets = np.array([1.0, -1.0, 1.0j, -1.0j])
        alphabet_dev = np.min(np.abs(scaled[..., None] - targets), axis=-1).max()
        if alphabet_dev > 1e-10:
            failures.append(f"m={m} alphabet dev={alphabet_dev:.2e}")

    n_rows, n_cols = gold127.n_rows, gold127.n_cols
    if (n_rows, n_cols) != (127, 16384):
        failures.append(f"gold shape ({n_rows}, {n_cols})")
    mu = mutual_coherence(gold127)
    if abs(mu - 16 / 127) > 1e-12:
        failures.append(
            f"gold mu={mu:.9f} (= {mu * 127:.3f}/127) != 16/127: the preferred-pair "
            f"correlation bound is 2^((n+1)/2) + 1 = 17, and the family attains it, "
            f"so 16/127 is unattainable for this construction")
    assert report("dictionary-metrology", not failures, "; ".join(failures)), failures


def test_lemma1_recovery_suite(mub64, gold127):
    """Noiseless M=1 recovery of 10^4 random supports, K <= 4, zero failures."""
    rng = np.random.default_rng(20250801)
    failures = 0
    total = 0
    for d in (mub64, gold127):
        cfg_real = d.is_real
        for k in (1, 2, 3, 4):
            count = 2500
            supports = np.stack([
                np.sort(rng.choice(d.n_cols, k, replace=False)) for _ in range(count)])
            y = np.zeros((d.n_rows, count),
                         dtype=np.float64 if cfg_real else np.complex128)
            for j in range(k):
                y += d.entries[:, supports[:, j]]
            sup, _ = decoders.mad_batch(y, d, decoders.DecodeConfig(k, M1))
            got = np.sort(sup, axis=0).T
            failures += int(np.count_nonzero(np.any(got != supports, axis=1)))
            total += count
    assert report("lemma1-recovery", failures == 0,
                  f"{failures} failures over {total} supports"), failures


def test_partition_optimality():
    """Iterative subblock plan matches exhaustive search, L <= 64, K <= 4."""
    def best(total, k):
        powers = [1 << p for p in range(total.bit_length())]
        return max((sum(p.bit_length() - 1 for p in combo)
                    for combo in itertools.combinations_with_replacement(powers, k)
                    if sum(combo) <= total), default=-1)

    bad = []
    for total in range(2, 65):
        for k in range(1, min(4, total // 2) + 1):
            plan = partition_subblocks(total, k)
            got = sum(int(x).bit_length() - 1 for x in plan)
            if got != best(total, k):
                bad.append((total, k, plan))
    assert report("partition-optimality", not bad, str(bad[:3])), bad


def test_oracle_equivalence():
    """MAD on the N=4 dictionary never beats the ML oracle and agrees >= 95%."""
    d = build_mub(2, self_check="none")
    n_bits = codec.bits_capacity_sc(16, 1, 4)  # 6
    eb = 1.0 / n_bits
    sigma = np.sqrt(eb * 10 ** (-1.0) / 2.0)  # 10 dB
    rng = np.random.default_rng(91)
    trials = 10_000

    # independent enumeration oracle over all 64 codewords
    labels = [(col, m) for col in range(16) for m in range(4)]
    codebook = np.stack([d.entries[:, col] * QPSK.symbols[m] for col, m in labels], axis=1)

    cols = rng.integers(0, 16, trials)
    syms = rng.integers(0, 4, trials)
    y = d.entries[:, cols] * QPSK.symbols[syms][None, :]
    y = y + sigma * (rng.standard_normal(y.shape) + 1j * rng.standard_normal(y.shape))

    sup, sym = decoders.mad_batch(y, d, decoders.DecodeConfig(1, QPSK))
    mad_cw = d.entries[:, sup[0]] * QPSK.symbols[sym[0]][None, :]
    d_mad = np.linalg.norm(y - mad_cw, axis=0)

    dist_all = np.linalg.norm(y[:, :, None] - codebook[:, None, :], axis=0)
    oracle_pick = np.argmin(dist_all, axis=1)
    d_ml = dist_all[np.arange(trials), oracle_pick]

    never_beats = bool(np.all(d_ml <= d_mad + 1e-12))
    oracle_cols = np.array([labels[i][0] for i in oracle_pick])
    oracle_syms = np.array([labels[i][1] for i in oracle_pick])
    agreement = float(np.mean((oracle_cols == sup[0]) & (oracle_syms == sym[0])))

    # spot-check the vectorized enumeration against the reference oracle
    for t in range(0, trials, 1000):
        msg = decoders.ml_oracle(y[:, t], d, 1, QPSK)
        assert msg.support[0] - 1 == oracle_cols[t]

    ok = never_beats and agreement >= 0.95
    assert report("oracle-equivalence", ok,
                  f"agreement={agreement:.4f} never_beats={never_beats}")


def _sweep(dictionary, k, constellation, algo, grid, seed, stopping, rp=False):
    cfg = SimConfig(dictionary=dictionary, scheme="ssc", sparsity=k,
                    constellation=constellation, algo=algo, ebn0_grid=grid,
                    master_seed=seed, stopping=stopping,
                    random_phase_seed=1001 if rp else None)
    return run_bler_sweep(cfg)


def test_decoder_orderings():
    """MAD <= OMP (K=3 sweep); pMAD <= MAD and random <= zero phase (K=5)."""
    mub = {"kind": "mub", "m": 6, "self_check": "none"}
    stop_k3 = StoppingRule(min_trials=2000, min_block_errors=100,
                           max_trials=100_000, batch_size=2000, slice_size=500)
    grid_k3 = (2.0, 3.0, 4.0)
    mad_k3 = _sweep(mub, 3, "qpsk", "mad", grid_k3, 601, stop_k3)
    omp_k3 = _sweep(mub, 3, "qpsk", "omp", grid_k3, 601, stop_k3)
    failures = []
    for a, b in zip(mad_k3, omp_k3):
        if not overlap_or_ordered(a, b):
            failures.append(f"mad({a.ebn0_db})={a.bler:.3e} > omp={b.bler:.3e}")

    stop_k5 = StoppingRule(min_trials=4000, min_block_errors=100,
                           max_trials=25_000, batch_size=1000, slice_size=500)
    grid_k5 = (4.0, 4.5, 5.0)
    mad_rp = _sweep(mub, 5, "qpsk", "mad", grid_k5, 602, stop_k5, rp=True)
    mad_0p = _sweep(mub, 5, "qpsk", "mad", grid_k5, 602, stop_k5)
    pmad_rp = _sweep(mub, 5, "qpsk", "pmad", (4.5, 5.0), 603, stop_k5, rp=True)

    for p in pmad_rp:
        m = next(r for r in mad_rp if r.ebn0_db == p.ebn0_db)
        if not overlap_or_ordered(p, m):
            failures.append(f"pmad({p.ebn0_db})={p.bler:.3e} > mad={m.bler:.3e}")
    mid_rp = mad_rp[1]
    mid_0p = mad_0p[1]
    if not overlap_or_ordered(mid_rp, mid_0p):
        failures.append(f"random-phase({mid_rp.bler:.3e}) > zero-phase({mid_0p.bler:.3e})")

    detail = (f"mad_k3={[f'{r.bler:.1e}' for r in mad_k3]} "
              f"omp_k3={[f'{r.bler:.1e}' for r in omp_k3]} "
              f"mad_rp@4.5={mid_rp.bler:.2e} mad_0p@4.5={mid_0p.bler:.2e} "
              f"pmad_rp={[f'{r.bler:.1e}' for r in pmad_rp]}")
    assert report("decoder-orderings", not failures, detail + " " + "; ".join(failures))


def test_multiuser_equivalence():
    """MAC P=5 is bit-identical to single-user K=5; BC worst user has max noise."""
    mub = {"kind": "mub", "m": 6, "self_check": "none"}
    stop = StoppingRule(min_trials=15_000, min_block_errors=10 ** 9,
                        max_trials=15_000, batch_size=3000, slice_size=500)
    base = SimConfig(dictionary=mub, scheme="ssc", sparsity=5, constellation="qpsk",
                     algo="mad", ebn0_grid=(5.0,), master_seed=604, stopping=stop,
                     random_phase_seed=1001)
    assignments = ((0,), (1,), (2,), (3,), (4,))
    single = run_bler_sweep(base)[0]
    mac_cfg = dataclasses.replace(base, multiuser=MultiUserConfig(
        channel="mac", assignments=assignments))
    mac_records = run_multiuser_sim(mac_cfg)
    mac_overall = mac_records[0]

    # bit-identical observations on a sample of trials
    single_engine = TrialEngine(base)
    mac_engine = TrialEngine(mac_cfg)
    idx = range(0, 400)
    bits_s, noise_s, _ = single_engine._draw_bits_and_noise(idx)
    sup, sym = single_engine.encode_batch(bits_s)
    sigma = single_engine.channel_spec(5.0).sigma_per_real_dim
    y_single = single_engine.synthesize_batch(sup, sym) + sigma * noise_s

    bits_m, noise_m, _ = mac_engine._draw_bits_and_noise(idx)
    sup_m, sym_m = mac_engine.encode_batch(bits_m)
    table = mac_engine.constellation.symbols
    total = np.zeros_like(y_single)
    for assigned in assignments:
        s_i = np.zeros_like(total)
        for k in sorted(assigned):
            s_i += table[sym_m[k]][None, :] * mac_engine.dictionary.entries[:, sup_m[k]]
        total = total + s_i
    y_mac = total + sigma * noise_m
    bit_identical = bool(np.array_equal(y_single, y_mac))

    bler_identical = (mac_overall.block_errors == single.block_errors
                      and mac_overall.trials == single.trials)

    bc_stop = StoppingRule(min_trials=10_000, min_block_errors=10 ** 9,
                           max_trials=10_000, batch_size=2000, slice_size=500)
    bc = run_multiuser_sim(dataclasses.replace(
        base, ebn0_grid=(4.5,), stopping=bc_stop,
        multiuser=MultiUserConfig(channel="bc", assignments=assignments,
                                  sigma2_scales=(1.0, 1.0, 2.0, 1.0, 1.0))))
    per_user = [r.block_errors for r in bc if r.user != "all"]
    worst_ok = int(np.argmax(per_user)) == 2

    ok = bit_identical and bler_identical and worst_ok
    assert report("multiuser-equivalence", ok,
                  f"bit_identical={bit_identical} single={single.block_errors}"
                  f"/{single.trials} mac={mac_overall.block_errors}/{mac_overall.trials} "
                  f"bc_users={per_user}")


def test_sweep_determinism(tmp_path):
    """Same master seed reproduces the CSV byte-for-byte at 1/4/8 workers."""
    stop = StoppingRule(min_trials=600, min_block_errors=60, max_trials=1800,
                        batch_size=600, slice_size=150)
    outputs = []
    for tag, workers in (("w1", 1), ("w4", 4), ("w8", 8), ("w1b", 1)):
        out = tmp_path / f"{tag}.csv"
        cfg = SimConfig(dictionary={"kind": "mub", "m": 4, "self_check": "none"},
                        scheme="ssc", sparsity=2, constellation="qpsk", algo="mad",
                        ebn0_grid=(3.0, 6.0), master_seed=605, stopping=stop,
                        output=str(out))
        run_bler_sweep(cfg, workers=workers)
        outputs.append([",".join(line.split(",")[:-1])
                        for line in out.read_text().splitlines()])
    ok = outputs[0] == outputs[1] == outputs[2] == outputs[3]
    assert report("sweep-determinism", ok)


def test_headline_operating_point():
    """(127,63) Gold K=5 ssc bpsk, pMAD T=5 at 5 dB: BLER in [2e-5, 5e-4]."""
    trials = 200_000
    stop = StoppingRule(min_trials=trials, min_block_errors=10 ** 9,
                        max_trials=trials, batch_size=20_000, slice_size=1000)
    cfg = SimConfig(dictionary={"kind": "gold", "n": 7}, scheme="ssc", sparsity=5,
                    constellation="bpsk", algo="pmad", ebn0_grid=(5.0,),
                    master_seed=606, stopping=stop)
    rec = run_bler_sweep(cfg, workers=2)[0]
    ok = rec.trials >= 200_000 and 2e-5 <= rec.bler <= 5e-4
    low, high = rec.interval
    assert report("headline-operating-point", ok,
                  f"bler={rec.bler:.3e} ({rec.block_errors}/{rec.trials}) "
                  f"ci=[{low:.2e},{high:.2e}]")
