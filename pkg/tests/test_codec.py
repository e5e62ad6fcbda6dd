"""Bit mappings, capacities, synthesis and energy accounting."""

import itertools
import math
from dataclasses import replace

import numpy as np
import pytest

from sparsecomm.codec import (
    CodecError, Constellation, SchemeSpec, SparseMessage, bits_capacity_sc,
    bits_capacity_ssc, decode_sc_bits, decode_ssc_bits, encode_sc, encode_ssc,
    energy_per_bit, make_scheme, subset_rank_colex, subset_unrank_colex, synthesize,
)
from sparsecomm.dictionaries import Dictionary, build_gold, build_mub, partition_subblocks


@pytest.fixture(scope="module")
def mub64():
    return build_mub(6, self_check="none")


@pytest.fixture(scope="module")
def mub16():
    return build_mub(4, self_check="none")


class TestConstellation:
    def test_tables(self):
        assert Constellation.bpsk().symbols.tolist() == [1.0, -1.0]
        qpsk = Constellation.qpsk().symbols
        assert np.allclose(np.abs(qpsk), 1.0)
        assert np.allclose(qpsk[0], np.exp(1j * np.pi / 4))
        assert Constellation.unmodulated().bits_per_symbol == 0

    def test_from_name(self):
        assert Constellation.from_name("qpsk").size == 4
        assert Constellation.from_name("8psk").size == 8
        with pytest.raises(CodecError):
            Constellation.from_name("qam16")

    def test_unit_energy_enforced(self):
        with pytest.raises(CodecError):
            Constellation("bad", np.array([2.0 + 0j, -2.0 + 0j]))

    def test_distinct_enforced(self):
        with pytest.raises(CodecError):
            Constellation("dup", np.array([1.0 + 0j, 1.0 + 0j]))


class TestCapacities:
    def test_reported_sc_values(self):
        assert bits_capacity_sc(4096, 1, 4) == 14
        assert bits_capacity_sc(4096, 3, 4) == 39
        assert bits_capacity_sc(4096, 5, 4) == 63

    def test_reported_ssc_values(self):
        assert bits_capacity_ssc(partition_subblocks(4096, 1), 4) == 14
        assert bits_capacity_ssc(partition_subblocks(4096, 3), 4) == 37
        assert bits_capacity_ssc(partition_subblocks(4096, 5), 4) == 58
        assert bits_capacity_ssc(partition_subblocks(16384, 5), 2) == 63

    def test_small_cases(self):
        assert bits_capacity_sc(2, 1, 1) == 1
        assert bits_capacity_sc(63, 2, 2) == 2 + (math.comb(63, 2).bit_length() - 1)
        assert math.comb(63, 2) == 1953 and bits_capacity_sc(63, 2, 2) == 12
        assert bits_capacity_ssc([8], 1) == 3

    def test_sc_dominates_ssc(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            n_cols = int(rng.integers(4, 3000))
            k = int(rng.integers(1, max(2, n_cols // 2)))
            m = int(rng.choice([1, 2, 4]))
            blocks = partition_subblocks(n_cols, k)
            assert bits_capacity_sc(n_cols, k, m) >= bits_capacity_ssc(blocks, m)

    def test_errors(self):
        with pytest.raises(CodecError):
            bits_capacity_sc(4, 5, 2)
        with pytest.raises(CodecError):
            bits_capacity_ssc([], 2)


class TestSscMapping:
    def test_all_zero_bits(self, mub16):
        d = replace(mub16, subblock_lengths=(8, 8))
        spec = SchemeSpec("ssc", d, 2, Constellation.qpsk())
        msg = encode_ssc("0000000000", spec)
        b1 = complex(Constellation.qpsk().symbols[0])
        assert msg.support == (1, 9)
        assert msg.symbols == (b1, b1)

    def test_worked_example(self, mub16):
        d = replace(mub16, subblock_lengths=(8, 8))
        spec = SchemeSpec("ssc", d, 2, Constellation.qpsk())
        msg = encode_ssc("0111101010", spec)
        q = Constellation.qpsk().symbols
        assert msg.support == (6, 11)
        assert msg.symbols == (complex(q[1]), complex(q[3]))
        assert "".join(map(str, decode_ssc_bits(msg, spec))) == "0111101010"

    def test_random_round_trips(self, mub64):
        spec = make_scheme(mub64, "ssc", 3, Constellation.qpsk())
        rng = np.random.default_rng(11)
        for _ in range(10_000):
            bits = rng.integers(0, 2, spec.n_bits, dtype=np.uint8)
            assert np.array_equal(decode_ssc_bits(encode_ssc(bits, spec), spec), bits)

    def test_one_index_per_subblock(self, mub64):
        spec = make_scheme(mub64, "ssc", 5, Constellation.bpsk())
        bounds = np.cumsum((0,) + spec.dictionary.subblock_lengths)
        rng = np.random.default_rng(2)
        for _ in range(500):
            bits = rng.integers(0, 2, spec.n_bits, dtype=np.uint8)
            msg = encode_ssc(bits, spec)
            blocks = np.searchsorted(bounds, np.array(msg.support) - 1, side="right") - 1
            assert sorted(blocks.tolist()) == list(range(5))

    def test_unreachable_codepoint_rejected(self, mub16):
        # a 6-column subblock encodes only 4 codepoints; column 6 of it is
        # outside the coded region
        d = replace(mub16, subblock_lengths=(6, 2))
        spec = SchemeSpec("ssc", d, 2, Constellation.unmodulated())
        msg = SparseMessage((6, 7), (1.0 + 0j, 1.0 + 0j))
        with pytest.raises(CodecError, match="coded region"):
            decode_ssc_bits(msg, spec)

    def test_wrong_length_rejected(self, mub16):
        spec = make_scheme(mub16, "ssc", 2, Constellation.qpsk())
        with pytest.raises(CodecError):
            encode_ssc("01", spec)


class TestCombinadic:
    def test_rank_zero(self):
        assert subset_unrank_colex(0, 8, 3) == (1, 2, 3)

    def test_position_against_enumeration(self):
        subsets = sorted(itertools.combinations(range(1, 9), 3),
                         key=lambda s: tuple(reversed(s)))
        assert subset_unrank_colex(9, 8, 3) == subsets[9]
        for rank, subset in enumerate(subsets):
            assert subset_unrank_colex(rank, 8, 3) == subset
            assert subset_rank_colex(subset) == rank

    def test_out_of_range(self):
        with pytest.raises(CodecError):
            subset_unrank_colex(math.comb(8, 3), 8, 3)

    def test_sc_round_trip(self, mub64):
        spec = make_scheme(mub64, "sc", 3, Constellation.qpsk())
        rng = np.random.default_rng(5)
        for _ in range(2000):
            bits = rng.integers(0, 2, spec.n_bits, dtype=np.uint8)
            assert np.array_equal(decode_sc_bits(encode_sc(bits, spec), spec), bits)

    def test_sc_rank_overflow_rejected(self, mub16):
        spec = make_scheme(mub16, "sc", 2, Constellation.unmodulated())
        # highest colex subset has rank C(256,2)-1 >= 2^floor(log2 C(256,2))
        msg = SparseMessage((255, 256), (1.0 + 0j, 1.0 + 0j))
        assert subset_rank_colex(msg.support) >= 1 << spec.n_bits
        with pytest.raises(CodecError, match="coded region"):
            decode_sc_bits(msg, spec)


class TestSynthesize:
    def test_single_column(self, mub64):
        msg = SparseMessage((5,), (1.0 + 0j,))
        assert np.array_equal(synthesize(msg, mub64), mub64.entries[:, 4])

    def test_two_column_linearity(self, mub64):
        p, q = 3, 700
        msg = SparseMessage((p, q), (1.0 + 0j, -1.0 + 0j))
        s = synthesize(msg, mub64)
        a_p = mub64.entries[:, p - 1]
        a_q = mub64.entries[:, q - 1]
        got = np.vdot(a_p, s)  # <s, a_p> with conjugation on a_p
        want = 1.0 - np.vdot(a_p, a_q)
        assert got == pytest.approx(want, abs=1e-12)

    def test_disjoint_support_additivity(self, mub16):
        q = Constellation.qpsk().symbols
        m1 = SparseMessage((2, 30), (complex(q[1]), complex(q[2])))
        m2 = SparseMessage((100, 200), (complex(q[0]), complex(q[3])))
        merged = SparseMessage(m1.support + m2.support, m1.symbols + m2.symbols)
        assert np.allclose(synthesize(m1, mub16) + synthesize(m2, mub16),
                           synthesize(merged, mub16), atol=1e-12)

    def test_mean_energy_is_sparsity(self, mub16):
        spec = make_scheme(mub16, "ssc", 3, Constellation.qpsk())
        rng = np.random.default_rng(8)
        total = 0.0
        n_trials = 10_000
        for _ in range(n_trials):
            bits = rng.integers(0, 2, spec.n_bits, dtype=np.uint8)
            s = synthesize(encode_ssc(bits, spec), spec.dictionary)
            total += float(np.linalg.norm(s) ** 2)
        mean = total / n_trials
        # E||s||^2 = K; allow a generous sampling band (3 sigma is ~0.02 here)
        assert abs(mean - 3.0) < 0.1

    def test_real_output_for_gold_bpsk(self):
        d = build_gold(3)
        msg = SparseMessage((2, 9), (1.0 + 0j, -1.0 + 0j))
        s = synthesize(msg, d)
        assert s.dtype == np.float64

    def test_index_validation(self, mub16):
        with pytest.raises(CodecError):
            synthesize(SparseMessage((0,), (1.0 + 0j,)), mub16)
        with pytest.raises(CodecError):
            synthesize(SparseMessage((257,), (1.0 + 0j,)), mub16)


class TestSchemeAccounting:
    def test_energy_per_bit_values(self, mub64):
        spec = make_scheme(mub64, "ssc", 5, Constellation.qpsk())
        assert spec.n_bits == 58
        assert energy_per_bit(spec) == pytest.approx(5 / 58)
        assert spec.code_rate_bpd == pytest.approx(58 / 128)
        assert spec.conventional_label == "(128,58)"

    def test_trivial_energy(self):
        cols = np.array([[1.0, 0.0], [0.0, 1.0]])
        d = Dictionary(kind="gold", entries=cols, is_real=True,
                       subblock_lengths=(2,), meta={"identity_column": False})
        spec = SchemeSpec("ssc", d, 1, Constellation.unmodulated())
        assert spec.n_bits == 1
        assert energy_per_bit(spec) == 1.0

    def test_monte_carlo_energy_per_bit(self, mub16):
        spec = make_scheme(mub16, "ssc", 2, Constellation.qpsk())
        rng = np.random.default_rng(4)
        total = 0.0
        n_trials = 100_000
        table = spec.dictionary.entries
        bounds = np.concatenate(([0], np.cumsum(spec.dictionary.subblock_lengths)))
        for _ in range(n_trials):
            # direct sampling of the scheme's messages without the codec layer
            cols = [int(rng.integers(bounds[k], bounds[k + 1])) for k in range(2)]
            syms = Constellation.qpsk().symbols[rng.integers(0, 4, 2)]
            s = table[:, cols] @ syms
            total += float(np.linalg.norm(s) ** 2)
        measured = total / n_trials / spec.n_bits
        assert abs(measured - energy_per_bit(spec)) / energy_per_bit(spec) < 0.01

    def test_ssc_requires_partition(self, mub64):
        with pytest.raises(CodecError):
            SchemeSpec("ssc", mub64, 3, Constellation.qpsk())

    def test_gold_bpsk_rate(self):
        d = build_gold(7).partition(5)
        spec = SchemeSpec("ssc", d, 5, Constellation.bpsk())
        assert spec.n_bits == 63
        assert spec.code_rate_bpd == pytest.approx(63 / 127)
        assert spec.conventional_label == "(127,63)"
