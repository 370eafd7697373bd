import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from levembed.seqcore import (
    DNA,
    Alphabet,
    Sequence,
    SequenceError,
    levenshtein,
    levenshtein_banded,
    one_hot,
    pad,
)

from oracles import levenshtein_full_matrix, levenshtein_recursive, random_string

ABC = Alphabet("abcdefghijklmnopqrstuvwxyz-")


def enc(text, alphabet=DNA):
    return alphabet.encode(text)


class TestAlphabet:
    def test_default_alphabet(self):
        assert DNA.size == 6
        assert DNA.pad_index == 5
        assert DNA.index("A") == 0
        assert DNA.index("N") == 4

    def test_unknown_symbol_is_hard_error(self):
        with pytest.raises(SequenceError):
            DNA.encode("ACGX")

    def test_pad_symbol_rejected_in_text(self):
        with pytest.raises(SequenceError):
            DNA.encode("AC-G")

    def test_duplicate_symbols_rejected(self):
        with pytest.raises(SequenceError):
            Alphabet("AAT-")

    def test_too_small(self):
        with pytest.raises(SequenceError):
            Alphabet("A")

    def test_decode_round_trip(self):
        s = enc("ATGCN")
        assert DNA.decode(s) == "ATGCN"


class TestLevenshtein:
    def test_identity(self):
        s = enc("ACGTNACG")
        assert levenshtein(s, s) == 0

    def test_empty_vs_nonempty(self):
        assert levenshtein(enc(""), enc("ACGT")) == 4
        assert levenshtein(enc("ACGT"), enc("")) == 4
        assert levenshtein(enc(""), enc("")) == 0

    def test_kitten_sitting(self):
        # value confirmed by the exhaustive recursive oracle
        a, b = ABC.encode("kitten"), ABC.encode("sitting")
        assert levenshtein_recursive("kitten", "sitting") == 3
        assert levenshtein(a, b) == 3

    def test_padding_is_stripped(self):
        a = pad(enc("ACGT"), 12)
        b = enc("ACGT")
        assert levenshtein(a, b) == 0

    def test_agrees_with_full_matrix_dp_short(self):
        rng = np.random.default_rng(0)
        for _ in range(400):
            x, y = random_string(rng, 6), random_string(rng, 6)
            assert levenshtein(enc(x), enc(y)) == levenshtein_full_matrix(x, y)

    def test_agrees_with_recursion_short(self):
        rng = np.random.default_rng(1)
        for _ in range(200):
            x, y = random_string(rng, 6), random_string(rng, 6)
            assert levenshtein(enc(x), enc(y)) == levenshtein_recursive(x, y)

    @given(st.text("ACGT", max_size=12), st.text("ACGT", max_size=12))
    @settings(max_examples=200, deadline=None)
    def test_symmetry_and_identity(self, x, y):
        d = levenshtein(enc(x), enc(y))
        assert d == levenshtein(enc(y), enc(x))
        assert (d == 0) == (x == y)
        assert d >= abs(len(x) - len(y))

    @given(
        st.text("ACGT", max_size=12),
        st.text("ACGT", max_size=12),
        st.text("ACGT", max_size=12),
    )
    @settings(max_examples=200, deadline=None)
    def test_triangle_inequality(self, x, y, z):
        dxy = levenshtein(enc(x), enc(y))
        dxz = levenshtein(enc(x), enc(z))
        dyz = levenshtein(enc(y), enc(z))
        assert dxy <= dxz + dyz
        assert abs(dxz - dyz) <= dxy


class TestBanded:
    def test_equal_within_band(self):
        assert levenshtein_banded(enc("ACGT"), enc("ACGT"), 1) == 0

    def test_matches_unbanded(self):
        assert levenshtein_banded(enc("ACGT"), enc("AGT"), 1) == 1

    def test_overflow_marker(self):
        assert levenshtein_banded(enc("AAAA"), enc("TTTT"), 2) is None
        assert levenshtein(enc("AAAA"), enc("TTTT")) == 4

    def test_band_zero(self):
        assert levenshtein_banded(enc("ACGT"), enc("ACGT"), 0) == 0
        assert levenshtein_banded(enc("ACGT"), enc("ACGA"), 0) is None

    def test_length_gap_exceeds_band(self):
        assert levenshtein_banded(enc("ACGTACGT"), enc("AC"), 3) is None

    def test_agreement_whenever_within_band(self):
        rng = np.random.default_rng(2)
        for _ in range(300):
            x, y = random_string(rng, 10), random_string(rng, 10)
            band = int(rng.integers(0, 6))
            exact = levenshtein(enc(x), enc(y))
            banded = levenshtein_banded(enc(x), enc(y), band)
            if exact <= band:
                assert banded == exact
            else:
                assert banded is None

    def test_negative_band_rejected(self):
        with pytest.raises(SequenceError):
            levenshtein_banded(enc("A"), enc("A"), -1)


class TestPad:
    def test_pads_to_target(self):
        s = enc("A" * 152)
        p = pad(s, 160)
        assert p.padded_len == 160
        assert p.length == 152
        assert (p.codes[152:] == DNA.pad_index).all()

    def test_already_at_target_unchanged(self):
        s = enc("ACGT" * 40)
        p = pad(s, 160)
        assert p == s
        assert np.array_equal(p.codes, s.codes)

    def test_too_long_is_error(self):
        with pytest.raises(SequenceError):
            pad(enc("A" * 161), 160)

    def test_nonpositive_target(self):
        with pytest.raises(SequenceError):
            pad(enc("A"), 0)


class TestOneHot:
    def test_single_symbol_column(self):
        x = one_hot(enc("A"), DNA)
        assert x.shape == (6, 1)
        assert x[:, 0].tolist() == [1, 0, 0, 0, 0, 0]

    def test_padding_goes_to_pad_row(self):
        x = one_hot(pad(enc("A"), 3), DNA)
        assert x[DNA.pad_index, 1] == 1
        assert x[DNA.pad_index, 2] == 1

    def test_columns_sum_to_one(self):
        x = one_hot(pad(enc("ATGCN"), 9), DNA)
        assert np.array_equal(x.sum(axis=0), np.ones(9))

    def test_argmax_round_trip(self):
        s = pad(enc("GATTACA"), 12)
        x = one_hot(s, DNA)
        assert np.array_equal(x.argmax(axis=0), s.codes)

    def test_code_out_of_range(self):
        bad = Sequence(np.array([0, 9], dtype=np.int16), 2)
        with pytest.raises(SequenceError):
            one_hot(bad, DNA)


class TestSequence:
    def test_equality_ignores_padding(self):
        assert pad(enc("ACGT"), 10) == enc("ACGT")
        assert hash(pad(enc("ACGT"), 10)) == hash(enc("ACGT"))

    def test_length_bounds_checked(self):
        with pytest.raises(SequenceError):
            Sequence(np.array([0, 1], dtype=np.int16), 3)
