"""Tests for words over the n-letter alphabet."""

import pytest

from fockbench.exceptions import ValidationError
from fockbench.words import (
    Word,
    commutator_polynomial,
    concat,
    enumerate_words,
    index_of,
    level_offset,
    parse_polynomial,
    polynomial_degree,
    polynomial_to_dict,
    reverse,
    word,
    word_at,
    word_count,
)


class TestWord:
    """Test the Word model."""

    def test_string_forms(self):
        """Empty word prints as e, large alphabets use dashes."""
        assert str(Word.empty(2)) == "e"
        assert str(word(1, 2, n=2)) == "12"
        assert str(word(1, 10, 3, n=12)) == "1-10-3"

    @pytest.mark.parametrize(
        "text,n,letters",
        [("e", 3, ()), ("12", 2, (1, 2)), ("1-10-3", 12, (1, 10, 3)), (" 21 ", 2, (2, 1))],
    )
    def test_parse(self, text, n, letters):
        """Report strings parse back to words."""
        assert Word.parse(text, n).letters == letters

    def test_parse_garbage_rejected(self):
        """Non-numeric characters raise ValidationError."""
        with pytest.raises(ValidationError):
            Word.parse("1x", 2)

    def test_letters_outside_alphabet_rejected(self):
        """Letters must lie in 1..n."""
        with pytest.raises(ValidationError):
            word(3, n=2)
        with pytest.raises(ValidationError):
            word(0, n=2)

    def test_words_are_hashable(self):
        """Equal words collapse in sets."""
        assert len({word(1, 2, n=2), word(1, 2, n=2), word(2, 1, n=2)}) == 2

    def test_multiset(self):
        """Permuted words share a multiset."""
        assert word(2, 1, 2, n=2).multiset() == word(1, 2, 2, n=2).multiset()


class TestEnumeration:
    """Test the graded lexicographic order."""

    @pytest.mark.parametrize("n,N,expected", [(1, 4, 5), (2, 3, 15), (3, 2, 13), (4, 0, 1)])
    def test_word_count(self, n, N, expected):
        """Number of words of length at most N."""
        assert word_count(n, N) == expected

    def test_level_offset(self):
        """Level k starts after all shorter words."""
        assert level_offset(2, 0) == 0
        assert level_offset(2, 1) == 1
        assert level_offset(2, 3) == 7

    def test_order(self):
        """Words are sorted by length, then lexicographically."""
        names = [str(w) for w in enumerate_words(2, 2)]
        assert names == ["e", "1", "2", "11", "12", "21", "22"]

    def test_index_roundtrip(self):
        """word_at inverts index_of on every index."""
        for i in range(word_count(3, 3)):
            assert index_of(word_at(i, 3, 3), 3) == i

    def test_index_of_long_word_rejected(self):
        """Words longer than N have no index."""
        with pytest.raises(ValidationError):
            index_of(word(1, 1, 1, n=2), 2)

    def test_word_at_out_of_range(self):
        """Indices beyond the space raise."""
        with pytest.raises(ValidationError):
            word_at(7, 2, 2)


class TestWordOperations:
    """Test reversal and concatenation."""

    def test_reverse_is_antihomomorphism(self):
        """(uv)~ = v~ u~."""
        u, v = word(1, 2, n=3), word(3, n=3)
        assert str(concat(u, v)) == "123"
        assert reverse(u + v) == reverse(v) + reverse(u)

    def test_reverse_is_involution(self):
        """Reversing twice gives the word back."""
        w = word(1, 3, 2, 2, n=3)
        assert w.reverse().reverse() == w

    def test_concat_alphabet_mismatch(self):
        """Words over different alphabets do not concatenate."""
        with pytest.raises(ValidationError):
            concat(word(1, n=2), word(1, n=3))


class TestPolynomials:
    """Test word polynomials."""

    def test_parse_matches_commutator(self):
        """JSON form with real and [re, im] coefficients."""
        poly = parse_polynomial({"12": 1, "21": [-1, 0]}, 2)
        assert poly == commutator_polynomial(1, 2, 2)

    def test_repeated_keys_accumulate(self):
        """Keys parsing to the same word add up."""
        poly = parse_polynomial({"12": 1, " 12": 2}, 2)
        assert poly == {word(1, 2, n=2): 3 + 0j}

    def test_bad_pair_rejected(self):
        """Complex coefficients must be pairs."""
        with pytest.raises(ValidationError):
            parse_polynomial({"1": [1, 2, 3]}, 2)

    def test_degree_and_dict(self):
        """Degree is the longest word; dict form uses [re, im]."""
        poly = {word(n=2): 1j, word(2, 1, 1, n=2): 2.0 + 0j}
        assert polynomial_degree(poly) == 3
        assert polynomial_to_dict(poly) == {"e": [0.0, 1.0], "211": [2.0, 0.0]}
