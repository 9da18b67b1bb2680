"""
Words over the alphabet {1, ..., n}: the index algebra of the truncated Fock space.

Words are ordered graded-lexicographically (length first, then letters), so
every level of the Fock space occupies one contiguous index block.
"""

from itertools import product
from typing import Any, Dict, Iterator, List, Mapping, Tuple

from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from .exceptions import ValidationError

EMPTY_SYMBOL = "e"


class Word(BaseModel):
    """An element of the free semigroup on n generators."""

    model_config = ConfigDict(frozen=True)

    letters: Tuple[int, ...] = ()
    n: int

    @field_validator("n")
    @classmethod
    def alphabet_must_be_positive(cls, v: int) -> int:
        if v < 1:
            raise ValidationError(
                "Alphabet size must be at least 1", field="n", value=v
            )
        return v

    @model_validator(mode="after")
    def letters_must_lie_in_alphabet(self) -> "Word":
        bad = [letter for letter in self.letters if not 1 <= letter <= self.n]
        if bad:
            raise ValidationError(
                f"Letters {bad} outside alphabet 1..{self.n}",
                field="letters",
                value=list(self.letters),
            )
        return self

    def __len__(self) -> int:
        return len(self.letters)

    def __add__(self, other: "Word") -> "Word":
        return concat(self, other)

    def __str__(self) -> str:
        if not self.letters:
            return EMPTY_SYMBOL
        if self.n <= 9:
            return "".join(str(letter) for letter in self.letters)
        return "-".join(str(letter) for letter in self.letters)

    def __repr__(self) -> str:
        return f"Word('{self}', n={self.n})"

    @property
    def length(self) -> int:
        return len(self.letters)

    def reverse(self) -> "Word":
        return reverse(self)

    def multiset(self) -> Tuple[int, ...]:
        """Sorted letters; words with equal multisets differ by a permutation."""
        return tuple(sorted(self.letters))

    @classmethod
    def empty(cls, n: int) -> "Word":
        return cls(letters=(), n=n)

    @classmethod
    def parse(cls, text: str, n: int) -> "Word":
        """Parse the report string form ("e", "12", or "1-10-3" for n > 9)."""
        text = text.strip()
        if text in (EMPTY_SYMBOL, "", "∅"):
            return cls.empty(n)
        try:
            if "-" in text or n > 9:
                letters = tuple(int(part) for part in text.split("-"))
            else:
                letters = tuple(int(ch) for ch in text)
        except ValueError:
            raise ValidationError(
                f"Cannot parse word '{text}'", field="word", value=text
            )
        return cls(letters=letters, n=n)


def word(*letters: int, n: int) -> Word:
    """Shorthand constructor: word(1, 2, n=2) is the word 12."""
    return Word(letters=tuple(letters), n=n)


def word_count(n: int, N: int) -> int:
    """Number of words of length at most N."""
    if n < 1 or N < 0:
        raise ValidationError(
            "Need n >= 1 and N >= 0", field="n,N", value=(n, N)
        )
    if n == 1:
        return N + 1
    return (n ** (N + 1) - 1) // (n - 1)


def level_offset(n: int, k: int) -> int:
    """Index of the first word of length k."""
    return 0 if k == 0 else word_count(n, k - 1)


def iter_words(n: int, N: int) -> Iterator[Word]:
    """Yield every word of length at most N in graded-lexicographic order."""
    word_count(n, N)
    alphabet = range(1, n + 1)
    for k in range(N + 1):
        for letters in product(alphabet, repeat=k):
            yield Word(letters=letters, n=n)


def enumerate_words(n: int, N: int) -> List[Word]:
    """All words of length at most N, in canonical basis order."""
    return list(iter_words(n, N))


def index_within_level(w: Word) -> int:
    """Base-n value of the letters, i.e. the position inside the level block."""
    position = 0
    for letter in w.letters:
        position = position * w.n + (letter - 1)
    return position


def index_of(w: Word, N: int) -> int:
    """Position of w in enumerate_words(w.n, N)."""
    if len(w) > N:
        raise ValidationError(
            f"Word of length {len(w)} exceeds truncation level {N}",
            field="word",
            value=str(w),
        )
    return level_offset(w.n, len(w)) + index_within_level(w)


def word_at(i: int, n: int, N: int) -> Word:
    """Inverse of index_of."""
    total = word_count(n, N)
    if not 0 <= i < total:
        raise ValidationError(
            f"Index {i} out of range for fock_dim={total}", field="index", value=i
        )
    k = 0
    while level_offset(n, k + 1) <= i:
        k += 1
    position = i - level_offset(n, k)
    letters = []
    for _ in range(k):
        position, digit = divmod(position, n)
        letters.append(digit + 1)
    return Word(letters=tuple(reversed(letters)), n=n)


def reverse(w: Word) -> Word:
    return Word(letters=tuple(reversed(w.letters)), n=w.n)


def concat(u: Word, v: Word) -> Word:
    if u.n != v.n:
        raise ValidationError(
            f"Cannot concatenate words over alphabets {u.n} and {v.n}",
            field="n",
            value=(u.n, v.n),
        )
    return Word(letters=u.letters + v.letters, n=u.n)


# Finitely supported word-coefficient maps, e.g. {12: 1, 21: -1} for L1L2 - L2L1
Polynomial = Dict[Word, complex]


def parse_polynomial(mapping: Mapping[str, Any], n: int) -> Polynomial:
    """
    Build a polynomial from its JSON form {word string: coefficient}.

    Coefficients may be numbers or [re, im] pairs.
    """
    poly: Polynomial = {}
    for key, raw in mapping.items():
        if isinstance(raw, (list, tuple)):
            if len(raw) != 2:
                raise ValidationError(
                    "Complex coefficients must be [re, im] pairs",
                    field="coefficient",
                    value=raw,
                )
            coefficient = complex(raw[0], raw[1])
        else:
            coefficient = complex(raw)
        w = Word.parse(key, n)
        poly[w] = poly.get(w, 0j) + coefficient
    return poly


def polynomial_to_dict(poly: Polynomial) -> Dict[str, List[float]]:
    return {str(w): [c.real, c.imag] for w, c in poly.items()}


def polynomial_degree(poly: Polynomial) -> int:
    return max((len(w) for w in poly), default=0)


def commutator_polynomial(i: int, j: int, n: int) -> Polynomial:
    """The polynomial L_i L_j - L_j L_i."""
    return {word(i, j, n=n): 1.0 + 0j, word(j, i, n=n): -1.0 + 0j}
