"""Incremental joint parsing and the conditional complexity it induces.

The sequence of symbol pairs (x_i, y_i) is parsed incrementally: each new
phrase is the shortest prefix of the remainder that has not been seen
before.  The conditional length of x given y is the dominant term of the
resulting code length, sum over distinct y-phrases of c*log2(c), where c
counts the distinct joint phrases sharing that y-part.  Constant per-phrase
overheads are deliberately omitted: decoding uses only the ordering of
scores.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import InputError


@dataclass(frozen=True)
class PhraseParse:
    """Result of incremental parsing of a pair sequence.

    ``phrases`` are (x-part, y-part) word pairs in parse order; the final
    phrase may be an incomplete duplicate of an earlier one and is kept in
    the list.  ``y_counts`` maps each distinct y-part to the number of
    *distinct* joint phrases carrying it, so a duplicated final phrase never
    inflates its bucket.
    """

    phrases: tuple[tuple[tuple, tuple], ...]
    y_counts: dict

    @property
    def phrase_count(self) -> int:
        return len(self.phrases)


def joint_parse(x, y) -> PhraseParse:
    """Parse the paired sequence (x_i, y_i) into distinct phrases.

    Accepts any equal-length iterables of hashable symbols (plain ints, or
    tuples when parsing product alphabets).
    """
    xs, ys = tuple(x), tuple(y)
    if len(xs) != len(ys):
        raise InputError(f"length mismatch: {len(xs)} vs {len(ys)}")
    seen = set()
    phrases = []
    y_counts: dict = {}
    start = 0
    n = len(xs)
    while start < n:
        end = start + 1
        while tuple(zip(xs[start:end], ys[start:end])) in seen and end < n:
            end += 1
        phrase = tuple(zip(xs[start:end], ys[start:end]))
        phrases.append((tuple(xs[start:end]), tuple(ys[start:end])))
        if phrase not in seen:
            seen.add(phrase)
            y_part = tuple(ys[start:end])
            y_counts[y_part] = y_counts.get(y_part, 0) + 1
        start = end
    return PhraseParse(tuple(phrases), y_counts)


def conditional_lz_length(x, y) -> float:
    """Conditional complexity of x given y, in bits (>= 0).

    Sum over distinct y-phrases of c*log2(c).  Equal sequences always give
    0.0: distinct joint phrases with equal x- and y-parts are determined by
    their y-part, so every bucket holds a single phrase.
    """
    parse = joint_parse(x, y)
    return math.fsum(c * math.log2(c) for c in parse.y_counts.values() if c > 1)


def joint_lz_length(x1, x2, y) -> float:
    """Conditional complexity of the pair (x1, x2) given y: the x-part of
    each parsed pair ranges over the product alphabet."""
    xs = tuple(zip(tuple(x1), tuple(x2)))
    return conditional_lz_length(xs, y)
