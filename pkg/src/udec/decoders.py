"""Decoding metrics and the argmax decoder.

Reference-family scores with an explicit parameter tensor, the exact
class-mass universal score, its parse-based surrogate, the two-user
composite score, a maximum-likelihood oracle, and the decoder itself.
The decoder maximizes; ties are broken toward the lowest index and flagged,
and bound audits count ties as errors (the pairwise events in the analysis
use the >= convention, so the simulator must not be luckier than it).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from . import channels, ensembles, families, lz, typeclasses
from .errors import InputError, InstanceTooLargeError, UnsupportedCombinationError
from .typeclasses import Sequence


@dataclass(frozen=True)
class MetricIndex:
    """Parameter tensor selecting one metric out of a family.

    ``values`` is nested: ``values[x][y]`` for additive-style families,
    ``values[x][y][s]`` for finite-state families.
    """

    values: tuple

    @classmethod
    def additive(cls, matrix) -> "MetricIndex":
        return cls(tuple(tuple(float(v) for v in row) for row in matrix))

    @classmethod
    def finite_state(cls, tensor) -> "MetricIndex":
        return cls(
            tuple(
                tuple(tuple(float(v) for v in col) for col in row)
                for row in tensor
            )
        )


@dataclass(frozen=True)
class ScoreValue:
    """A decoding score with its provenance; +inf flags a zero-mass class."""

    value: float
    provenance: str
    components: tuple = ()

    @property
    def infinite(self) -> bool:
        return math.isinf(self.value)


def metric_score(
    family: families.MetricFamily, theta: MetricIndex, x: Sequence, y: Sequence
) -> ScoreValue:
    """Score of one metric in the family: a per-position sum of the
    parameter tensor, with the state recursion for finite-state families."""
    if len(x) != len(y):
        raise InputError("length mismatch")
    v = theta.values
    if family.kind in (families.ADDITIVE, families.MAC_XOR_ADDITIVE):
        total = math.fsum(v[a][b] for a, b in zip(x, y))
    elif family.kind == families.FINITE_STATE:
        s = family.initial_state
        total = 0.0
        for a, b in zip(x, y):
            total += v[a][b][s]
            s = family.step(a, b, s)
    else:
        raise UnsupportedCombinationError(family.kind)
    return ScoreValue(total, "metric")


def mac_metric_score(
    family: families.MetricFamily,
    theta: MetricIndex,
    x1: Sequence,
    x2: Sequence,
    y: Sequence,
) -> ScoreValue:
    """Two-user family score: additive over (x1+x2 mod A, y) pairs."""
    if family.kind != families.MAC_XOR_ADDITIVE:
        raise InputError("two-user scores require a mac_xor_additive family")
    return metric_score(family, theta, channels.mod_sum(x1, x2), y)


def universal_score(
    family: families.MetricFamily,
    ensemble: ensembles.CodingEnsemble,
    x: Sequence,
    y: Sequence,
) -> ScoreValue:
    """Negative normalized log of the ensemble mass of the equivalence class
    of x given y.  Feedback ensembles condition the mass on y.  A zero-mass
    class yields +inf."""
    key = typeclasses.class_key(family, x, y)
    lp = ensembles.class_probability(ensemble, key, y)
    n = len(x)
    if lp == -math.inf:
        return ScoreValue(math.inf, "universal_exact")
    return ScoreValue(-lp / n, "universal_exact")


_LZ_KINDS = (ensembles.IID, ensembles.UNIFORM, ensembles.UNIFORM_OVER_TYPE)


def lz_universal_score(
    ensemble: ensembles.CodingEnsemble, x: Sequence, y: Sequence
) -> ScoreValue:
    """Parse-based surrogate for the universal score:
    -(1/n) * (log2 Q(x) + LZ(x|y)).

    Requires an ensemble that is invariant within the classes the surrogate
    refines (iid, uniform, or uniform over a type).  Vanishing correction
    terms are dropped; only the ordering of scores matters to the decoder.
    """
    if ensemble.kind not in _LZ_KINDS:
        raise UnsupportedCombinationError(
            f"surrogate score undefined for ensemble kind {ensemble.kind}"
        )
    n = len(x)
    lp = ensembles.log_prob(ensemble, x)
    if lp == -math.inf:
        return ScoreValue(math.inf, "universal_lz")
    complexity = lz.conditional_lz_length(tuple(x), tuple(y))
    return ScoreValue(-(lp + complexity) / n, "universal_lz")


def ml_score(channel: channels.ChannelModel, x: Sequence, y: Sequence) -> ScoreValue:
    return ScoreValue(channels.log_likelihood(channel, x, y), "ml")


# guard for exhaustive enumeration of user-word pairs
_MAC_EXHAUSTIVE_BITS = 20


def mac_universal_score(
    family: families.MetricFamily,
    q1: ensembles.CodingEnsemble,
    q2: ensembles.CodingEnsemble,
    x1: Sequence,
    x2: Sequence,
    y: Sequence,
    r1: float,
    r2: float,
) -> ScoreValue:
    """Composite two-user universal score.

    Computes the masses of the joint pair class and of the two single-user
    classes, and returns min of the three rate-discounted components.  For
    uniform user ensembles and a mac_xor_additive family all three masses
    reduce to the conditional type class of the modulo-sum, in closed form;
    otherwise pairs are enumerated exhaustively under a size guard.
    """
    if family.kind != families.MAC_XOR_ADDITIVE:
        raise InputError("composite score requires a mac_xor_additive family")
    if r1 < 0 or r2 < 0:
        raise InputError("rates must be non-negative")
    if len(x1) != len(x2) or len(x1) != len(y):
        raise InputError("length mismatch")
    n = len(y)
    z = channels.mod_sum(x1, x2)
    a = x1.alphabet_size
    uniform_users = (
        q1.kind in (ensembles.UNIFORM, ensembles.LINEAR_DITHERED)
        and q2.kind in (ensembles.UNIFORM, ensembles.LINEAR_DITHERED)
    )
    if uniform_users:
        # pair class: one free user word per modulo-sum class member;
        # single-user classes biject onto the modulo-sum class
        size = typeclasses.conditional_class_size(
            typeclasses.empirical_joint_type(z, y)
        )
        u = -(math.log2(size) - n * math.log2(a)) / n
        u0 = u1 = u2 = u
    else:
        u0, u1, u2 = _mac_masses_exhaustive(family, q1, q2, x1, x2, y)
    value = min(u0 - r1 - r2, u1 - r1, u2 - r2)
    return ScoreValue(
        value, "mac_composite", components=(u0, u1, u2, float(r1), float(r2))
    )


def _mac_masses_exhaustive(family, q1, q2, x1, x2, y):
    n = len(y)
    a = x1.alphabet_size
    if 2 * n * math.log2(a) > _MAC_EXHAUSTIVE_BITS:
        raise InstanceTooLargeError("pair enumeration refused at this size")
    ref = typeclasses.class_key(family, channels.mod_sum(x1, x2), y)
    m0 = 0.0
    m1 = 0.0
    m2 = 0.0
    probs1 = {
        s.symbols: 2.0 ** ensembles.log_prob(q1, s)
        for s in typeclasses.all_sequences(a, n)
    }
    probs2 = {
        s.symbols: 2.0 ** ensembles.log_prob(q2, s)
        for s in typeclasses.all_sequences(a, n)
    }
    for c1 in typeclasses.all_sequences(a, n):
        for c2 in typeclasses.all_sequences(a, n):
            if typeclasses.class_key(family, channels.mod_sum(c1, c2), y) == ref:
                m0 += probs1[c1.symbols] * probs2[c2.symbols]
    for c1 in typeclasses.all_sequences(a, n):
        if typeclasses.class_key(family, channels.mod_sum(c1, x2), y) == ref:
            m1 += probs1[c1.symbols]
    for c2 in typeclasses.all_sequences(a, n):
        if typeclasses.class_key(family, channels.mod_sum(x1, c2), y) == ref:
            m2 += probs2[c2.symbols]

    def to_score(mass):
        return math.inf if mass == 0.0 else -math.log2(mass) / n

    return to_score(m0), to_score(m1), to_score(m2)


def mac_lz_score(
    x1: Sequence, x2: Sequence, y: Sequence, r1: float, r2: float
) -> ScoreValue:
    """Parse-based two-user surrogate for uniform-within-type user
    ensembles: empirical entropies of the user words minus normalized
    conditional complexities, combined like the exact composite."""
    n = len(y)
    h1 = _empirical_entropy(x1)
    h2 = _empirical_entropy(x2)
    c0 = lz.joint_lz_length(tuple(x1), tuple(x2), tuple(y)) / n
    c1 = lz.conditional_lz_length(tuple(x1), tuple(zip(tuple(x2), tuple(y)))) / n
    c2 = lz.conditional_lz_length(tuple(x2), tuple(zip(tuple(x1), tuple(y)))) / n
    u0 = h1 + h2 - c0
    u1 = h1 - c1
    u2 = h2 - c2
    value = min(u0 - r1 - r2, u1 - r1, u2 - r2)
    return ScoreValue(
        value, "mac_lz", components=(u0, u1, u2, float(r1), float(r2))
    )


def _empirical_entropy(x: Sequence) -> float:
    n = len(x)
    counts = [0] * x.alphabet_size
    for v in x:
        counts[v] += 1
    return -math.fsum(c / n * math.log2(c / n) for c in counts if c > 0)


@dataclass(frozen=True)
class DecodeResult:
    """Argmax decision over a codebook; indices are 1-based messages."""

    chosen: int
    best_score: float
    tie: bool
    tied: tuple[int, ...] = ()


def decode(codebook, y: Sequence, scorer) -> DecodeResult:
    """Pick the codeword maximizing the scorer; lowest index wins ties.

    ``codebook`` is a Codebook or any sequence of codewords; ``scorer`` maps
    (codeword, y) to a float or ScoreValue.
    """
    words = getattr(codebook, "codewords", codebook)
    if len(words) == 0:
        raise InputError("empty codebook")
    scores = []
    for w in words:
        s = scorer(w, y)
        scores.append(s.value if isinstance(s, ScoreValue) else float(s))
    best = max(scores)
    tied = tuple(i + 1 for i, s in enumerate(scores) if s == best)
    return DecodeResult(
        chosen=tied[0], best_score=best, tie=len(tied) > 1, tied=tied
    )


def mac_decode(codebook1, codebook2, y: Sequence, pair_scorer) -> DecodeResult:
    """Argmax over message pairs; the decision index encodes the pair as
    (i, j), both 1-based, via the ``tied`` tuple of flat indices."""
    words1 = getattr(codebook1, "codewords", codebook1)
    words2 = getattr(codebook2, "codewords", codebook2)
    scores = []
    for w1 in words1:
        for w2 in words2:
            s = pair_scorer(w1, w2, y)
            scores.append(s.value if isinstance(s, ScoreValue) else float(s))
    best = max(scores)
    tied = tuple(i + 1 for i, s in enumerate(scores) if s == best)
    return DecodeResult(
        chosen=tied[0], best_score=best, tie=len(tied) > 1, tied=tied
    )


def metric_scorer(family, theta):
    return lambda x, y: metric_score(family, theta, x, y)


def universal_scorer(family, ensemble):
    return lambda x, y: universal_score(family, ensemble, x, y)


def lz_scorer(ensemble):
    return lambda x, y: lz_universal_score(ensemble, x, y)


def ml_scorer(channel):
    return lambda x, y: ml_score(channel, x, y)
