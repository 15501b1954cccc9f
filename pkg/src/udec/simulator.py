"""Exhaustive small-instance oracles and seeded Monte Carlo experiments.

Exact mode replaces the expectation over codebooks by the clipped-union
functionals that sandwich the average error probability, so the main
competitive bound can be audited without enumerating codebooks.  Monte Carlo
mode runs paired decoding trials: every configured decoder sees the same
codebook and channel realization, and trials are keyed by (master seed,
trial index) so results are reproducible and order-independent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import channels, decoders, ensembles, families, lz, typeclasses
from .decoders import MetricIndex, ScoreValue
from .errors import InputError, InstanceTooLargeError, UnsupportedCombinationError
from .typeclasses import Sequence

_Z95 = 1.959963984540054


def wilson_interval(errors: int, trials: int, z: float = _Z95) -> tuple[float, float]:
    """95% score interval for a binomial proportion."""
    if trials == 0:
        return (0.0, 1.0)
    p = errors / trials
    denom = 1.0 + z * z / trials
    center = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    lo = 0.0 if errors == 0 else max(0.0, center - half)
    hi = 1.0 if errors == trials else min(1.0, center + half)
    return (lo, hi)


@dataclass(frozen=True)
class ErrorEstimate:
    """Monte Carlo error probability for one decoder."""

    decoder: str
    n: int
    rate: float
    trials: int
    errors: int
    estimate: float
    ci_lo: float
    ci_hi: float
    seed: int


@dataclass(frozen=True)
class PairwiseErrorReport:
    """Exact competitor mass for one (input, output) pair, with the
    class-mass sandwich bounds when a family is supplied.

    The lower bound holds for any scorer in or above the family; the upper
    bound only applies when the scorer is the exact universal metric, which
    the caller asserts via ``universal=True``.
    """

    mass: float
    log2_mass: float
    log2_lower: float | None = None
    log2_upper: float | None = None
    lower_ok: bool | None = None
    upper_ok: bool | None = None


def pairwise_error_exact(
    ensemble: ensembles.CodingEnsemble,
    scorer,
    x: Sequence,
    y: Sequence,
    family: families.MetricFamily | None = None,
    universal: bool = False,
    tol: float = 1e-9,
) -> PairwiseErrorReport:
    """Exact mass of competitors scoring at least as high as x against y."""
    n = len(x)
    s0 = _score(scorer, x, y)
    mass = 0.0
    for cand in typeclasses.all_sequences(x.alphabet_size, n):
        if _score(scorer, cand, y) >= s0:
            lp = ensembles.log_prob(ensemble, cand, y)
            if lp != -math.inf:
                mass += 2.0**lp
    log2_mass = math.log2(mass) if mass > 0 else -math.inf
    if family is None:
        return PairwiseErrorReport(mass=mass, log2_mass=log2_mass)
    u = decoders.universal_score(family, ensemble, x, y).value
    k_y = typeclasses.classes_for_output(family, y)
    log2_lower = -n * u
    log2_upper = math.log2(k_y) - n * u
    lower_ok = mass >= 2.0**log2_lower - tol
    upper_ok = (mass <= 2.0**log2_upper + tol) if universal else None
    return PairwiseErrorReport(
        mass=mass,
        log2_mass=log2_mass,
        log2_lower=log2_lower,
        log2_upper=log2_upper,
        lower_ok=lower_ok,
        upper_ok=upper_ok,
    )


def _score(scorer, x, y) -> float:
    s = scorer(x, y)
    return s.value if isinstance(s, ScoreValue) else float(s)


# ---------------------------------------------------------------------------
# exact clipped-union audit
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExactAuditReport:
    """Exhaustive audit of the competitive bound at one block length.

    ``pointwise_ok`` certifies, for every weighted (x, y) pair and every
    parameter in the grid, that the competitor mass of the parametric scorer
    is at least the class mass, and the competitor mass of the universal
    scorer is at most the class count times the class mass.  The clipped
    union functionals and the class-growth factor then give the aggregate
    inequality.
    """

    n: int
    rate: float
    delta_n: float
    lhs_universal: float
    rhs_by_theta: tuple[float, ...]
    pointwise_ok: bool
    aggregate_ok: bool
    violations: tuple[str, ...] = ()
    cases: tuple = field(default=(), repr=False)


def exact_bound_audit(
    ensemble: ensembles.CodingEnsemble,
    channel: channels.ChannelModel,
    family: families.MetricFamily,
    thetas: list[MetricIndex],
    rate: float,
    n: int,
    tol: float = 1e-9,
    collect_cases: bool = False,
) -> ExactAuditReport:
    """Enumerate all weighted (input, output) pairs and audit the sandwich.

    Works for any ensemble kind, including output-conditioned (feedback)
    ensembles: class masses are computed by grouping the enumerated inputs
    by class key, which is exact by construction.
    """
    xa = family.x_alphabet_size
    ya = family.y_alphabet_size
    if n * (math.log2(xa) + math.log2(ya)) > typeclasses.EXHAUSTIVE_BITS:
        raise InstanceTooLargeError("exact audit instance too large")
    xs = list(typeclasses.all_sequences(xa, n))
    m_count = 2.0 ** (n * rate)
    count_report = typeclasses.count_classes(
        family,
        n,
        strategy="combinatorial"
        if family.kind in (families.ADDITIVE, families.MAC_XOR_ADDITIVE)
        else "exhaustive",
    )
    delta_n = count_report.log_growth

    lhs = 0.0
    rhs = [0.0] * len(thetas)
    violations: list[str] = []
    cases = []
    for y in typeclasses.all_sequences(ya, n):
        q = np.array(
            [2.0 ** _safe_log_prob(ensemble, x, y) for x in xs]
        )
        if q.sum() == 0.0:
            continue
        keys = [typeclasses.class_key(family, x, y) for x in xs]
        key_mass: dict = {}
        for k, qi in zip(keys, q):
            key_mass[k] = key_mass.get(k, 0.0) + qi
        k_y = len(key_mass)
        u_vals = np.array(
            [
                math.inf if key_mass[k] == 0.0 else -math.log2(key_mass[k]) / n
                for k in keys
            ]
        )
        theta_scores = np.array(
            [
                [decoders.metric_score(family, th, x, y).value for x in xs]
                for th in thetas
            ]
        )
        # competitor masses: each row compares all candidates to one x
        mass_theta = (
            (theta_scores[:, None, :] >= theta_scores[:, :, None]) * q[None, None, :]
        ).sum(axis=2)
        # the universal decoder maximizes u, so competitors have u at least
        # as large (class mass at most as large)
        mass_u = ((u_vals[None, :] >= u_vals[:, None]) * q[None, :]).sum(axis=1)

        for ix, x in enumerate(xs):
            w = q[ix] * 2.0 ** _safe_ll(channel, x, y)
            if w == 0.0 and not collect_cases:
                # pointwise checks still run on zero-weight pairs with mass
                pass
            class_mass = 2.0 ** (-n * u_vals[ix]) if u_vals[ix] != math.inf else 0.0
            for it in range(len(thetas)):
                if mass_theta[it, ix] < class_mass - tol:
                    violations.append(
                        f"lower bound violated at x={x.symbols} y={y.symbols} theta#{it}"
                    )
            upper = k_y * class_mass
            if mass_u[ix] > upper + tol:
                violations.append(
                    f"upper bound violated at x={x.symbols} y={y.symbols}"
                )
            if w > 0.0:
                lhs += w * min(1.0, m_count * mass_u[ix])
                for it in range(len(thetas)):
                    rhs[it] += w * min(1.0, m_count * mass_theta[it, ix])
            if collect_cases:
                cases.append(
                    (
                        y.symbols,
                        x.symbols,
                        float(u_vals[ix]),
                        float(mass_u[ix]),
                        tuple(float(v) for v in mass_theta[:, ix]),
                        k_y,
                    )
                )

    aggregate_ok = bool(lhs <= 2.0 ** (n * delta_n) * min(rhs) + tol)
    return ExactAuditReport(
        n=n,
        rate=rate,
        delta_n=delta_n,
        lhs_universal=float(lhs),
        rhs_by_theta=tuple(float(v) for v in rhs),
        pointwise_ok=not violations,
        aggregate_ok=aggregate_ok,
        violations=tuple(violations),
        cases=tuple(cases),
    )


def _safe_log_prob(ensemble, x, y):
    if ensemble.kind == ensembles.FEEDBACK_TREE:
        return ensembles.log_prob(ensemble, x, y)
    return ensembles.log_prob(ensemble, x)


def _safe_ll(channel, x, y):
    ll = channels.log_likelihood(channel, x, y)
    return ll


# ---------------------------------------------------------------------------
# pairwise-independent union lower bound
# ---------------------------------------------------------------------------


@dataclass
class EventFamilySpec:
    """A finite probability space with integer weights and a family of
    events declared pairwise independent; the declaration is re-verified by
    exact integer arithmetic before the bound is checked."""

    num_outcomes: int
    events: tuple
    weights: tuple[int, ...] | None = None
    label: str = ""


@dataclass(frozen=True)
class ShulmanReport:
    label: str
    num_events: int
    union_prob: float
    sum_prob: float
    bound: float
    holds: bool


def shulman_check(spec: EventFamilySpec, require_independence: bool = True) -> ShulmanReport:
    """Exact check that the union probability is at least half the clipped
    sum of the event probabilities.

    Raises if the pairwise-independence certificate fails: the bound is not
    applicable to such a family.  Pass ``require_independence=False`` only to
    evaluate the inequality numerically on families (e.g. disjoint events)
    where it holds for other reasons.
    """
    masks = [np.asarray(e, dtype=bool) for e in spec.events]
    if not masks:
        raise InputError("event family must be nonempty")
    for m in masks:
        if m.shape != (spec.num_outcomes,):
            raise InputError("event mask has wrong length")
    if spec.weights is None:
        w = np.ones(spec.num_outcomes, dtype=np.int64)
    else:
        w = np.asarray(spec.weights, dtype=np.int64)
        if (w < 0).any():
            raise InputError("weights must be non-negative")
    total = int(w.sum())
    sizes = [int(w[m].sum()) for m in masks]
    for i in range(len(masks) if require_independence else 0):
        for j in range(i + 1, len(masks)):
            inter = int(w[masks[i] & masks[j]].sum())
            if inter * total != sizes[i] * sizes[j]:
                raise InputError(
                    f"pairwise independence certificate failed for events {i},{j}"
                )
    union = int(w[np.logical_or.reduce(masks)].sum())
    s = sum(sizes)
    # exact: 2 * union/total >= min(1, s/total)
    holds = 2 * union >= min(total, s)
    return ShulmanReport(
        label=spec.label,
        num_events=len(masks),
        union_prob=union / total,
        sum_prob=s / total,
        bound=0.5 * min(1.0, s / total),
        holds=holds,
    )


def xor_parity_family(num_bits: int, subsets=None, targets=None, label="") -> EventFamilySpec:
    """Events over uniform bits: each event fixes the parity of a nonempty
    bit subset.  Distinct subsets give pairwise independent events."""
    space = 1 << num_bits
    if subsets is None:
        subsets = [s for s in range(1, space if num_bits <= 16 else 0)]
    outcomes = np.arange(space, dtype=np.uint64)
    events = []
    for idx, s in enumerate(subsets):
        t = 1 if targets is None else targets[idx]
        parity = np.bitwise_count(outcomes & np.uint64(s)) & 1
        events.append(parity == t)
    return EventFamilySpec(space, tuple(events), label=label or f"parity-{num_bits}bit")


def projective_line_family(q: int, num_events: int | None = None, shifts=None, label="") -> EventFamilySpec:
    """Events over the uniform q x q grid (q prime): each event is a line
    a*u + b*v = c with pairwise non-proportional normals, so any two events
    intersect in exactly one point and are pairwise independent."""
    directions = [(1, b) for b in range(q)] + [(0, 1)]
    if num_events is not None:
        directions = directions[:num_events]
    u = np.arange(q * q) // q
    v = np.arange(q * q) % q
    events = []
    for idx, (a, b) in enumerate(directions):
        c = 0 if shifts is None else shifts[idx]
        events.append((a * u + b * v) % q == c)
    return EventFamilySpec(q * q, tuple(events), label=label or f"lines-q{q}")


def random_pairwise_independent_family(rng: np.random.Generator) -> EventFamilySpec:
    """Draw a random family from one of the exactly-verifiable
    constructions, over a space of at most 2**16 outcomes."""
    if rng.integers(2) == 0:
        num_bits = int(rng.integers(4, 17))
        count = int(rng.integers(2, 16))
        space = 1 << num_bits
        subsets = rng.choice(np.arange(1, space), size=count, replace=False)
        targets = rng.integers(0, 2, size=count)
        return xor_parity_family(
            num_bits, [int(s) for s in subsets], [int(t) for t in targets],
            label=f"parity-{num_bits}bit-{count}ev",
        )
    q = int(rng.choice([3, 5, 7, 11, 13, 17, 19, 23]))
    count = int(rng.integers(2, q + 2))
    shifts = [int(s) for s in rng.integers(0, q, size=count)]
    return projective_line_family(q, count, shifts, label=f"lines-q{q}-{count}ev")


# ---------------------------------------------------------------------------
# surrogate metric growth condition
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SurrogateReport:
    """Per-block-length growth exponents of the surrogate score.

    ``kappa`` for one output is the normalized log of the Q-weighted sum of
    2^(n * surrogate score) over the ensemble support; the audit tracks the
    maximum over sampled outputs and whether it shrinks with n."""

    per_n: dict[int, tuple[tuple[tuple[int, ...], float], ...]]
    max_per_n: dict[int, float]
    non_increasing: bool


def surrogate_condition_check(
    make_ensemble,
    n_values,
    samples_per_y: int = 20,
    seed: int = 0,
) -> SurrogateReport:
    """Measure the surrogate growth exponent across block lengths.

    ``make_ensemble`` maps a block length to an ensemble (iid, uniform or
    uniform over a type).  For every ensemble-supported x the weighted
    summand reduces exactly to 2^(-conditional complexity), so the sum is
    over the support only.
    """
    per_n: dict[int, tuple] = {}
    max_per_n: dict[int, float] = {}
    for n in n_values:
        ensemble = make_ensemble(n)
        if ensemble.kind not in (
            ensembles.IID,
            ensembles.UNIFORM,
            ensembles.UNIFORM_OVER_TYPE,
        ):
            raise UnsupportedCombinationError(
                "surrogate condition requires an invariant ensemble kind"
            )
        if n * math.log2(ensemble.alphabet_size) > 16:
            raise InstanceTooLargeError("surrogate check instance too large")
        support = [
            x
            for x in typeclasses.all_sequences(ensemble.alphabet_size, n)
            if ensembles.log_prob(ensemble, x) != -math.inf
        ]
        rng = np.random.default_rng(np.random.SeedSequence((seed, n)))
        rows = []
        for _ in range(samples_per_y):
            y = tuple(
                int(v) for v in rng.integers(0, ensemble.alphabet_size, size=n)
            )
            total = math.fsum(
                2.0 ** -lz.conditional_lz_length(x.symbols, y) for x in support
            )
            rows.append((y, math.log2(total) / n))
        per_n[n] = tuple(rows)
        max_per_n[n] = max(k for _, k in rows)
    ns = sorted(max_per_n)
    non_increasing = all(
        max_per_n[b] <= max_per_n[a] + 1e-12 for a, b in zip(ns, ns[1:])
    )
    return SurrogateReport(per_n=per_n, max_per_n=max_per_n, non_increasing=non_increasing)


# ---------------------------------------------------------------------------
# Monte Carlo experiments
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DecoderSpec:
    """One decoder to run in an experiment.

    ``kind`` is one of ``universal`` (exact class-mass metric), ``ml``
    (channel log-likelihood oracle), ``metric`` (one member of the family,
    with ``theta`` a matrix), or ``lz`` (parse-based surrogate).
    """

    kind: str
    label: str = ""
    theta: tuple = ()

    @property
    def name(self) -> str:
        return self.label or self.kind


def run_experiment(
    ensemble: ensembles.CodingEnsemble,
    channel: channels.ChannelModel,
    family: families.MetricFamily,
    decoder_specs: list[DecoderSpec],
    rate: float,
    trials: int,
    seed: int,
    ties_as_errors: bool = True,
) -> list[ErrorEstimate]:
    """Paired decoding trials: per trial, draw a codebook, transmit a
    uniformly chosen message, and decode the same realization with every
    configured decoder.  Deterministic given the master seed."""
    if trials < 1:
        raise InputError("at least one trial required")
    n = ensemble.n
    m = ensembles.message_count(n, rate)
    if (
        ensemble.kind == ensembles.LINEAR_DITHERED
        and m > 2**ensemble.message_bits
    ):
        raise InputError("more codewords than linear messages available")
    if _fast_path_ok(ensemble, channel, family, decoder_specs):
        errors = _run_fast(
            ensemble, channel, decoder_specs, n, m, trials, seed, ties_as_errors
        )
    else:
        errors = _run_slow(
            ensemble, channel, family, decoder_specs, n, m, trials, seed,
            ties_as_errors,
        )
    out = []
    for spec, err in zip(decoder_specs, errors):
        lo, hi = wilson_interval(err, trials)
        out.append(
            ErrorEstimate(
                decoder=spec.name,
                n=n,
                rate=rate,
                trials=trials,
                errors=err,
                estimate=err / trials,
                ci_lo=lo,
                ci_hi=hi,
                seed=seed,
            )
        )
    return out


def _fast_path_ok(ensemble, channel, family, decoder_specs) -> bool:
    if family.kind != families.ADDITIVE:
        return False
    if family.x_alphabet_size != 2 or family.y_alphabet_size != 2:
        return False
    if ensemble.n > 64:
        return False
    if ensemble.kind == ensembles.IID and ensemble.probs != (0.5, 0.5):
        return False
    if ensemble.kind not in (
        ensembles.UNIFORM,
        ensembles.IID,
        ensembles.LINEAR_DITHERED,
    ):
        return False
    if channel.kind == channels.DMC and channel.x_alphabet_size == 2:
        pass
    elif channel.kind == channels.MOD_ADDITIVE and channel.x_alphabet_size == 2:
        pass
    else:
        return False
    for spec in decoder_specs:
        if spec.kind not in ("universal", "ml", "metric"):
            return False
        if spec.kind == "ml" and channel.kind == channels.MOD_ADDITIVE and channel.noise_word:
            return False
    return True


def _log_binom_table(n: int) -> np.ndarray:
    table = np.full((n + 1, n + 1), -np.inf)
    for m in range(n + 1):
        for k in range(m + 1):
            table[m, k] = math.lgamma(m + 1) - math.lgamma(k + 1) - math.lgamma(m - k + 1)
    return table / math.log(2.0)


def _additive_coeffs(theta) -> tuple[float, float]:
    # score = t00*a00 + t01*a01 + t10*a10 + t11*a11 rewritten via the
    # codeword weight and the overlap with y; per-trial constants dropped
    (t00, t01), (t10, t11) = theta
    return (t00 - t01 - t10 + t11, t10 - t00)


def _ml_theta(channel) -> tuple[tuple[float, float], tuple[float, float]]:
    floor = 1e-300
    if channel.kind == channels.DMC:
        w = channel.matrix
    else:
        p = channel.noise_probs
        w = ((p[0], p[1]), (p[1], p[0]))
    return tuple(
        tuple(math.log2(max(p, floor)) for p in row) for row in w
    )


def _pack_bits(bits: np.ndarray) -> np.uint64:
    return np.uint64(
        int.from_bytes(np.packbits(bits.astype(np.uint8), bitorder="little").tobytes(), "little")
    )


def _run_fast(ensemble, channel, decoder_specs, n, m, trials, seed, ties_as_errors):
    mask = np.uint64((1 << n) - 1 if n < 64 else 0xFFFFFFFFFFFFFFFF)
    lbinom = _log_binom_table(n)
    if channel.kind == channels.DMC:
        p0, p1 = channel.matrix[0][1], channel.matrix[1][0]
        fixed_noise = None
    else:
        if channel.noise_word:
            fixed_noise = _pack_bits(np.asarray(channel.noise_word))
            p0 = p1 = 0.0
        else:
            fixed_noise = None
            p0 = p1 = channel.noise_probs[1]

    coeffs = []
    for spec in decoder_specs:
        if spec.kind == "metric":
            coeffs.append(("metric",) + _additive_coeffs(spec.theta))
        elif spec.kind == "ml":
            coeffs.append(("metric",) + _additive_coeffs(_ml_theta(channel)))
        else:
            coeffs.append(("universal", 0.0, 0.0))

    errors = [0] * len(decoder_specs)
    bitpos = np.arange(n, dtype=np.uint64)
    for t in range(trials):
        rng = np.random.default_rng(np.random.SeedSequence((seed, t)))
        if ensemble.kind == ensembles.LINEAR_DITHERED:
            k = ensemble.message_bits
            rows = (
                rng.integers(0, 1 << 32, size=(k, 2), dtype=np.uint64)
            )
            rows = ((rows[:, 0] << np.uint64(32)) | rows[:, 1]) & mask
            dither = rng.integers(0, 1 << 32, size=2, dtype=np.uint64)
            dither = ((dither[0] << np.uint64(32)) | dither[1]) & mask
            msgs = np.arange(m, dtype=np.uint64)
            code = np.full(m, dither, dtype=np.uint64)
            for j in range(k):
                sel = ((msgs >> np.uint64(j)) & np.uint64(1)).astype(bool)
                code[sel] ^= rows[j]
        else:
            halves = rng.integers(0, 1 << 32, size=(m, 2), dtype=np.uint64)
            code = ((halves[:, 0] << np.uint64(32)) | halves[:, 1]) & mask
        true_idx = int(rng.integers(m))
        x_word = code[true_idx]
        if fixed_noise is not None:
            y_word = x_word ^ fixed_noise
        else:
            x_bits = ((x_word >> bitpos) & np.uint64(1)).astype(bool)
            flip_p = np.where(x_bits, p1, p0)
            noise_bits = rng.random(n) < flip_p
            y_word = x_word ^ _pack_bits(noise_bits)
        ny = int(np.bitwise_count(y_word))
        pc = np.bitwise_count(code).astype(np.int64)
        a11 = np.bitwise_count(code & y_word).astype(np.int64)
        for d, (kind, ca, cb) in enumerate(coeffs):
            if kind == "metric":
                scores = ca * a11 + cb * pc
            else:
                scores = -(lbinom[n - ny, pc - a11] + lbinom[ny, a11])
            s_true = scores[true_idx]
            if ties_as_errors:
                err = int(np.count_nonzero(scores >= s_true) > 1)
            else:
                best = scores.max()
                err = int(
                    s_true < best
                    or (scores[:true_idx] == best).any()
                )
            errors[d] += err
    return errors


def _run_slow(
    ensemble, channel, family, decoder_specs, n, m, trials, seed, ties_as_errors
):
    scorers = []
    for spec in decoder_specs:
        if spec.kind == "universal":
            scorers.append(decoders.universal_scorer(family, ensemble))
        elif spec.kind == "ml":
            scorers.append(decoders.ml_scorer(channel))
        elif spec.kind == "metric":
            scorers.append(decoders.metric_scorer(family, MetricIndex.additive(spec.theta)))
        elif spec.kind == "lz":
            scorers.append(decoders.lz_scorer(ensemble))
        else:
            raise InputError(f"unknown decoder kind: {spec.kind!r}")
    errors = [0] * len(decoder_specs)
    for t in range(trials):
        trial_rng = np.random.default_rng(np.random.SeedSequence((seed, t)))
        book_seed = int(trial_rng.integers(1 << 62))
        channel_seed = (seed, t, 1)
        book = ensembles.sample_codebook(ensemble, m, book_seed)
        true_idx = int(trial_rng.integers(m))
        y = channels.transmit(channel, book.codewords[true_idx], channel_seed)
        for d, scorer in enumerate(scorers):
            scores = [_score(scorer, w, y) for w in book.codewords]
            s_true = scores[true_idx]
            if ties_as_errors:
                err = sum(1 for s in scores if s >= s_true) > 1
            else:
                best = max(scores)
                err = s_true < best or any(
                    s == best for s in scores[:true_idx]
                )
            errors[d] += int(err)
    return errors


def default_theta_grid(size: int = 25, channel=None, seed: int = 0) -> list:
    """Deterministic grid of additive parameter matrices in [-1, 1].

    Always contains the match/mismatch (identity) matrix; when a memoryless
    binary channel is supplied its log-likelihood matrix is included too, so
    the grid minimum is never above the ML point.  Evaluating a minimum over
    this finite subset of the full class only weakens the audited right-hand
    sides, which is the safe direction.
    """
    grid = [((1.0, 0.0), (0.0, 1.0))]
    if channel is not None:
        grid.append(_ml_theta(channel))
    rng = np.random.default_rng(np.random.SeedSequence((seed, 0x7E7A)))
    while len(grid) < size:
        m = rng.uniform(-1.0, 1.0, size=(2, 2))
        m /= max(1e-9, np.abs(m).max())
        grid.append(tuple(tuple(float(v) for v in row) for row in m))
    return grid


# ---------------------------------------------------------------------------
# Monte Carlo audit of the competitive bound
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MonteCarloAuditReport:
    """Estimates plus both competitive inequalities at CI separation.

    Inequality A compares the universal decoder at rate R against the best
    grid metric at rate R scaled by twice the class-growth factor.
    Inequality B compares it against twice the best grid metric run at the
    class-growth-inflated rate; that arm is estimated with the
    codebook-exact conditional error estimator (valid for fully independent
    codewords)."""

    estimates: tuple[ErrorEstimate, ...]
    delta_n: float
    shifted_rate: float
    shifted_estimates: tuple[ErrorEstimate, ...]
    ineq_factor_ok: bool
    ineq_rate_ok: bool
    ratio_universal_to_ml: float
    #: ratio divided by the envelope factor 2*2^(n*delta_n); the raw ratio
    #: grows polynomially with n (prefactor loss of the universal decoder),
    #: while this slack measures how loose the audited envelope is and
    #: shrinks as n grows
    envelope_slack: float = math.inf


def monte_carlo_audit(
    channel: channels.ChannelModel,
    family: families.MetricFamily,
    metric_thetas: list,
    rate: float,
    n: int,
    trials: int,
    seed: int,
    shifted_trials: int = 4000,
) -> MonteCarloAuditReport:
    """Audit both competitive inequalities for the uniform binary ensemble.

    ``metric_thetas`` are additive parameter matrices; the ML metric for the
    channel is always added to the grid.  Evaluating the minimum over a
    finite grid only weakens the right-hand sides, which is the safe
    direction for an audit.
    """
    ensemble = ensembles.uniform_ensemble(2, n)
    specs = [DecoderSpec("universal"), DecoderSpec("ml")]
    for i, th in enumerate(metric_thetas):
        specs.append(DecoderSpec("metric", label=f"metric{i}", theta=tuple(tuple(r) for r in th)))
    estimates = run_experiment(
        ensemble, channel, family, specs, rate, trials, seed, ties_as_errors=True
    )
    delta_n = typeclasses.count_classes(family, n).log_growth

    est_u = estimates[0]
    theta_estimates = estimates[1:]
    factor = 2.0 * 2.0 ** (n * delta_n)
    ineq_factor_ok = est_u.ci_hi <= factor * min(e.ci_lo for e in theta_estimates)

    shifted_rate = rate + delta_n
    shifted_m = ensembles.message_count(n, shifted_rate)
    theta_list = [_ml_theta(channel)] + [
        tuple(tuple(float(v) for v in row) for row in th) for th in metric_thetas
    ]
    shifted = _analytic_error_estimates(
        channel, theta_list, n, shifted_m, shifted_rate, shifted_trials, seed + 1
    )
    ineq_rate_ok = est_u.ci_hi <= 2.0 * min(e.ci_lo for e in shifted)
    est_ml = estimates[1]
    ratio = (
        est_u.estimate / est_ml.estimate if est_ml.estimate > 0 else math.inf
    )
    slack = ratio / factor
    return MonteCarloAuditReport(
        estimates=tuple(estimates),
        delta_n=delta_n,
        shifted_rate=shifted_rate,
        shifted_estimates=tuple(shifted),
        ineq_factor_ok=ineq_factor_ok,
        ineq_rate_ok=ineq_rate_ok,
        ratio_universal_to_ml=ratio,
        envelope_slack=slack,
    )


def _analytic_error_estimates(
    channel, theta_list, n, m, rate, trials, seed
) -> list[ErrorEstimate]:
    """Error probability of additive-metric decoders over the uniform binary
    ensemble, exact over the codebook randomness: per sampled (input,
    output) pair the competitor mass is a closed-form binomial sum and the
    conditional error is 1-(1-mass)^(M-1)."""
    lbinom = _log_binom_table(n)
    if channel.kind == channels.DMC:
        p0, p1 = channel.matrix[0][1], channel.matrix[1][0]
    elif channel.kind == channels.MOD_ADDITIVE and not channel.noise_word:
        p0 = p1 = channel.noise_probs[1]
    else:
        raise UnsupportedCombinationError(
            "analytic estimator supports memoryless binary channels only"
        )
    coeffs = [_additive_coeffs(th) for th in theta_list]
    sums = [0.0] * len(theta_list)
    sq_sums = [0.0] * len(theta_list)
    for t in range(trials):
        rng = np.random.default_rng(np.random.SeedSequence((seed, t, 2)))
        x_bits = rng.integers(0, 2, size=n).astype(bool)
        flip_p = np.where(x_bits, p1, p0)
        y_bits = x_bits ^ (rng.random(n) < flip_p)
        ny = int(y_bits.sum())
        a11_true = int((x_bits & y_bits).sum())
        pc_true = int(x_bits.sum())
        a11g, a10g = np.meshgrid(
            np.arange(ny + 1), np.arange(n - ny + 1), indexing="ij"
        )
        log_counts = lbinom[ny, a11g] + lbinom[n - ny, a10g]
        counts = 2.0**log_counts
        for d, (ca, cb) in enumerate(coeffs):
            s = ca * a11g + cb * (a11g + a10g)
            s_true = ca * a11_true + cb * pc_true
            mass = counts[s >= s_true].sum() / 2.0**n
            mass = min(mass, 1.0)
            if mass >= 1.0:
                cond = 1.0
            else:
                cond = -math.expm1((m - 1) * math.log1p(-mass))
            sums[d] += cond
            sq_sums[d] += cond * cond
    out = []
    for d in range(len(theta_list)):
        mean = sums[d] / trials
        var = max(sq_sums[d] / trials - mean * mean, 0.0)
        half = _Z95 * math.sqrt(var / trials)
        label = "ml" if d == 0 else f"metric{d-1}"
        out.append(
            ErrorEstimate(
                decoder=f"{label}@shifted",
                n=n,
                rate=rate,
                trials=trials,
                errors=-1,
                estimate=mean,
                ci_lo=max(0.0, mean - half),
                ci_hi=min(1.0, mean + half),
                seed=seed,
            )
        )
    return out


# ---------------------------------------------------------------------------
# two-user (modulo-sum) experiments
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MacPairwiseReport:
    """The three exact pairwise error masses against their class-mass lower
    bounds for one (x1, x2, y) instance."""

    mass_both: float
    mass_user1: float
    mass_user2: float
    bound_both: float
    bound_user1: float
    bound_user2: float
    ok: bool


def mac_pairwise_error_exact(
    family: families.MetricFamily,
    q1: ensembles.CodingEnsemble,
    q2: ensembles.CodingEnsemble,
    theta: MetricIndex,
    x1: Sequence,
    x2: Sequence,
    y: Sequence,
    tol: float = 1e-9,
) -> MacPairwiseReport:
    """Exhaustive three-way sandwich check for one parametric metric."""
    n = len(y)
    a = x1.alphabet_size
    if 2 * n * math.log2(a) > 20:
        raise InstanceTooLargeError("pair enumeration refused at this size")
    s0 = decoders.mac_metric_score(family, theta, x1, x2, y).value
    u = decoders.mac_universal_score(family, q1, q2, x1, x2, y, 0.0, 0.0)
    u0, u1, u2 = u.components[0], u.components[1], u.components[2]
    words = list(typeclasses.all_sequences(a, n))
    p1 = {w.symbols: 2.0 ** ensembles.log_prob(q1, w) for w in words}
    p2 = {w.symbols: 2.0 ** ensembles.log_prob(q2, w) for w in words}
    mass_both = 0.0
    for c1 in words:
        for c2 in words:
            if decoders.mac_metric_score(family, theta, c1, c2, y).value >= s0:
                mass_both += p1[c1.symbols] * p2[c2.symbols]
    mass_user1 = sum(
        p1[c1.symbols]
        for c1 in words
        if decoders.mac_metric_score(family, theta, c1, x2, y).value >= s0
    )
    mass_user2 = sum(
        p2[c2.symbols]
        for c2 in words
        if decoders.mac_metric_score(family, theta, x1, c2, y).value >= s0
    )
    b0, b1, b2 = 2.0 ** (-n * u0), 2.0 ** (-n * u1), 2.0 ** (-n * u2)
    ok = (
        mass_both >= b0 - tol
        and mass_user1 >= b1 - tol
        and mass_user2 >= b2 - tol
    )
    return MacPairwiseReport(
        mass_both=mass_both,
        mass_user1=mass_user1,
        mass_user2=mass_user2,
        bound_both=b0,
        bound_user1=b1,
        bound_user2=b2,
        ok=ok,
    )


@dataclass(frozen=True)
class MacErrorEstimate:
    decoder: str
    n: int
    rate1: float
    rate2: float
    trials: int
    errors: int
    errors_both: int
    errors_user1: int
    errors_user2: int
    estimate: float
    ci_lo: float
    ci_hi: float
    seed: int


def mac_run_experiment(
    channel: channels.ChannelModel,
    family: families.MetricFamily,
    decoder_specs: list[DecoderSpec],
    rate1: float,
    rate2: float,
    n: int,
    trials: int,
    seed: int,
) -> list[MacErrorEstimate]:
    """Paired two-user trials over uniform binary user ensembles.

    Decoder kinds: ``universal`` (composite class-mass score), ``ml``
    (inner-channel likelihood of the modulo-sum), ``metric`` (additive theta
    over (modulo-sum, output) pairs).  Ties count as errors.  Error types
    are attributed to the best competitor pair: both messages wrong, or
    only one user's message wrong.
    """
    if channel.kind != channels.MAC_XOR:
        raise InputError("two-user experiment needs a mac_xor channel")
    if n > 64:
        raise InstanceTooLargeError("bit-packed path supports n <= 64")
    m1 = ensembles.message_count(n, rate1)
    m2 = ensembles.message_count(n, rate2)
    mask = np.uint64((1 << n) - 1 if n < 64 else 0xFFFFFFFFFFFFFFFF)
    lbinom = _log_binom_table(n)
    inner = channel.inner
    if inner.kind == channels.DMC:
        p0, p1 = inner.matrix[0][1], inner.matrix[1][0]
    elif inner.kind == channels.MOD_ADDITIVE and not inner.noise_word:
        p0 = p1 = inner.noise_probs[1]
    else:
        raise UnsupportedCombinationError("inner channel not supported in MC mode")

    coeffs = []
    for spec in decoder_specs:
        if spec.kind == "metric":
            coeffs.append(("metric",) + _additive_coeffs(spec.theta))
        elif spec.kind == "ml":
            coeffs.append(("metric",) + _additive_coeffs(_ml_theta(inner)))
        elif spec.kind == "universal":
            coeffs.append(("universal", 0.0, 0.0))
        else:
            raise InputError(f"unsupported decoder kind for two users: {spec.kind!r}")

    bitpos = np.arange(n, dtype=np.uint64)
    errors = [0] * len(decoder_specs)
    by_type = [[0, 0, 0] for _ in decoder_specs]
    flat_i, flat_j = np.divmod(np.arange(m1 * m2), m2)
    for t in range(trials):
        rng = np.random.default_rng(np.random.SeedSequence((seed, t)))
        h1 = rng.integers(0, 1 << 32, size=(m1, 2), dtype=np.uint64)
        book1 = ((h1[:, 0] << np.uint64(32)) | h1[:, 1]) & mask
        h2 = rng.integers(0, 1 << 32, size=(m2, 2), dtype=np.uint64)
        book2 = ((h2[:, 0] << np.uint64(32)) | h2[:, 1]) & mask
        i_true = int(rng.integers(m1))
        j_true = int(rng.integers(m2))
        z_true = book1[i_true] ^ book2[j_true]
        x_bits = ((z_true >> bitpos) & np.uint64(1)).astype(bool)
        flip_p = np.where(x_bits, p1, p0)
        y_word = z_true ^ _pack_bits(rng.random(n) < flip_p)
        ny = int(np.bitwise_count(y_word))
        z = (book1[:, None] ^ book2[None, :]).reshape(-1)
        pc = np.bitwise_count(z).astype(np.int64)
        a11 = np.bitwise_count(z & y_word).astype(np.int64)
        true_flat = i_true * m2 + j_true
        for d, (kind, ca, cb) in enumerate(coeffs):
            if kind == "metric":
                scores = ca * a11 + cb * pc
            else:
                # uniform users: all three components equal the modulo-sum
                # class score, so the composite is a constant rate shift
                scores = -(lbinom[n - ny, pc - a11] + lbinom[ny, a11])
            s_true = scores[true_flat]
            at_least = scores >= s_true
            at_least[true_flat] = False
            if at_least.any():
                errors[d] += 1
                cand = np.flatnonzero(at_least)
                best = cand[np.argmax(scores[cand])]
                bi, bj = int(flat_i[best]), int(flat_j[best])
                if bi != i_true and bj != j_true:
                    by_type[d][0] += 1
                elif bj == j_true:
                    by_type[d][1] += 1
                else:
                    by_type[d][2] += 1
    out = []
    for spec, err, types in zip(decoder_specs, errors, by_type):
        lo, hi = wilson_interval(err, trials)
        out.append(
            MacErrorEstimate(
                decoder=spec.name,
                n=n,
                rate1=rate1,
                rate2=rate2,
                trials=trials,
                errors=err,
                errors_both=types[0],
                errors_user1=types[1],
                errors_user2=types[2],
                estimate=err / trials,
                ci_lo=lo,
                ci_hi=hi,
                seed=seed,
            )
        )
    return out


@dataclass(frozen=True)
class MacEnvelopeReport:
    estimates: tuple[MacErrorEstimate, ...]
    delta_n: float
    constant: float
    envelope_ok: bool


def mac_envelope_audit(
    channel: channels.ChannelModel,
    family: families.MetricFamily,
    metric_thetas: list,
    rate1: float,
    rate2: float,
    n: int,
    trials: int,
    seed: int,
) -> MacEnvelopeReport:
    """Audit that the composite decoder's error rate stays within the
    proof-chain envelope of the best grid metric.

    The finite-n constant is 96 = 3 error types x 2 (pairwise-independent
    union lower bound) x 16 (keeping only half of each user's competitors
    in the independent sub-family costs at most 4 per user)."""
    specs = [DecoderSpec("universal")]
    for i, th in enumerate(metric_thetas):
        specs.append(
            DecoderSpec("metric", label=f"metric{i}", theta=tuple(tuple(r) for r in th))
        )
    estimates = mac_run_experiment(
        channel, family, specs, rate1, rate2, n, trials, seed
    )
    delta_n = typeclasses.count_classes(family, n).log_growth
    constant = 96.0 * 2.0 ** (n * delta_n)
    est_u = estimates[0]
    best = min(e.ci_lo for e in estimates[1:])
    envelope_ok = est_u.ci_hi <= constant * best
    return MacEnvelopeReport(
        estimates=tuple(estimates),
        delta_n=delta_n,
        constant=constant,
        envelope_ok=envelope_ok,
    )
