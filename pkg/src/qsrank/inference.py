"""Loss-augmented inference: find the ranking maximizing loss + score margin.

Given per-sample scores, the most violating ranking maximizes

    loss(r) + F(r),    F = (1/(p n)) * sum_{x pos, y neg} sign(x above y) * (s_x - s_y)

over all proper rankings.  At any maximizer both classes appear in
descending score order, so the problem reduces to choosing the
interleaving-rank vector r (entry j = rank of the j-th highest-scored
negative, in [1, p+1], nondecreasing).  The objective then splits into
independent per-negative terms f_j(r_j), and the nondecreasing structure
of the per-j maximizers lets a quickselect-style divide and conquer over
the negative scores solve the whole problem with only a partial sort:
pick the median negative, place it by scanning its admissible rank
interval, and recurse on both halves with the interval split at the
chosen rank.  Runs in O(n log p) score comparisons instead of the
O(n log n) a full sort costs.

Engines count every score comparison they perform (selection, partition,
sort); the counters are per-invocation and feed the benchmark harness.
All hot loops are deliberately plain Python over lists: the comparison
counts are contract-level here, and library sorts cannot expose them.
"""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import LossNotSuitableError, SizeGuardError, ValidationError
from .losses import (
    LossContext,
    RankLoss,
    delta_derivative,
    delta_value,
    ranking_loss,
)

__all__ = [
    "ComparisonCounter",
    "ScoredInstance",
    "InterleavingVector",
    "InferenceResult",
    "OracleCheck",
    "preprocess",
    "median",
    "select",
    "f_derivative",
    "f_value",
    "opt_rank_scan",
    "opt_ranks",
    "sort_baseline",
    "brute_force_pattern",
    "brute_force_permutation",
    "objective_value",
    "interleaving_to_pattern",
    "pattern_to_interleaving",
]

BRUTE_FORCE_PATTERN_LIMIT = 1_000_000
BRUTE_FORCE_PERMUTATION_LIMIT = 7


class ComparisonCounter:
    """Tally of score comparisons performed by one engine invocation."""

    __slots__ = ("count",)

    def __init__(self):
        self.count = 0


@dataclass(frozen=True)
class InterleavingVector:
    """Nondecreasing interleaving ranks of the negatives, one entry per
    negative in descending score order, each in [1, p+1]."""

    ranks: tuple[int, ...]

    def __post_init__(self):
        ranks = tuple(int(r) for r in self.ranks)
        object.__setattr__(self, "ranks", ranks)
        if not ranks:
            raise ValidationError("interleaving vector cannot be empty")
        if ranks[0] < 1:
            raise ValidationError("interleaving ranks must be >= 1")
        if any(b < a for a, b in zip(ranks, ranks[1:])):
            raise ValidationError("interleaving vector must be nondecreasing")

    def validate_for(self, ctx: LossContext) -> None:
        if len(self.ranks) != ctx.n:
            raise ValidationError(
                f"vector length {len(self.ranks)} != n={ctx.n}"
            )
        if self.ranks[-1] > ctx.p + 1:
            raise ValidationError(f"ranks must be <= p+1 = {ctx.p + 1}")

    def __len__(self):
        return len(self.ranks)

    def __iter__(self):
        return iter(self.ranks)

    def __getitem__(self, i):
        return self.ranks[i]


class ScoredInstance:
    """Scores of one inference problem.

    pos_scores is sorted descending (ties broken by original index);
    neg_scores starts in input order and gets partially sorted in place
    by the engines.  The index maps track, for each current position,
    the original position in the caller's arrays; neg_index_map is kept
    in lockstep with every swap of neg_scores.
    """

    __slots__ = ("pos_scores", "neg_scores", "pos_index_map", "neg_index_map",
                 "pos_ids", "neg_ids")

    def __init__(self, pos_scores, neg_scores, pos_index_map, neg_index_map,
                 pos_ids=None, neg_ids=None):
        self.pos_scores = pos_scores
        self.neg_scores = neg_scores
        self.pos_index_map = pos_index_map
        self.neg_index_map = neg_index_map
        self.pos_ids = pos_ids
        self.neg_ids = neg_ids

    @property
    def p(self) -> int:
        return len(self.pos_scores)

    @property
    def n(self) -> int:
        return len(self.neg_scores)

    def copy(self) -> "ScoredInstance":
        return ScoredInstance(
            list(self.pos_scores), list(self.neg_scores),
            list(self.pos_index_map), list(self.neg_index_map),
            self.pos_ids, self.neg_ids,
        )

    def __repr__(self):
        return f"ScoredInstance(p={self.p}, n={self.n})"


def preprocess(raw_positives, raw_negatives, pos_ids=None, neg_ids=None) -> ScoredInstance:
    """Build a ScoredInstance: positives sorted descending (stable on the
    original index), negatives copied unsorted, index maps recorded."""
    pos = [float(s) for s in raw_positives]
    neg = [float(s) for s in raw_negatives]
    if not pos:
        raise ValidationError("no positive samples; inference is undefined")
    if not neg:
        raise ValidationError("no negative samples; inference is undefined")
    for name, scores in (("positive", pos), ("negative", neg)):
        if not all(math.isfinite(s) for s in scores):
            raise ValidationError(f"non-finite {name} score")
    order = sorted(range(len(pos)), key=lambda t: (-pos[t], t))
    return ScoredInstance(
        pos_scores=[pos[t] for t in order],
        neg_scores=neg,
        pos_index_map=order,
        neg_index_map=list(range(len(neg))),
        pos_ids=pos_ids,
        neg_ids=neg_ids,
    )


def _check_neg_range(instance: ScoredInstance, l: int, r: int) -> None:
    if not 1 <= l <= r <= instance.n:
        raise ValidationError(
            f"invalid negative range [{l}, {r}] for n={instance.n}"
        )


# ---------------------------------------------------------------------------
# Selection primitives
# ---------------------------------------------------------------------------

def _kth_largest_random(buf: list, k: int, rng: random.Random,
                        counter: ComparisonCounter) -> float:
    """Value of the k-th largest element of buf (1-based), randomized
    pivots, expected linear time.  Rearranges buf."""
    lo, hi = 0, len(buf) - 1
    c = 0
    while lo < hi:
        v = buf[rng.randint(lo, hi)]
        i, j = lo, hi
        while i <= j:
            i0 = i
            while buf[i] > v:
                i += 1
            j0 = j
            while buf[j] < v:
                j -= 1
            c += (i - i0) + (j0 - j) + 2
            if i <= j:
                buf[i], buf[j] = buf[j], buf[i]
                i += 1
                j -= 1
        # blocks: [lo..j] >= v, (j..i) == v, [i..hi] <= v
        n_left = j - lo + 1
        n_mid = i - j - 1
        if k <= n_left:
            hi = j
        elif k <= n_left + n_mid:
            counter.count += c
            return v
        else:
            k -= n_left + n_mid
            lo = i
    counter.count += c
    return buf[lo]


def _insertion_sort_desc(buf: list, lo: int, hi: int,
                         counter: ComparisonCounter) -> None:
    c = 0
    for a in range(lo + 1, hi + 1):
        t = buf[a]
        b = a - 1
        while b >= lo and buf[b] < t:
            buf[b + 1] = buf[b]
            b -= 1
            c += 1
        if b >= lo:
            c += 1  # the failing comparison that ended the shift
        buf[b + 1] = t
    counter.count += c


def _kth_largest_mom(buf: list, lo: int, hi: int, k: int,
                     counter: ComparisonCounter) -> float:
    """Deterministic worst-case-linear selection (median of medians,
    groups of five).  Rearranges buf[lo..hi]."""
    while True:
        m = hi - lo + 1
        if m <= 5:
            _insertion_sort_desc(buf, lo, hi, counter)
            return buf[lo + k - 1]
        g = 0
        for s in range(lo, hi + 1, 5):
            e = min(s + 4, hi)
            _insertion_sort_desc(buf, s, e, counter)
            med = s + (e - s) // 2
            buf[lo + g], buf[med] = buf[med], buf[lo + g]
            g += 1
        v = _kth_largest_mom(buf, lo, lo + g - 1, (g + 1) // 2, counter)
        i, j = lo, hi
        c = 0
        while i <= j:
            i0 = i
            while buf[i] > v:
                i += 1
            j0 = j
            while buf[j] < v:
                j -= 1
            c += (i - i0) + (j0 - j) + 2
            if i <= j:
                buf[i], buf[j] = buf[j], buf[i]
                i += 1
                j -= 1
        counter.count += c
        n_left = j - lo + 1
        n_mid = i - j - 1
        if k <= n_left:
            hi = j
        elif k <= n_left + n_mid:
            return v
        else:
            k -= n_left + n_mid
            lo = i


def median(instance: ScoredInstance, l: int, r: int, *, mode: str = "fast",
           rng: Optional[random.Random] = None,
           counter: Optional[ComparisonCounter] = None) -> int:
    """Index (1-based) of the median of neg_scores[l..r]: the element whose
    value is the ceil((r-l+1)/2)-th largest within the subarray.

    Does not rearrange the instance: selection runs on a scratch copy and
    the element is then located by an equality scan (whose comparisons are
    counted as well).  mode="verified" uses deterministic median of
    medians, guaranteeing worst-case linear time; the default uses seeded
    randomized pivots.
    """
    _check_neg_range(instance, l, r)
    counter = counter if counter is not None else ComparisonCounter()
    scratch = instance.neg_scores[l - 1:r]
    k = (len(scratch) + 1) // 2
    if mode == "verified":
        v = _kth_largest_mom(scratch, 0, len(scratch) - 1, k, counter)
    elif mode == "fast":
        v = _kth_largest_random(scratch, k, rng or random.Random(0), counter)
    else:
        raise ValidationError(f"unknown median mode {mode!r}")
    idx = instance.neg_scores.index(v, l - 1, r)
    counter.count += idx - (l - 1) + 1
    return idx + 1


def select(instance: ScoredInstance, m: int, l: int, r: int, *,
           counter: Optional[ComparisonCounter] = None) -> int:
    """Partition neg_scores[l..r] around the element at index m: afterwards
    everything left of the returned index is >= the pivot and everything
    right of it is <= the pivot (descending convention).  Returns the
    pivot's new 1-based index.  neg_index_map is permuted in lockstep.
    """
    _check_neg_range(instance, l, r)
    if not l <= m <= r:
        raise ValidationError(f"pivot index {m} outside [{l}, {r}]")
    a = instance.neg_scores
    ix = instance.neg_index_map
    lo, hi, mi = l - 1, r - 1, m - 1
    v = a[mi]
    a[mi], a[hi] = a[hi], a[mi]
    ix[mi], ix[hi] = ix[hi], ix[mi]
    store = lo
    for t in range(lo, hi):
        if a[t] >= v:
            a[t], a[store] = a[store], a[t]
            ix[t], ix[store] = ix[store], ix[t]
            store += 1
    a[store], a[hi] = a[hi], a[store]
    ix[store], ix[hi] = ix[hi], ix[store]
    if counter is not None:
        counter.count += r - l
    return store + 1


# ---------------------------------------------------------------------------
# Per-negative objective terms
# ---------------------------------------------------------------------------

def f_derivative(loss: RankLoss, ctx: LossContext, pos_scores: Sequence[float],
                 s_star_j: float, j: int, i: int) -> float:
    """f_j(i+1) - f_j(i): change of the per-negative objective term when the
    j-th highest negative moves from rank i to i+1,

        2 (s+_i - s*_j) / (n p)  +  delta_j(i+1) - delta_j(i).
    """
    if not 1 <= i <= ctx.p:
        raise ValidationError(f"rank i={i} outside [1, {ctx.p}]")
    margin = 2.0 * (pos_scores[i - 1] - s_star_j) / (ctx.n * ctx.p)
    return margin + delta_derivative(loss, ctx, j, i)


def f_value(loss: RankLoss, ctx: LossContext, pos_scores: Sequence[float],
            s_star_j: float, j: int, i: int) -> float:
    """Absolute value of f_j(i) (the per-negative part of loss + margin):

        delta_j(i) + ((p + 2 - 2 i) s*_j + 2 sum_{t<i} s+_t - sum_t s+_t) / (p n)
    """
    if not 1 <= i <= ctx.p + 1:
        raise ValidationError(f"rank i={i} outside [1, {ctx.p + 1}]")
    total = math.fsum(pos_scores[: ctx.p])
    prefix = math.fsum(pos_scores[: i - 1])
    score_part = ((ctx.p + 2 - 2 * i) * s_star_j + 2.0 * prefix - total) / (ctx.p * ctx.n)
    return delta_value(loss, ctx, j, i) + score_part


def opt_rank_scan(loss: RankLoss, ctx: LossContext, instance: ScoredInstance,
                  s_star_j: float, j: int, l_plus: int, r_plus: int) -> int:
    """Largest maximizer of f_j over the rank interval [l_plus, r_plus].

    One linear pass accumulating the discrete derivative relative to
    f_j(l_plus) = 0; ties resolve to the larger rank (running max updated
    on >=).  Only reads pos_scores[l_plus-1 .. r_plus-2] (0-based).
    """
    if not 1 <= l_plus <= r_plus <= ctx.p + 1:
        raise ValidationError(
            f"invalid rank interval [{l_plus}, {r_plus}] for p={ctx.p}"
        )
    pos = instance.pos_scores
    best = l_plus
    best_v = 0.0
    v = 0.0
    two_inv = 2.0 / (ctx.n * ctx.p)
    if loss.kind == "ap":
        inv_p = 1.0 / ctx.p
        for i in range(l_plus, r_plus):
            v += two_inv * (pos[i - 1] - s_star_j) \
                + inv_p * ((j - 1.0) / (j + i - 1.0) - j / (j + i))
            if v >= best_v:
                best = i + 1
                best_v = v
    else:
        d = loss.discount
        inv_c = 1.0 / ctx.ndcg_norm
        d_prev = d(l_plus + j - 1)
        for i in range(l_plus, r_plus):
            d_cur = d(i + j)
            v += two_inv * (pos[i - 1] - s_star_j) + (d_cur - d_prev) * inv_c
            d_prev = d_cur
            if v >= best_v:
                best = i + 1
                best_v = v
    return best


# ---------------------------------------------------------------------------
# Result types
# ---------------------------------------------------------------------------

@dataclass
class OracleCheck:
    """Diagnostics produced in oracle-checked mode: the unconstrained
    per-negative greedy maximizers, whether they are monotone, and a
    brute-force objective cross-check (None when above the size guard)."""

    greedy_ranks: tuple[int, ...]
    greedy_monotone: bool
    oracle_objective: Optional[float] = None
    objective_matches: Optional[bool] = None

    @property
    def ok(self) -> bool:
        return self.greedy_monotone and self.objective_matches is not False


@dataclass
class InferenceResult:
    """Output of one inference run; `comparisons` counts score comparisons.

    `valid` is False only for the flagged case of an unsuitable loss in
    oracle-checked mode, where the raw greedy vector is non-monotone and
    `objective` is the (unrealizable) sum of per-negative maxima.
    """

    opt: InterleavingVector
    objective: float
    loss_at_opt: float
    comparisons: int
    algo: str = ""
    valid: bool = True
    check: Optional[OracleCheck] = None


def _require_dims(instance: ScoredInstance, ctx: LossContext) -> None:
    if instance.p != ctx.p or instance.n != ctx.n:
        raise ValidationError(
            f"instance is p={instance.p}, n={instance.n}; "
            f"context says p={ctx.p}, n={ctx.n}"
        )


def _require_suitable(loss: RankLoss, oracle_checked: bool) -> None:
    if not loss.qs_suitable and not oracle_checked:
        raise LossNotSuitableError(
            f"loss {loss.name!r} lacks the monotone-maximizer guarantee; "
            "use brute_force_pattern or pass oracle_checked=True"
        )


def _discriminant(instance: ScoredInstance, ranks: Sequence[int],
                  ctx: LossContext) -> float:
    """Margin part of the objective via per-sample coefficients:

        F = sum_i c+_i s+_i + sum_j c-_j s*_j,
        c+_i = (n + 2 - 2 r+_i)/(p n),  c-_j = (p + 2 - 2 r_j)/(p n),
        r+_i = 1 + #{j : r_j <= i}.

    Positions within same-rank runs of neg_scores share one coefficient,
    so a partially sorted array gives the exact same sum.
    """
    r = np.asarray(list(ranks), dtype=np.int64)
    p, n = ctx.p, ctx.n
    pn = p * n
    neg = np.asarray(instance.neg_scores)
    pos = np.asarray(instance.pos_scores)
    c_neg = (p + 2 - 2 * r) / pn
    r_pos = 1 + np.searchsorted(r, np.arange(1, p + 1), side="right")
    c_pos = (n + 2 - 2 * r_pos) / pn
    return float(c_neg @ neg + c_pos @ pos)


def _greedy_ranks(instance: ScoredInstance, loss: RankLoss,
                  ctx: LossContext) -> list[int]:
    """Unconstrained per-negative maximizers over the full rank interval,
    computed against the fully sorted negative scores."""
    s_star = sorted(instance.neg_scores, reverse=True)
    return [
        opt_rank_scan(loss, ctx, instance, s_star[j - 1], j, 1, ctx.p + 1)
        for j in range(1, ctx.n + 1)
    ]


def _oracle_check(instance: ScoredInstance, loss: RankLoss, ctx: LossContext,
                  objective: float, tol: float = 1e-9) -> OracleCheck:
    greedy = _greedy_ranks(instance, loss, ctx)
    monotone = all(b >= a for a, b in zip(greedy, greedy[1:]))
    oracle_obj = None
    matches = None
    if math.comb(ctx.n + ctx.p, ctx.p) <= BRUTE_FORCE_PATTERN_LIMIT:
        _, oracle_obj = brute_force_pattern(instance, loss, ctx)
        matches = abs(oracle_obj - objective) <= tol
    return OracleCheck(tuple(greedy), monotone, oracle_obj, matches)


# ---------------------------------------------------------------------------
# Engines
# ---------------------------------------------------------------------------

def opt_ranks(instance: ScoredInstance, loss: RankLoss, ctx: LossContext, *,
              mode: str = "fast", seed: int = 0,
              oracle_checked: bool = False) -> InferenceResult:
    """Divide-and-conquer computation of the optimal interleaving vector.

    Work items are (l_neg, r_neg, l_pos, r_pos): the negatives at
    positions [l_neg, r_neg] have their optimal ranks inside
    [l_pos, r_pos].  When the rank interval is a single value the whole
    block is assigned at once; otherwise the median negative is selected
    and placed, its optimal rank found by scanning the interval, and both
    halves recurse with the interval split at that rank (closed on both
    sides).  An explicit work stack replaces recursion so instances up to
    2**24 negatives cannot overflow the call stack.
    """
    _require_suitable(loss, oracle_checked)
    _require_dims(instance, ctx)
    counter = ComparisonCounter()
    rng = random.Random(seed)
    n, p = ctx.n, ctx.p
    opt = [0] * n
    neg = instance.neg_scores
    stack = [(1, n, 1, p + 1)]
    while stack:
        l_neg, r_neg, l_pos, r_pos = stack.pop()
        if l_pos == r_pos:
            opt[l_neg - 1:r_neg] = [l_pos] * (r_neg - l_neg + 1)
            continue
        m = median(instance, l_neg, r_neg, mode=mode, rng=rng, counter=counter)
        m = select(instance, m, l_neg, r_neg, counter=counter)
        opt_m = opt_rank_scan(loss, ctx, instance, neg[m - 1], m, l_pos, r_pos)
        opt[m - 1] = opt_m
        # push right first so the left half is processed first
        if m < r_neg:
            stack.append((m + 1, r_neg, opt_m, r_pos))
        if l_neg < m:
            stack.append((l_neg, m - 1, l_pos, opt_m))
    vector = InterleavingVector(tuple(opt))  # construction asserts monotone
    vector.validate_for(ctx)
    loss_at_opt = ranking_loss(loss, ctx, vector)
    objective = loss_at_opt + _discriminant(instance, vector, ctx)
    result = InferenceResult(vector, objective, loss_at_opt, counter.count,
                             algo="qs")
    if oracle_checked:
        result.check = _oracle_check(instance, loss, ctx, objective)
    return result


def _mergesort_desc(scores: list, index: list, counter: ComparisonCounter) -> tuple[list, list]:
    """Stable bottom-up mergesort, descending, counting every comparison.
    Returns the sorted (scores, index) pair; inputs are consumed."""
    n = len(scores)
    src_a, src_i = scores, index
    dst_a, dst_i = [0.0] * n, [0] * n
    c = 0
    width = 1
    while width < n:
        for lo in range(0, n, 2 * width):
            mid = min(lo + width, n)
            hi = min(lo + 2 * width, n)
            i, j, k = lo, mid, lo
            while i < mid and j < hi:
                c += 1
                if src_a[i] >= src_a[j]:  # left wins ties: stability
                    dst_a[k] = src_a[i]
                    dst_i[k] = src_i[i]
                    i += 1
                else:
                    dst_a[k] = src_a[j]
                    dst_i[k] = src_i[j]
                    j += 1
                k += 1
            while i < mid:
                dst_a[k] = src_a[i]
                dst_i[k] = src_i[i]
                i += 1
                k += 1
            while j < hi:
                dst_a[k] = src_a[j]
                dst_i[k] = src_i[j]
                j += 1
                k += 1
        src_a, dst_a = dst_a, src_a
        src_i, dst_i = dst_i, src_i
        width *= 2
    counter.count += c
    return src_a, src_i


def sort_baseline(instance: ScoredInstance, loss: RankLoss, ctx: LossContext, *,
                  oracle_checked: bool = False) -> InferenceResult:
    """Sort-then-scan reference algorithm: fully sorts the negatives
    descending, then computes every negative's optimal rank explicitly,
    each scan restricted to [previous rank, p+1] by monotonicity.

    With a non-QS-suitable loss in oracle-checked mode the scans run
    unrestricted; the resulting raw greedy vector may be non-monotone, in
    which case the result is flagged invalid (see InferenceResult).
    """
    _require_suitable(loss, oracle_checked)
    _require_dims(instance, ctx)
    counter = ComparisonCounter()
    sorted_scores, sorted_index = _mergesort_desc(
        instance.neg_scores, instance.neg_index_map, counter)
    instance.neg_scores = sorted_scores
    instance.neg_index_map = sorted_index
    n, p = ctx.n, ctx.p

    if loss.qs_suitable:
        opt = []
        prev = 1
        for j in range(1, n + 1):
            prev = opt_rank_scan(loss, ctx, instance, sorted_scores[j - 1], j,
                                 prev, p + 1)
            opt.append(prev)
        vector = InterleavingVector(tuple(opt))
        loss_at_opt = ranking_loss(loss, ctx, vector)
        objective = loss_at_opt + _discriminant(instance, vector, ctx)
        result = InferenceResult(vector, objective, loss_at_opt, counter.count,
                                 algo="sort")
        if oracle_checked:
            result.check = _oracle_check(instance, loss, ctx, objective)
        return result

    # Unsuitable loss, oracle-checked: report the raw greedy vector.
    greedy = [
        opt_rank_scan(loss, ctx, instance, sorted_scores[j - 1], j, 1, p + 1)
        for j in range(1, n + 1)
    ]
    monotone = all(b >= a for a, b in zip(greedy, greedy[1:]))
    if monotone:
        vector = InterleavingVector(tuple(greedy))
        loss_at_opt = ranking_loss(loss, ctx, vector)
        objective = loss_at_opt + _discriminant(instance, vector, ctx)
        result = InferenceResult(vector, objective, loss_at_opt, counter.count,
                                 algo="sort")
        result.check = _oracle_check(instance, loss, ctx, objective)
        return result
    objective = math.fsum(
        f_value(loss, ctx, instance.pos_scores, sorted_scores[j - 1], j, r)
        for j, r in enumerate(greedy, start=1)
    )
    loss_at_opt = math.fsum(
        delta_value(loss, ctx, j, r) for j, r in enumerate(greedy, start=1)
    )
    check = _oracle_check(instance, loss, ctx, objective)
    # bypass InterleavingVector's monotonicity check: report raw ranks as-is
    result = InferenceResult.__new__(InferenceResult)
    result.opt = None
    result.objective = objective
    result.loss_at_opt = loss_at_opt
    result.comparisons = counter.count
    result.algo = "sort"
    result.valid = False
    result.check = check
    return result


# ---------------------------------------------------------------------------
# Brute-force oracles
# ---------------------------------------------------------------------------

def _chunks(iterable, size):
    it = iter(iterable)
    while True:
        chunk = list(itertools.islice(it, size))
        if not chunk:
            return
        yield chunk


def brute_force_pattern(instance: ScoredInstance, loss: RankLoss,
                        ctx: LossContext, *,
                        limit: int = BRUTE_FORCE_PATTERN_LIMIT
                        ) -> tuple[InterleavingVector, float]:
    """Exhaustive maximization over every monotone interleaving vector
    (equivalently every +/- pattern).  Ties break toward the
    lexicographically largest vector.  Guarded by C(n+p, p) <= limit.
    """
    _require_dims(instance, ctx)
    p, n = ctx.p, ctx.n
    total = math.comb(n + p, p)
    if total > limit:
        raise SizeGuardError(
            f"{total} patterns exceed the enumeration guard of {limit}"
        )
    s_pos = np.asarray(instance.pos_scores)
    s_star = np.sort(np.asarray(instance.neg_scores))[::-1]
    i_grid = np.arange(1, p + 1)
    pn = p * n
    best_obj = -math.inf
    best_vec = None
    for chunk in _chunks(
            itertools.combinations_with_replacement(range(1, p + 2), n), 65536):
        ranks = np.asarray(chunk, dtype=np.int64)  # (K, n), rows nondecreasing
        ahead = (ranks[:, None, :] <= i_grid[None, :, None]).sum(axis=2)  # (K, p)
        if loss.kind == "ap":
            delta = 1.0 - (i_grid / (i_grid + ahead)).sum(axis=1) / p
        else:
            positions = i_grid[None, :] + ahead
            delta = 1.0 - loss.discount.of_positions(positions).sum(axis=1) / ctx.ndcg_norm
        f_neg = ((p + 2 - 2 * ranks) / pn) @ s_star
        f_pos = ((n + 2 - 2 * (1 + ahead)) / pn) @ s_pos
        obj = delta + f_neg + f_pos
        k = len(obj) - 1 - int(np.argmax(obj[::-1]))  # last max: lexicographic tie-break
        if obj[k] >= best_obj:
            best_obj = float(obj[k])
            best_vec = chunk[k]
    return InterleavingVector(tuple(best_vec)), best_obj


def brute_force_permutation(instance: ScoredInstance, loss: RankLoss,
                            ctx: LossContext, *, all_maximizers: bool = False,
                            limit: int = BRUTE_FORCE_PERMUTATION_LIMIT,
                            tol: float = 1e-12):
    """Exhaustive maximization over every proper ranking (all (p+n)!
    orderings), with the margin computed as the raw pairwise double sum
    and the loss evaluated directly from the ordering.  Fully independent
    of the interleaving machinery; validates that class-sorted rankings
    suffice.  Returns (ordering, objective) where the ordering lists
    (is_positive, within-class original index) from the top down; with
    all_maximizers=True returns (list of orderings, objective).
    """
    _require_dims(instance, ctx)
    p, n = ctx.p, ctx.n
    if p + n > limit:
        raise SizeGuardError(f"{p + n} samples exceed the permutation guard of {limit}")
    from .losses import loss_of_ordering

    scores = list(instance.pos_scores) + list(instance.neg_scores)
    is_pos = [True] * p + [False] * n
    pn = p * n
    best_obj = -math.inf
    best: list = []
    for perm in itertools.permutations(range(p + n)):
        position = [0] * (p + n)
        for where, sample in enumerate(perm):
            position[sample] = where
        f = 0.0
        for x in range(p):
            sx = scores[x]
            px = position[x]
            for y in range(p, p + n):
                diff = sx - scores[y]
                f += diff if px < position[y] else -diff
        f /= pn
        labels = [1 if is_pos[s] else 0 for s in perm]
        obj = loss_of_ordering(labels, loss, ctx) + f
        if obj > best_obj + tol:
            best_obj = obj
            best = [perm]
        elif all_maximizers and obj >= best_obj - tol:
            best.append(perm)
    def describe(perm):
        return tuple(
            (is_pos[s], s if is_pos[s] else s - p) for s in perm
        )
    if all_maximizers:
        return [describe(perm) for perm in best], best_obj
    return describe(best[0]), best_obj


def objective_value(instance: ScoredInstance, loss: RankLoss, ctx: LossContext,
                    interleaving) -> float:
    """loss + margin of the ranking induced by a monotone interleaving
    vector, the margin via the per-sample coefficient form against the
    descending-sorted negative scores."""
    _require_dims(instance, ctx)
    vector = interleaving if isinstance(interleaving, InterleavingVector) \
        else InterleavingVector(tuple(interleaving))
    vector.validate_for(ctx)
    sorted_copy = instance.copy()
    sorted_copy.neg_scores = sorted(instance.neg_scores, reverse=True)
    return ranking_loss(loss, ctx, vector) + _discriminant(sorted_copy, vector, ctx)


# ---------------------------------------------------------------------------
# Interleaving vector <-> +/- pattern
# ---------------------------------------------------------------------------

def interleaving_to_pattern(interleaving, ctx: LossContext) -> str:
    """Render the +/- pattern of any ranking consistent with the vector."""
    vector = interleaving if isinstance(interleaving, InterleavingVector) \
        else InterleavingVector(tuple(interleaving))
    vector.validate_for(ctx)
    ranks = list(vector)
    out = []
    j = 0
    for i in range(1, ctx.p + 2):
        while j < ctx.n and ranks[j] == i:
            out.append("-")
            j += 1
        if i <= ctx.p:
            out.append("+")
    return "".join(out)


def pattern_to_interleaving(pattern: str) -> InterleavingVector:
    """Inverse of interleaving_to_pattern; the pattern alone determines the
    vector (and p, n as the symbol counts)."""
    if not pattern or set(pattern) - {"+", "-"}:
        raise ValidationError("pattern must be a nonempty string of '+' and '-'")
    p = pattern.count("+")
    n = len(pattern) - p
    if p < 1 or n < 1:
        raise ValidationError("pattern needs at least one '+' and one '-'")
    ranks = []
    seen_pos = 0
    for ch in pattern:
        if ch == "+":
            seen_pos += 1
        else:
            ranks.append(seen_pos + 1)
    return InterleavingVector(tuple(ranks))
