"""Rank-based loss functions decomposed over the negative samples.

Binary-relevance AP and NDCG losses, evaluated either from an explicit
ordering or from the interleaving-rank vector of the negatives (entry j
is one plus the number of positives ranked above the j-th highest-scored
negative).  Both losses additively decompose into per-negative terms

    loss = sum_j delta_j(r_j),       r_j in [1, p + 1],

with delta_j(p + 1) = 0, and both admit a constant-time discrete
derivative delta_j(i + 1) - delta_j(i).  The inference engine only ever
needs those derivatives, which is what makes the divide-and-conquer
search cheap.

A loss qualifies for the fast engine iff three conditions hold:

    C1. it decomposes over negatives as above and depends on the ranking
        only through the interleaving ranks;
    C2. the discrete derivative is nondecreasing in j
        (delta_{j+1}(i+1) - delta_{j+1}(i) >= delta_j(i+1) - delta_j(i));
    C3. the discrete derivative is O(1) to evaluate.

AP and NDCG with the log2 discount satisfy all three.  NDCG with the
flat-top discount (D(1) = D(2) = 1) violates C2 at position 1 and is
kept around precisely as the regression case for that failure mode.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import ValidationError

__all__ = [
    "Discount",
    "LOG2_DISCOUNT",
    "FLAT2_DISCOUNT",
    "RankLoss",
    "LossContext",
    "ap_loss",
    "ndcg_loss",
    "ranking_loss",
    "loss_of_ordering",
    "delta_derivative",
    "delta_value",
    "decomposed_loss",
    "check_c2",
]


class Discount:
    """Positional discount D(i) for NDCG-style losses, i >= 1.

    kind="log2":  D(i) = 1 / log2(1 + i).  Strictly decreasing and convex
    as a sequence (D(i) + D(i+2) >= 2 D(i+1)), which is what guarantees
    condition C2 for the NDCG loss.

    kind="flat2": D(1) = D(2) = 1, D(i) = 1 / log2(i) for i > 2.  Not
    convex at i = 1; NDCG built on it is NOT safe for the fast engine.

    Values are memoized per instance, so repeated scalar lookups in hot
    loops are list reads.
    """

    KINDS = ("log2", "flat2")

    __slots__ = ("kind", "_cache")

    def __init__(self, kind: str):
        if kind not in self.KINDS:
            raise ValidationError(f"unknown discount kind {kind!r}")
        self.kind = kind
        self._cache: list[float] = [math.nan]  # slot 0 unused, D is 1-based

    def __call__(self, i: int) -> float:
        cache = self._cache
        if i >= len(cache):
            if i < 1:
                raise ValidationError(f"discount position must be >= 1, got {i}")
            self._extend(i)
        return cache[i]

    def _extend(self, upto: int) -> None:
        cache = self._cache
        if self.kind == "log2":
            cache.extend(1.0 / math.log2(1.0 + k) for k in range(len(cache), upto + 1))
        else:
            cache.extend(
                1.0 if k <= 2 else 1.0 / math.log2(k)
                for k in range(len(cache), upto + 1)
            )

    def of_positions(self, positions: np.ndarray) -> np.ndarray:
        """Vectorized D over an integer array of positions (all >= 1)."""
        positions = np.asarray(positions)
        if positions.size and positions.min() < 1:
            raise ValidationError("discount positions must be >= 1")
        if self.kind == "log2":
            return 1.0 / np.log2(1.0 + positions)
        return np.where(positions <= 2, 1.0, 1.0 / np.log2(np.maximum(positions, 2)))

    @property
    def is_convex(self) -> bool:
        return self.kind == "log2"

    def __repr__(self) -> str:
        return f"Discount({self.kind!r})"

    def __eq__(self, other) -> bool:
        return isinstance(other, Discount) and other.kind == self.kind

    def __hash__(self) -> int:
        return hash(("Discount", self.kind))


LOG2_DISCOUNT = Discount("log2")
FLAT2_DISCOUNT = Discount("flat2")


@dataclass(frozen=True)
class RankLoss:
    """Descriptor of a rank-based loss: AP, or NDCG with a given discount."""

    kind: str  # "ap" | "ndcg"
    discount: Optional[Discount] = None

    def __post_init__(self):
        if self.kind == "ap":
            if self.discount is not None:
                raise ValidationError("AP loss takes no discount")
        elif self.kind == "ndcg":
            if self.discount is None:
                raise ValidationError("NDCG loss needs a discount")
        else:
            raise ValidationError(f"unknown loss kind {self.kind!r}")

    @classmethod
    def ap(cls) -> "RankLoss":
        return cls("ap")

    @classmethod
    def ndcg(cls, discount: Discount = LOG2_DISCOUNT) -> "RankLoss":
        return cls("ndcg", discount)

    @property
    def qs_suitable(self) -> bool:
        """True iff the loss provably satisfies C1-C3 (safe for the fast
        divide-and-conquer engine)."""
        return self.kind == "ap" or self.discount.is_convex

    @property
    def name(self) -> str:
        if self.kind == "ap":
            return "ap"
        return "ndcg" if self.discount.is_convex else "ndcg-nonconvex"


@dataclass(frozen=True)
class LossContext:
    """Problem dimensions plus the precomputed NDCG normalizer.

    ndcg_norm is C = sum_{i=1..p} D(i); it is None for AP.
    """

    p: int
    n: int
    ndcg_norm: Optional[float] = None

    def __post_init__(self):
        if self.p < 1 or self.n < 1:
            raise ValidationError(
                f"need at least one sample of each class, got p={self.p}, n={self.n}"
            )
        if self.ndcg_norm is not None and not self.ndcg_norm > 0:
            raise ValidationError("ndcg_norm must be positive")

    @classmethod
    def for_loss(cls, loss: RankLoss, p: int, n: int) -> "LossContext":
        if loss.kind == "ndcg":
            norm = float(sum(loss.discount(i) for i in range(1, p + 1)))
            return cls(p, n, norm)
        return cls(p, n)


def _checked_ranks(interleaving: Sequence[int], ctx: LossContext) -> np.ndarray:
    """Validate an interleaving vector against ctx and return it as an array."""
    ranks = np.asarray(list(interleaving), dtype=np.int64)
    if ranks.ndim != 1 or len(ranks) != ctx.n:
        raise ValidationError(
            f"interleaving vector has length {ranks.size}, expected n={ctx.n}"
        )
    if ranks.size:
        if ranks.min() < 1 or ranks.max() > ctx.p + 1:
            raise ValidationError(
                f"interleaving ranks must lie in [1, {ctx.p + 1}]"
            )
        if np.any(np.diff(ranks) < 0):
            raise ValidationError("interleaving vector must be nondecreasing")
    return ranks


def _positives_ahead(ranks: np.ndarray, p: int) -> np.ndarray:
    """For each positive index i=1..p, the count of negatives ranked above it,
    i.e. #{j : r_j <= i}.  ranks must be nondecreasing."""
    return np.searchsorted(ranks, np.arange(1, p + 1), side="right")


def ap_loss(interleaving: Sequence[int], ctx: LossContext) -> float:
    """AP loss of any proper ranking consistent with the interleaving vector.

    The i-th positive sits at overall index i + #{j : r_j <= i}, so

        loss = 1 - (1/p) * sum_i  i / (i + #{j : r_j <= i}).
    """
    ranks = _checked_ranks(interleaving, ctx)
    i = np.arange(1, ctx.p + 1, dtype=np.float64)
    ahead = _positives_ahead(ranks, ctx.p)
    return float(1.0 - np.sum(i / (i + ahead)) / ctx.p)


def ndcg_loss(
    interleaving: Sequence[int], ctx: LossContext, discount: Discount
) -> float:
    """NDCG loss of any consistent proper ranking:
    1 - sum_i D(index of i-th positive) / ndcg_norm."""
    if ctx.ndcg_norm is None:
        raise ValidationError("ctx.ndcg_norm required for NDCG")
    ranks = _checked_ranks(interleaving, ctx)
    i = np.arange(1, ctx.p + 1, dtype=np.int64)
    positions = i + _positives_ahead(ranks, ctx.p)
    return float(1.0 - discount.of_positions(positions).sum() / ctx.ndcg_norm)


def ranking_loss(loss: RankLoss, ctx: LossContext, interleaving: Sequence[int]) -> float:
    """Dispatch to ap_loss / ndcg_loss for the given loss descriptor."""
    if loss.kind == "ap":
        return ap_loss(interleaving, ctx)
    return ndcg_loss(interleaving, ctx, loss.discount)


def loss_of_ordering(
    labels_in_order: Sequence[int],
    loss: RankLoss,
    ctx: Optional[LossContext] = None,
) -> float:
    """Loss evaluated straight from an explicit ordering.

    labels_in_order lists the class of each sample from the top of the
    ranking down (1 = positive, 0 = negative).  Used by the permutation
    oracle and by metric evaluation on predicted rankings.
    """
    labels = np.asarray(list(labels_in_order), dtype=np.int64)
    p = int(labels.sum())
    n = int(labels.size - p)
    if ctx is None:
        ctx = LossContext.for_loss(loss, p, n)
    elif ctx.p != p or ctx.n != n:
        raise ValidationError(
            f"ordering has p={p}, n={n}; context says p={ctx.p}, n={ctx.n}"
        )
    positions = np.flatnonzero(labels) + 1  # overall 1-based index of positives
    if loss.kind == "ap":
        within = np.arange(1, p + 1, dtype=np.float64)
        return float(1.0 - np.sum(within / positions) / p)
    return float(
        1.0 - loss.discount.of_positions(positions).sum() / ctx.ndcg_norm
    )


def delta_derivative(loss: RankLoss, ctx: LossContext, j: int, i: int) -> float:
    """delta_j(i+1) - delta_j(i), the loss change when the j-th negative's
    interleaving rank moves from i to i+1.  Constant time for both losses.

    AP:   ( (j-1)/(j+i-1) - j/(j+i) ) / p
    NDCG: ( D(i+j) - D(i+j-1) ) / ndcg_norm
    """
    if not 1 <= j <= ctx.n:
        raise ValidationError(f"negative index j={j} outside [1, {ctx.n}]")
    if not 1 <= i <= ctx.p:
        raise ValidationError(f"rank i={i} outside [1, {ctx.p}]")
    if loss.kind == "ap":
        return ((j - 1.0) / (j + i - 1.0) - j / (j + i)) / ctx.p
    if ctx.ndcg_norm is None:
        raise ValidationError("ctx.ndcg_norm required for NDCG")
    d = loss.discount
    return (d(i + j) - d(i + j - 1)) / ctx.ndcg_norm


def delta_value(loss: RankLoss, ctx: LossContext, j: int, i: int) -> float:
    """delta_j(i), accumulated backwards from the anchor delta_j(p+1) = 0.

    O(p) worst case; the inference hot path only ever uses the derivative,
    so no caching is needed here.
    """
    if not 1 <= i <= ctx.p + 1:
        raise ValidationError(f"rank i={i} outside [1, {ctx.p + 1}]")
    acc = 0.0
    for k in range(ctx.p, i - 1, -1):
        acc -= delta_derivative(loss, ctx, j, k)
    return acc


def decomposed_loss(
    loss: RankLoss, ctx: LossContext, interleaving: Sequence[int]
) -> float:
    """Loss reconstructed as sum_j delta_j(r_j); must agree with the direct
    evaluation (ap_loss / ndcg_loss) to float precision."""
    ranks = _checked_ranks(interleaving, ctx)
    return float(sum(delta_value(loss, ctx, j + 1, int(r)) for j, r in enumerate(ranks)))


def _derivative_grid(loss: RankLoss, ctx: LossContext) -> np.ndarray:
    """Matrix of delta_j(i+1) - delta_j(i) over j=1..n (rows), i=1..p (cols)."""
    j = np.arange(1, ctx.n + 1, dtype=np.float64)[:, None]
    i = np.arange(1, ctx.p + 1, dtype=np.float64)[None, :]
    if loss.kind == "ap":
        return ((j - 1.0) / (j + i - 1.0) - j / (j + i)) / ctx.p
    if ctx.ndcg_norm is None:
        raise ValidationError("ctx.ndcg_norm required for NDCG")
    ij = (i + j).astype(np.int64)
    d = loss.discount
    return (d.of_positions(ij) - d.of_positions(ij - 1)) / ctx.ndcg_norm


def check_c2(loss: RankLoss, ctx: LossContext, tol: float = 1e-12) -> bool:
    """Exhaustively verify condition C2 on the (j, i) grid of ctx.

    True iff delta_{j+1}(i+1) - delta_{j+1}(i) >= delta_j(i+1) - delta_j(i)
    for all 1 <= j < n, 1 <= i <= p, up to tol of float noise.
    """
    if ctx.p * ctx.n > 10_000_000:
        raise ValidationError("grid too large for an exhaustive C2 sweep")
    if ctx.n < 2:
        return True
    grid = _derivative_grid(loss, ctx)
    return bool(np.all(grid[1:] >= grid[:-1] - tol))
