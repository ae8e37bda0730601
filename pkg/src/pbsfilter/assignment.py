"""Suit-length assignment matrices, ring-swap neighbors, and deals per assignment.

A suit-length assignment says how many unknown cards of each suit every
holder (players, then kitty) received. Rows sum to the holders' unknown
counts, columns to the unknown pool sizes, and void cells are pinned to 0.
"""

from __future__ import annotations

import functools
import itertools
import math
from collections import deque
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .errors import IllegalActionError
from .game import Deal
from .observation import ConstraintSummary


@dataclass(frozen=True)
class SuitLengthMatrix:
    entries: tuple[tuple[int, ...], ...]
    row_sums: tuple[int, ...]
    col_sums: tuple[int, ...]
    void_mask: tuple[tuple[bool, ...], ...]

    @classmethod
    def for_constraints(cls, entries: Sequence[Sequence[int]], c: ConstraintSummary) -> "SuitLengthMatrix":
        return cls(
            entries=tuple(tuple(int(x) for x in row) for row in entries),
            row_sums=c.unknown_per_row,
            col_sums=c.pool_sizes,
            void_mask=c.void_mask,
        )

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.row_sums), len(self.col_sums)

    def is_valid(self) -> bool:
        rows, cols = self.shape
        if len(self.entries) != rows or any(len(r) != cols for r in self.entries):
            return False
        for i, row in enumerate(self.entries):
            if sum(row) != self.row_sums[i]:
                return False
            for j, x in enumerate(row):
                if x < 0 or (x and self.void_mask[i][j]):
                    return False
        return all(sum(self.entries[i][j] for i in range(rows)) == self.col_sums[j] for j in range(cols))

    def with_entries(self, entries: Sequence[Sequence[int]]) -> "SuitLengthMatrix":
        return SuitLengthMatrix(tuple(tuple(r) for r in entries), self.row_sums, self.col_sums, self.void_mask)

    def as_array(self) -> np.ndarray:
        return np.array(self.entries, dtype=int)


def _row_cards(deal: Deal, c: ConstraintSummary) -> list[frozenset]:
    """Unknown cards held by each row of ``c`` under ``deal``."""
    players = c.num_rows - int(c.has_kitty)
    if len(deal.hands) != players:
        raise IllegalActionError("deal and constraint summary disagree on the number of players")
    rows = []
    for i, hand in enumerate(deal.hands):
        forced = c.forced_cards[i] if c.forced_cards else frozenset()
        if not forced <= hand:
            raise IllegalActionError(f"player {i} was not dealt the cards they played")
        rows.append(hand - forced)
    if c.has_kitty:
        rows.append(deal.kitty)
    return rows


def matrix_of(deal: Deal, c: ConstraintSummary) -> SuitLengthMatrix:
    """Suit-length assignment realized by ``deal``."""
    pool_suit = {card: j for j, pool in enumerate(c.unknown_pool) for card in pool}
    entries = [[0] * c.num_suits for _ in range(c.num_rows)]
    for i, cards in enumerate(_row_cards(deal, c)):
        for card in cards:
            if card not in pool_suit:
                raise IllegalActionError(f"card {card} is not in the unknown pool")
            entries[i][pool_suit[card]] += 1
    matrix = SuitLengthMatrix.for_constraints(entries, c)
    if not matrix.is_valid():
        raise IllegalActionError("deal violates the public constraints")
    return matrix


def ring_swap(matrix: SuitLengthMatrix) -> list[SuitLengthMatrix]:
    """All assignments one ring of swaps away from ``matrix``.

    For each row ``i`` and non-void columns ``j != k`` with ``a[i][k] > 0``,
    move one unit from ``k`` to ``j`` in row ``i``. Column ``j`` now has a
    surplus and ``k`` a deficit; a breadth-first search over further swaps
    in rows not yet used (each row at most once) passes the surplus along
    until it lands in column ``k``. Every balanced, void-respecting result
    is a neighbor. Because each row changes at most once, intermediate
    entries never go negative when the final matrix is non-negative.
    """
    rows, cols = matrix.shape
    void = matrix.void_mask
    base = matrix.entries
    found: dict[tuple, None] = {}
    for i in range(rows):
        for j in range(cols):
            if void[i][j]:
                continue
            for k in range(cols):
                if k == j or void[i][k] or base[i][k] == 0:
                    continue
                start = [list(r) for r in base]
                start[i][j] += 1
                start[i][k] -= 1
                queue = deque([(tuple(map(tuple, start)), j, frozenset([i]))])
                while queue:
                    entries, surplus, used = queue.popleft()
                    for l in range(rows):
                        if l in used or entries[l][surplus] == 0:
                            continue
                        for z in range(cols):
                            if z == surplus or void[l][z]:
                                continue
                            row = list(entries[l])
                            row[surplus] -= 1
                            row[z] += 1
                            nxt = entries[:l] + (tuple(row),) + entries[l + 1:]
                            if z == k:
                                if nxt != base:
                                    found.setdefault(nxt)
                            else:
                                queue.append((nxt, z, used | {l}))
    return [matrix.with_entries(e) for e in found]


def deal_count_entries(entries: Sequence[Sequence[int]], pool_sizes: Sequence[int]) -> int:
    count = 1
    for j, size in enumerate(pool_sizes):
        ways = math.factorial(size)
        for row in entries:
            ways //= math.factorial(row[j])
        count *= ways
    return count


def deal_count(matrix: SuitLengthMatrix, c: ConstraintSummary) -> int:
    """Number of concrete deals realizing ``matrix``: a product of per-suit multinomials."""
    return deal_count_entries(matrix.entries, c.pool_sizes)


def deal_from_rows(rows: Sequence[Sequence[int]], c: ConstraintSummary) -> Deal:
    """Assemble a deal from the unknown cards given to each row, adding back forced cards."""
    players = c.num_rows - int(c.has_kitty)
    hands = []
    for i in range(players):
        forced = c.forced_cards[i] if c.forced_cards else frozenset()
        hands.append(frozenset(rows[i]) | forced)
    kitty = frozenset(rows[-1]) if c.has_kitty else frozenset()
    trump = c.trump_upcard if c.trump_upcard is not None else -1
    return Deal(hands=tuple(hands), trump_upcard=trump, kitty=kitty)


@functools.lru_cache(maxsize=256)
def _pool_layout(c: ConstraintSummary) -> tuple[np.ndarray, np.ndarray]:
    cards = np.array([card for pool in c.unknown_pool for card in pool], dtype=int)
    suits = np.array([j for j, pool in enumerate(c.unknown_pool) for _ in pool], dtype=int)
    return cards, suits


def sample_deal_in(matrix: SuitLengthMatrix, c: ConstraintSummary, rng: np.random.Generator) -> Deal:
    """Uniform draw among the deals realizing ``matrix``."""
    cards, suits = _pool_layout(c)
    # one random key per card, sorted within each suit: independent uniform shuffles
    shuffled = cards[np.lexsort((rng.random(len(cards)), suits))].tolist()
    nrows = len(matrix.entries)
    rows: list[list[int]] = [[] for _ in range(nrows)]
    pos = 0
    for j in range(len(c.unknown_pool)):
        for i in range(nrows):
            take = matrix.entries[i][j]
            if take:
                rows[i] += shuffled[pos:pos + take]
                pos += take
    return deal_from_rows(rows, c)


def _splits(pool: Sequence[int], sizes: Sequence[int]) -> Iterator[tuple[tuple[int, ...], ...]]:
    if not sizes:
        yield ()
        return
    first, rest = sizes[0], sizes[1:]
    for chosen in itertools.combinations(pool, first):
        remaining = [x for x in pool if x not in chosen]
        for tail in _splits(remaining, rest):
            yield (chosen,) + tail


def iter_deals_in(matrix: SuitLengthMatrix, c: ConstraintSummary) -> Iterator[Deal]:
    """Every deal realizing ``matrix``, in a fixed order."""
    per_suit = [
        list(_splits(pool, [matrix.entries[i][j] for i in range(c.num_rows)]))
        for j, pool in enumerate(c.unknown_pool)
    ]
    for combo in itertools.product(*per_suit):
        rows = [[card for split in combo for card in split[i]] for i in range(c.num_rows)]
        yield deal_from_rows(rows, c)


def enumerate_assignments(c: ConstraintSummary) -> list[SuitLengthMatrix]:
    """All valid suit-length assignments for ``c``, in lexicographic order."""
    rows, cols = c.num_rows, c.num_suits
    results: list[tuple] = []
    remaining = list(c.pool_sizes)
    current: list[list[int]] = [[0] * cols for _ in range(rows)]

    def fill(i: int, j: int, left_in_row: int) -> None:
        if i == rows:
            if not any(remaining):
                results.append(tuple(tuple(r) for r in current))
            return
        if j == cols:
            if left_in_row == 0:
                nxt = i + 1
                fill(nxt, 0, c.unknown_per_row[nxt] if nxt < rows else 0)
            return
        top = 0 if c.void_mask[i][j] else min(left_in_row, remaining[j])
        if j == cols - 1:
            choices = [left_in_row] if left_in_row <= top else []
        else:
            choices = range(top + 1)
        for x in choices:
            current[i][j] = x
            remaining[j] -= x
            fill(i, j + 1, left_in_row - x)
            remaining[j] += x
        current[i][j] = 0

    if rows:
        fill(0, 0, c.unknown_per_row[0])
    return [SuitLengthMatrix.for_constraints(e, c) for e in results]


@dataclass(frozen=True)
class NeighborSet:
    """The deal-level neighborhood of a deal: every deal in a ring-swap
    neighbor assignment, plus (``include_self``) the other deals sharing the
    current assignment."""

    current: SuitLengthMatrix
    assignments: tuple[SuitLengthMatrix, ...]
    counts: tuple[int, ...]
    current_count: int
    include_self: bool = True

    @property
    def total_deal_count(self) -> int:
        own = self.current_count - 1 if self.include_self else 0
        return sum(self.counts) + own

    def __len__(self) -> int:
        return self.total_deal_count


def neighbor_set_of_matrix(matrix: SuitLengthMatrix, c: ConstraintSummary, include_self: bool = True) -> NeighborSet:
    neighbors = tuple(ring_swap(matrix))
    return NeighborSet(
        current=matrix,
        assignments=neighbors,
        counts=tuple(deal_count(a, c) for a in neighbors),
        current_count=deal_count(matrix, c),
        include_self=include_self,
    )


def neighbor_set(deal: Deal, c: ConstraintSummary, include_self: bool = True) -> NeighborSet:
    return neighbor_set_of_matrix(matrix_of(deal, c), c, include_self)


def iter_neighbor_deals(deal: Deal, c: ConstraintSummary, include_self: bool = True) -> Iterator[Deal]:
    """Materialize the neighbor set of ``deal`` (small instances only)."""
    ns = neighbor_set(deal, c, include_self)
    for a in ns.assignments:
        yield from iter_deals_in(a, c)
    if include_self:
        for other in iter_deals_in(ns.current, c):
            if other != deal:
                yield other
