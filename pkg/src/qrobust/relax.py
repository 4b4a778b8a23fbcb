"""
Interval bound propagation over linear rows.

Purpose: Sound domain tightening and optimistic objective bounds for the
game-tree search and the branch-and-bound solver. Rows are scaled to integer
coefficients once, so propagation on integer data never leaves int arithmetic.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Deque, List, Optional, Sequence, Set, Tuple, Union

from .core import LinConstraint, RowSense, Terms, VarDomain, VarKind

Bound = Union[int, Fraction]
CompiledRow = Tuple[Tuple[int, ...], Tuple[int, ...], int]


class Direction(str, Enum):
    MIN = "min"
    MAX = "max"


@dataclass
class BoundsState:
    """Per-node interval box plus the queue of rows awaiting propagation."""
    lower: List[Bound]
    upper: List[Bound]
    integral: Tuple[bool, ...]
    dirty: Deque[int] = field(default_factory=deque)
    queued: Set[int] = field(default_factory=set)
    empty: bool = False

    @classmethod
    def from_domains(cls, domains: Sequence[VarDomain]) -> "BoundsState":
        return cls(
            lower=[d.lower for d in domains],
            upper=[d.upper for d in domains],
            integral=tuple(d.kind is VarKind.INTEGER for d in domains),
        )

    def copy(self) -> "BoundsState":
        return BoundsState(list(self.lower), list(self.upper), self.integral,
                           deque(self.dirty), set(self.queued), self.empty)

    def is_fixed(self, j: int) -> bool:
        return self.lower[j] == self.upper[j]

    def push(self, row: int) -> None:
        if row not in self.queued:
            self.queued.add(row)
            self.dirty.append(row)


def compile_row(row: LinConstraint) -> List[CompiledRow]:
    """Scale a row to integer coefficients; EQ becomes two opposite LE rows."""
    scale = math.lcm(row.rhs.denominator, *(c.denominator for _, c in row.terms))
    vars_ = tuple(j for j, _ in row.terms)
    coefs = tuple(int(c * scale) for _, c in row.terms)
    rhs = int(row.rhs * scale)
    compiled = [(vars_, coefs, rhs)]
    if row.sense is RowSense.EQ:
        compiled.append((vars_, tuple(-a for a in coefs), -rhs))
    return compiled


class Propagator:
    """
    Compiled row set with a variable-to-row index.

    Reused across search nodes; all per-node data lives in BoundsState.
    """

    def __init__(self, rows: Sequence[LinConstraint], num_vars: int):
        self.num_vars = num_vars
        self.rows: List[CompiledRow] = []
        self.rows_of_var: List[List[int]] = [[] for _ in range(num_vars)]
        for row in rows:
            for compiled in compile_row(row):
                r = len(self.rows)
                self.rows.append(compiled)
                for j in compiled[0]:
                    self.rows_of_var[j].append(r)
        self.max_steps = max(1, num_vars) * max(1, len(self.rows))

    def seed_all(self, state: BoundsState) -> None:
        for r in range(len(self.rows)):
            state.push(r)

    def fix(self, state: BoundsState, j: int, value: Bound) -> bool:
        """Collapse variable j to value; False when value lies outside its box."""
        return self.restrict(state, j, value, value)

    def restrict(self, state: BoundsState, j: int, lo: Bound, hi: Bound) -> bool:
        lower, upper = state.lower, state.upper
        changed = False
        if lo > lower[j]:
            lower[j] = lo
            changed = True
        if hi < upper[j]:
            upper[j] = hi
            changed = True
        if lower[j] > upper[j]:
            state.empty = True
            return False
        if changed:
            for r in self.rows_of_var[j]:
                state.push(r)
        return True

    def run(self, state: BoundsState) -> bool:
        """
        Tighten to a fixpoint. False when the box is empty.

        Integer bounds move by whole units, so they always settle. Continuous
        bounds can shrink forever; after ``max_steps`` continuous tightenings
        the queue is dropped and the box is returned as is.
        """
        if state.empty:
            return False
        lower, upper, integral = state.lower, state.upper, state.integral
        steps = 0
        while state.dirty:
            if steps > self.max_steps:
                state.dirty.clear()
                state.queued.clear()
                break
            r = state.dirty.popleft()
            state.queued.discard(r)
            vars_, coefs, rhs = self.rows[r]
            min_activity: Bound = 0
            for j, a in zip(vars_, coefs):
                min_activity += a * (lower[j] if a > 0 else upper[j])
            slack = rhs - min_activity
            if slack < 0:
                state.empty = True
                return False
            for j, a in zip(vars_, coefs):
                if a > 0:
                    if (upper[j] - lower[j]) * a <= slack:
                        continue
                    if integral[j]:
                        new = lower[j] + slack // a
                    else:
                        new = lower[j] + Fraction(slack) / a
                    if new < upper[j]:
                        upper[j] = new
                        steps += not integral[j]
                        self._requeue(state, j, r)
                else:
                    if (lower[j] - upper[j]) * a <= slack:
                        continue
                    if integral[j]:
                        new = upper[j] - slack // -a
                    else:
                        new = upper[j] - Fraction(slack) / -a
                    if new > lower[j]:
                        lower[j] = new
                        steps += not integral[j]
                        self._requeue(state, j, r)
                if lower[j] > upper[j]:
                    state.empty = True
                    return False
        return True

    def _requeue(self, state: BoundsState, j: int, source: int) -> None:
        for r in self.rows_of_var[j]:
            if r != source:
                state.push(r)


def propagate(rows: Sequence[LinConstraint], state: BoundsState) -> Optional[BoundsState]:
    """
    Fixpoint of interval tightening of ``state`` under ``rows``.

    Returns a new state, or None when some row is interval-infeasible.
    Integer bounds are rounded inward; the result never excludes an integer
    point satisfying every row.
    """
    propagator = Propagator(rows, len(state.lower))
    result = state.copy()
    propagator.seed_all(result)
    return result if propagator.run(result) else None


def optimistic_value(objective: Terms, state: BoundsState,
                     direction: Direction = Direction.MIN) -> Fraction:
    """Interval lower (MIN) or upper (MAX) bound of the objective over the box."""
    total = Fraction(0)
    lower, upper = state.lower, state.upper
    for j, c in objective:
        a, b = c * lower[j], c * upper[j]
        total += (a if a < b else b) if direction is Direction.MIN else (a if a > b else b)
    return total
