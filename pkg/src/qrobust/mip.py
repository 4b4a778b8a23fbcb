"""
Depth-first branch-and-bound for flat programs.

Purpose: Exact optimum of a MipInstance (the deterministic equivalent, or any
single-block program) by interval propagation, optimistic bounds and an
incumbent cutoff. Independent of the game-tree search, so it doubles as a
second oracle.
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Union

from .core import LinConstraint, ObjectiveSense, QipInstance, VarDomain, VarKind
from .dep import MipInstance
from .relax import BoundsState, Direction, Propagator, optimistic_value
from .search import INFINITY, SearchConfig, SolveStatus, TrailingResolver, Value

logger = logging.getLogger(__name__)

Number = Union[int, Fraction]


@dataclass
class MipResult:
    """On Optimal, ``assignment`` satisfies every row and attains ``value`` (model sense)."""
    status: SolveStatus
    value: Optional[Value]
    assignment: Dict[int, Number] = field(default_factory=dict)
    nodes: int = 0
    elapsed_ms: int = 0

    @property
    def is_optimal(self) -> bool:
        return self.status is SolveStatus.OPTIMAL


class _BudgetExhausted(Exception):
    pass


class _Budget:
    """Node and wall-clock budget shared by a solve and its component sub-solves."""

    def __init__(self, config: SearchConfig):
        self.deadline = time.perf_counter() + config.time_limit_ms / 1000.0
        self.node_limit = config.node_limit
        self.nodes = 0

    def tick(self) -> None:
        self.nodes += 1
        if self.node_limit is not None and self.nodes > self.node_limit:
            raise _BudgetExhausted()
        if time.perf_counter() > self.deadline:
            raise _BudgetExhausted()


class BranchAndBound:
    """
    Branches on unfixed integer variables in a static order: largest absolute
    objective coefficient first, ties by index. The cheaper value of each
    variable is explored first.
    """

    def __init__(self, instance: MipInstance, config: SearchConfig, budget: Optional[_Budget] = None):
        self.mip = instance
        self.qip = instance.as_qip()
        self.config = config
        self.budget = budget or _Budget(config)
        n = instance.num_vars
        self.objective = self.qip.min_objective
        self.offset = self.qip.min_offset
        self.cost = [Fraction(0)] * n
        for j, c in self.objective:
            self.cost[j] = c
        self.resolver = TrailingResolver(self.qip)
        self.order = sorted((j for j, d in enumerate(instance.domains) if d.kind is VarKind.INTEGER),
                            key=lambda j: (-abs(self.cost[j]), j))
        rows = list(instance.rows)
        self.cut_row: Optional[int] = None
        if self._objective_integral():
            loosest = sum((max(c * instance.domains[j].lower, c * instance.domains[j].upper)
                           for j, c in self.objective), Fraction(0))
            rows.append(LinConstraint.le(dict(self.objective), loosest, name="incumbent_cutoff"))
        self.propagator = Propagator(rows, n)
        if len(rows) > len(instance.rows):
            self.cut_row = len(self.propagator.rows) - 1
        self._decomposable = self._decomposition_ready()
        self.incumbent: Optional[Fraction] = None
        self.best: Dict[int, Number] = {}

    def _objective_integral(self) -> bool:
        if self.offset.denominator != 1 or not self.objective:
            return False
        if any(c.denominator != 1 for _, c in self.objective):
            return False
        for j, c in self.objective:
            if self.mip.domains[j].kind is VarKind.INTEGER:
                continue
            for row in self.mip.rows:
                coeffs = row.coeffs
                if j not in coeffs:
                    continue
                if abs(coeffs[j]) != 1 or row.rhs.denominator != 1:
                    return False
                if any(a.denominator != 1 for _, a in row.terms):
                    return False
        return True

    def _decomposition_ready(self) -> bool:
        trailing = self.resolver.trailing
        if len(trailing) != 1:
            return False
        w = trailing[0]
        return self.cost[w] != 0

    def solve(self) -> MipResult:
        start = time.perf_counter()
        nodes_before = self.budget.nodes
        state = BoundsState.from_domains(self.mip.domains)
        self.propagator.seed_all(state)
        try:
            if self.propagator.run(state):
                self._search(state)
        except _BudgetExhausted:
            elapsed = int((time.perf_counter() - start) * 1000)
            value = None if self.incumbent is None else self.qip.to_model_value(self.incumbent)
            return MipResult(SolveStatus.TIME_LIMIT, value, dict(self.best),
                             self.budget.nodes - nodes_before, elapsed)
        elapsed = int((time.perf_counter() - start) * 1000)
        nodes = self.budget.nodes - nodes_before
        if self.incumbent is None:
            return MipResult(SolveStatus.INFEASIBLE, INFINITY, {}, nodes, elapsed)
        return MipResult(SolveStatus.OPTIMAL, self.qip.to_model_value(self.incumbent), dict(self.best),
                         nodes, elapsed)

    def _free_var(self, state: BoundsState) -> Optional[int]:
        for j in self.order:
            if state.lower[j] != state.upper[j]:
                return j
        return None

    def _search(self, root: BoundsState) -> None:
        stack: List[BoundsState] = [root]
        while stack:
            state = stack.pop()
            self.budget.tick()
            if self.incumbent is not None and self.config.bounds_enabled:
                if self.offset + optimistic_value(self.objective, state, Direction.MIN) >= self.incumbent:
                    continue
            j = self._free_var(state)
            if j is None:
                self._leaf(state.lower)
                continue
            if self._decomposable and self._try_components(state):
                continue
            values = list(range(state.lower[j], state.upper[j] + 1))
            if self.cost[j] < 0:
                values.reverse()
            children = []
            for v in values:
                child = state.copy()
                if self.cut_row is not None:
                    child.push(self.cut_row)
                if self.propagator.fix(child, j, v) and self.propagator.run(child):
                    children.append(child)
            stack.extend(reversed(children))

    def _leaf(self, values) -> None:
        resolved = self.resolver.resolve(values)
        if resolved is None:
            return
        total = self.offset + resolved[0]
        for j in self.order:
            total += self.cost[j] * values[j]
        if self.incumbent is None or total < self.incumbent:
            self.incumbent = total
            self.best = {j: values[j] for j in self.order}
            self.best.update(resolved[1])
            if self.cut_row is not None:
                vars_, coefs, _ = self.propagator.rows[self.cut_row]
                self.propagator.rows[self.cut_row] = (vars_, coefs, int(total - self.offset) - 1)

    def _try_components(self, state: BoundsState) -> bool:
        """
        Solve independent blocks of free variables separately when they are
        linked only through the single trailing variable and carry no
        objective terms of their own. Returns False when that does not apply.
        """
        free = [j for j in self.order if state.lower[j] != state.upper[j]]
        if any(self.cost[j] != 0 for j in free):
            return False
        w = self.resolver.trailing[0]
        parent = {j: j for j in free}

        def find(j: int) -> int:
            while parent[j] != j:
                parent[j] = parent[parent[j]]
                j = parent[j]
            return j

        for row in self.mip.rows:
            linked = [j for j in row.var_indices if j in parent]
            for j in linked[1:]:
                a, b = find(linked[0]), find(j)
                if a != b:
                    parent[b] = a
        groups: Dict[int, List[int]] = {}
        for j in free:
            groups.setdefault(find(j), []).append(j)
        if len(groups) < 2:
            return False

        values: List[Number] = list(state.lower)
        for members in groups.values():
            result = self._solve_component(members, w, state)
            if result is None:
                return True
            for j in members:
                values[j] = result[j]
        self._leaf(values)
        return True

    def _solve_component(self, members: List[int], w: int, state: BoundsState) -> Optional[Dict[int, Number]]:
        local = {j: k for k, j in enumerate(members)}
        wl = len(members)
        member_set = set(members)
        rows = []
        for row in self.mip.rows:
            if not any(j in member_set for j in row.var_indices):
                continue
            terms = {}
            rhs = row.rhs
            for j, c in row.terms:
                if j in member_set:
                    terms[local[j]] = c
                elif j == w:
                    terms[wl] = c
                else:
                    rhs -= c * state.lower[j]
            rows.append(LinConstraint.build(terms, row.sense, rhs, name=row.name))
        dom = self.mip.domains[w]
        sub = MipInstance(
            name=f"{self.mip.name}/component",
            var_names=tuple(self.mip.var_names[j] for j in members) + (self.mip.var_names[w],),
            domains=tuple(VarDomain(state.lower[j], state.upper[j]) for j in members) + (dom,),
            objective=((wl, self.cost[w]),),
            rows=tuple(rows),
            sense=ObjectiveSense.MINIMIZE,
            origin=(None,) * (wl + 1),
        )
        result = BranchAndBound(sub, self.config, self.budget).solve()
        if result.status is SolveStatus.TIME_LIMIT:
            raise _BudgetExhausted()
        if result.status is SolveStatus.INFEASIBLE:
            return None
        return {j: result.assignment[local[j]] for j in members}


def solve_mip(instance: Union[MipInstance, QipInstance], config: Optional[SearchConfig] = None) -> MipResult:
    """Exact optimum of a flat program; a QipInstance must have no universal blocks."""
    if isinstance(instance, QipInstance):
        instance = MipInstance.from_qip(instance)
    result = BranchAndBound(instance, config or SearchConfig()).solve()
    logger.debug("mip %s: %s value=%s nodes=%d", instance.name, result.status.value, result.value, result.nodes)
    return result
