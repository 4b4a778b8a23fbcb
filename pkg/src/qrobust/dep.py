"""
Deterministic-equivalent expansion of quantified programs.

Purpose: Enumerate the tree of legal universal scenario sequences and build
the flat single-player MIP in which every existential variable gets one copy
per scenario-history prefix preceding its block (nonanticipativity by
construction) and an epigraph variable carries the worst case over leaves.
"""
from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Dict, Iterator, List, Optional, Sequence, Tuple, Union

from .core import (
    LinConstraint,
    ObjectiveSense,
    QipInstance,
    QuantBlock,
    Quantifier,
    RowSense,
    Terms,
    VarDomain,
    VarKind,
    make_terms,
)
from .errors import ConfigError, ScenarioExplosionError
from .search import UniversalMoves

logger = logging.getLogger(__name__)

DEFAULT_SCENARIO_CAP = 10 ** 6
EPIGRAPH_NAME = "epigraph"


@dataclass(frozen=True)
class ScenarioHistory:
    """Universal block assignments revealed so far, one tuple per elapsed universal block."""
    moves: Tuple[Tuple[int, ...], ...] = ()

    @classmethod
    def of(cls, *moves: Union[int, Sequence[int]]) -> "ScenarioHistory":
        return cls(tuple((m,) if isinstance(m, int) else tuple(m) for m in moves))

    def __len__(self) -> int:
        return len(self.moves)

    def prefix(self, t: int) -> "ScenarioHistory":
        if not 0 <= t <= len(self.moves):
            raise ConfigError(f"prefix length {t} outside 0..{len(self.moves)}")
        return ScenarioHistory(self.moves[:t])

    def scenario(self, t: int) -> Tuple[int, ...]:
        """Move of the t-th universal block, counted from 1."""
        if not 1 <= t <= len(self.moves):
            raise ConfigError(f"period {t} outside 1..{len(self.moves)}")
        return self.moves[t - 1]

    def extend(self, move: Sequence[int]) -> "ScenarioHistory":
        return ScenarioHistory(self.moves + (tuple(move),))

    def is_prefix_of(self, other: "ScenarioHistory") -> bool:
        return other.moves[:len(self.moves)] == self.moves

    @property
    def suffix(self) -> str:
        """Name fragment: moves joined by '_', values by '.', negatives as 'n<abs>'."""
        return "_".join(".".join(f"n{-v}" if v < 0 else str(v) for v in move) for move in self.moves)

    def __str__(self) -> str:
        return "(" + ", ".join(",".join(map(str, m)) if len(m) > 1 else str(m[0]) for m in self.moves) + ")"


@dataclass
class ScenarioNode:
    history: ScenarioHistory
    children: List["ScenarioNode"] = field(default_factory=list)

    @property
    def depth(self) -> int:
        return len(self.history)

    @property
    def is_leaf(self) -> bool:
        return not self.children


@dataclass
class ScenarioTree:
    root: ScenarioNode
    depth: int
    num_leaves: int

    def preorder(self) -> Iterator[ScenarioNode]:
        stack = [self.root]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(reversed(node.children))

    def leaves(self) -> List[ScenarioHistory]:
        return [node.history for node in self.preorder() if node.is_leaf]

    def histories_at(self, depth: int) -> List[ScenarioHistory]:
        return [node.history for node in self.preorder() if node.depth == depth]


def enumerate_scenarios(instance: QipInstance, cap: int = DEFAULT_SCENARIO_CAP) -> ScenarioTree:
    """
    Full tree of legal universal sequences.

    Raises ScenarioExplosionError as soon as more than ``cap`` leaves appear.
    """
    if cap <= 0:
        raise ConfigError(f"scenario cap must be positive, got {cap}")
    moves = UniversalMoves(instance)
    ublocks = instance.universal_block_indices
    assignment: List[Optional[int]] = [None] * instance.num_vars
    root = ScenarioNode(ScenarioHistory())
    count = 0

    def grow(node: ScenarioNode, k: int) -> None:
        nonlocal count
        if k == len(ublocks):
            count += 1
            if count > cap:
                raise ScenarioExplosionError(cap, count)
            return
        block = instance.blocks[ublocks[k]].var_indices
        for move in moves.legal(ublocks[k], assignment):
            for j, v in zip(block, move):
                assignment[j] = v
            child = ScenarioNode(node.history.extend(move))
            node.children.append(child)
            grow(child, k + 1)
        for j in block:
            assignment[j] = None

    grow(root, 0)
    return ScenarioTree(root, len(ublocks), count)


@dataclass(frozen=True)
class MipInstance:
    """
    Flat single-player program.

    ``origin[k]`` is the (original variable, history) pair a flat variable
    copies, or None for variables with no original (the epigraph, or any
    variable of a MIP read from file).
    """
    name: str
    var_names: Tuple[str, ...]
    domains: Tuple[VarDomain, ...]
    objective: Terms
    rows: Tuple[LinConstraint, ...]
    sense: ObjectiveSense = ObjectiveSense.MINIMIZE
    offset: Fraction = Fraction(0)
    origin: Tuple[Optional[Tuple[int, ScenarioHistory]], ...] = ()
    num_leaves: int = 1
    epigraph: Optional[int] = None

    @property
    def num_vars(self) -> int:
        return len(self.domains)

    @cached_property
    def _copies(self) -> Dict[Tuple[int, ScenarioHistory], int]:
        return {o: k for k, o in enumerate(self.origin) if o is not None}

    def copy_of(self, original: int, history: ScenarioHistory) -> int:
        """Flat copy of ``original`` seen along ``history`` (its longest matching prefix)."""
        for t in range(len(history), -1, -1):
            k = self._copies.get((original, history.prefix(t)))
            if k is not None:
                return k
        raise KeyError(f"no copy of variable {original} along {history}")

    def as_qip(self) -> QipInstance:
        return QipInstance(
            name=self.name,
            var_names=self.var_names,
            domains=self.domains,
            blocks=(QuantBlock(Quantifier.EXISTS, tuple(range(self.num_vars))),) if self.num_vars else (),
            objective=self.objective,
            existential_rows=self.rows,
            sense=self.sense,
            offset=self.offset,
        )

    @classmethod
    def from_qip(cls, instance: QipInstance) -> "MipInstance":
        if instance.universal_block_indices:
            raise ConfigError(f"{instance.name} has universal blocks; flatten it first")
        return cls(
            name=instance.name,
            var_names=instance.var_names,
            domains=instance.domains,
            objective=instance.objective,
            rows=instance.existential_rows,
            sense=instance.sense,
            offset=instance.offset,
            origin=(None,) * instance.num_vars,
        )


# Assembly

Expr = Tuple[Dict[int, Fraction], Fraction]


class DepBuilder:
    """
    Incremental construction of a MipInstance.

    Rows without variables are dropped when they hold and kept (as an
    unsatisfiable marker) when they do not. With ``dedupe`` identical rows
    are emitted once.
    """

    def __init__(self, name: str, sense: ObjectiveSense = ObjectiveSense.MINIMIZE, dedupe: bool = False):
        self.name = name
        self.sense = sense
        self.dedupe = dedupe
        self.names: List[str] = []
        self.domains: List[VarDomain] = []
        self.origin: List[Optional[Tuple[int, ScenarioHistory]]] = []
        self.objective: Dict[int, Fraction] = {}
        self.offset = Fraction(0)
        self.rows: List[LinConstraint] = []
        self.epigraph: Optional[int] = None
        self._keys: set = set()

    @property
    def num_vars(self) -> int:
        return len(self.domains)

    def add_var(self, name: str, lower: int = 0, upper: int = 1, kind: VarKind = VarKind.INTEGER,
                origin: Optional[Tuple[int, ScenarioHistory]] = None) -> int:
        self.names.append(name)
        self.domains.append(VarDomain(lower, upper, kind))
        self.origin.append(origin)
        return len(self.domains) - 1

    def add_objective(self, var: int, coeff) -> None:
        self.objective[var] = self.objective.get(var, Fraction(0)) + Fraction(coeff)

    def add_offset(self, value) -> None:
        self.offset += Fraction(value)

    def add_row(self, row: LinConstraint) -> None:
        if not row.terms:
            holds = row.rhs == 0 if row.sense is RowSense.EQ else row.rhs >= 0
            if holds:
                return
        if self.dedupe:
            key = (row.terms, row.sense, row.rhs)
            if key in self._keys:
                return
            self._keys.add(key)
        self.rows.append(row)

    def le(self, coeffs, rhs, name: str = "") -> None:
        self.add_row(LinConstraint.le(coeffs, rhs, name=name))

    def eq(self, coeffs, rhs, name: str = "") -> None:
        self.add_row(LinConstraint.eq(coeffs, rhs, name=name))

    def ge(self, coeffs, rhs, name: str = "") -> None:
        self.add_row(LinConstraint.ge(coeffs, rhs, name=name))

    def expr_range(self, expr: Expr) -> Tuple[Fraction, Fraction]:
        terms, const = expr
        low = high = Fraction(const)
        for k, c in terms.items():
            d = self.domains[k]
            a, b = c * d.lower, c * d.upper
            low += min(a, b)
            high += max(a, b)
        return low, high

    def add_epigraph(self, exprs: Sequence[Tuple[Expr, str]], name: str = EPIGRAPH_NAME) -> int:
        """
        Continuous variable bounding every expression from above (minimisation)
        or below (maximisation), added to the objective with coefficient one.
        """
        ranges = [self.expr_range(expr) for expr, _ in exprs]
        low = math.floor(min(lo for lo, _ in ranges))
        high = math.ceil(max(hi for _, hi in ranges))
        while name in self.names:
            name += "_"
        z = self.add_var(name, low, high, VarKind.TRAILING_CONTINUOUS)
        self.add_objective(z, 1)
        maximize = self.sense is ObjectiveSense.MAXIMIZE
        for (terms, const), tag in exprs:
            row = {k: (-v if maximize else v) for k, v in terms.items()}
            row[z] = Fraction(1) if maximize else Fraction(-1)
            self.le(row, const if maximize else -const, name=f"{name}@{tag}" if tag else name)
        self.epigraph = z
        return z

    def build(self, num_leaves: int = 1) -> MipInstance:
        return MipInstance(
            name=self.name,
            var_names=tuple(self.names),
            domains=tuple(self.domains),
            objective=make_terms(self.objective),
            rows=tuple(self.rows),
            sense=self.sense,
            offset=self.offset,
            origin=tuple(self.origin),
            num_leaves=num_leaves,
            epigraph=self.epigraph,
        )


# Flattening

@dataclass
class _LeafRow:
    terms: Dict[int, Fraction]
    trailing: Dict[int, Fraction]
    sense: RowSense
    rhs: Fraction
    name: str


class _Flattener:
    def __init__(self, instance: QipInstance, tree: ScenarioTree):
        self.q = instance
        self.tree = tree
        self.ublocks = instance.universal_block_indices
        self.has_epigraph = bool(self.ublocks)
        self.stage_of = [sum(1 for b in self.ublocks if b < instance.block_of[j]) for j in range(instance.num_vars)]
        self.trailing = tuple(j for j, d in enumerate(instance.domains) if d.kind is VarKind.TRAILING_CONTINUOUS)
        self.by_stage: Dict[int, List[int]] = {}
        for block in instance.blocks:
            if block.is_universal:
                continue
            for j in block.var_indices:
                if instance.domains[j].kind is VarKind.INTEGER:
                    self.by_stage.setdefault(self.stage_of[j], []).append(j)
        self.cost = dict(instance.objective)
        self.min_cost = dict(instance.min_objective)
        self.out = DepBuilder(f"{instance.name}-dep", instance.sense, dedupe=True)
        self.out.add_offset(instance.offset)
        self.epigraph_exprs: List[Tuple[Expr, str]] = []

    def _copy(self, j: int, history: ScenarioHistory) -> int:
        base = self.q.var_names[j]
        dom = self.q.domains[j]
        return self.out.add_var(f"{base}@{history.suffix}" if len(history) else base,
                                dom.lower, dom.upper, dom.kind, origin=(j, history))

    def run(self) -> MipInstance:
        self._walk(self.tree.root, {}, {})
        if self.has_epigraph:
            self.out.add_epigraph(self.epigraph_exprs)
        return self.out.build(self.tree.num_leaves)

    def _walk(self, node: ScenarioNode, path: Dict[int, int], uvals: Dict[int, int]) -> None:
        path = dict(path)
        for j in self.by_stage.get(node.depth, ()):
            path[j] = self._copy(j, node.history)
            if node.depth == 0 and self.has_epigraph and j in self.cost:
                self.out.add_objective(path[j], self.cost[j])
        if node.is_leaf:
            self._leaf(node.history, path, uvals)
            return
        block = self.q.blocks[self.ublocks[node.depth]].var_indices
        for child in node.children:
            self._walk(child, path, {**uvals, **dict(zip(block, child.history.moves[-1]))})

    def _leaf(self, history: ScenarioHistory, path: Dict[int, int], uvals: Dict[int, int]) -> None:
        tag = history.suffix
        leaf_rows: List[_LeafRow] = []
        for row in self.q.existential_rows:
            terms: Dict[int, Fraction] = {}
            trailing: Dict[int, Fraction] = {}
            const = Fraction(0)
            for j, c in row.terms:
                if j in uvals:
                    const += c * uvals[j]
                elif self.q.domains[j].kind is VarKind.TRAILING_CONTINUOUS:
                    trailing[j] = c
                else:
                    terms[path[j]] = terms.get(path[j], Fraction(0)) + c
            name = f"{row.name}@{tag}" if tag and row.name else row.name
            leaf_rows.append(_LeafRow(terms, trailing, row.sense, row.rhs - const, name))

        candidates: Dict[int, List[Expr]] = {}
        kept: Dict[int, int] = {}
        for w in self.trailing:
            eliminated = self._eliminate(w, [r for r in leaf_rows if w in r.trailing])
            if eliminated is not None:
                cands, extra = eliminated
                if self.has_epigraph or len(cands) == 1 or self.min_cost.get(w, 0) == 0:
                    candidates[w] = cands
                    leaf_rows = [r for r in leaf_rows if w not in r.trailing]
                    bound_name = f"{self.q.var_names[w]}_bound" + (f"@{tag}" if tag else "")
                    for terms, rhs in extra:
                        self.out.le(terms, rhs, name=bound_name)
                    continue
            kept[w] = self._copy(w, history)

        for r in leaf_rows:
            terms = dict(r.terms)
            for w, c in r.trailing.items():
                terms[kept[w]] = c
            self.out.add_row(LinConstraint.build(terms, r.sense, r.rhs, name=r.name))

        base: Dict[int, Fraction] = {}
        const = Fraction(0)
        choices: List[List[Expr]] = []
        for j, c in self.q.objective:
            if self.has_epigraph and self.stage_of[j] == 0 and j not in self.trailing and j not in uvals:
                continue
            if j in uvals:
                const += c * uvals[j]
            elif j in candidates:
                choices.append([({k: c * v for k, v in e.items()}, c * e0) for e, e0 in candidates[j]])
            else:
                k = kept[j] if j in kept else path[j]
                base[k] = base.get(k, Fraction(0)) + c

        for combo in itertools.product(*choices):
            terms = dict(base)
            total = const
            for extra_terms, extra_const in combo:
                for k, v in extra_terms.items():
                    terms[k] = terms.get(k, Fraction(0)) + v
                total += extra_const
            if not self.has_epigraph:
                for k, v in terms.items():
                    self.out.add_objective(k, v)
                self.out.add_offset(total)
                return
            self.epigraph_exprs.append(((terms, total), tag))

    def _eliminate(self, w: int, rows: List[_LeafRow]):
        """
        Candidate expressions for a trailing copy's optimal value plus rows
        keeping it within bounds, or None outside the separable pattern.
        """
        dom = self.q.domains[w]
        lb, ub = Fraction(dom.lower), Fraction(dom.upper)
        c = self.min_cost.get(w, Fraction(0))
        if any(len(r.trailing) > 1 or r.sense is not RowSense.LE for r in rows):
            return None
        signs = {r.trailing[w] > 0 for r in rows}
        if len(signs) > 1:
            return None
        down = (not next(iter(signs))) if signs else c >= 0
        if (down and c < 0) or (not down and c > 0):
            return None
        residuals: List[Tuple[Expr, Fraction, Fraction]] = []
        extra: List[Tuple[Dict[int, Fraction], Fraction]] = []
        for r in rows:
            a = r.trailing[w]
            _, high = self.out.expr_range((r.terms, Fraction(0)))
            if high + max(a * lb, a * ub) <= r.rhs:
                continue
            expr: Expr = ({k: -v / a for k, v in r.terms.items()}, r.rhs / a)
            lo, hi = self.out.expr_range(expr)
            if down and hi > ub:
                extra.append((dict(expr[0]), ub - expr[1]))
            if not down and lo < lb:
                extra.append(({k: -v for k, v in expr[0].items()}, expr[1] - lb))
            residuals.append((expr, lo, hi))
        if down:
            need_bound = not any(lo >= lb for _, lo, _ in residuals)
        else:
            need_bound = not any(hi <= ub for _, _, hi in residuals)
        cands = [expr for expr, _, _ in residuals]
        if need_bound:
            cands.append(({}, lb if down else ub))
        return cands, extra


def flatten(instance: QipInstance, cap: int = DEFAULT_SCENARIO_CAP) -> MipInstance:
    """
    Deterministic equivalent of ``instance``.

    Existential integer variables are copied once per history prefix of their
    stage, in preorder of the scenario tree. Existential rows instantiate once
    per leaf with the leaf's universal values substituted; identical rows are
    emitted once. A trailing continuous copy whose optimal value is a max (or
    min) of affine residuals is eliminated into the epigraph rows.
    """
    tree = enumerate_scenarios(instance, cap)
    mip = _Flattener(instance, tree).run()
    logger.debug("flatten %s: %d leaves, %d variables, %d rows",
                 instance.name, tree.num_leaves, mip.num_vars, len(mip.rows))
    return mip
