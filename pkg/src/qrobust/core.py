"""
Quantified integer program data model.

Purpose: Immutable instance types, structural validation and objective
bounds for QIPs with an optional universal (uncertainty) constraint system.
No solving here; search, dep and mip consume these types.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from enum import Enum
from fractions import Fraction
from functools import cached_property
from typing import Dict, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

from .errors import ConfigError

Number = Union[int, Fraction]
Terms = Tuple[Tuple[int, Fraction], ...]


class Quantifier(str, Enum):
    EXISTS = "E"
    FORALL = "A"


class VarKind(str, Enum):
    INTEGER = "integer"
    TRAILING_CONTINUOUS = "continuous"


class RowSense(str, Enum):
    LE = "<="
    EQ = "="


class RowSide(str, Enum):
    EXISTENTIAL = "existential"
    UNIVERSAL = "universal"


class ObjectiveSense(str, Enum):
    MINIMIZE = "minimize"
    MAXIMIZE = "maximize"


def make_terms(coeffs: Union[Mapping[int, Number], Iterable[Tuple[int, Number]]]) -> Terms:
    """Merge duplicate indices, drop zeros, sort by variable index."""
    items = coeffs.items() if isinstance(coeffs, Mapping) else coeffs
    merged: Dict[int, Fraction] = {}
    for index, coeff in items:
        merged[index] = merged.get(index, Fraction(0)) + Fraction(coeff)
    return tuple((j, c) for j, c in sorted(merged.items()) if c != 0)


@dataclass(frozen=True)
class VarDomain:
    """Bounded integer domain, or a continuous variable of the closing block."""
    lower: int
    upper: int
    kind: VarKind = VarKind.INTEGER

    @property
    def is_integer(self) -> bool:
        return self.kind is VarKind.INTEGER

    @property
    def size(self) -> int:
        return max(0, self.upper - self.lower + 1)

    def values(self) -> range:
        return range(self.lower, self.upper + 1)

    @classmethod
    def binary(cls) -> "VarDomain":
        return cls(0, 1)


@dataclass(frozen=True)
class QuantBlock:
    quantifier: Quantifier
    var_indices: Tuple[int, ...]

    @property
    def is_universal(self) -> bool:
        return self.quantifier is Quantifier.FORALL


@dataclass(frozen=True)
class LinConstraint:
    """
    One linear row ``sum(coeff * x) <sense> rhs``.

    Only LE and EQ are stored; ``ge`` negates into LE.
    """
    terms: Terms
    sense: RowSense
    rhs: Fraction
    side: RowSide = RowSide.EXISTENTIAL
    name: str = ""

    @classmethod
    def build(cls, coeffs, sense: RowSense, rhs: Number,
              side: RowSide = RowSide.EXISTENTIAL, name: str = "") -> "LinConstraint":
        return cls(make_terms(coeffs), sense, Fraction(rhs), side, name)

    @classmethod
    def le(cls, coeffs, rhs: Number, **kwargs) -> "LinConstraint":
        return cls.build(coeffs, RowSense.LE, rhs, **kwargs)

    @classmethod
    def eq(cls, coeffs, rhs: Number, **kwargs) -> "LinConstraint":
        return cls.build(coeffs, RowSense.EQ, rhs, **kwargs)

    @classmethod
    def ge(cls, coeffs, rhs: Number, **kwargs) -> "LinConstraint":
        items = coeffs.items() if isinstance(coeffs, Mapping) else coeffs
        return cls.build([(j, -Fraction(c)) for j, c in items], RowSense.LE, -Fraction(rhs), **kwargs)

    @property
    def coeffs(self) -> Dict[int, Fraction]:
        return dict(self.terms)

    @property
    def var_indices(self) -> Tuple[int, ...]:
        return tuple(j for j, _ in self.terms)

    def activity(self, assignment: Mapping[int, Number]) -> Fraction:
        return sum((c * assignment[j] for j, c in self.terms), Fraction(0))

    def satisfied(self, assignment: Mapping[int, Number]) -> bool:
        lhs = self.activity(assignment)
        return lhs == self.rhs if self.sense is RowSense.EQ else lhs <= self.rhs


@dataclass(frozen=True)
class QipInstance:
    """
    A quantified integer linear program.

    The objective is stated in model sense; solvers minimise ``min_objective``
    and report values back through ``to_model_value``.
    ``immediate_violation`` is declared by whoever built the instance: every
    universal block assignment that cannot be completed already breaks a
    universal row once the block is set.
    """
    name: str
    var_names: Tuple[str, ...]
    domains: Tuple[VarDomain, ...]
    blocks: Tuple[QuantBlock, ...]
    objective: Terms
    existential_rows: Tuple[LinConstraint, ...]
    universal_rows: Tuple[LinConstraint, ...] = ()
    sense: ObjectiveSense = ObjectiveSense.MINIMIZE
    offset: Fraction = Fraction(0)
    immediate_violation: bool = field(default=True, compare=False)

    @property
    def num_vars(self) -> int:
        return len(self.domains)

    @cached_property
    def block_of(self) -> Tuple[int, ...]:
        owner = [-1] * self.num_vars
        for b, block in enumerate(self.blocks):
            for j in block.var_indices:
                if 0 <= j < self.num_vars and owner[j] < 0:
                    owner[j] = b
        return tuple(owner)

    def is_universal(self, j: int) -> bool:
        b = self.block_of[j]
        return b >= 0 and self.blocks[b].is_universal

    @property
    def universal_vars(self) -> List[int]:
        return [j for j in range(self.num_vars) if self.is_universal(j)]

    @property
    def universal_block_indices(self) -> List[int]:
        return [b for b, block in enumerate(self.blocks) if block.is_universal]

    @property
    def is_maximization(self) -> bool:
        return self.sense is ObjectiveSense.MAXIMIZE

    @cached_property
    def min_objective(self) -> Terms:
        if self.is_maximization:
            return tuple((j, -c) for j, c in self.objective)
        return self.objective

    @property
    def min_offset(self) -> Fraction:
        return -self.offset if self.is_maximization else self.offset

    def to_model_value(self, min_value: Fraction) -> Fraction:
        return -min_value if self.is_maximization else min_value

    def evaluate(self, assignment: Mapping[int, Number]) -> Fraction:
        """Objective value (model sense) of a complete assignment."""
        return self.offset + sum((c * assignment[j] for j, c in self.objective), Fraction(0))

    def index_of(self, name: str) -> int:
        return self.var_names.index(name)


class InstanceBuilder:
    """
    Incremental construction of a QipInstance, block by block.

    Variables are numbered in creation order, so block order equals index
    order for everything the generators emit.
    """

    def __init__(self, name: str, sense: ObjectiveSense = ObjectiveSense.MINIMIZE,
                 immediate_violation: bool = True):
        self.name = name
        self.sense = sense
        self.immediate_violation = immediate_violation
        self._names: List[str] = []
        self._domains: List[VarDomain] = []
        self._blocks: List[Tuple[Quantifier, List[int]]] = []
        self._objective: Dict[int, Fraction] = {}
        self._offset = Fraction(0)
        self._rows: List[LinConstraint] = []
        self._universal_rows: List[LinConstraint] = []

    def new_block(self, quantifier: Quantifier) -> None:
        self._blocks.append((quantifier, []))

    def add_var(self, name: str, lower: int = 0, upper: int = 1,
                kind: VarKind = VarKind.INTEGER) -> int:
        if not self._blocks:
            raise ConfigError("open a block before adding variables")
        index = len(self._domains)
        self._names.append(name)
        self._domains.append(VarDomain(lower, upper, kind))
        self._blocks[-1][1].append(index)
        return index

    def add_objective(self, var: int, coeff: Number) -> None:
        self._objective[var] = self._objective.get(var, Fraction(0)) + Fraction(coeff)

    def add_offset(self, value: Number) -> None:
        self._offset += Fraction(value)

    def add_row(self, row: LinConstraint) -> None:
        if row.side is RowSide.UNIVERSAL:
            self._universal_rows.append(row)
        else:
            self._rows.append(row)

    def le(self, coeffs, rhs: Number, name: str = "") -> None:
        self.add_row(LinConstraint.le(coeffs, rhs, name=name))

    def eq(self, coeffs, rhs: Number, name: str = "") -> None:
        self.add_row(LinConstraint.eq(coeffs, rhs, name=name))

    def ge(self, coeffs, rhs: Number, name: str = "") -> None:
        self.add_row(LinConstraint.ge(coeffs, rhs, name=name))

    def universal_le(self, coeffs, rhs: Number, name: str = "") -> None:
        self.add_row(LinConstraint.le(coeffs, rhs, side=RowSide.UNIVERSAL, name=name))

    def universal_eq(self, coeffs, rhs: Number, name: str = "") -> None:
        self.add_row(LinConstraint.eq(coeffs, rhs, side=RowSide.UNIVERSAL, name=name))

    def build(self) -> QipInstance:
        return QipInstance(
            name=self.name,
            var_names=tuple(self._names),
            domains=tuple(self._domains),
            blocks=tuple(QuantBlock(q, tuple(v)) for q, v in self._blocks if v),
            objective=make_terms(self._objective),
            existential_rows=tuple(self._rows),
            universal_rows=tuple(self._universal_rows),
            sense=self.sense,
            offset=self._offset,
            immediate_violation=self.immediate_violation,
        )


# Validation

class FindingCode(str, Enum):
    NO_BLOCKS = "NoBlocks"
    FIRST_BLOCK_NOT_EXISTENTIAL = "FirstBlockNotExistential"
    LAST_BLOCK_NOT_EXISTENTIAL = "LastBlockNotExistential"
    EMPTY_BLOCK = "EmptyBlock"
    INDEX_OUT_OF_RANGE = "IndexOutOfRange"
    VARIABLE_NOT_IN_BLOCK = "VariableNotInBlock"
    VARIABLE_IN_SEVERAL_BLOCKS = "VariableInSeveralBlocks"
    BOUNDS_CROSSED = "BoundsCrossed"
    TRAILING_CONTINUOUS_MISPLACED = "TrailingContinuousMisplaced"
    ROW_SIDE_MISMATCH = "RowSideMismatch"
    UNIVERSAL_ROW_TOUCHES_EXISTENTIAL = "UniversalRowTouchesExistential"
    UNIVERSAL_SYSTEM_EMPTY = "UniversalSystemEmpty"
    NAME_COUNT_MISMATCH = "NameCountMismatch"
    DUPLICATE_NAME = "DuplicateName"
    IMMEDIATE_VIOLATION_MISSING = "ImmediateViolationMissing"
    UNBOUNDED_VARIABLE = "UnboundedVariable"


@dataclass(frozen=True)
class Finding:
    code: FindingCode
    index: Optional[int]
    message: str


@dataclass(frozen=True)
class ValidationReport:
    findings: Tuple[Finding, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.findings

    @property
    def codes(self) -> List[FindingCode]:
        return [f.code for f in self.findings]

    def __iter__(self) -> Iterator[Finding]:
        return iter(self.findings)

    def __len__(self) -> int:
        return len(self.findings)


def validate(instance: QipInstance) -> ValidationReport:
    """
    Check the structural conditions of a QIP.

    Returns a report listing every violated condition with the offending
    index (variable, block or row); an empty report means well-formed.
    """
    findings: List[Finding] = []
    n = instance.num_vars

    def add(code: FindingCode, index: Optional[int], message: str) -> None:
        findings.append(Finding(code, index, message))

    if len(instance.var_names) != n:
        add(FindingCode.NAME_COUNT_MISMATCH, None,
            f"{len(instance.var_names)} names for {n} variables")
    seen_names: Dict[str, int] = {}
    for j, name in enumerate(instance.var_names):
        if name in seen_names:
            add(FindingCode.DUPLICATE_NAME, j, f"variable name {name!r} repeats index {seen_names[name]}")
        seen_names.setdefault(name, j)

    for j, dom in enumerate(instance.domains):
        if dom.lower > dom.upper:
            add(FindingCode.BOUNDS_CROSSED, j, f"lower {dom.lower} > upper {dom.upper}")

    if not instance.blocks:
        add(FindingCode.NO_BLOCKS, None, "instance has no quantifier blocks")
    else:
        if instance.blocks[0].quantifier is not Quantifier.EXISTS:
            add(FindingCode.FIRST_BLOCK_NOT_EXISTENTIAL, 0, "first block must be existential")
        last = len(instance.blocks) - 1
        if instance.blocks[last].quantifier is not Quantifier.EXISTS:
            add(FindingCode.LAST_BLOCK_NOT_EXISTENTIAL, last, "last block must be existential")

    owners: Dict[int, int] = {}
    for b, block in enumerate(instance.blocks):
        if not block.var_indices:
            add(FindingCode.EMPTY_BLOCK, b, "block has no variables")
        for j in block.var_indices:
            if not 0 <= j < n:
                add(FindingCode.INDEX_OUT_OF_RANGE, j, f"block {b} names unknown variable {j}")
            elif j in owners:
                add(FindingCode.VARIABLE_IN_SEVERAL_BLOCKS, j, f"variable {j} in blocks {owners[j]} and {b}")
            else:
                owners[j] = b
    for j in range(n):
        if j not in owners:
            add(FindingCode.VARIABLE_NOT_IN_BLOCK, j, f"variable {j} belongs to no block")

    last_block = len(instance.blocks) - 1
    for j, dom in enumerate(instance.domains):
        if dom.kind is VarKind.TRAILING_CONTINUOUS and owners.get(j) != last_block:
            add(FindingCode.TRAILING_CONTINUOUS_MISPLACED, j,
                "continuous variables are only allowed in the closing existential block")

    for j, _ in instance.objective:
        if not 0 <= j < n:
            add(FindingCode.INDEX_OUT_OF_RANGE, j, "objective names unknown variable")

    touches_existential = False
    for r, row in enumerate(instance.existential_rows):
        if row.side is not RowSide.EXISTENTIAL:
            add(FindingCode.ROW_SIDE_MISMATCH, r, f"row {row.name or r} filed as existential")
        for j in row.var_indices:
            if not 0 <= j < n:
                add(FindingCode.INDEX_OUT_OF_RANGE, j, f"row {row.name or r} names unknown variable")
    for r, row in enumerate(instance.universal_rows):
        if row.side is not RowSide.UNIVERSAL:
            add(FindingCode.ROW_SIDE_MISMATCH, r, f"row {row.name or r} filed as universal")
        for j in row.var_indices:
            if not 0 <= j < n:
                add(FindingCode.INDEX_OUT_OF_RANGE, j, f"universal row {row.name or r} names unknown variable")
            elif owners.get(j) is None or not instance.blocks[owners[j]].is_universal:
                touches_existential = True
                add(FindingCode.UNIVERSAL_ROW_TOUCHES_EXISTENTIAL, r,
                    f"universal row {row.name or r} has a nonzero coefficient on existential variable "
                    f"{instance.var_names[j] if j < len(instance.var_names) else j}")

    structural_ok = not any(
        f.code in (FindingCode.INDEX_OUT_OF_RANGE, FindingCode.BOUNDS_CROSSED,
                   FindingCode.TRAILING_CONTINUOUS_MISPLACED) for f in findings)
    if instance.universal_rows and structural_ok and not touches_existential:
        if not universal_system_feasible(instance):
            add(FindingCode.UNIVERSAL_SYSTEM_EMPTY, None, "no fixation of universal variables satisfies the universal rows")

    return ValidationReport(tuple(findings))


def universal_system_feasible(instance: QipInstance) -> bool:
    """
    Whether some integer fixation of the universal variables satisfies every
    universal row. Propagate, then split the first free domain in halves.
    """
    from .relax import BoundsState, Propagator

    rows = instance.universal_rows
    involved = sorted({j for row in rows for j in row.var_indices})
    propagator = Propagator(rows, instance.num_vars)
    root = BoundsState.from_domains(instance.domains)
    propagator.seed_all(root)
    stack = [root]
    while stack:
        state = stack.pop()
        if not propagator.run(state):
            continue
        free = next((j for j in involved if not state.is_fixed(j)), None)
        if free is None:
            point = {j: state.lower[j] for j in involved}
            if all(row.satisfied(point) for row in rows):
                return True
            continue
        lower, upper = state.lower[free], state.upper[free]
        mid = (lower + upper) // 2
        for lo, hi in ((mid + 1, upper), (lower, mid)):
            child = state.copy()
            if propagator.restrict(child, free, lo, hi):
                stack.append(child)
    return False


def objective_bounds(instance: QipInstance) -> Tuple[Fraction, Fraction]:
    """Interval (L, U) of the model-sense objective over the variable box."""
    low = high = Fraction(instance.offset)
    for j, c in instance.objective:
        dom = instance.domains[j]
        a, b = c * dom.lower, c * dom.upper
        low += min(a, b)
        high += max(a, b)
    return low, high


def fix_variables(instance: QipInstance, assignment: Mapping[int, int]) -> QipInstance:
    """Copy of ``instance`` with the given variables' domains collapsed to their values."""
    domains = list(instance.domains)
    for j, value in assignment.items():
        dom = domains[j]
        if not dom.lower <= value <= dom.upper:
            raise ConfigError(f"value {value} outside domain of {instance.var_names[j]}")
        domains[j] = VarDomain(value, value, dom.kind)
    return replace(instance, domains=tuple(domains))


MAX_EXHAUSTIVE_UNIVERSALS = 12


def check_immediate_violation(instance: QipInstance) -> List[Finding]:
    """
    Exhaustive debug check of the declared immediate-violation property.

    Walks every universal line block by block. A block assignment that breaks
    no fully assigned universal row but has no completion satisfying the whole
    universal system is reported. Only for small universal parts.
    """
    universals = instance.universal_vars
    if len(universals) > MAX_EXHAUSTIVE_UNIVERSALS:
        raise ConfigError(
            f"exhaustive check limited to {MAX_EXHAUSTIVE_UNIVERSALS} universal variables, got {len(universals)}")
    ublocks = [instance.blocks[b].var_indices for b in instance.universal_block_indices]
    rows = instance.universal_rows
    findings: List[Finding] = []

    def box(block: Sequence[int]) -> Iterator[Tuple[int, ...]]:
        return itertools.product(*(instance.domains[j].values() for j in block))

    def locally_legal(assigned: Dict[int, int]) -> bool:
        return all(row.satisfied(assigned) for row in rows
                   if all(j in assigned for j in row.var_indices))

    def completable(k: int, assigned: Dict[int, int]) -> bool:
        if k == len(ublocks):
            return all(row.satisfied(assigned) for row in rows)
        for move in box(ublocks[k]):
            trial = {**assigned, **dict(zip(ublocks[k], move))}
            if completable(k + 1, trial):
                return True
        return False

    def walk(k: int, assigned: Dict[int, int]) -> None:
        if k == len(ublocks):
            return
        for move in box(ublocks[k]):
            trial = {**assigned, **dict(zip(ublocks[k], move))}
            if not locally_legal(trial):
                continue
            if not completable(k + 1, trial):
                findings.append(Finding(
                    FindingCode.IMMEDIATE_VIOLATION_MISSING, instance.universal_block_indices[k],
                    f"move {move} is locally legal but cannot be completed"))
                continue
            walk(k + 1, trial)

    if not completable(0, {}):
        findings.append(Finding(FindingCode.UNIVERSAL_SYSTEM_EMPTY, None,
                                "no fixation of universal variables satisfies the universal rows"))
    else:
        walk(0, {})
    return findings
