"""
Shared construction for families with a scenario pool of objective costs.

Purpose: Selection and assignment differ only in their item set and their
combinatorial rows; both reveal one of N cost scenarios per period. This
module builds the polyhedral-uncertainty model, the integer-scenario model
and the hand-built deterministic equivalent for any such family.
"""
from dataclasses import dataclass
from typing import Callable, Dict, List, Sequence, Tuple

from ..core import InstanceBuilder, QipInstance, Quantifier, VarKind
from ..dep import DEFAULT_SCENARIO_CAP, DepBuilder, MipInstance
from ..errors import ScenarioExplosionError

# (builder, variable indices per period 0..T along one line, name tag)
RowsFn = Callable[[object, List[List[int]], str], None]


@dataclass(frozen=True)
class PoolModel:
    name: str
    labels: Tuple[str, ...]
    first_costs: Tuple[int, ...]
    costs: Tuple[Tuple[Tuple[int, ...], ...], ...]
    rows: RowsFn

    @property
    def periods(self) -> int:
        return len(self.costs)

    @property
    def scenarios(self) -> int:
        return len(self.costs[0]) if self.costs else 1

    def big_m(self, t: int, k: int) -> int:
        return sum(self.costs[t - 1][k - 1])

    def period_bound(self, t: int) -> int:
        return max(sum(row) for row in self.costs[t - 1])

    def _items(self, b: InstanceBuilder, t: int) -> List[int]:
        return [b.add_var(f"x_{t}_{label}") for label in self.labels]

    def _link(self, b: InstanceBuilder, x: List[int], z: int, t: int, k: int, q: int) -> None:
        m = self.big_m(t, k)
        coeffs: Dict[int, int] = dict(zip(x, self.costs[t - 1][k - 1]))
        coeffs[z] = -1
        coeffs[q] = m
        b.le(coeffs, m, name=f"link_{t}_{k}")

    def qippu(self) -> QipInstance:
        b = InstanceBuilder(f"{self.name}-qippu")
        b.new_block(Quantifier.EXISTS)
        x = [self._items(b, 0)]
        q: Dict[int, List[int]] = {}
        for t in range(1, self.periods + 1):
            b.new_block(Quantifier.FORALL)
            q[t] = [b.add_var(f"q_{t}_{k}") for k in range(1, self.scenarios + 1)]
            b.new_block(Quantifier.EXISTS)
            x.append(self._items(b, t))
        b.new_block(Quantifier.EXISTS)
        z = {t: b.add_var(f"z_{t}", 0, self.period_bound(t), VarKind.TRAILING_CONTINUOUS)
             for t in range(1, self.periods + 1)}
        self._objective(b, x[0], z)
        self.rows(b, x, "")
        for t in range(1, self.periods + 1):
            for k in range(1, self.scenarios + 1):
                self._link(b, x[t], z[t], t, k, q[t][k - 1])
        for t in range(1, self.periods + 1):
            b.universal_eq({j: 1 for j in q[t]}, 1, name=f"scenario_{t}")
        return b.build()

    def qip(self) -> QipInstance:
        b = InstanceBuilder(f"{self.name}-qip")
        b.new_block(Quantifier.EXISTS)
        x = [self._items(b, 0)]
        q: Dict[int, List[int]] = {}
        pick: Dict[int, int] = {}
        for t in range(1, self.periods + 1):
            b.new_block(Quantifier.FORALL)
            pick[t] = b.add_var(f"l_{t}", 1, self.scenarios)
            b.new_block(Quantifier.EXISTS)
            q[t] = [b.add_var(f"q_{t}_{k}") for k in range(1, self.scenarios + 1)]
            x.append(self._items(b, t))
        b.new_block(Quantifier.EXISTS)
        z = {t: b.add_var(f"z_{t}", 0, self.period_bound(t), VarKind.TRAILING_CONTINUOUS)
             for t in range(1, self.periods + 1)}
        self._objective(b, x[0], z)
        self.rows(b, x, "")
        for t in range(1, self.periods + 1):
            for k in range(1, self.scenarios + 1):
                self._link(b, x[t], z[t], t, k, q[t][k - 1])
        for t in range(1, self.periods + 1):
            b.eq({j: 1 for j in q[t]}, 1, name=f"pick_{t}")
            index = {j: k for k, j in enumerate(q[t], start=1)}
            index[pick[t]] = -1
            b.eq(index, 0, name=f"index_{t}")
        return b.build()

    def _objective(self, b: InstanceBuilder, first: Sequence[int], z: Dict[int, int]) -> None:
        for j, c in zip(first, self.first_costs):
            b.add_objective(j, c)
        for j in z.values():
            b.add_objective(j, 1)

    def dep(self, cap: int = DEFAULT_SCENARIO_CAP) -> MipInstance:
        """
        Robust counterpart over all N^T scenario sequences: one item copy per
        sequence prefix, combinatorial rows and one epigraph row per sequence.
        """
        leaves = self.scenarios ** self.periods
        if leaves > cap:
            raise ScenarioExplosionError(cap, leaves)
        b = DepBuilder(f"{self.name}-dep")
        first = [b.add_var(f"x_0_{label}") for label in self.labels]
        for j, c in zip(first, self.first_costs):
            b.add_objective(j, c)
        exprs = []

        def walk(line: List[List[int]], history: Tuple[int, ...]) -> None:
            t = len(history)
            if t == self.periods:
                tag = "_".join(map(str, history))
                self.rows(b, line, f"@{tag}" if tag else "")
                terms = {}
                for s in range(1, t + 1):
                    for j, c in zip(line[s], self.costs[s - 1][history[s - 1] - 1]):
                        if c:
                            terms[j] = c
                exprs.append(((terms, 0), tag))
                return
            for k in range(1, self.scenarios + 1):
                h = history + (k,)
                suffix = "_".join(map(str, h))
                copies = [b.add_var(f"x_{t + 1}_{label}@{suffix}") for label in self.labels]
                walk(line + [copies], h)

        walk([first], ())
        b.add_epigraph(exprs)
        return b.build(leaves)
