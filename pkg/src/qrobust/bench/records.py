"""
Benchmark result records and their CSV form.

Purpose: One record per (instance, model, solver) run. The CSV header is
fixed; missing parameters and values are empty cells.
"""
import csv
import io
from dataclasses import dataclass, fields
from enum import Enum
from fractions import Fraction
from typing import Iterable, List, Optional, Union

from ..errors import ConfigError
from ..qipfile import format_number
from ..search import INFINITY

HEADER = ("instance_id", "family", "n", "p", "T", "N", "B", "U",
          "model", "solver", "status", "value", "time_ms", "nodes")
PARAM_COLUMNS = ("n", "p", "T", "N", "B", "U")


class RecordStatus(str, Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    TIME_LIMIT = "TimeLimit"
    BUILD_FAILED = "BuildFailed"
    ERROR = "Error"

    @property
    def solved(self) -> bool:
        return self in (RecordStatus.OPTIMAL, RecordStatus.INFEASIBLE)


@dataclass(frozen=True)
class BenchRecord:
    instance_id: str
    family: str
    model: str
    solver: str
    status: RecordStatus
    value: Optional[Union[Fraction, object]] = None
    time_ms: int = 0
    nodes: int = 0
    n: Optional[int] = None
    p: Optional[int] = None
    T: Optional[int] = None
    N: Optional[int] = None
    B: Optional[int] = None
    U: Optional[int] = None

    @property
    def sort_key(self):
        return (self.instance_id, self.model, self.solver)

    @property
    def solved(self) -> bool:
        return self.status.solved

    def label(self, by: str = "label") -> str:
        """Grouping key for profiles: ``model``, ``solver`` or ``label`` (model/solver)."""
        if by == "model":
            return self.model
        if by == "solver":
            return self.solver
        return f"{self.model}/{self.solver}"

    @classmethod
    def for_params(cls, params, **kwargs) -> "BenchRecord":
        """Record with the n, p, T, N, B, U cells taken from a params object."""
        names = {f.name for f in fields(params)}
        cells = {k: getattr(params, k) for k in PARAM_COLUMNS if k in names}
        return cls(instance_id=params.tag, **cells, **kwargs)


def _format_value(value) -> str:
    if value is None:
        return ""
    if value is INFINITY:
        return "inf"
    return format_number(value)


def _parse_value(text: str):
    if text == "":
        return None
    if text == "inf":
        return INFINITY
    return Fraction(text)


def _parse_int(text: str) -> Optional[int]:
    return None if text == "" else int(text)


def emit_csv(records: Iterable[BenchRecord]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(HEADER)
    for r in records:
        writer.writerow([
            r.instance_id, r.family,
            *("" if getattr(r, k) is None else getattr(r, k) for k in PARAM_COLUMNS),
            r.model, r.solver, r.status.value, _format_value(r.value), r.time_ms, r.nodes,
        ])
    return out.getvalue()


def parse_csv(text: str) -> List[BenchRecord]:
    reader = csv.reader(io.StringIO(text))
    rows = list(reader)
    if not rows or tuple(rows[0]) != HEADER:
        raise ConfigError(f"records CSV must start with header {','.join(HEADER)}")
    records = []
    for number, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(HEADER):
            raise ConfigError(f"records CSV line {number}: expected {len(HEADER)} cells, got {len(row)}")
        cell = dict(zip(HEADER, row))
        try:
            records.append(BenchRecord(
                instance_id=cell["instance_id"],
                family=cell["family"],
                model=cell["model"],
                solver=cell["solver"],
                status=RecordStatus(cell["status"]),
                value=_parse_value(cell["value"]),
                time_ms=int(cell["time_ms"]),
                nodes=int(cell["nodes"]),
                **{k: _parse_int(cell[k]) for k in PARAM_COLUMNS},
            ))
        except ValueError as e:
            raise ConfigError(f"records CSV line {number}: {e}") from e
    return records
