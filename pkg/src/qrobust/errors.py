"""
Exception hierarchy for qrobust.

Purpose: One base class carrying a process exit code so the CLI can map
failures without knowing where they came from.
Exit codes: 0 ok, 2 usage/input, 3 resource limit, 4 internal inconsistency.
"""
from typing import Any, List, Optional


EXIT_OK = 0
EXIT_USAGE = 2
EXIT_LIMIT = 3
EXIT_INTERNAL = 4


class QrobustError(Exception):
    """Base error. Subclasses set ``exit_code``."""
    exit_code: int = EXIT_INTERNAL


class ConfigError(QrobustError):
    """Invalid configuration, parameters or grid specification."""
    exit_code = EXIT_USAGE


class QipSyntaxError(QrobustError):
    """Malformed `.qlp` text."""
    exit_code = EXIT_USAGE

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class QipSemanticError(QrobustError):
    """Well-formed `.qlp` text describing an invalid instance."""
    exit_code = EXIT_USAGE

    def __init__(self, findings: List[Any]):
        self.findings = list(findings)
        lines = [f"{f.code.value}: {f.message}" for f in self.findings]
        super().__init__("invalid instance:\n  " + "\n  ".join(lines))

    @property
    def codes(self) -> List[Any]:
        return [f.code for f in self.findings]


class ModelContractError(QrobustError):
    """The instance breaks an assumption the solvers rely on."""
    exit_code = EXIT_INTERNAL


class NonSeparableError(ModelContractError):
    """Trailing continuous variables outside the supported separable pattern."""


class TreeTooLargeError(QrobustError):
    """Game tree exceeds the exhaustive oracle's guard."""
    exit_code = EXIT_LIMIT

    def __init__(self, leaves: int, limit: int):
        super().__init__(f"game tree has {leaves} leaves, oracle limit is {limit}")
        self.leaves = leaves
        self.limit = limit


class ScenarioExplosionError(QrobustError):
    """Scenario tree exceeds the configured leaf cap."""
    exit_code = EXIT_LIMIT

    def __init__(self, cap: int, seen: Optional[int] = None):
        detail = f" (reached {seen})" if seen is not None else ""
        super().__init__(f"scenario tree exceeds cap of {cap} leaves{detail}")
        self.cap = cap
        self.seen = seen


class MismatchedInstanceSetsError(QrobustError):
    """Profile inputs do not cover the same instances for every solver."""
    exit_code = EXIT_USAGE


class OracleMismatchError(QrobustError):
    """Two solvers disagree on a value they must share."""
    exit_code = EXIT_INTERNAL
