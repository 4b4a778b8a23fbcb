"""
Instance families.

Purpose: Registry from family names (sel, ass, lot, kna) to their parameter
types and model builders. Every builder is deterministic in its parameters.
"""
from dataclasses import dataclass, fields
from typing import Callable, Dict, Mapping, Tuple, Union

from ..core import QipInstance
from ..dep import DEFAULT_SCENARIO_CAP, MipInstance
from ..errors import ConfigError
from .assignment import (
    AssignmentData,
    AssignmentParams,
    build_assignment_dep,
    build_assignment_qip,
    build_assignment_qippu,
)
from .knapsack import KnapsackData, KnapsackParams, build_knapsack_dep, build_knapsack_qippu
from .lotsizing import LotSizingData, LotSizingParams, build_lotsizing_dep, build_lotsizing_qip, inventory
from .rng import SplitMix64
from .selection import (
    SelectionData,
    SelectionParams,
    build_selection_dep,
    build_selection_qip,
    build_selection_qippu,
)

MODELS = ("qippu", "qip", "dep")
Model = Union[QipInstance, MipInstance]


@dataclass(frozen=True)
class Family:
    name: str
    title: str
    params_type: type
    builders: Mapping[str, Callable]

    @property
    def models(self) -> Tuple[str, ...]:
        return tuple(m for m in MODELS if m in self.builders)

    @property
    def param_names(self) -> Tuple[str, ...]:
        return tuple(f.name for f in fields(self.params_type))

    def params(self, values: Mapping[str, object]):
        """Params object from a name -> value mapping; unknown names are rejected."""
        unknown = sorted(set(values) - set(self.param_names))
        if unknown:
            raise ConfigError(f"{self.title} takes no parameter(s) {', '.join(unknown)}; "
                              f"expected {', '.join(self.param_names)}")
        try:
            return self.params_type(**{k: int(v) for k, v in values.items() if v is not None})
        except TypeError as e:
            raise ConfigError(f"missing {self.title} parameters: {e}") from e
        except ValueError as e:
            raise ConfigError(f"{self.title} parameters must be integers: {e}") from e

    def build(self, model: str, params, cap: int = DEFAULT_SCENARIO_CAP) -> Model:
        if model not in self.builders:
            raise ConfigError(f"{self.title} has no {model} model; available: {', '.join(self.models)}")
        if model == "dep":
            return self.builders[model](params, cap=cap)
        return self.builders[model](params)


FAMILIES: Dict[str, Family] = {
    "sel": Family("sel", "selection", SelectionParams, {
        "qippu": build_selection_qippu,
        "qip": build_selection_qip,
        "dep": build_selection_dep,
    }),
    "ass": Family("ass", "assignment", AssignmentParams, {
        "qippu": build_assignment_qippu,
        "qip": build_assignment_qip,
        "dep": build_assignment_dep,
    }),
    "lot": Family("lot", "lot-sizing", LotSizingParams, {
        "qip": build_lotsizing_qip,
        "dep": build_lotsizing_dep,
    }),
    "kna": Family("kna", "knapsack", KnapsackParams, {
        "qippu": build_knapsack_qippu,
        "dep": build_knapsack_dep,
    }),
}


def get_family(name: str) -> Family:
    try:
        return FAMILIES[name]
    except KeyError:
        raise ConfigError(f"unknown family '{name}'; choose from {', '.join(FAMILIES)}") from None


__all__ = [
    "AssignmentData",
    "AssignmentParams",
    "FAMILIES",
    "Family",
    "KnapsackData",
    "KnapsackParams",
    "LotSizingData",
    "LotSizingParams",
    "MODELS",
    "SelectionData",
    "SelectionParams",
    "SplitMix64",
    "build_assignment_dep",
    "build_assignment_qip",
    "build_assignment_qippu",
    "build_knapsack_dep",
    "build_knapsack_qippu",
    "build_lotsizing_dep",
    "build_lotsizing_qip",
    "build_selection_dep",
    "build_selection_qip",
    "build_selection_qippu",
    "get_family",
    "inventory",
]
