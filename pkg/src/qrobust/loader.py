"""
Benchmark grid and parameter file loading.

Purpose: Load YAML grid specifications and key=value parameter files and
validate them into plain dataclasses. Nothing is built or solved here.
"""
import itertools
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import yaml

from .dep import DEFAULT_SCENARIO_CAP
from .errors import ConfigError
from .problems import get_family

SOLVERS = ("search", "mip", "oracle")
DEFAULT_SOLVER = {"qippu": "search", "qip": "search", "dep": "mip"}
DEFAULT_TIME_LIMIT_MS = 60_000


@dataclass(frozen=True)
class GridRun:
    """One (instance, model, solver) cell of a grid."""
    family: str
    params: Any
    model: str
    solver: str

    @property
    def instance_id(self) -> str:
        return self.params.tag


@dataclass
class GridSpec:
    """Validated grid specification."""
    name: str
    time_limit_ms: int = DEFAULT_TIME_LIMIT_MS
    cap: int = DEFAULT_SCENARIO_CAP
    jobs: int = 1
    runs: List[GridRun] = field(default_factory=list)
    path: Optional[Path] = None


class GridLoader:
    """
    Load grid specifications.

    A grid file names a time limit, a scenario cap and a list of run groups.
    Each group crosses its parameter values, seeds, models and solvers:

        name: sel-small
        time_limit_ms: 5000
        runs:
          - family: sel
            params: {n: 4, p: 2, T: [1, 2], N: [2, 3]}
            seeds: [0, 9]
            models: [qippu, qip, dep]
    """

    def load_file(self, path: Union[str, Path]) -> GridSpec:
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"File not found: {path}")
        with open(path, encoding="utf-8") as f:
            spec = self.load_text(f.read(), source=str(path))
        spec.path = path
        return spec

    def load_text(self, text: str, source: str = "<grid>") -> GridSpec:
        try:
            data = yaml.safe_load(text)
        except yaml.YAMLError as e:
            raise ConfigError(f"YAML syntax error in {source}:\n{e}\n\n"
                              f"Hint: list values use [a, b] or one '- item' per line")
        if not isinstance(data, dict):
            raise ConfigError(f"{source}: grid must be a mapping with a 'runs' list")
        return self._validate_grid(data, source)

    def _validate_grid(self, data: Dict[str, Any], source: str) -> GridSpec:
        unknown = set(data) - {"name", "time_limit_ms", "cap", "jobs", "runs"}
        if unknown:
            raise ConfigError(f"{source}: unknown grid field(s) {', '.join(sorted(unknown))}")
        groups = data.get("runs")
        if not isinstance(groups, list) or not groups:
            raise ConfigError(f"{source}: grid missing required field: runs")
        spec = GridSpec(
            name=str(data.get("name", Path(source).stem)),
            time_limit_ms=self._positive(data, "time_limit_ms", DEFAULT_TIME_LIMIT_MS, source),
            cap=self._positive(data, "cap", DEFAULT_SCENARIO_CAP, source),
            jobs=self._positive(data, "jobs", 1, source),
        )
        for k, group in enumerate(groups):
            spec.runs.extend(self._expand_group(group, f"{source}: runs[{k}]"))
        return spec

    @staticmethod
    def _positive(data: Dict[str, Any], key: str, default: int, source: str) -> int:
        value = data.get(key, default)
        if not isinstance(value, int) or isinstance(value, bool) or value <= 0:
            raise ConfigError(f"{source}: {key} must be a positive integer, got {value!r}")
        return value

    def _expand_group(self, group: Any, where: str) -> List[GridRun]:
        if not isinstance(group, dict) or "family" not in group:
            raise ConfigError(f"{where} missing required field: family")
        family = get_family(str(group["family"]))
        models = self._names(group.get("models", list(family.models)), where, "models")
        for model in models:
            if model not in family.models:
                raise ConfigError(f"{where}: {family.title} has no {model} model")
        solvers = group.get("solvers")
        if solvers is not None:
            solvers = self._names(solvers, where, "solvers")
            for solver in solvers:
                if solver not in SOLVERS:
                    raise ConfigError(f"{where}: unknown solver '{solver}'; choose from {', '.join(SOLVERS)}")
        seeds = self._seeds(group.get("seeds", [0, 0]), where)

        params_field = group.get("params", {})
        param_groups = params_field if isinstance(params_field, list) else [params_field]
        runs: List[GridRun] = []
        for values in param_groups:
            if not isinstance(values, dict):
                raise ConfigError(f"{where}: params must be a mapping or a list of mappings")
            for combo in self._cross(values):
                for seed in seeds:
                    params = family.params({**combo, "seed": seed})
                    for model in models:
                        for solver in solvers or [DEFAULT_SOLVER[model]]:
                            runs.append(GridRun(family.name, params, model, solver))
        return runs

    @staticmethod
    def _names(value: Any, where: str, key: str) -> List[str]:
        if isinstance(value, str):
            value = [value]
        if not isinstance(value, list) or not value:
            raise ConfigError(f"{where}: {key} must be a non-empty list")
        return [str(v) for v in value]

    @staticmethod
    def _seeds(value: Any, where: str) -> List[int]:
        """``[first, last]`` inclusive, a single seed, or a string ``"first..last"``."""
        if isinstance(value, int) and not isinstance(value, bool):
            return [value]
        if isinstance(value, str) and ".." in value:
            first, _, last = value.partition("..")
            value = [first, last]
        try:
            first, last = (int(v) for v in value)
        except (TypeError, ValueError):
            raise ConfigError(f"{where}: seeds must be [first, last] or 'first..last', got {value!r}") from None
        if first > last:
            raise ConfigError(f"{where}: empty seed range {first}..{last}")
        return list(range(first, last + 1))

    @staticmethod
    def _cross(values: Dict[str, Any]) -> List[Dict[str, Any]]:
        keys = list(values)
        axes = [v if isinstance(v, list) else [v] for v in values.values()]
        return [dict(zip(keys, combo)) for combo in itertools.product(*axes)]


def load_params_file(path: Union[str, Path]) -> Dict[str, int]:
    """Read ``key=value`` lines; blank lines and ``#`` comments are skipped."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"File not found: {path}")
    params: Dict[str, int] = {}
    for number, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ConfigError(f"{path}:{number}: expected key=value, got {raw.strip()!r}")
        try:
            params[key] = int(value)
        except ValueError:
            raise ConfigError(f"{path}:{number}: value of {key} must be an integer, got {value!r}") from None
    return params
