"""
Grid runner.

Purpose: Build every grid instance, solve it with the requested solver under
the grid's time limit and turn each outcome into a BenchRecord. Failures
become records, never exceptions.
"""
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from typing import List, Optional

from ..core import QipInstance
from ..dep import DEFAULT_SCENARIO_CAP, MipInstance, flatten
from ..errors import QrobustError, ScenarioExplosionError, TreeTooLargeError
from ..loader import GridRun, GridSpec
from ..mip import solve_mip
from ..problems import get_family
from ..search import SearchConfig, SolveStatus, oracle_solve, solve
from .records import BenchRecord, RecordStatus

logger = logging.getLogger(__name__)

_STATUS = {
    SolveStatus.OPTIMAL: RecordStatus.OPTIMAL,
    SolveStatus.INFEASIBLE: RecordStatus.INFEASIBLE,
    SolveStatus.TIME_LIMIT: RecordStatus.TIME_LIMIT,
}


def _solve(instance, solver: str, config: SearchConfig, cap: int):
    if solver == "mip":
        if isinstance(instance, QipInstance) and instance.universal_block_indices:
            instance = flatten(instance, cap)
        return solve_mip(instance, config)
    if isinstance(instance, MipInstance):
        instance = instance.as_qip()
    if solver == "oracle":
        return oracle_solve(instance)
    return solve(instance, config)


def run_one(run: GridRun, time_limit_ms: int, cap: int = DEFAULT_SCENARIO_CAP) -> BenchRecord:
    """
    Build and solve one grid cell.

    ``time_ms`` covers building and solving, so the deterministic-equivalent
    pipeline is charged for its expansion. Scenario-cap overruns give
    BuildFailed; an oracle tree past its guard is recorded as TimeLimit.
    """
    config = SearchConfig(time_limit_ms=time_limit_ms)
    start = time.perf_counter()

    def record(status: RecordStatus, value=None, nodes: int = 0) -> BenchRecord:
        elapsed = int((time.perf_counter() - start) * 1000)
        return BenchRecord.for_params(run.params, family=run.family, model=run.model, solver=run.solver,
                                      status=status, value=value, time_ms=elapsed, nodes=nodes)

    try:
        instance = get_family(run.family).build(run.model, run.params, cap=cap)
        result = _solve(instance, run.solver, config, cap)
    except ScenarioExplosionError as e:
        logger.info("%s %s/%s: build failed: %s", run.instance_id, run.model, run.solver, e)
        return record(RecordStatus.BUILD_FAILED)
    except TreeTooLargeError as e:
        logger.info("%s %s/%s: %s", run.instance_id, run.model, run.solver, e)
        return record(RecordStatus.TIME_LIMIT)
    except QrobustError as e:
        logger.error("%s %s/%s: %s", run.instance_id, run.model, run.solver, e)
        return record(RecordStatus.ERROR)
    except Exception:
        logger.exception("%s %s/%s: unexpected failure", run.instance_id, run.model, run.solver)
        return record(RecordStatus.ERROR)
    rec = record(_STATUS[result.status], result.value, result.nodes)
    logger.info("%s %s/%s: %s value=%s %dms", run.instance_id, run.model, run.solver,
                rec.status.value, rec.value, rec.time_ms)
    return rec


def _run_packed(args) -> BenchRecord:
    return run_one(*args)


def run_grid(spec: GridSpec, jobs: Optional[int] = None) -> List[BenchRecord]:
    """
    Run every cell of ``spec``; records come back sorted by
    (instance_id, model, solver) whatever the worker count.

    ``jobs`` overrides the grid's own setting. With one job runs are
    sequential in this process, which keeps timings free of sibling noise.
    """
    jobs = spec.jobs if jobs is None else jobs
    work = [(run, spec.time_limit_ms, spec.cap) for run in spec.runs]
    logger.info("grid %s: %d runs on %d worker(s)", spec.name, len(work), jobs)
    if jobs <= 1:
        records = [_run_packed(w) for w in work]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(_run_packed, work))
    return sorted(records, key=lambda r: r.sort_key)
