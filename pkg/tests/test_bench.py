from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qrobust.bench import (
    HEADER,
    BenchRecord,
    RecordStatus,
    emit_csv,
    emit_profile_csv,
    emit_svg,
    parse_csv,
    performance_profile,
    run_grid,
    run_one,
)
from qrobust.bench.profile import unit_times
from qrobust.errors import ConfigError, MismatchedInstanceSetsError
from qrobust.loader import GridLoader, GridRun
from qrobust.problems import KnapsackParams, LotSizingParams, SelectionParams
from qrobust.search import INFINITY


def _record(instance, model, time_ms, status=RecordStatus.OPTIMAL, solver="search"):
    return BenchRecord(instance_id=instance, family="sel", model=model, solver=solver,
                       status=status, value=Fraction(1), time_ms=time_ms)


def test_reference_profile():
    records = [_record("i1", "A", 2), _record("i2", "A", 4), _record("i1", "B", 4), _record("i2", "B", 2)]
    table = performance_profile(records, by="model", resolution_ms=1)
    assert table.labels == ("A", "B")
    assert table.p("A", 1) == table.p("B", 1) == 0.5
    assert table.p("A", 2) == table.p("B", 2) == 1.0
    assert list(table.taus) == [1.0, 1.5, 2.0]


def test_profile_csv_and_svg():
    records = [_record("i1", "A", 2), _record("i2", "A", 4), _record("i1", "B", 4), _record("i2", "B", 2)]
    table = performance_profile(records, by="model", resolution_ms=1)
    assert emit_profile_csv(table) == "tau,A,B\n1,0.5,0.5\n1.5,0.5,0.5\n2,1,1\n"
    svg = emit_svg(table)
    assert svg.startswith("<svg") and svg.count("<polyline") == 2


def test_unsolved_runs_never_count():
    records = [_record("i1", "A", 5), _record("i1", "B", 1, RecordStatus.TIME_LIMIT)]
    table = performance_profile(records, by="model", resolution_ms=1)
    assert table.p("A", 1) == 1.0
    assert table.p("B", 1000) == 0.0


def test_times_are_whole_units_with_zero_lifted():
    records = [_record("i", "A", t) for t in (0, 999, 1000, 2500)]
    assert list(unit_times(records)) == [1, 1, 1, 2]
    failed = [_record("i", "A", 10, RecordStatus.BUILD_FAILED)]
    assert np.isinf(unit_times(failed)[0])


def test_mismatched_instance_sets():
    records = [_record("i1", "A", 1), _record("i2", "B", 1)]
    with pytest.raises(MismatchedInstanceSetsError):
        performance_profile(records, by="model")
    with pytest.raises(MismatchedInstanceSetsError):
        performance_profile([_record("i1", "A", 1), _record("i1", "A", 2)], by="model")
    with pytest.raises(MismatchedInstanceSetsError):
        performance_profile([_record("i1", "A", 1)], labels=["B"], by="model")
    with pytest.raises(ConfigError):
        performance_profile([])


def test_labels_by_model_and_solver():
    record = _record("i", "dep", 1, solver="mip")
    assert record.label() == "dep/mip"
    assert record.label("model") == "dep"
    assert record.label("solver") == "mip"


_status = st.sampled_from(list(RecordStatus))


@settings(max_examples=1000, deadline=None)
@given(st.integers(1, 4), st.integers(1, 6), st.data())
def test_profile_is_monotone_and_bounded(num_labels, num_instances, data):
    records = []
    for s in range(num_labels):
        for i in range(num_instances):
            records.append(_record(f"i{i}", f"s{s}", data.draw(st.integers(0, 20_000)),
                                   data.draw(_status)))
    table = performance_profile(records, by="model")
    values = table.values
    assert np.all((values >= 0) & (values <= 1))
    assert np.all(np.diff(values, axis=0) >= 0)
    solved_any = any(r.solved for r in records)
    if solved_any:
        # some label attains the per-instance best wherever anything was solved
        assert values[0].max() > 0


def test_csv_layout():
    record = BenchRecord.for_params(SelectionParams(n=2, p=1, T=1, N=2), family="sel", model="qippu",
                                    solver="search", status=RecordStatus.OPTIMAL, value=Fraction(7, 2),
                                    time_ms=12, nodes=40)
    text = emit_csv([record])
    lines = text.splitlines()
    assert lines[0] == ",".join(HEADER)
    assert lines[1] == "sel-n2-p1-T1-N2-s0,sel,2,1,1,2,,,qippu,search,Optimal,7/2,12,40"


_values = st.one_of(st.none(), st.just(INFINITY),
                    st.fractions(min_value=-1000, max_value=1000, max_denominator=50))


@given(st.lists(st.tuples(st.text("abc-", min_size=1, max_size=6), _status, _values,
                          st.integers(0, 10 ** 6), st.one_of(st.none(), st.integers(0, 9))),
                max_size=8))
def test_csv_round_trip(rows):
    records = [BenchRecord(instance_id=i, family="kna", model="dep", solver="mip", status=s, value=v,
                           time_ms=t, nodes=t // 2, n=n, T=n)
               for i, s, v, t, n in rows]
    assert parse_csv(emit_csv(records)) == records


@pytest.mark.parametrize("text", [
    "",
    "instance_id,family\n",
    ",".join(HEADER) + "\na,b\n",
    ",".join(HEADER) + "\ni,sel,,,,,,,qippu,search,Solved,1,0,0\n",
    ",".join(HEADER) + "\ni,sel,,,,,,,qippu,search,Optimal,one,0,0\n",
])
def test_malformed_csv(text):
    with pytest.raises(ConfigError):
        parse_csv(text)


def test_run_one_records_solution():
    run = GridRun("kna", KnapsackParams(n=2, T=1, alpha=2, beta=1), "qippu", "search")
    record = run_one(run, time_limit_ms=10_000)
    assert record.status is RecordStatus.OPTIMAL
    assert record.n == 2 and record.T == 1 and record.p is None
    assert record.nodes > 0


def test_run_one_build_failure():
    run = GridRun("lot", LotSizingParams(B=1, U=1, T=4), "dep", "mip")
    assert run_one(run, time_limit_ms=1000, cap=8).status is RecordStatus.BUILD_FAILED


def test_run_one_oracle_guard_is_a_time_limit():
    run = GridRun("sel", SelectionParams(n=10, p=5, T=2, N=4), "qippu", "oracle")
    assert run_one(run, time_limit_ms=1000).status is RecordStatus.TIME_LIMIT


def test_run_grid_agrees_across_models():
    spec = GridLoader().load_text("""
runs:
  - family: sel
    params: {n: 2, p: 1, T: 1, N: 2}
    seeds: [0, 1]
    models: [qippu, qip, dep]
  - family: sel
    params: {n: 2, p: 1, T: 1, N: 2}
    seeds: [0, 1]
    models: [qippu]
    solvers: [mip, oracle]
""")
    records = run_grid(spec)
    assert [r.sort_key for r in records] == sorted(r.sort_key for r in records)
    assert all(r.status is RecordStatus.OPTIMAL for r in records)
    for instance in {r.instance_id for r in records}:
        assert len({r.value for r in records if r.instance_id == instance}) == 1


@pytest.mark.slow
def test_run_grid_with_workers_matches_sequential():
    text = """
runs:
  - family: kna
    params: {n: 2, T: 1}
    seeds: [0, 3]
"""
    spec = GridLoader().load_text(text)
    sequential = run_grid(spec, jobs=1)
    parallel = run_grid(spec, jobs=2)
    assert [(r.sort_key, r.status, r.value) for r in parallel] == \
        [(r.sort_key, r.status, r.value) for r in sequential]


@pytest.mark.slow
@pytest.mark.parametrize("T", [1, 2, 3, 4])
def test_polyhedral_model_solves_at_least_as_many_knapsacks(T):
    spec = GridLoader().load_text(f"""
time_limit_ms: 5000
runs:
  - family: kna
    params: {{n: 5, T: {T}}}
    seeds: [0, 9]
    models: [qippu, dep]
""")
    records = run_grid(spec)
    solved = {model: sum(1 for r in records if r.model == model and r.solved) for model in ("qippu", "dep")}
    assert solved["qippu"] >= solved["dep"]
