from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qrobust.core import (
    FindingCode,
    InstanceBuilder,
    LinConstraint,
    ObjectiveSense,
    QipInstance,
    QuantBlock,
    Quantifier,
    RowSense,
    RowSide,
    VarDomain,
    VarKind,
    check_immediate_violation,
    fix_variables,
    make_terms,
    objective_bounds,
    universal_system_feasible,
    validate,
)
from qrobust.errors import ConfigError


def _instance(**overrides):
    base = dict(
        name="t",
        var_names=("x", "a", "y"),
        domains=(VarDomain(0, 1), VarDomain(0, 1), VarDomain(0, 1)),
        blocks=(QuantBlock(Quantifier.EXISTS, (0,)), QuantBlock(Quantifier.FORALL, (1,)),
                QuantBlock(Quantifier.EXISTS, (2,))),
        objective=make_terms({0: 1, 2: 1}),
        existential_rows=(LinConstraint.le({0: 1, 2: 1}, 1),),
        universal_rows=(LinConstraint.le({1: 1}, 1, side=RowSide.UNIVERSAL),),
    )
    base.update(overrides)
    return QipInstance(**base)


def test_make_terms_merges_and_drops_zeros():
    assert make_terms([(2, 1), (0, 3), (2, -1), (1, Fraction(1, 2))]) == ((0, 3), (1, Fraction(1, 2)))


def test_ge_is_stored_as_negated_le():
    row = LinConstraint.ge({0: 2, 1: -1}, 3)
    assert row.sense is RowSense.LE
    assert row.terms == ((0, -2), (1, 1))
    assert row.rhs == -3
    assert row.satisfied({0: 2, 1: 1})
    assert not row.satisfied({0: 1, 1: 1})


def test_eq_row_activity():
    row = LinConstraint.eq({0: 1, 1: 1}, 1)
    assert row.activity({0: 1, 1: 0}) == 1
    assert row.satisfied({0: 0, 1: 1})
    assert not row.satisfied({0: 1, 1: 1})


def test_well_formed_instance_validates():
    assert validate(_instance()).ok


def test_coin_game_fixture_validates(coin_game):
    report = validate(coin_game)
    assert report.ok, report.codes


@pytest.mark.parametrize("overrides, code", [
    (dict(blocks=()), FindingCode.NO_BLOCKS),
    (dict(blocks=(QuantBlock(Quantifier.FORALL, (1,)), QuantBlock(Quantifier.EXISTS, (0, 2)))),
     FindingCode.FIRST_BLOCK_NOT_EXISTENTIAL),
    (dict(blocks=(QuantBlock(Quantifier.EXISTS, (0, 2)), QuantBlock(Quantifier.FORALL, (1,)))),
     FindingCode.LAST_BLOCK_NOT_EXISTENTIAL),
    (dict(blocks=(QuantBlock(Quantifier.EXISTS, (0,)), QuantBlock(Quantifier.FORALL, (1,)),
                  QuantBlock(Quantifier.EXISTS, ()), QuantBlock(Quantifier.EXISTS, (2,)))),
     FindingCode.EMPTY_BLOCK),
    (dict(blocks=(QuantBlock(Quantifier.EXISTS, (0,)), QuantBlock(Quantifier.FORALL, (1,)),
                  QuantBlock(Quantifier.EXISTS, (2, 7)))),
     FindingCode.INDEX_OUT_OF_RANGE),
    (dict(blocks=(QuantBlock(Quantifier.EXISTS, (0,)), QuantBlock(Quantifier.FORALL, (1,)),
                  QuantBlock(Quantifier.EXISTS, (0,)))),
     FindingCode.VARIABLE_IN_SEVERAL_BLOCKS),
    (dict(blocks=(QuantBlock(Quantifier.EXISTS, (0,)), QuantBlock(Quantifier.FORALL, (1,)))
          + (QuantBlock(Quantifier.EXISTS, (0,)),)),
     FindingCode.VARIABLE_NOT_IN_BLOCK),
    (dict(domains=(VarDomain(2, 1), VarDomain(0, 1), VarDomain(0, 1))), FindingCode.BOUNDS_CROSSED),
    (dict(domains=(VarDomain(0, 1, VarKind.TRAILING_CONTINUOUS), VarDomain(0, 1), VarDomain(0, 1))),
     FindingCode.TRAILING_CONTINUOUS_MISPLACED),
    (dict(universal_rows=(LinConstraint.le({1: 1, 0: 1}, 1, side=RowSide.UNIVERSAL),)),
     FindingCode.UNIVERSAL_ROW_TOUCHES_EXISTENTIAL),
    (dict(universal_rows=(LinConstraint.le({1: 1}, -1, side=RowSide.UNIVERSAL),)),
     FindingCode.UNIVERSAL_SYSTEM_EMPTY),
    (dict(existential_rows=(LinConstraint.le({0: 1}, 1, side=RowSide.UNIVERSAL),)),
     FindingCode.ROW_SIDE_MISMATCH),
    (dict(var_names=("x", "a")), FindingCode.NAME_COUNT_MISMATCH),
    (dict(var_names=("x", "a", "x")), FindingCode.DUPLICATE_NAME),
])
def test_validation_findings(overrides, code):
    report = validate(_instance(**overrides))
    assert not report.ok
    assert code in report.codes


def test_report_points_at_offending_block():
    report = validate(_instance(blocks=(QuantBlock(Quantifier.FORALL, (1,)),
                                        QuantBlock(Quantifier.EXISTS, (0, 2)))))
    finding = next(f for f in report if f.code is FindingCode.FIRST_BLOCK_NOT_EXISTENTIAL)
    assert finding.index == 0


def test_builder_numbers_variables_in_creation_order():
    b = InstanceBuilder("order")
    b.new_block(Quantifier.EXISTS)
    first = b.add_var("u")
    b.new_block(Quantifier.FORALL)
    second = b.add_var("v", 0, 3)
    b.new_block(Quantifier.EXISTS)
    third = b.add_var("w", 0, 5, VarKind.TRAILING_CONTINUOUS)
    b.add_objective(third, 1)
    b.add_objective(third, 1)
    instance = b.build()
    assert (first, second, third) == (0, 1, 2)
    assert instance.block_of == (0, 1, 2)
    assert instance.universal_vars == [1]
    assert instance.objective == ((2, 2),)


def test_builder_requires_open_block():
    with pytest.raises(ConfigError):
        InstanceBuilder("empty").add_var("x")


def test_min_form_of_maximisation(max_game):
    assert max_game.is_maximization
    assert max_game.min_objective == ((0, -3), (1, 2))
    assert max_game.to_model_value(Fraction(-4)) == 4


def test_objective_bounds_include_offset():
    instance = _instance(objective=make_terms({0: 3, 2: -2}), offset=Fraction(5))
    assert objective_bounds(instance) == (3, 8)


def test_fix_variables_collapses_domains():
    fixed = fix_variables(_instance(), {0: 1})
    assert fixed.domains[0] == VarDomain(1, 1)
    assert fixed.domains[2] == VarDomain(0, 1)
    with pytest.raises(ConfigError):
        fix_variables(_instance(), {0: 4})


def test_immediate_violation_holds_for_unit_vector_rows(selection_qippu):
    assert check_immediate_violation(selection_qippu) == []


def test_immediate_violation_detects_late_row():
    b = InstanceBuilder("late")
    b.new_block(Quantifier.EXISTS)
    b.add_var("x")
    b.new_block(Quantifier.FORALL)
    a1 = b.add_var("a1")
    b.new_block(Quantifier.EXISTS)
    b.add_var("y")
    b.new_block(Quantifier.FORALL)
    a2 = b.add_var("a2")
    b.new_block(Quantifier.EXISTS)
    b.add_var("z")
    # a1 = 1 is locally legal but leaves a2 no completion
    b.universal_eq({a1: 1, a2: 1}, 0, name="late")
    b.universal_le({a1: 1}, 1, name="box")
    findings = check_immediate_violation(b.build())
    assert [f.code for f in findings] == [FindingCode.IMMEDIATE_VIOLATION_MISSING]


@given(st.integers(-50, 50), st.integers(1, 30), st.integers(-50, 50), st.integers(1, 30))
def test_rational_rows_keep_exact_values(n1, d1, n2, d2):
    row = LinConstraint.le({0: Fraction(n1, d1)}, Fraction(n2, d2))
    assert row.rhs == Fraction(n2, d2)
    assert row.activity({0: 1}) == Fraction(n1, d1)
    assert row.satisfied({0: 1}) == (Fraction(n1, d1) <= Fraction(n2, d2))


def test_instance_sense_default_is_minimize():
    assert _instance().sense is ObjectiveSense.MINIMIZE
    assert _instance().min_offset == 0


def _adversary(rows, bounds=((0, 1), (0, 1))):
    b = InstanceBuilder("adversary")
    b.new_block(Quantifier.EXISTS)
    b.add_var("x")
    b.new_block(Quantifier.FORALL)
    qs = [b.add_var(f"q{k}", lo, hi) for k, (lo, hi) in enumerate(bounds)]
    b.new_block(Quantifier.EXISTS)
    b.add_var("y")
    for coefs, is_eq, rhs in rows:
        row = dict(zip(qs, coefs))
        (b.universal_eq if is_eq else b.universal_le)(row, rhs)
    return b.build()


def test_empty_universal_system_without_interval_evidence():
    # every box bound survives propagation, yet q0 = q1 and q0 + q1 = 1 have no integer point
    instance = _adversary([((1, 1), True, 1), ((1, -1), True, 0)])
    assert not universal_system_feasible(instance)
    assert validate(instance).codes == [FindingCode.UNIVERSAL_SYSTEM_EMPTY]


def test_parity_system_is_empty_on_wide_boxes():
    instance = _adversary([((2, -2), True, 1)], bounds=((0, 9), (0, 9)))
    assert FindingCode.UNIVERSAL_SYSTEM_EMPTY in validate(instance).codes


def test_universal_system_with_a_point_passes():
    instance = _adversary([((1, 1), True, 1), ((1, -1), False, 0)])
    assert universal_system_feasible(instance)
    assert validate(instance).ok


_urow = st.tuples(st.tuples(st.integers(-3, 3), st.integers(-3, 3)), st.booleans(), st.integers(-4, 4))


@settings(max_examples=200, deadline=None)
@given(st.lists(_urow, min_size=1, max_size=3))
def test_universal_emptiness_matches_enumeration(rows):
    instance = _adversary(rows, bounds=((0, 3), (-1, 2)))
    points = [{1: q0, 2: q1} for q0 in range(0, 4) for q1 in range(-1, 3)]
    nonempty = any(all(row.satisfied(p) for row in instance.universal_rows) for p in points)
    assert universal_system_feasible(instance) == nonempty
    assert (FindingCode.UNIVERSAL_SYSTEM_EMPTY in validate(instance).codes) == (not nonempty)
