"""Formula and term construction, evaluation, and SMT-LIB round trips."""
import pytest
from hypothesis import given, settings, strategies as st

from conterm.logic import (
    And, Atom, FALSE, Not, Or, ParseError, Quant, TRUE, dvd, eq, evaluate,
    exists, forall, free_vars, geq, gt, implies, land, leq, lnot, lor, lt,
    parse_smtlib, primed, substitute, tconst, to_smtlib, tvar, var,
)

x, y = var("x"), var("y")
tx, ty = tvar(x), tvar(y)


class TestTerms:
    def test_linear_normal_form_interning(self):
        assert tx + ty - tx is ty + tconst(0)
        assert 2 * tx + tx is 3 * tx
        assert (tx + 1) - (tx + 1) is tconst(0)

    def test_coeff_accessors(self):
        t = 2 * tx - 3 * ty + 5
        assert t.coeff(x) == 2 and t.coeff(y) == -3 and t.const == 5
        assert set(t.vars()) == {x, y}


class TestConstructors:
    def test_strict_inequality_tightens(self):
        # x < y becomes x + 1 <= y over the integers
        assert lt(tx, ty) is leq(tx + 1, ty)

    def test_negation_of_atoms_stays_atomic(self):
        f = lnot(leq(tx, tconst(0)))
        assert isinstance(f, Atom)
        assert f is geq(tx, tconst(1))

    def test_negation_involution_on_atoms(self):
        a = leq(2 * tx - ty, tconst(3))
        assert lnot(lnot(a)) is a

    def test_connective_units(self):
        a = leq(tx, tconst(0))
        assert land(a, TRUE) is a
        assert lor(a, FALSE) is a
        assert land(a, FALSE) is FALSE
        assert lor(a, TRUE) is TRUE
        assert land() is TRUE
        assert lor() is FALSE

    def test_quantifier_over_absent_variable_vanishes(self):
        a = leq(tx, tconst(0))
        assert exists(y, a) is a
        assert forall(y, a) is a

    def test_bound_variable_is_freshened(self):
        f = exists(x, leq(tx, ty))
        assert isinstance(f, Quant)
        assert x not in free_vars(f)
        assert free_vars(f) == {y}


class TestEvaluate:
    def test_atoms(self):
        f = land(leq(tx, ty), eq(tx + ty, tconst(3)))
        assert evaluate(f, {x: 1, y: 2})
        assert not evaluate(f, {x: 2, y: 1})

    def test_divisibility(self):
        f = dvd(3, tx + 1)
        assert evaluate(f, {x: 2})
        assert not evaluate(f, {x: 3})

    def test_bounded_quantifier(self):
        f = exists(y, land(geq(ty, tconst(0)), eq(tx, 2 * ty)))
        assert evaluate(f, {x: 6})
        assert not evaluate(f, {x: 7})


class TestSubstitute:
    def test_capture_avoidance(self):
        f = exists(y, lt(ty, tx))  # y < x for some y: always true
        g = substitute(f, {x: ty})
        # the bound y must not capture the substituted y
        assert evaluate(g, {y: 0})

    def test_term_substitution(self):
        f = eq(tvar(primed(x)), tx + 1)
        g = substitute(f, {x: tx + 5})
        assert g is eq(tvar(primed(x)), tx + 6)


names = st.sampled_from(["x", "y", "z"])
terms = st.builds(
    lambda cs, c: sum((k * tvar(var(n)) for n, k in cs.items()), tconst(c)),
    st.dictionaries(names, st.integers(-3, 3), max_size=3),
    st.integers(-4, 4))
atoms = st.builds(lambda f, t, c: f(t, tconst(c)),
                  st.sampled_from([leq, geq, eq, lt, gt]), terms,
                  st.integers(-4, 4))
formulas = st.recursive(
    atoms | st.just(TRUE) | st.just(FALSE),
    lambda sub: st.one_of(
        st.builds(land, sub, sub), st.builds(lor, sub, sub),
        st.builds(lnot, sub),
        st.builds(lambda f: exists(var("z"), f), sub),
        st.builds(lambda f: forall(var("y"), f), sub)),
    max_leaves=6)


class TestSmtlib:
    @settings(max_examples=60, deadline=None)
    @given(formulas)
    def test_round_trip_preserves_semantics(self, f):
        g = parse_smtlib(to_smtlib(f))
        model = {v: 1 for v in free_vars(f)}
        assert free_vars(g) == free_vars(f)
        for val in (-2, 0, 3):
            m = {v: val for v in free_vars(f)}
            assert evaluate(f, m) == evaluate(g, m)

    def test_primed_names(self):
        f = parse_smtlib("(= x' (+ x 1))")
        assert f is eq(tvar(primed(x)), tx + 1)

    def test_parse_errors(self):
        with pytest.raises(ParseError):
            parse_smtlib("(and (<= x 0)")
        with pytest.raises(ParseError):
            parse_smtlib("(frobnicate x)")

    def test_divisibility_prints_as_existential(self):
        text = to_smtlib(dvd(2, tx))
        g = parse_smtlib(text)
        for v in (-2, 1, 4):
            assert evaluate(g, {x: v}) == (v % 2 == 0)
