"""Transition-formula algebra: compose, wp, hull-based exp and star."""
import random

import pytest
from hypothesis import given, settings, strategies as st

from conftest import assert_entails, assert_equiv, random_tf
from conterm.logic import (
    eq, exists_all, fresh, geq, land, leq, lor, lnot, primed, substitute,
    tconst, tvar, var,
)
from conterm.tf import (
    ContextMismatch, VarContext, compose, delta_hull, exp, post_states,
    pre_states, star, tf_choice, tf_identity, tf_zero, wp,
)

x, y = var("x"), var("y")
tx, ty = tvar(x), tvar(y)
txp, typ = tvar(primed(x)), tvar(primed(y))


@pytest.fixture
def inc(ctx2):
    return ctx2.tf(land(eq(txp, tx + 1), eq(typ, ty)))


@pytest.fixture
def dec_pos(ctx2):
    return ctx2.tf(land(geq(tx, tconst(1)), eq(txp, tx - 1), eq(typ, ty)))


class TestKindChecks:
    def test_tf_rejects_foreign_variables(self, ctx2):
        z = tvar(var("z_outside"))
        with pytest.raises(AssertionError):
            ctx2.tf(eq(z, tconst(0)))

    def test_sf_rejects_primed(self, ctx2):
        with pytest.raises(AssertionError):
            ctx2.sf(eq(txp, tconst(0)))

    def test_context_mismatch(self, ctx2, inc):
        other = VarContext.of_names("x")
        with pytest.raises(ContextMismatch):
            compose(inc, other.tf(eq(txp, tx)))


class TestCompose:
    def test_two_increments(self, ctx2, inc, solver):
        f = compose(inc, inc)
        assert_equiv(solver, f.formula,
                     land(eq(txp, tx + 2), eq(typ, ty)))

    def test_identity_is_neutral(self, ctx2, inc, solver):
        one = tf_identity(ctx2)
        assert_equiv(solver, compose(one, inc).formula, inc.formula)
        assert_equiv(solver, compose(inc, one).formula, inc.formula)

    def test_zero_annihilates(self, ctx2, inc, solver):
        zero = tf_zero(ctx2)
        assert solver.is_sat(compose(zero, inc).formula).is_unsat
        assert solver.is_sat(compose(inc, zero).formula).is_unsat


class TestWpPrePost:
    def test_wp_of_increment(self, ctx2, inc, solver):
        s = ctx2.sf(geq(tx, tconst(5)))
        assert_equiv(solver, wp(inc, s).formula, geq(tx, tconst(4)))

    def test_pre_states(self, ctx2, dec_pos, solver):
        assert_equiv(solver, pre_states(dec_pos).formula,
                     geq(tx, tconst(1)))

    def test_post_states(self, ctx2, dec_pos, solver):
        assert_equiv(solver, post_states(dec_pos).formula,
                     geq(tx, tconst(0)))


class TestDeltaHull:
    def test_rows_are_entailed(self, ctx2, solver):
        rng = random.Random(5)
        for _ in range(15):
            f = random_tf(rng, ctx2)
            hull = delta_hull(f, solver)
            if hull.vacuous:
                assert solver.is_sat(f.formula).is_unsat
                continue
            for a, b in hull.rows:
                # each row says a . (x' - x) >= b
                lhs = sum((c * (tvar(primed(v)) - tvar(v))
                           for v, c in zip(ctx2.variables, a)), tconst(0))
                assert_entails(solver, f.formula, geq(lhs, tconst(b)),
                               f"hull row {a} >= {b} not entailed by "
                               f"{f.formula}")

    def test_exact_on_deterministic_update(self, ctx2, inc, solver):
        hull = delta_hull(inc, solver)
        # both directions of x' - x = 1 and y' - y = 0 must appear
        found = set(hull.rows)
        assert ((1, 0), 1) in found and ((-1, 0), -1) in found
        assert ((0, 1), 0) in found and ((0, -1), 0) in found


def _n_fold(f, n, ctx):
    out = tf_identity(ctx)
    for _ in range(n):
        out = compose(out, f)
    return out


class TestExpStar:
    def test_exp_overapproximates_iterates(self, ctx2, solver):
        rng = random.Random(9)
        k = fresh("k", "parameter")
        for _ in range(8):
            f = random_tf(rng, ctx2)
            e = exp(f, k, solver)
            for n in (0, 1, 2, 3):
                assert_entails(
                    solver, _n_fold(f, n, ctx2).formula,
                    substitute(e.formula, {k: tconst(n)}),
                    f"F^{n} not within exp(F,k)[k:={n}] for {f.formula}")

    def test_exp_example_even_decrease(self, ctx2, solver):
        # x' = x - 2 iterated k times pins x' = x - 2k
        f = ctx2.tf(land(eq(txp, tx - 2), eq(typ, ty)))
        k = fresh("k", "parameter")
        e = exp(f, k, solver)
        at2 = substitute(e.formula, {k: tconst(2)})
        assert_entails(solver, at2, eq(txp, tx - 4))

    def test_star_contains_identity_and_f(self, ctx2, dec_pos, solver):
        s = star(dec_pos, solver)
        assert_entails(solver, tf_identity(ctx2).formula, s.formula)
        assert_entails(solver, dec_pos.formula, s.formula)

    def test_star_of_counting_loop(self, ctx2, solver):
        f = ctx2.tf(land(geq(tx, tconst(1)), eq(txp, tx - 1), eq(typ, ty)))
        s = star(f, solver)
        # cannot go below zero along the closure
        assert_entails(solver, land(s.formula, geq(tx, tconst(0))),
                       geq(txp, tconst(0)))


class TestChoice:
    def test_choice_is_disjunction(self, ctx2, inc, dec_pos, solver):
        f = tf_choice(inc, dec_pos)
        assert_equiv(solver, f.formula, lor(inc.formula, dec_pos.formula))
