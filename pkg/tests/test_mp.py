"""Mortal-precondition operators: rankings, iteration bounds, phase split."""
import pytest

from conftest import assert_equiv, assert_entails
from conterm.logic import (
    TRUE, eq, exists, geq, gt, land, leq, lnot, lor, tconst, tvar, var,
)
from conterm.mp import (
    DEFAULT_OPERATOR, ExpOp, Llrf, OperatorSyntaxError, OrOp, OrderedOp,
    PhaseOp, as_function, combine_or, combine_ordered, direction_predicates,
    invariant_preds, llrf_witness, mp_exp, mp_llrf, mp_phase, parse_operator,
    phase_transition_graph,
)
from conterm.tf import VarContext

x = var("x")
tx, k = tvar(x), var("k")


@pytest.fixture
def ctx1():
    return VarContext.of_names("x")


def txp(ctx):
    return tvar(ctx.prime(var("x")))


class TestParseOperator:
    def test_default_round_trip(self):
        assert parse_operator(DEFAULT_OPERATOR) == PhaseOp(
            OrderedOp(Llrf(), ExpOp()))

    def test_or_and_spacing(self):
        assert parse_operator(" or( llrf , exp )") == OrOp(Llrf(), ExpOp())

    @pytest.mark.parametrize("bad", [
        "phase(phase(llrf))", "phase(or(llrf,phase(exp)))",  # nested phase
        "llrf(", "frob", "or(llrf)", "llrf extra", "", "seq(llrf,exp))",
    ])
    def test_rejects(self, bad):
        with pytest.raises(OperatorSyntaxError):
            parse_operator(bad)


class TestMpLlrf:
    def test_counting_loop_terminates_everywhere(self, ctx1, solver):
        f = ctx1.tf(land(geq(tx, tconst(1)), eq(txp(ctx1), tx - 1)))
        assert_equiv(solver, mp_llrf(f, solver).formula, TRUE)

    def test_unsat_body_terminates_everywhere(self, ctx1, solver):
        f = ctx1.tf(land(geq(tx, tconst(1)), leq(tx, tconst(0))))
        assert_equiv(solver, mp_llrf(f, solver).formula, TRUE)

    def test_stutter_loop_has_no_mortal_state(self, ctx1, solver):
        f = ctx1.tf(eq(txp(ctx1), tx))
        assert solver.is_sat(mp_llrf(f, solver).formula).is_unsat

    def test_witness_on_lexicographic_loop(self, solver):
        # (x > 0 and x' < x) or (y > 0 and y' < y and x' <= x)
        ctx = VarContext.of_names("x", "y")
        tx_, ty = tvar(var("x")), tvar(var("y"))
        txp_, typ = tvar(ctx.prime(var("x"))), tvar(ctx.prime(var("y")))
        f = ctx.tf(lor(
            land(gt(tx_, tconst(0)), leq(txp_ + 1, tx_)),
            land(gt(ty, tconst(0)), leq(typ + 1, ty), leq(txp_, tx_))))
        w = llrf_witness(f, solver)
        assert w is not None
        ranked = set()
        for _, idxs in w.functionals:
            ranked.update(idxs)
        assert ranked  # every functional must earn its keep

    def test_no_witness_for_increment(self, ctx1, solver):
        f = ctx1.tf(eq(txp(ctx1), tx + 1))
        # x grows without bound: no ranking, but also genuinely mortal
        # nowhere is it immortal-free... the operator must not claim true
        res = mp_llrf(f, solver)
        assert solver.is_sat(lnot(res.formula)).is_sat


class TestMpExp:
    def test_even_decrement(self, ctx1, solver):
        f = ctx1.tf(land(lnot(eq(tx, tconst(0))), eq(txp(ctx1), tx - 2)))
        got = mp_exp(f, solver)
        want = exists(k, land(geq(tvar(k), tconst(0)),
                              eq(tx, 2 * tvar(k))))
        assert_equiv(solver, got.formula, want)

    def test_unsat_body(self, ctx1, solver):
        f = ctx1.tf(land(geq(tx, tconst(1)), leq(tx, tconst(0))))
        assert_equiv(solver, mp_exp(f, solver).formula, TRUE)


@pytest.fixture
def two_phase(solver):
    # while x > 0: if f >= 0 then x -= y; y += 1; f += 1
    #              else x += 1; f -= 1
    ctx = VarContext.of_names("f", "x", "y")
    tf_, tx_, ty = (tvar(v) for v in ctx.variables)
    tfp, txp_, typ = (tvar(v) for v in ctx.primed_variables)
    guard = gt(tx_, tconst(0))
    then = land(geq(tf_, tconst(0)), eq(txp_, tx_ - ty), eq(typ, ty + 1),
                eq(tfp, tf_ + 1))
    other = land(leq(tf_ + 1, tconst(0)), eq(txp_, tx_ + 1),
                 eq(tfp, tf_ - 1), eq(typ, ty))
    return ctx, ctx.tf(land(guard, lor(then, other)))


class TestPhase:
    def test_invariant_predicates(self, ctx1, solver):
        up = ctx1.tf(eq(txp(ctx1), tx + 1))
        preds = direction_predicates(ctx1)
        forms = {p.formula for p in invariant_preds(up, preds, solver)}
        assert lnot(geq(tx, txp(ctx1))) in forms  # x < x' persists
        # with both directions available, neither strict direction persists
        both = ctx1.tf(lor(eq(txp(ctx1), tx + 1), eq(txp(ctx1), tx - 1)))
        forms = {p.formula for p in invariant_preds(both, preds, solver)}
        assert lnot(geq(tx, txp(ctx1))) not in forms
        assert lnot(leq(tx, txp(ctx1))) not in forms

    def test_two_phase_graph_shape(self, two_phase, solver):
        ctx, f = two_phase
        pg = phase_transition_graph(f, direction_predicates(ctx), solver)
        assert len(pg.cells) == 3
        plain = {e for e in pg.cfg.edges if e[0] != e[1]}
        loops = {e for e in pg.cfg.edges if e[0] == e[1]}
        start = pg.cfg.root
        # one cell is transient (reached first, left forever), the other
        # two are the phases; only one inter-phase move survives reduction
        assert len(plain) == 3
        inter = {e for e in plain if e[0] != start}
        assert len(inter) == 1
        assert loops <= {(i, i) for i in range(3)}

    def test_two_phase_precondition(self, two_phase, solver):
        ctx, f = two_phase
        tf_, tx_, _ = (tvar(v) for v in ctx.variables)
        got = mp_phase(f, lambda g: mp_llrf(g, solver), solver)
        want = lor(leq(tx_, tconst(0)), geq(tf_, tconst(0)))
        assert_equiv(solver, got.formula, want)

    def test_llrf_alone_is_weaker(self, two_phase, solver):
        ctx, f = two_phase
        _, tx_, _ = (tvar(v) for v in ctx.variables)
        got = mp_llrf(f, solver)
        assert_equiv(solver, got.formula, leq(tx_, tconst(0)))


class TestCombinators:
    def test_or_is_disjunction(self, ctx1, solver):
        f = ctx1.tf(land(lnot(eq(tx, tconst(0))), eq(txp(ctx1), tx - 2)))
        m1 = lambda g: mp_llrf(g, solver)
        m2 = lambda g: mp_exp(g, solver)
        both = combine_or(m1, m2)(f)
        assert_equiv(solver, both.formula, lor(m1(f).formula, m2(f).formula))

    def test_ordered_refines_the_remainder(self, ctx1, solver):
        f = ctx1.tf(land(lnot(eq(tx, tconst(0))), eq(txp(ctx1), tx - 2)))
        got = combine_ordered(lambda g: mp_llrf(g, solver),
                              lambda g: mp_exp(g, solver))(f)
        want = exists(k, land(geq(tvar(k), tconst(0)),
                              eq(tx, 2 * tvar(k))))
        assert_equiv(solver, got.formula, want)

    def test_as_function_matches_manual_combination(self, ctx1, solver):
        f = ctx1.tf(land(geq(tx, tconst(1)), eq(txp(ctx1), tx - 1)))
        fn = as_function(parse_operator("or(llrf,exp)"), solver)
        assert_equiv(solver, fn(f).formula,
                     lor(mp_llrf(f, solver).formula,
                         mp_exp(f, solver).formula))
