"""Graph interpretation: DAG evaluation, summaries, whole-program analysis."""
import random

import pytest

from conftest import assert_entails, assert_equiv, random_tf
from conterm.interp import (
    AnalysisResult, ClosureConfig, InterProcProgram, LabeledCfg, analyze,
    analyze_proc, build_icfg, closure_rho, compute_summaries, eval_dag,
    ordering_predicates,
)
from conterm.logic import (
    TRUE, eq, evaluate, geq, land, lor, lnot, lt, primed, tconst, tvar, var,
)
from conterm.mp import mp_llrf
from conterm.pathexpr import omega_path_expr
from conterm.tf import VarContext


def llrf(solver):
    return lambda f: mp_llrf(f, solver)


def frame(ctx, *assigned):
    return land(*(eq(tvar(primed(v)), tvar(v)) for v in ctx.variables
                  if v.name not in assigned))


class TestEvalDag:
    def test_empty_omega_language_is_mortal_everywhere(self, ctx2, solver):
        from conterm.pathexpr import OMEGA_ZERO
        got = eval_dag(OMEGA_ZERO, {}, llrf(solver), solver, ctx2)
        assert_equiv(solver, got.formula, TRUE)

    def test_counting_self_loop(self, ctx2, solver):
        tx, txp = tvar(var("x")), tvar(primed(var("x")))
        body = ctx2.tf(land(geq(tx, tconst(1)), eq(txp, tx - 1),
                            frame(ctx2, "x")))
        from conterm.pathexpr import Cfg
        g = Cfg(("v",), (("v", "v"),), "v")
        got = eval_dag(omega_path_expr(g), {("v", "v"): body}, llrf(solver),
                       solver, ctx2)
        assert_equiv(solver, got.formula, TRUE)


class TestAnalyze:
    def test_acyclic_graph_terminates_everywhere(self, ctx2, solver):
        from conterm.pathexpr import Cfg
        g = Cfg((0, 1), ((0, 1),), 0)
        p = LabeledCfg(g, {(0, 1): ctx2.tf(frame(ctx2))}, ctx2)
        res = analyze(p, llrf(solver), solver)
        assert_equiv(solver, res.precondition.formula, TRUE)
        assert res.loops == []

    def test_stutter_loop_is_immortal_everywhere(self, ctx2, solver):
        from conterm.pathexpr import Cfg
        g = Cfg(("v",), (("v", "v"),), "v")
        p = LabeledCfg(g, {("v", "v"): ctx2.tf(frame(ctx2))}, ctx2)
        res = analyze(p, llrf(solver), solver)
        assert solver.is_sat(res.precondition.formula).is_unsat
        assert len(res.loops) == 1
        assert solver.is_sat(res.loops[0].precondition.formula).is_unsat


class TestClosure:
    def test_keeps_entailed_ordering(self, solver):
        ctx = VarContext.of_names("x")
        tx, txp = tvar(var("x")), tvar(primed(var("x")))
        f = ctx.tf(eq(txp, tx + 1))
        rho = closure_rho(f, ClosureConfig(), solver)
        assert_entails(solver, rho.formula, lt(tx, txp))
        # the affine hull recovers the exact update
        assert_equiv(solver, rho.formula, eq(txp, tx + 1))

    def test_unsat_closes_to_false(self, ctx2, solver):
        tx = tvar(var("x"))
        f = ctx2.tf(land(geq(tx, tconst(1)), geq(-tx, tconst(0))))
        assert solver.is_sat(
            closure_rho(f, ClosureConfig(), solver).formula).is_unsat

    def test_extensive(self, ctx2, solver):
        rng = random.Random(13)
        for _ in range(8):
            f = random_tf(rng, ctx2)
            rho = closure_rho(f, ClosureConfig(), solver)
            assert_entails(solver, f.formula, rho.formula)

    def test_idempotent(self, ctx2, solver):
        rng = random.Random(29)
        for _ in range(6):
            f = random_tf(rng, ctx2)
            r1 = closure_rho(f, ClosureConfig(), solver)
            r2 = closure_rho(r1, ClosureConfig(), solver)
            assert_equiv(solver, r1.formula, r2.formula)

    def test_monotone(self, ctx2, solver):
        rng = random.Random(41)
        for _ in range(6):
            f = random_tf(rng, ctx2)
            g = ctx2.tf(lor(f.formula, random_tf(rng, ctx2).formula))
            rf = closure_rho(f, ClosureConfig(), solver)
            rg = closure_rho(g, ClosureConfig(), solver)
            assert_entails(solver, rf.formula, rg.formula)

    def test_ordering_predicates_cover_all_pairs(self, ctx2):
        preds = ordering_predicates(ctx2)
        # 2 variables x 2 primed x 5 relations
        assert len(preds) == 20


def fib_program():
    """r := F(g) by the textbook double recursion, locals n and t."""
    ctx = VarContext.of_names("g", "n", "r", "t")
    g, n, r, t = (tvar(v) for v in ctx.variables)
    gp, np_, rp, tp = (tvar(v) for v in ctx.primed_variables)
    lab = {
        ("r", "a"): ctx.tf(land(eq(np_, g), frame(ctx, "n"))),
        ("a", "x"): ctx.tf(land(lt(n, tconst(2)), eq(rp, tconst(1)),
                                frame(ctx, "r"))),
        ("a", "b"): ctx.tf(land(geq(n, tconst(2)), eq(gp, n - 1),
                                frame(ctx, "g"))),
        ("b", "c"): "fib",
        ("c", "d"): ctx.tf(land(eq(tp, r), eq(gp, n - 2),
                                frame(ctx, "g", "t"))),
        ("d", "e"): "fib",
        ("e", "x"): ctx.tf(land(eq(rp, r + t), frame(ctx, "r"))),
    }
    return InterProcProgram(
        vertices=("r", "a", "b", "c", "d", "e", "x"),
        edge_labels=lab, procedures=("fib",),
        entry={"fib": "r"}, exit={"fib": "x"}, main="fib", ctx=ctx,
        global_vars=(var("g"), var("r")), local_vars=(var("n"), var("t")))


def run_fib(g):
    """Reference semantics: exit values of (g, r) for an entry value of g."""
    n = g
    if n <= 1:
        return g, 1
    _, r1 = run_fib(n - 1)
    t = r1
    g2, r2 = run_fib(n - 2)
    return g2, r2 + t


class TestInterproc:
    def test_icfg_call_to_entry_edges(self):
        p = fib_program()
        icfg, interproc = build_icfg(p)
        assert interproc == {("b", "r"), ("d", "r")}
        assert set(icfg.edges) == set(p.edge_labels) | interproc

    def test_nonrecursive_summary_is_exact(self, solver):
        ctx = VarContext.of_names("x")
        tx, txp = tvar(var("x")), tvar(primed(var("x")))
        p = InterProcProgram(
            vertices=("m0", "m1", "p0", "p1"),
            edge_labels={("m0", "m1"): "p",
                         ("p0", "p1"): ctx.tf(eq(txp, tx + 1))},
            procedures=("m", "p"), entry={"m": "m0", "p": "p0"},
            exit={"m": "m1", "p": "p1"}, main="m", ctx=ctx,
            global_vars=(var("x"),), local_vars=())
        s = compute_summaries(p, solver=solver)
        assert_equiv(solver, s["p"].formula, eq(txp, tx + 1))
        assert_equiv(solver, s["m"].formula, eq(txp, tx + 1))

    def test_unreachable_exit_summary_is_false(self, solver):
        ctx = VarContext.of_names("x")
        tx, txp = tvar(var("x")), tvar(primed(var("x")))
        stutter = ctx.tf(eq(txp, tx))
        p = InterProcProgram(
            vertices=("m0", "m1", "p0", "p1", "p2"),
            edge_labels={("m0", "m1"): "p", ("p0", "p1"): stutter,
                         ("p1", "p1"): stutter},
            procedures=("m", "p"), entry={"m": "m0", "p": "p0"},
            exit={"m": "m1", "p": "p2"}, main="m", ctx=ctx,
            global_vars=(var("x"),), local_vars=())
        s = compute_summaries(p, solver=solver)
        assert solver.is_sat(s["p"].formula).is_unsat
        # ... and the nonterminating callee makes every state immortal
        res = analyze_proc(p, "m", llrf(solver), solver, summaries=s)
        assert solver.is_sat(res.precondition.formula).is_unsat

    def test_fib_summary_is_sound(self, solver):
        p = fib_program()
        s = compute_summaries(p, solver=solver)
        summary = s["fib"].formula
        names = ("g", "n", "r", "t")
        for g0 in range(0, 7):
            g1, r1 = run_fib(g0)
            # locals are framed in the summary; r is never read before
            # being written, so its entry value is arbitrary
            for r0, n0, t0 in ((0, 3, -1), (5, 0, 2)):
                pre = dict(zip(names, (g0, n0, r0, t0)))
                post = dict(zip(names, (g1, n0, r1, t0)))
                m = {var(k): v for k, v in pre.items()}
                m.update({primed(var(k)): v for k, v in post.items()})
                assert evaluate(summary, m), (pre, post)
                # the concrete behavior also satisfies g <= r'
                assert g0 <= r1

    def test_fib_precondition_and_body(self, solver):
        p = fib_program()
        res = analyze_proc(p, "fib", llrf(solver), solver)
        assert_equiv(solver, res.precondition.formula, TRUE)
