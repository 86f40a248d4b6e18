"""Solver sessions: sat/entailment queries, bound search, both backends."""
import pytest

from conterm.logic import (
    TRUE, eq, evaluate, exists, forall, free_vars, geq, land, leq, lnot,
    tconst, tvar, var,
)
from conterm.solver import (
    Bound, Solver, SolverConfig, default_server_command,
)

x, y = var("x"), var("y")
tx, ty = tvar(x), tvar(y)


class TestSat:
    def test_sat_with_model(self, solver):
        f = land(geq(tx, tconst(3)), leq(tx + ty, tconst(0)))
        r = solver.is_sat(f)
        assert r.is_sat
        assert evaluate(f, r.model)

    def test_unsat(self, solver):
        assert solver.is_sat(land(geq(tx, tconst(1)),
                                  leq(tx, tconst(0)))).is_unsat

    def test_quantified(self, solver):
        assert solver.is_sat(forall(y, exists(x, eq(tx, ty + 1)))).is_sat

    def test_budget_exhaustion_is_unknown(self):
        s = Solver(SolverConfig(budget_ms=1, timeout_ms=1))
        s._spent_ms = 10.0
        assert s.is_sat(TRUE).is_unknown


class TestEntailment:
    def test_yes(self, solver):
        assert solver.entails(eq(tx, tconst(4)), geq(tx, tconst(0))).is_yes

    def test_no_with_countermodel(self, solver):
        r = solver.entails(geq(tx, tconst(0)), geq(tx, tconst(1)))
        assert r.kind == "no"
        assert r.counter_model[x] == 0

    def test_equivalent(self, solver):
        assert solver.equivalent(lnot(lnot(geq(tx, ty))),
                                 geq(tx, ty)).is_yes


class TestSupBound:
    def test_finite(self, solver):
        b = solver.sup_bound(land(geq(tx, tconst(0)), leq(tx, tconst(17))),
                             tx)
        assert b == Bound("finite", 17)

    def test_negative_levels(self, solver):
        b = solver.sup_bound(leq(tx, tconst(-5)), tx)
        assert b == Bound("finite", -5)

    def test_unbounded(self, solver):
        assert solver.sup_bound(geq(tx, tconst(0)), tx).kind == "unbounded"

    def test_vacuous(self, solver):
        b = solver.sup_bound(land(geq(tx, tconst(1)), leq(tx, tconst(0))),
                             tx)
        assert b.kind == "unbounded" and b.vacuous


class TestDeterminism:
    def test_same_seed_same_models(self):
        f = land(geq(tx + ty, tconst(0)), leq(tx - ty, tconst(5)))
        models = []
        for _ in range(2):
            s = Solver(SolverConfig(seed=3))
            models.append(s.is_sat(f).model)
        assert models[0] == models[1]


class TestSubprocessBackend:
    @pytest.fixture
    def subproc_solver(self):
        s = Solver(SolverConfig(executable=default_server_command(),
                                timeout_ms=60_000))
        yield s
        s.close()

    def test_sat_and_model(self, subproc_solver):
        f = land(geq(tx, tconst(2)), leq(tx + ty, tconst(1)))
        r = subproc_solver.is_sat(f)
        assert r.is_sat
        assert evaluate(f, r.model)

    def test_unsat(self, subproc_solver):
        assert subproc_solver.is_sat(
            land(geq(tx, tconst(1)), leq(tx, tconst(0)))).is_unsat

    def test_session_isolation(self, subproc_solver):
        # queries must not leak assertions into each other
        assert subproc_solver.is_sat(geq(tx, tconst(5))).is_sat
        assert subproc_solver.is_sat(leq(tx, tconst(-5))).is_sat

    def test_dead_process_is_unknown(self):
        s = Solver(SolverConfig(executable=("false",), timeout_ms=2000))
        assert s.is_sat(geq(tx, tconst(0))).is_unknown
        s.close()


class TestConfigValidation:
    def test_bad_timeout(self):
        with pytest.raises(ValueError):
            SolverConfig(timeout_ms=0)

    def test_budget_must_cover_timeout(self):
        with pytest.raises(ValueError):
            SolverConfig(timeout_ms=1000, budget_ms=10)
