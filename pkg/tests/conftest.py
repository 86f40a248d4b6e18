"""Shared fixtures and random-input generators for the test suite."""
from __future__ import annotations

import random

import pytest

from conterm.logic import (
    TRUE, eq, geq, land, leq, lnot, lor, lt, primed, tconst, tvar, var,
)
from conterm.interp import InterProcProgram, LabeledCfg
from conterm.pathexpr import Cfg
from conterm.solver import Solver, SolverConfig
from conterm.tf import VarContext


@pytest.fixture
def solver():
    return Solver(SolverConfig(seed=7))


@pytest.fixture
def ctx2():
    return VarContext.of_names("x", "y")


def assert_equiv(solver, f, g, msg=""):
    r = solver.equivalent(f, g)
    assert r.kind == "yes", f"{msg or 'not equivalent'}: {f} vs {g} " \
                            f"(counterexample {r.counter_model})"


def assert_entails(solver, f, g, msg=""):
    r = solver.entails(f, g)
    assert r.kind == "yes", f"{msg or 'no entailment'}: {f} |= {g} " \
                            f"(counterexample {r.counter_model})"


# ---------------------------------------------------------------------------
# Random linear-arithmetic inputs (seeded, deterministic)
# ---------------------------------------------------------------------------

def random_term(rng: random.Random, variables, lo=-2, hi=2):
    t = tconst(rng.randint(lo, hi))
    for v in variables:
        c = rng.randint(lo, hi)
        if c:
            t = t + c * tvar(v)
    return t


def random_atom(rng: random.Random, variables):
    t = random_term(rng, variables)
    return rng.choice([leq, geq, eq, lt])(t, tconst(rng.randint(-2, 2)))


def random_state_formula(rng: random.Random, variables, atoms=2):
    fs = [random_atom(rng, variables) for _ in range(atoms)]
    if rng.random() < 0.3 and len(fs) > 1:
        return lor(fs[0], land(*fs[1:]))
    return land(*fs)


def random_update_cube(rng: random.Random, ctx: VarContext):
    """One guarded-command cube: a guard over Var plus per-variable updates
    (deterministic linear assignment, frame, or havoc)."""
    parts = [random_atom(rng, ctx.variables)]
    for v in ctx.variables:
        kind = rng.random()
        if kind < 0.55:
            parts.append(eq(tvar(primed(v)),
                            tvar(v) + rng.randint(-2, 2)))
        elif kind < 0.8:
            parts.append(eq(tvar(primed(v)),
                            random_term(rng, ctx.variables, -1, 1)))
        elif kind < 0.95:
            parts.append(eq(tvar(primed(v)), tvar(v)))
        # else: havoc v
    return land(*parts)


def random_tf(rng: random.Random, ctx: VarContext):
    """A random transition formula: one or two guarded-command cubes."""
    f = random_update_cube(rng, ctx)
    if rng.random() < 0.35:
        f = lor(f, random_update_cube(rng, ctx))
    return ctx.tf(f)


def random_cfg(rng: random.Random, n: int) -> Cfg:
    """A rooted graph on vertices 0..n-1: spanning arborescence plus a few
    extra edges (cycles likely)."""
    edges = set()
    for v in range(1, n):
        edges.add((rng.randrange(v), v))
    for _ in range(rng.randint(1, n)):
        u, v = rng.randrange(n), rng.randrange(n)
        edges.add((u, v))
    return Cfg(tuple(range(n)), tuple(sorted(edges)), 0)


def random_program(rng: random.Random, ctx: VarContext,
                   max_vertices: int = 6) -> LabeledCfg:
    g = random_cfg(rng, rng.randint(2, max_vertices))
    labels = {e: random_tf(rng, ctx) for e in g.edges}
    return LabeledCfg(g, labels, ctx)


def random_interproc(rng: random.Random) -> InterProcProgram:
    """A two-procedure program: main over globals x, y with a call to a
    helper that has one local."""
    ctx = VarContext.of_names("l", "x", "y")
    vl, vx, vy = (var(s) for s in ("l", "x", "y"))
    glob = (vx, vy)

    def frame_all():
        return land(*(eq(tvar(primed(v)), tvar(v)) for v in ctx.variables))

    def tfr(core, touched):
        keep = [eq(tvar(primed(v)), tvar(v)) for v in ctx.variables
                if v not in touched]
        return ctx.tf(land(core, *keep))

    edge_labels = {
        ("m0", "m1"): tfr(eq(tvar(primed(vx)),
                             random_term(rng, glob)), {vx}),
        ("m1", "m2"): "p",
        ("m2", "m3"): tfr(random_atom(rng, glob), set()),
        ("p0", "p1"): tfr(eq(tvar(primed(vl)),
                             random_term(rng, glob)), {vl}),
        ("p1", "p2"): tfr(land(random_atom(rng, (vl, vx)),
                               eq(tvar(primed(vy)),
                                  random_term(rng, (vl, vy)))), {vy}),
    }
    if rng.random() < 0.5:  # optional recursion
        edge_labels[("p1", "p3")] = "p"
        edge_labels[("p3", "p2")] = tfr(TRUE, set())
    if rng.random() < 0.5:  # optional loop in main
        edge_labels[("m2", "m1")] = tfr(random_atom(rng, glob), set())
    vertices = sorted({u for e in edge_labels for u in e})
    return InterProcProgram(
        vertices=tuple(vertices), edge_labels=edge_labels,
        procedures=("main", "p"),
        entry={"main": "m0", "p": "p0"}, exit={"main": "m3", "p": "p2"},
        main="main", ctx=ctx, global_vars=glob, local_vars=(vl,))
