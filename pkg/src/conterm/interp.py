"""Interpretation of ω-path-expression DAGs and whole-program analysis.

A CFG whose edges carry transition formulas is analyzed by computing the
ω-path expression of its infinite paths and evaluating that expression
bottom-up: regular operators map to the transition-formula algebra
(choice / relational composition / iteration), ω-iteration maps to a mortal
precondition operator, prefixing maps to weakest precondition, and ω-union
to conjunction.  Shared DAG nodes are evaluated once.

Interprocedural programs are handled by summarizing each procedure with a
closure-accelerated fixpoint and analyzing the interprocedural CFG with call
edges labeled by the summaries.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Hashable

from .logic import (
    FALSE, Variable, eq, evaluate, exists_all, free_vars, geq, land, leq,
    lnot, lt, gt, primed, tconst, tvar,
)
from .pathexpr import (
    Cat, Cfg, Letter, Omega, OmegaCat, OmegaPlus, OmegaRegExpr, Plus,
    RegExpr, Star, ONE, ZERO, finite_path_expr, omega_path_expr,
)
from .solver import Solver
from .tf import (
    StateFormula, TransitionFormula, VarContext, compose, star, tf_choice,
    tf_identity, tf_zero, wp,
)

__all__ = [
    "ConfigError", "LabeledCfg", "InterProcProgram", "SummaryAssignment",
    "ClosureConfig", "LoopInfo", "AnalysisResult",
    "eval_dag", "analyze", "build_icfg", "closure_rho", "compute_summaries",
    "analyze_proc", "ordering_predicates",
]

Vertex = Hashable
Edge = tuple[Vertex, Vertex]


class ConfigError(Exception):
    pass


@dataclass
class LabeledCfg:
    """A control flow graph with a transition formula on every edge."""
    cfg: Cfg
    labels: dict[Edge, TransitionFormula]
    ctx: VarContext

    def __post_init__(self):
        missing = [e for e in self.cfg.edges if e not in self.labels]
        if missing:
            raise ConfigError(f"unlabeled edges: {missing}")


@dataclass
class InterProcProgram:
    """A multi-procedure program over shared global and per-frame local
    variables.  Call edges carry the callee's name instead of a formula."""
    vertices: tuple[Vertex, ...]
    edge_labels: dict[Edge, TransitionFormula | str]
    procedures: tuple[str, ...]
    entry: dict[str, Vertex]
    exit: dict[str, Vertex]
    main: str
    ctx: VarContext
    global_vars: tuple[Variable, ...]
    local_vars: tuple[Variable, ...]

    def __post_init__(self):
        for p in self.procedures:
            if p not in self.entry or p not in self.exit:
                raise ConfigError(f"procedure {p!r} lacks entry/exit")
        if self.main not in self.procedures:
            raise ConfigError(f"main procedure {self.main!r} undefined")
        for e, lab in self.edge_labels.items():
            if isinstance(lab, str) and lab not in self.procedures:
                raise ConfigError(f"edge {e} calls undefined procedure {lab!r}")
        assert set(self.global_vars) | set(self.local_vars) == set(
            self.ctx.variables)


SummaryAssignment = dict[str, TransitionFormula]


def ordering_predicates(ctx: VarContext) -> tuple:
    """x ⋈ y′ for ⋈ ∈ {>, ≥, =, ≤, <} and every pre/post variable pair."""
    out = []
    for u in ctx.variables:
        x = tvar(u)
        for v in ctx.variables:
            yp = tvar(primed(v))
            out.extend([gt(x, yp), geq(x, yp), eq(x, yp), leq(x, yp),
                        lt(x, yp)])
    return tuple(out)


@dataclass
class ClosureConfig:
    """Parameters of the summary closure operator."""
    predicates: tuple | None = None  # None = ordering predicates of the ctx
    affine_hull: bool = True
    max_iterations: int = 100


# ---------------------------------------------------------------------------
# DAG evaluation


@dataclass
class LoopInfo:
    """One ω-iteration node of the analyzed expression."""
    body_expr: RegExpr
    body: TransitionFormula
    precondition: StateFormula


@dataclass
class AnalysisResult:
    precondition: StateFormula
    loops: list[LoopInfo] = field(default_factory=list)


def _resolve_mp(mp, solver: Solver) -> Callable:
    if callable(mp):
        return mp
    from .mp import MpOperator, as_function
    if isinstance(mp, MpOperator):
        return as_function(mp, solver)
    raise ConfigError(f"not a mortal precondition operator: {mp!r}")


def eval_dag(f: OmegaRegExpr, labels: dict[Edge, TransitionFormula], mp,
             solver: Solver, ctx: VarContext,
             loops: list[LoopInfo] | None = None,
             stats: dict | None = None) -> StateFormula:
    """Bottom-up evaluation of an ω-path expression; memoized per node, so a
    shared subterm is interpreted once."""
    mp_fn = _resolve_mp(mp, solver)
    tf_memo: dict[int, TransitionFormula] = {}
    sf_memo: dict[int, StateFormula] = {}
    if stats is not None:
        stats.setdefault("tf_nodes", 0)
        stats.setdefault("tf_hits", 0)
        stats.setdefault("mp_nodes", 0)
        stats.setdefault("mp_hits", 0)

    def tf_of(e: RegExpr) -> TransitionFormula:
        got = tf_memo.get(id(e))
        if got is not None:
            if stats is not None:
                stats["tf_hits"] += 1
            return got
        if stats is not None:
            stats["tf_nodes"] += 1
        if e is ZERO:
            out = tf_zero(ctx)
        elif e is ONE:
            out = tf_identity(ctx)
        elif isinstance(e, Letter):
            try:
                out = labels[e.edge]
            except KeyError:
                raise ConfigError(f"no label for edge {e.edge!r}") from None
        elif isinstance(e, Plus):
            out = tf_choice(tf_of(e.a), tf_of(e.b))
        elif isinstance(e, Cat):
            out = compose(tf_of(e.a), tf_of(e.b))
        else:
            assert isinstance(e, Star)
            out = star(tf_of(e.a), solver)
        tf_memo[id(e)] = out
        return out

    def sf_of(g: OmegaRegExpr) -> StateFormula:
        got = sf_memo.get(id(g))
        if got is not None:
            if stats is not None:
                stats["mp_hits"] += 1
            return got
        if stats is not None:
            stats["mp_nodes"] += 1
        if isinstance(g, Omega):
            body = tf_of(g.a)
            out = mp_fn(body)
            if loops is not None and g.a is not ZERO:
                loops.append(LoopInfo(g.a, body, out))
        elif isinstance(g, OmegaCat):
            out = wp(tf_of(g.a), sf_of(g.f))
        else:
            assert isinstance(g, OmegaPlus)
            out = ctx.sf(land(sf_of(g.f).formula, sf_of(g.g).formula))
        sf_memo[id(g)] = out
        return out

    return sf_of(f)


def analyze(p: LabeledCfg, mp, solver: Solver,
            stats: dict | None = None) -> AnalysisResult:
    """Mortal precondition at the root of a labeled CFG."""
    expr = omega_path_expr(p.cfg)
    loops: list[LoopInfo] = []
    pre = eval_dag(expr, p.labels, mp, solver, p.ctx, loops=loops, stats=stats)
    return AnalysisResult(pre, loops)


# ---------------------------------------------------------------------------
# Interprocedural analysis


def build_icfg(p: InterProcProgram) -> tuple[Cfg, set[Edge]]:
    """The program graph plus a call-to-entry edge for every call site;
    returns the graph and the set of added interprocedural edges."""
    edges = list(p.edge_labels)
    interproc: set[Edge] = set()
    for (u, v), lab in p.edge_labels.items():
        if isinstance(lab, str):
            e = (u, p.entry[lab])
            if e not in p.edge_labels:
                interproc.add(e)
    edges.extend(sorted(interproc, key=lambda e: (str(e[0]), str(e[1]))))
    root = p.entry[p.main]
    return Cfg(tuple(p.vertices), tuple(edges), root), interproc


def _affine_hull_eqs(points: list[tuple[int, ...]], coords: tuple) -> list:
    """Equations of the affine hull of integer points, by exact elimination:
    the null space of the difference matrix gives the normal vectors."""
    d = len(coords)
    p0 = points[0]
    rows = [[Fraction(pt[i] - p0[i]) for i in range(d)] for pt in points[1:]]
    # row-reduce; track pivot columns
    pivots: list[int] = []
    r = 0
    for c in range(d):
        pivot = next((i for i in range(r, len(rows)) if rows[i][c]), None)
        if pivot is None:
            continue
        rows[r], rows[pivot] = rows[pivot], rows[r]
        inv = 1 / rows[r][c]
        rows[r] = [x * inv for x in rows[r]]
        for i in range(len(rows)):
            if i != r and rows[i][c]:
                f = rows[i][c]
                rows[i] = [x - f * y for x, y in zip(rows[i], rows[r])]
        pivots.append(c)
        r += 1
    eqs = []
    free = [c for c in range(d) if c not in pivots]
    for c in free:
        # null-space basis vector: 1 at c, back-substituted at pivots
        a = [Fraction(0)] * d
        a[c] = Fraction(1)
        for i, pc in enumerate(pivots):
            a[pc] = -rows[i][c]
        from math import lcm
        scale = lcm(*(x.denominator for x in a))
        ai = [int(x * scale) for x in a]
        rhs = sum(k * x for k, x in zip(ai, p0))
        t = sum((k * tvar(v) for k, v in zip(ai, coords) if k), tconst(0))
        eqs.append(eq(t, rhs))
    return eqs


def closure_rho(f: TransitionFormula, cfg: ClosureConfig,
                solver: Solver) -> TransitionFormula:
    """Entailed ordering predicates conjoined with the affine hull of f;
    an unsatisfiable input closes to false."""
    ctx = f.ctx
    if solver.is_sat(f.formula).is_unsat:
        return tf_zero(ctx)
    preds = cfg.predicates
    if preds is None:
        preds = ordering_predicates(ctx)
    kept = [p for p in preds if solver.entails(f.formula, p).is_yes]

    parts = list(kept)
    if cfg.affine_hull:
        coords = (*ctx.variables, *ctx.primed_variables)
        points: list[tuple[int, ...]] = []
        outside = f.formula
        for _ in range(len(coords) + 2):
            res = solver.is_sat(outside)
            if res.is_unknown:
                points = []  # give up on the hull; predicates still stand
                break
            if res.is_unsat:
                break
            m = res.model or {}
            points.append(tuple(m.get(v, 0) for v in coords))
            hull = _affine_hull_eqs(points, coords)
            if not hull:
                break
            outside = land(f.formula, lnot(land(*hull)))
        if points:
            parts.extend(_affine_hull_eqs(points, coords))
    return ctx.tf(land(*parts))


def _label_with(p: InterProcProgram, s: SummaryAssignment,
                interproc: set[Edge]) -> dict[Edge, TransitionFormula]:
    ctx = p.ctx
    gframe = ctx.tf(land(*(eq(tvar(primed(v)), tvar(v))
                           for v in p.global_vars)))
    labels: dict[Edge, TransitionFormula] = {}
    for e, lab in p.edge_labels.items():
        labels[e] = s[lab] if isinstance(lab, str) else lab
    for e in interproc:
        labels[e] = gframe
    return labels


def compute_summaries(p: InterProcProgram, cfg: ClosureConfig | None = None,
                      solver: Solver | None = None) -> SummaryAssignment:
    """Least fixpoint of per-procedure entry→exit summaries: evaluate the
    finite path expression with call edges labeled by the current summaries,
    project out locals, close, and conjoin the local frame.  Convergence is
    decided semantically; the closure's finite image guarantees it."""
    cfg = cfg or ClosureConfig()
    solver = solver or Solver()
    ctx = p.ctx
    locs = (*p.local_vars, *(primed(v) for v in p.local_vars))
    lframe = land(*(eq(tvar(primed(v)), tvar(v)) for v in p.local_vars))
    graph = Cfg(tuple(p.vertices), tuple(p.edge_labels), p.entry[p.main])

    def tf_eval(e: RegExpr, labels) -> TransitionFormula:
        memo: dict[int, TransitionFormula] = {}

        def go(x: RegExpr) -> TransitionFormula:
            got = memo.get(id(x))
            if got is not None:
                return got
            if x is ZERO:
                out = tf_zero(ctx)
            elif x is ONE:
                out = tf_identity(ctx)
            elif isinstance(x, Letter):
                out = labels[x.edge]
            elif isinstance(x, Plus):
                out = tf_choice(go(x.a), go(x.b))
            elif isinstance(x, Cat):
                out = compose(go(x.a), go(x.b))
            else:
                assert isinstance(x, Star)
                out = star(go(x.a), solver)
            memo[id(x)] = out
            return out

        return go(e)

    s: SummaryAssignment = {q: tf_zero(ctx) for q in p.procedures}
    for _ in range(cfg.max_iterations):
        labels = _label_with(p, s, set())
        nxt: SummaryAssignment = {}
        for q in p.procedures:
            pe = finite_path_expr(graph, p.entry[q], p.exit[q])
            m = tf_eval(pe, labels)
            projected = ctx.tf(exists_all(locs, m.formula))
            closed = closure_rho(projected, cfg, solver)
            nxt[q] = ctx.tf(land(closed.formula, lframe)
                            if closed.formula is not FALSE else FALSE)
        if all(solver.equivalent(s[q].formula, nxt[q].formula).is_yes
               for q in p.procedures):
            return nxt
        s = nxt
    raise ConfigError("summary fixpoint did not converge within the cap")


def analyze_proc(p: InterProcProgram, proc: str, mp, solver: Solver,
                 summaries: SummaryAssignment | None = None,
                 stats: dict | None = None) -> AnalysisResult:
    """Mortal precondition at a procedure's entry, over the interprocedural
    graph: call edges carry callee summaries, call-to-entry edges carry the
    global frame (locals are havocked on entry)."""
    if summaries is None:
        summaries = compute_summaries(p, solver=solver)
    icfg, interproc = build_icfg(p)
    if proc not in p.entry:
        raise ConfigError(f"unknown procedure {proc!r}")
    icfg = Cfg(icfg.vertices, icfg.edges, p.entry[proc])
    labels = _label_with(p, summaries, interproc)
    expr = omega_path_expr(icfg)
    loops: list[LoopInfo] = []
    pre = eval_dag(expr, labels, mp, solver, p.ctx, loops=loops, stats=stats)
    return AnalysisResult(pre, loops)
