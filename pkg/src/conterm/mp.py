"""Mortal precondition operators over transition formulas.

An operator maps a transition formula F to a state formula satisfied only by
states that admit no infinite F-run.  Provided here:

* `mp_llrf` — lexicographic linear ranking synthesis over a polyhedral
  abstraction of F (greedy Farkas scheme, exact rational arithmetic);
* `mp_exp` — termination by a symbolic bound on iteration counts;
* `mp_phase` — the phase-analysis combinator: partition the transitions of F
  by invariant predicates, build the reduced phase transition graph, and
  interpret its ω-path expression with a base operator;
* `combine_or` / `combine_ordered` — the ∨ and ordered products.

The CLI mini-syntax is `llrf`, `exp`, `or(a,b)`, `seq(a,b)`, `phase(a)`;
the default strategy is `phase(seq(llrf,exp))`.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import lcm
from typing import Callable

from . import presburger
from .logic import (
    FALSE, TRUE, And, Atom, Formula, Or,
    eq, evaluate, exists, forall_all, fresh, free_vars, geq, gt, implies,
    land, leq, lnot, lor, lt, primed, substitute, term_eval, tconst, tscale,
    tvar,
)
from .lp import feasible as lp_feasible
from .pathexpr import Cfg
from .solver import Solver
from .tf import (
    StateFormula, TransitionFormula, VarContext, _directions, compose, exp,
    pre_states, tf_identity,
)

__all__ = [
    "MpOperator", "Llrf", "ExpOp", "OrOp", "OrderedOp", "PhaseOp",
    "parse_operator", "DEFAULT_OPERATOR", "as_function",
    "direction_predicates", "invariant_preds",
    "PhaseGraph", "phase_transition_graph",
    "mp_llrf", "mp_exp", "mp_phase", "combine_or", "combine_ordered",
    "LexRankingWitness", "llrf_witness",
]

MpFn = Callable[[TransitionFormula], StateFormula]


# ---------------------------------------------------------------------------
# Strategy values and their mini-syntax


@dataclass(frozen=True)
class MpOperator:
    pass


@dataclass(frozen=True)
class Llrf(MpOperator):
    pass


@dataclass(frozen=True)
class ExpOp(MpOperator):
    pass


@dataclass(frozen=True)
class OrOp(MpOperator):
    a: MpOperator
    b: MpOperator


@dataclass(frozen=True)
class OrderedOp(MpOperator):
    a: MpOperator
    b: MpOperator


@dataclass(frozen=True)
class PhaseOp(MpOperator):
    base: MpOperator


DEFAULT_OPERATOR = "phase(seq(llrf,exp))"


class OperatorSyntaxError(ValueError):
    pass


def parse_operator(text: str) -> MpOperator:
    """Parse `llrf | exp | or(a,b) | seq(a,b) | phase(a)`."""
    s = text.replace(" ", "")
    pos = 0

    def fail(msg):
        raise OperatorSyntaxError(f"{msg} at position {pos} in {text!r}")

    def ident():
        nonlocal pos
        start = pos
        while pos < len(s) and s[pos].isalpha():
            pos += 1
        if start == pos:
            fail("expected operator name")
        return s[start:pos]

    def expect(ch):
        nonlocal pos
        if pos >= len(s) or s[pos] != ch:
            fail(f"expected {ch!r}")
        pos += 1

    def expr() -> MpOperator:
        name = ident()
        if name == "llrf":
            return Llrf()
        if name == "exp":
            return ExpOp()
        if name in ("or", "seq"):
            expect("(")
            a = expr()
            expect(",")
            b = expr()
            expect(")")
            return (OrOp if name == "or" else OrderedOp)(a, b)
        if name == "phase":
            expect("(")
            a = expr()
            expect(")")
            if _contains_phase(a):
                fail("phase may not be nested inside phase")
            return PhaseOp(a)
        fail(f"unknown operator {name!r}")

    out = expr()
    if pos != len(s):
        fail("trailing input")
    return out


def _contains_phase(op: MpOperator) -> bool:
    if isinstance(op, PhaseOp):
        return True
    if isinstance(op, (OrOp, OrderedOp)):
        return _contains_phase(op.a) or _contains_phase(op.b)
    return False


def as_function(op: MpOperator, solver: Solver) -> MpFn:
    if isinstance(op, Llrf):
        return lambda f: mp_llrf(f, solver)
    if isinstance(op, ExpOp):
        return lambda f: mp_exp(f, solver)
    if isinstance(op, OrOp):
        return combine_or(as_function(op.a, solver), as_function(op.b, solver))
    if isinstance(op, OrderedOp):
        return combine_ordered(as_function(op.a, solver),
                               as_function(op.b, solver))
    assert isinstance(op, PhaseOp)
    base = as_function(op.base, solver)
    return lambda f: mp_phase(f, base, solver)


# ---------------------------------------------------------------------------
# Lexicographic linear ranking synthesis


@dataclass(frozen=True)
class LexRankingWitness:
    """Functionals c·x (coefficients over ctx.variables) in lexicographic
    order, with the abstraction disjuncts each one ranks."""
    functionals: tuple[tuple[tuple[int, ...], tuple[int, ...]], ...]
    # each entry: (coefficients, indices of ranked disjuncts)


class _Polyhedron:
    """Rows a·y ≤ b over coordinates y = (vars, primed vars, extras)."""

    def __init__(self, dims: tuple[Variable, ...]):
        self.dims = dims
        self.index = {v: i for i, v in enumerate(dims)}
        self.rows: list[tuple[list[int], int]] = []
        self.source: Formula = TRUE  # the concrete region it abstracts

    def add_le(self, term) -> None:
        # term ≤ 0, i.e. coeffs·y ≤ -const
        row = [0] * len(self.dims)
        for v, c in term.coeffs:
            row[self.index[v]] = c
        self.rows.append((row, -term.const))

    def add_literal(self, lit: Formula) -> None:
        if isinstance(lit, Atom):
            self.add_le(lit.term)
            if lit.op == "eq":
                self.add_le(tscale(-1, lit.term))
        # divisibility literals are dropped (sound relaxation)


def _sign_cells(f: TransitionFormula, solver: Solver,
                cap: int = 16) -> list[_Polyhedron] | None:
    """Cover F by convex polyhedra: fix the sign of every atom of a
    quantifier-free equivalent according to successive models."""
    ctx = f.ctx
    try:
        qf = presburger.nnf(presburger.qe(f.formula, solver.config.qe_budget))
    except (presburger.BudgetExceeded, RecursionError):
        return None
    atoms: list[Atom] = []
    seen_atoms: set[int] = set()

    def collect(g: Formula) -> None:
        if isinstance(g, (And, Or)):
            for a in g.args:
                collect(a)
        elif isinstance(g, Atom) and id(g) not in seen_atoms:
            seen_atoms.add(id(g))
            atoms.append(g)

    collect(qf)
    extras = sorted(free_vars(qf) - set(ctx.variables)
                    - set(ctx.primed_variables), key=lambda v: v.sort_key)
    dims = (*ctx.variables, *ctx.primed_variables, *extras)

    cells: list[_Polyhedron] = []
    blocked = qf
    while True:
        res = solver.is_sat(blocked)
        if res.is_unknown:
            return None
        if res.is_unsat:
            return cells
        if len(cells) >= cap:
            return None
        model = {v: (res.model or {}).get(v, 0) for v in free_vars(qf)}
        lits: list[Formula] = []
        for a in atoms:
            val = term_eval(a.term, model)
            if a.op == "le":
                lits.append(a if val <= 0 else geq(a.term, 1))
            elif val == 0:
                lits.append(a)
            elif val > 0:
                lits.append(geq(a.term, 1))
            else:
                lits.append(leq(a.term, -1))
        poly = _Polyhedron(dims)
        for lit in lits:
            poly.add_literal(lit)
        poly.source = land(f.formula, *lits)
        cells.append(poly)
        blocked = land(blocked, lnot(land(*lits)))


def _hull_cell(f: TransitionFormula, solver: Solver) -> _Polyhedron | None:
    """Single template hull over (x, x′): fallback when sign-splitting
    produces too many cells."""
    ctx = f.ctx
    dims = (*ctx.variables, *ctx.primed_variables)
    poly = _Polyhedron(dims)
    poly.source = f.formula
    for a in _directions(len(dims)):
        t = sum((tscale(c, tvar(v)) for c, v in zip(a, dims) if c), tconst(0))
        bound = solver.sup_bound(f.formula, t)
        if bound.kind == "unknown":
            return None
        if bound.kind == "finite":
            poly.rows.append((list(a), bound.value))
    return poly


def _farkas_certified(poly: _Polyhedron, d: list[Fraction | int],
                      rhs) -> bool:
    """Is d·y ≥ rhs valid over the (nonempty) polyhedron?"""
    m = len(poly.rows)
    if m == 0:
        return all(c == 0 for c in d) and rhs <= 0
    neqs = [([poly.rows[r][0][k] for r in range(m)], -d[k])
            for k in range(len(poly.dims))]
    ineq = [([poly.rows[r][1] for r in range(m)], -rhs)]
    return lp_feasible(m, neqs, ineq, set(range(m))) is not None


def _functional_d(poly: _Polyhedron, c: list, ctx: VarContext,
                  delta: bool) -> list:
    """The row vector of c·x − c·x′ (delta) or c·x over poly's coordinates."""
    d = [0] * len(poly.dims)
    for k, v in enumerate(ctx.variables):
        d[poly.index[v]] = c[k]
        if delta:
            d[poly.index[primed(v)]] = -c[k]
    return d


def _float_lp(total: int, nfree: int, eqs,
              ineqs) -> tuple[int, list[Fraction] | None]:
    """Floating-point feasibility for the joint ranking LP; returns the
    solver status and a rationalized candidate for the first nfree
    coordinates (status 0 = found, 2 = infeasible, else inconclusive)."""
    from scipy.optimize import linprog
    a_eq = [row for row, _ in eqs]
    b_eq = [b for _, b in eqs]
    a_ub = [row for row, _ in ineqs]
    b_ub = [b for _, b in ineqs]
    bounds = [(None, None)] * nfree + [(0, None)] * (total - nfree)
    res = linprog([0.0] * total, A_ub=a_ub or None, b_ub=b_ub or None,
                  A_eq=a_eq or None, b_eq=b_eq or None, bounds=bounds,
                  method="highs")
    if res.status != 0:
        return res.status, None
    return 0, [Fraction(x).limit_denominator(64) for x in res.x[:nfree]]


def _find_functional(cells: list[_Polyhedron], j: int, ctx: VarContext,
                     exact: bool = False) -> list[int] | None:
    """One joint LP: c non-increasing on every cell, decreasing (by ≥1) and
    bounded below (by 0) on cell j.  Farkas multipliers are the unknowns."""
    n = len(ctx.variables)
    sizes = [len(p.rows) for p in cells]
    nu_size = sizes[j]
    total = n + sum(sizes) + nu_size
    offs = []
    o = n
    for s in sizes:
        offs.append(o)
        o += s
    nu_off = o

    eqs, ineqs = [], []
    nonneg = set(range(n, total))

    def d_row(poly: _Polyhedron, dim_index: int, delta: bool):
        # coefficient of c_k in d[dim_index]
        out = [0] * n
        for k, v in enumerate(ctx.variables):
            if poly.index[v] == dim_index:
                out[k] += 1
            if delta and poly.index[primed(v)] == dim_index:
                out[k] -= 1
        return out

    for i, poly in enumerate(cells):
        m = sizes[i]
        if m == 0:
            return None  # unconstrained cell cannot be ranked
        for dim in range(len(poly.dims)):
            row = [0] * total
            row[:n] = d_row(poly, dim, delta=True)
            for r in range(m):
                row[offs[i] + r] = poly.rows[r][0][dim]
            eqs.append((row, 0))
        brow = [0] * total
        for r in range(m):
            brow[offs[i] + r] = poly.rows[r][1]
        ineqs.append((brow, -1 if i == j else 0))
    # boundedness of c·x on cell j
    pj = cells[j]
    for dim in range(len(pj.dims)):
        row = [0] * total
        row[:n] = d_row(pj, dim, delta=False)
        for r in range(nu_size):
            row[nu_off + r] = pj.rows[r][0][dim]
        eqs.append((row, 0))
    brow = [0] * total
    for r in range(nu_size):
        brow[nu_off + r] = pj.rows[r][1]
    ineqs.append((brow, 0))

    c = None
    if not exact:
        status, c = _float_lp(total, n, eqs, ineqs)
        if status == 2:  # trusted infeasible
            return None
        exact = status != 0  # numeric trouble: redo exactly
    if exact:
        sol = lp_feasible(total, eqs, ineqs, nonneg)
        c = sol[:n] if sol is not None else None
    if c is None or all(x == 0 for x in c):
        return None
    scale = lcm(*(f.denominator for f in c)) if c else 1
    return [int(f * scale) for f in c]


def llrf_witness(f: TransitionFormula,
                 solver: Solver) -> LexRankingWitness | None:
    """Greedy lexicographic synthesis; None when no witness is found."""
    ctx = f.ctx
    cells = _sign_cells(f, solver)
    if cells is None:
        hull = _hull_cell(f, solver)
        cells = [hull] if hull is not None else None
    if cells is None:
        return None
    if not cells:
        return LexRankingWitness(())

    def certify(c: list[int], remaining: list[int]) -> list[int] | None:
        """Cells provably ranked by c (decrease ≥ 1, bounded below), with the
        certificates re-verified against the concrete cell formulas; None if
        anything fails to check out."""
        ranked = []
        for i in remaining:
            d_delta = _functional_d(cells[i], c, ctx, delta=True)
            d_plain = _functional_d(cells[i], c, ctx, delta=False)
            if (_farkas_certified(cells[i], d_delta, 1)
                    and _farkas_certified(cells[i], d_plain, 0)):
                ranked.append(i)
        if not ranked:
            return None
        cterm = sum((tscale(k, tvar(v)) for k, v in zip(c, ctx.variables) if k),
                    tconst(0))
        dterm = cterm - sum((tscale(k, tvar(primed(v)))
                             for k, v in zip(c, ctx.variables) if k), tconst(0))
        for i in remaining:
            need = geq(dterm, 1) if i in ranked else geq(dterm, 0)
            if not solver.entails(cells[i].source, need).is_yes:
                return None
            if i in ranked and not solver.entails(cells[i].source,
                                                  geq(cterm, 0)).is_yes:
                return None
        return ranked

    remaining = list(range(len(cells)))
    functionals = []
    while remaining:
        step = None
        for j in range(len(remaining)):
            sub = [cells[i] for i in remaining]
            c = _find_functional(sub, j, ctx)
            ranked = certify(c, remaining) if c is not None else None
            if ranked is None and c is not None:
                # the floating-point candidate did not certify; redo exactly
                c = _find_functional(sub, j, ctx, exact=True)
                ranked = certify(c, remaining) if c is not None else None
            if ranked is not None:
                step = (c, ranked)
                break
        if step is None:
            return None
        c, ranked = step
        functionals.append((tuple(c), tuple(ranked)))
        remaining = [i for i in remaining if i not in ranked]
    return LexRankingWitness(tuple(functionals))


def mp_llrf(f: TransitionFormula, solver: Solver) -> StateFormula:
    """true when a lexicographic linear ranking witness is found for a
    polyhedral abstraction of f, else the complement of f's pre-states."""
    ctx = f.ctx
    if solver.is_sat(f.formula).is_unsat:
        return ctx.sf(TRUE)
    if llrf_witness(f, solver) is not None:
        return ctx.sf(TRUE)
    return ctx.sf(lnot(pre_states(f).formula))


# ---------------------------------------------------------------------------
# Termination by bounded iteration count


def mp_exp(f: TransitionFormula, solver: Solver) -> StateFormula:
    """States from which the iteration count of f is bounded: there is a
    k ≥ 0 such that no k-step over-approximation can take another step."""
    ctx = f.ctx
    if solver.is_sat(f.formula).is_unsat:
        return ctx.sf(TRUE)
    k = fresh("k", "parameter")
    e = exp(f, k, solver).formula
    dprimes = {v: fresh(v.name, "skolem") for v in ctx.variables}
    g = substitute(f.formula,
                   {**{v: tvar(primed(v)) for v in ctx.variables},
                    **{primed(v): tvar(dprimes[v]) for v in ctx.variables}})
    body = forall_all((*ctx.primed_variables, *dprimes.values()),
                      implies(e, lnot(g)))
    return ctx.sf(exists(k, land(geq(tvar(k), 0), body)))


# ---------------------------------------------------------------------------
# Phase analysis


def direction_predicates(ctx: VarContext) -> list[TransitionFormula]:
    """x ⋈ x′ for every variable and ⋈ ∈ {<, =, >}."""
    out = []
    for v in ctx.variables:
        x, xp = tvar(v), tvar(primed(v))
        out.extend([ctx.tf(lt(x, xp)), ctx.tf(eq(x, xp)), ctx.tf(gt(x, xp))])
    return out


def invariant_preds(f: TransitionFormula,
                    preds: list[TransitionFormula],
                    solver: Solver) -> list[TransitionFormula]:
    """Predicates p with (F∧p)∘(F∧¬p) inconsistent: once p holds along an
    F-run, it holds forever.  Unknown counts as not invariant."""
    ctx = f.ctx
    out = []
    for p in preds:
        fp = ctx.tf(land(f.formula, p.formula))
        fnp = ctx.tf(land(f.formula, lnot(p.formula)))
        if solver.is_sat(compose(fp, fnp).formula).is_unsat:
            out.append(p)
    return out


@dataclass
class PhaseGraph:
    """Reduced phase transition graph: cell vertices 0..n-1 plus start "s"."""
    cfg: Cfg
    labels: dict[tuple, TransitionFormula]
    cells: list[TransitionFormula]
    degenerate: bool = False  # fallback single-cell graph


_PHASE_CELL_CAP = 64


def phase_transition_graph(f: TransitionFormula,
                           preds: list[TransitionFormula],
                           solver: Solver) -> PhaseGraph:
    ctx = f.ctx
    inv = invariant_preds(f, preds, solver)

    # enumerate cells by model
    cells: list[tuple[tuple[int, ...], TransitionFormula]] = []
    blocked: Formula = f.formula
    degenerate = False
    while True:
        res = solver.is_sat(blocked)
        if res.is_unsat:
            break
        if res.is_unknown or len(cells) >= _PHASE_CELL_CAP:
            degenerate = True
            break
        need = set(free_vars(f.formula))
        for p in inv:
            need |= free_vars(p.formula)
        model = {v: (res.model or {}).get(v, 0) for v in need}
        signs = tuple(1 if evaluate(p.formula, model) else 0 for p in inv)
        lits = [p.formula if s else lnot(p.formula)
                for p, s in zip(inv, signs)]
        cells.append((signs, ctx.tf(land(f.formula, *lits))))
        blocked = land(blocked, lnot(land(*lits)) if lits else FALSE)

    if degenerate:
        cells = [((), f)]

    # sort by number of positive literals; ties lexicographically
    cells.sort(key=lambda sc: (sum(sc[0]), sc[0]))
    cell_fs = [c for _, c in cells]
    n = len(cell_fs)

    # reduced edges via an incremental reachability bitmatrix
    reach = [1 << i for i in range(n)]
    edges: list[tuple] = []
    for i in range(1, n):
        for j in range(i - 1, -1, -1):
            if (reach[j] >> i) & 1:
                continue
            if degenerate or solver.is_sat(
                    compose(cell_fs[j], cell_fs[i]).formula).is_sat:
                edges.append((j, i))
                for k in range(n):
                    if (reach[k] >> j) & 1:
                        reach[k] |= reach[i]
    has_in = {i for _, i in edges}
    start_edges = [("s", i) for i in range(n) if i not in has_in]
    self_loops = [(i, i) for i in range(n)]

    one = tf_identity(ctx)
    labels: dict[tuple, TransitionFormula] = {}
    for e in edges + start_edges:
        labels[e] = one
    for i, i2 in self_loops:
        labels[(i, i2)] = cell_fs[i]
    cfg = Cfg(("s", *range(n)),
              tuple(start_edges + edges + self_loops), "s")
    return PhaseGraph(cfg, labels, cell_fs, degenerate)


def mp_phase(f: TransitionFormula, base: MpFn, solver: Solver,
             preds: list[TransitionFormula] | None = None) -> StateFormula:
    """Interpret the ω-path expression of the phase transition graph,
    using `base` as the ω operator."""
    ctx = f.ctx
    if solver.is_sat(f.formula).is_unsat:
        return ctx.sf(TRUE)
    try:
        # a quantifier-free equivalent keeps the many satisfiability queries
        # below from re-eliminating the same inner quantifiers
        f = ctx.tf(presburger.qe(f.formula, solver.config.qe_budget))
    except (presburger.BudgetExceeded, RecursionError):
        pass
    if preds is None:
        preds = direction_predicates(ctx)
    pg = phase_transition_graph(f, preds, solver)
    from .interp import eval_dag
    from .pathexpr import omega_path_expr
    return eval_dag(omega_path_expr(pg.cfg), pg.labels, base, solver, ctx=ctx)


# ---------------------------------------------------------------------------
# Combinators


def combine_or(mp1: MpFn, mp2: MpFn) -> MpFn:
    def run(f: TransitionFormula) -> StateFormula:
        return f.ctx.sf(lor(mp1(f).formula, mp2(f).formula))
    return run


def combine_ordered(mp1: MpFn, mp2: MpFn) -> MpFn:
    def run(f: TransitionFormula) -> StateFormula:
        s1 = mp1(f)
        return mp2(f.ctx.tf(land(f.formula, lnot(s1.formula))))
    return run
