"""The regular algebra of transition formulas.

A transition formula relates pre-states (unprimed variables) to post-states
(primed copies).  The iteration operator `star` over-approximates reflexive
transitive closure: extract difference-bound recurrences with a template hull
(directions ±δx and ±(δx±δy); each bound is a supremum, hence monotone in the
formula), then close them under a symbolic iteration count.
"""
from __future__ import annotations

from dataclasses import dataclass

from .logic import (
    FALSE, Formula, Term, Variable,
    eq, exists_all, forall_all, fresh, free_vars, geq, implies, land,
    leq, lor, primed, rename, substitute, tconst, tscale, tvar, var,
)
from .presburger import simplify_formula
from .solver import Solver

__all__ = [
    "VarContext", "TransitionFormula", "StateFormula", "RecurrenceSystem",
    "tf_identity", "tf_zero", "tf_choice", "compose", "wp",
    "pre_states", "post_states", "delta_hull", "exp", "star",
]


class ContextMismatch(Exception):
    pass


@dataclass(frozen=True)
class VarContext:
    """The analysis vocabulary: program variables in a fixed order."""
    variables: tuple[Variable, ...]

    def __post_init__(self):
        assert all(v.kind == "program" for v in self.variables)

    @staticmethod
    def of_names(*names: str) -> "VarContext":
        return VarContext(tuple(var(n) for n in names))

    def prime(self, v: Variable) -> Variable:
        return primed(v)

    @property
    def primed_variables(self) -> tuple[Variable, ...]:
        return tuple(primed(v) for v in self.variables)

    def delta(self, v: Variable) -> Variable:
        return Variable(f"{v.name}.delta", "parameter")

    def tf(self, formula: Formula) -> "TransitionFormula":
        return TransitionFormula(formula, self)

    def sf(self, formula: Formula) -> "StateFormula":
        return StateFormula(formula, self)


@dataclass(frozen=True)
class TransitionFormula:
    formula: Formula
    ctx: VarContext

    def __post_init__(self):
        allowed = set(self.ctx.variables) | set(self.ctx.primed_variables)
        extra = {v for v in free_vars(self.formula) - allowed
                 if v.kind in ("program", "primed")}
        assert not extra, f"free variables outside the context: {extra}"


@dataclass(frozen=True)
class StateFormula:
    formula: Formula
    ctx: VarContext

    def __post_init__(self):
        extra = {v for v in free_vars(self.formula) - set(self.ctx.variables)
                 if v.kind in ("program", "primed")}
        assert not extra, f"free variables outside the context: {extra}"


@dataclass(frozen=True)
class RecurrenceSystem:
    """Rows A_i x' >= A_i x + b_i, each entailed by the source formula."""
    rows: tuple[tuple[tuple[int, ...], int], ...]  # (coeffs over ctx.variables, b)
    vacuous: bool = False  # source formula was unsatisfiable


def _same_ctx(*fs) -> VarContext:
    ctx = fs[0].ctx
    if any(f.ctx is not ctx for f in fs):
        raise ContextMismatch("operands come from different analysis contexts")
    return ctx


# ---------------------------------------------------------------------------
# Regular-algebra operations


def tf_identity(ctx: VarContext) -> TransitionFormula:
    return ctx.tf(land(*(eq(tvar(primed(v)), tvar(v)) for v in ctx.variables)))


def tf_zero(ctx: VarContext) -> TransitionFormula:
    return ctx.tf(FALSE)


def tf_choice(f1: TransitionFormula, f2: TransitionFormula) -> TransitionFormula:
    ctx = _same_ctx(f1, f2)
    return ctx.tf(lor(f1.formula, f2.formula))


def compose(f1: TransitionFormula, f2: TransitionFormula) -> TransitionFormula:
    """Relational composition through a fresh intermediate state."""
    ctx = _same_ctx(f1, f2)
    mid = {v: fresh(v.name) for v in ctx.variables}
    left = substitute(f1.formula, {primed(v): tvar(w) for v, w in mid.items()})
    right = substitute(f2.formula, {v: tvar(w) for v, w in mid.items()})
    body = exists_all(mid.values(), land(left, right))
    return ctx.tf(simplify_formula(body))


def wp(f: TransitionFormula, s: StateFormula) -> StateFormula:
    ctx = _same_ctx(f, s)
    post = substitute(s.formula, {v: tvar(primed(v)) for v in ctx.variables})
    body = forall_all(ctx.primed_variables, implies(f.formula, post))
    return ctx.sf(body)


def pre_states(f: TransitionFormula) -> StateFormula:
    ctx = f.ctx
    body = exists_all(ctx.primed_variables, f.formula)
    return ctx.sf(simplify_formula(body))


def post_formula(f: TransitionFormula) -> Formula:
    """∃Var.F — a formula over the primed variables (used inside exp)."""
    return simplify_formula(exists_all(f.ctx.variables, f.formula))


def post_states(f: TransitionFormula) -> StateFormula:
    ctx = f.ctx
    body = rename(post_formula(f), {primed(v): v for v in ctx.variables})
    return ctx.sf(body)


# ---------------------------------------------------------------------------
# Iteration


_DIRS_CACHE: dict[int, list[tuple[int, ...]]] = {}


def _directions(n: int) -> list[tuple[int, ...]]:
    dirs = _DIRS_CACHE.get(n)
    if dirs is not None:
        return dirs
    dirs = []
    for i in range(n):
        for s in (1, -1):
            d = [0] * n
            d[i] = s
            dirs.append(tuple(d))
    for i in range(n):
        for j in range(i + 1, n):
            for si, sj in ((1, -1), (-1, 1), (1, 1), (-1, -1)):
                d = [0] * n
                d[i], d[j] = si, sj
                dirs.append(tuple(d))
    _DIRS_CACHE[n] = dirs
    return dirs


_hull_cache: dict[tuple[int, int], RecurrenceSystem] = {}


def delta_hull(f: TransitionFormula, solver: Solver) -> RecurrenceSystem:
    """Template hull of the difference vector x' - x."""
    key = (id(f.formula), id(solver))
    got = _hull_cache.get(key)
    if got is not None:
        return got
    ctx = f.ctx
    if solver.is_sat(f.formula).is_unsat:
        out = RecurrenceSystem((), vacuous=True)
        _hull_cache[key] = out
        return out
    deltas = [ctx.delta(v) for v in ctx.variables]
    defs = land(*(eq(tvar(d), tvar(primed(v)) - tvar(v))
                  for d, v in zip(deltas, ctx.variables)))
    g = land(f.formula, defs)
    nv = len(ctx.variables)

    def dir_term(a: tuple[int, ...]) -> Term:
        return sum((tscale(c, tvar(d)) for c, d in zip(a, deltas) if c), tconst(0))

    def inf_val(a: tuple[int, ...]) -> int | None:
        bound = solver.sup_bound(g, tscale(-1, dir_term(a)))
        return -bound.value if bound.kind == "finite" else None

    # per-variable bounds first, then pair directions; a pair row whose bound
    # is the sum of its unit bounds is implied by them (for k >= 0) and dropped
    unit_bound: dict[tuple[int, int], int | None] = {}
    rows = []
    for a in _directions(nv):
        nz = [(i, s) for i, s in enumerate(a) if s]
        if len(nz) == 1:
            b = inf_val(a)
            unit_bound[nz[0]] = b
            if b is not None:
                rows.append((a, b))
            continue
        (i, si), (j, sj) = nz
        bi, bj = unit_bound.get((i, si)), unit_bound.get((j, sj))
        if bi is not None and bj is not None:
            tight = solver.is_sat(land(g, leq(dir_term(a), bi + bj)))
            if tight.is_sat:
                continue  # infimum equals bi+bj: implied
        b = inf_val(a)
        if b is not None and not (bi is not None and bj is not None and b <= bi + bj):
            rows.append((a, b))
    out = RecurrenceSystem(tuple(rows))
    _hull_cache[key] = out
    return out


def _row_formula(ctx: VarContext, a: tuple[int, ...], rhs: Term) -> Formula:
    lhs = sum((tscale(c, tvar(primed(v)) - tvar(v))
               for c, v in zip(a, ctx.variables) if c), tconst(0))
    return geq(lhs, rhs)


def exp(f: TransitionFormula, k: Variable, solver: Solver) -> TransitionFormula:
    """A formula entailed by every n-fold composition of f at k = n."""
    ctx = f.ctx
    hull = delta_hull(f, solver)
    ident = tf_identity(ctx).formula
    guard = lor(ident, land(pre_states(f).formula, post_formula(f)))
    rows = land(*(_row_formula(ctx, a, tscale(b, tvar(k))) for a, b in hull.rows))
    return ctx.tf(land(guard, rows))


def star(f: TransitionFormula, solver: Solver) -> TransitionFormula:
    """Over-approximation of the reflexive transitive closure of f."""
    ctx = f.ctx
    k = fresh("k", "parameter")
    body = land(geq(tvar(k), 0), exp(f, k, solver).formula)
    return ctx.tf(exists_all([k], body))
