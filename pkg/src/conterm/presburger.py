"""Decision procedure for quantified linear integer arithmetic.

The engine behind the solver module.  Quantifier elimination in the style of
Cooper, organized around *cubes* (conjunctions of literals): formulas are put
in disjunctive normal form, each cube is pruned by an exact rational
feasibility check (LP infeasible implies integer infeasible), and one
variable at a time is eliminated per cube.  Satisfiability explores cubes
depth-first, so satisfiable queries short-circuit quickly.  Everything is
exact; a work budget turns pathological inputs into BudgetExceeded instead
of a hang.
"""
from __future__ import annotations

import random
from fractions import Fraction
from math import lcm

from . import lp
from .logic import (
    FALSE, TRUE, And, Atom, Dvd, Formula, Not, Or, Quant, Term, Variable,
    dvd, evaluate, evaluate_flagged, free_vars, land, leq, lnot, lor,
    substitute, tconst, tscale, tsub, tvar,
)

__all__ = ["BudgetExceeded", "qe", "decide", "get_model", "simplify_formula",
           "nnf", "set_default_budget"]


class BudgetExceeded(Exception):
    """Raised when an elimination exceeds its work budget."""


_DEFAULT_BUDGET = 400_000


def set_default_budget(n: int) -> None:
    global _DEFAULT_BUDGET
    _DEFAULT_BUDGET = n


class _Work:
    __slots__ = ("left",)

    def __init__(self, limit: int):
        self.left = limit

    def charge(self, n: int) -> None:
        self.left -= n
        if self.left < 0:
            raise BudgetExceeded()


# ---------------------------------------------------------------------------
# Negation normal form (quantifier-free formulas)


def nnf(f: Formula) -> Formula:
    if isinstance(f, Not):
        g = f.arg
        if isinstance(g, And):
            return lor(*(nnf(lnot(a)) for a in g.args))
        if isinstance(g, Or):
            return land(*(nnf(lnot(a)) for a in g.args))
        raise ValueError(f"nnf: unexpected negation of {g!r}")
    if isinstance(f, And):
        return land(*(nnf(a) for a in f.args))
    if isinstance(f, Or):
        return lor(*(nnf(a) for a in f.args))
    return f


# ---------------------------------------------------------------------------
# Equality-propagation simplifier (equivalence-preserving)


def _solve_unit_eq(v: Variable, args: tuple[Formula, ...]):
    """Find a conjunct pinning v with unit coefficient; return (conjunct, t)."""
    for a in args:
        if isinstance(a, Atom) and a.op == "eq":
            c = a.term.coeff(v)
            if c in (1, -1):
                rest = tsub(a.term, tscale(c, tvar(v)))
                sol = tscale(-1, rest) if c == 1 else rest
                return a, sol
    return None


def simplify_formula(f: Formula) -> Formula:
    """Substitute away existentially quantified variables that are pinned by a
    top-level equality.  Keeps formulas small after relational composition."""
    if isinstance(f, And):
        return land(*(simplify_formula(a) for a in f.args))
    if isinstance(f, Or):
        return lor(*(simplify_formula(a) for a in f.args))
    if isinstance(f, Not):
        return lnot(simplify_formula(f.arg))
    if isinstance(f, Quant):
        body = simplify_formula(f.body)
        v = f.v
        if v not in free_vars(body):
            return body
        if f.q == "exists":
            args = body.args if isinstance(body, And) else (body,)
            hit = _solve_unit_eq(v, args)
            if hit is not None:
                a, sol = hit
                rest = land(*(b for b in args if b is not a))
                out = substitute(rest, {v: sol})
                return simplify_formula(out) if v in free_vars(rest) else out
        from .logic import exists, forall
        return (exists if f.q == "exists" else forall)(v, body)
    return f


# ---------------------------------------------------------------------------
# Cubes: conjunctions of Atom/Dvd literals


def _cube_atoms(c: Formula) -> tuple[Formula, ...]:
    return c.args if isinstance(c, And) else (c,)


def _cube_key(c: Formula) -> frozenset[int]:
    return frozenset(id(a) for a in _cube_atoms(c))


def _quick_infeasible(atoms: list[Atom]) -> bool:
    """Detect opposite-direction bound conflicts without an LP call."""
    tightest: dict[tuple, int] = {}  # coeff vector -> largest const c in t+c <= 0
    for a in atoms:
        views = [(a.term.coeffs, a.term.const)]
        if a.op == "eq":
            views.append((tscale(-1, a.term).coeffs, -a.term.const))
        for vec, c in views:
            if c > tightest.get(vec, c - 1):
                tightest[vec] = c
    for vec, c in tightest.items():
        neg = tuple((v, -k) for v, k in vec)
        cn = tightest.get(neg)
        if cn is not None and c + cn > 0:
            return True
    return False


_lp_cache: dict[frozenset[int], bool] = {}

_linprog = None


def _float_feasible(nvars: int, eqs, ineqs) -> bool | None:
    """Fast floating-point feasibility; True is trusted, anything else is not
    (a cube may only be pruned on an exact infeasibility certificate)."""
    got = lp.float_feasible(nvars, eqs, ineqs)
    if got is not None:
        return got
    global _linprog
    if _linprog is None:
        from scipy.optimize import linprog
        _linprog = linprog
    kw = {"bounds": (None, None), "method": "highs"}
    if eqs:
        kw["A_eq"] = [r for r, _ in eqs]
        kw["b_eq"] = [b for _, b in eqs]
    if ineqs:
        kw["A_ub"] = [r for r, _ in ineqs]
        kw["b_ub"] = [b for _, b in ineqs]
    try:
        res = _linprog([0.0] * nvars, **kw)
    except Exception:
        return None
    if res.status == 0:
        return True
    if res.status == 2:
        return False
    return None


def _interval_feasible(eqs, ineqs) -> bool | None:
    """Exact rational feasibility by interval propagation; decides cubes
    whose rows each mention one variable, detects bound clashes otherwise."""
    lo: dict[int, Fraction] = {}
    hi: dict[int, Fraction] = {}
    multi = False
    rows = [(r, b, True) for r, b in eqs] + [(r, b, False) for r, b in ineqs]
    for row, b, is_eq in rows:
        nz = [(i, a) for i, a in enumerate(row) if a]
        if not nz:
            if b < 0 or (is_eq and b != 0):
                return False
            continue
        if len(nz) > 1:
            multi = True
            continue
        (i, a), bound = nz[0], Fraction(b)
        views = [(a, bound)] + ([(-a, -bound)] if is_eq else [])
        for a_, b_ in views:
            if a_ > 0:  # a*v <= b
                v = b_ / a_
                if i not in hi or v < hi[i]:
                    hi[i] = v
            else:
                v = b_ / a_
                if i not in lo or v > lo[i]:
                    lo[i] = v
    for i in set(lo) & set(hi):
        if lo[i] > hi[i]:
            return False
    return None if multi else True


def _cube_feasible(c: Formula, work: _Work | None = None) -> bool:
    """Exact rational relaxation check; False certifies integer infeasibility."""
    if c is FALSE:
        return False
    if c is TRUE:
        return True
    atoms = [a for a in _cube_atoms(c) if isinstance(a, Atom)]
    if len(atoms) < 2:
        return True
    key = _cube_key(c)
    got = _lp_cache.get(key)
    if got is not None:
        return got
    if _quick_infeasible(atoms):
        _lp_cache[key] = False
        return False
    if work is not None:
        work.charge(len(atoms))
    vs = sorted({v for a in atoms for v in a.term.vars()},
                key=lambda v: v.sort_key)
    idx = {v: i for i, v in enumerate(vs)}
    eqs, ineqs = [], []
    for a in atoms:
        row = [0] * len(vs)
        for v, co in a.term.coeffs:
            row[idx[v]] = co
        (eqs if a.op == "eq" else ineqs).append((row, -a.term.const))
    exact = _interval_feasible(eqs, ineqs)
    if exact is not None:
        _lp_cache[key] = exact
        return exact
    ok = _float_feasible(len(vs), eqs, ineqs)
    if ok is not True:
        # only an exact certificate may prune a cube; when the system is too
        # large for exact rational arithmetic, keep the cube (sound, just
        # unpruned)
        rows = [*eqs, *ineqs]
        big = (len(atoms) > 16
               or any(abs(c) > 10 ** 6 for row, b in rows
                      for c in (*row, b)))
        if big:
            ok = True
        else:
            if work is not None:
                work.charge(8 * len(atoms))
            ok = lp.feasible(len(vs), eqs, ineqs, set()) is not None
    _lp_cache[key] = ok
    return ok


def _reduce_cubes(cubes: list[Formula]) -> list[Formula]:
    """Drop duplicate and subsumed cubes (a superset of another's literals)."""
    if len(cubes) <= 1:
        return cubes
    keyed = sorted(((len(_cube_key(c)), _cube_key(c), c) for c in cubes),
                   key=lambda t: t[0])
    kept: list[tuple[frozenset[int], Formula]] = []
    for _, key, c in keyed:
        if any(k <= key for k, _ in kept):
            continue
        kept.append((key, c))
    return [c for _, c in kept]


def _dnf(f: Formula, work: _Work) -> list[Formula]:
    """Disjunctive normal form of an NNF formula, as a list of pruned cubes."""
    if f is FALSE:
        return []
    if isinstance(f, Or):
        out = []
        for a in f.args:
            out.extend(_dnf(a, work))
        return out
    if isinstance(f, And):
        # few-cube conjuncts first: they prune the product early
        arg_parts = sorted((_dnf(a, work) for a in f.args), key=len)
        cubes = [TRUE]
        for parts in arg_parts:
            work.charge(len(cubes) * max(len(parts), 1))
            nxt = []
            seen = set()
            for c in cubes:
                for p in parts:
                    q = land(c, p)
                    if q is FALSE:
                        continue
                    k = _cube_key(q)
                    if k not in seen and _cube_feasible(q, work):
                        seen.add(k)
                        nxt.append(q)
            cubes = nxt
            if not cubes:
                return []
            if len(cubes) > 16:
                cubes = _reduce_cubes(cubes)
        return cubes
    return [f]  # TRUE / Atom / Dvd


# ---------------------------------------------------------------------------
# Cooper elimination of one variable from a cube


def _elim_cube(v: Variable, cube: Formula, work: _Work) -> list[Formula]:
    """Cubes whose disjunction is equivalent to exists v. cube."""
    if v not in free_vars(cube):
        return [cube]
    hit = _solve_unit_eq(v, _cube_atoms(cube))
    if hit is not None:
        a, sol = hit
        out = land(*(substitute(b, {v: sol}) for b in _cube_atoms(cube) if b is not a))
        return [out] if out is not FALSE and _cube_feasible(out, work) else []

    # split equalities on v into inequality pairs (stays a cube)
    parts = []
    for a in _cube_atoms(cube):
        if isinstance(a, Atom) and a.op == "eq" and a.term.coeff(v) != 0:
            parts.append(leq(a.term, tconst(0)))
            parts.append(leq(tscale(-1, a.term), tconst(0)))
        else:
            parts.append(a)
    m = 1
    for a in parts:
        if isinstance(a, (Atom, Dvd)):
            c = a.term.coeff(v)
            if c:
                m = lcm(m, abs(c))

    # normalize every literal to v-coefficient ±1 (variable rescaled to m*v)
    norm = []
    for a in parts:
        c = a.term.coeff(v) if isinstance(a, (Atom, Dvd)) else 0
        if c == 0:
            norm.append(a)
            continue
        s = m // abs(c)
        t = tscale(s, a.term)
        t = tsub(t, tscale(t.coeff(v) - (1 if c > 0 else -1), tvar(v)))
        if isinstance(a, Dvd):
            norm.append(dvd(a.d * s, t, a.neg))
        else:
            norm.append(leq(t, tconst(0)))
    if m > 1:
        norm.append(dvd(m, tvar(v)))

    lowers: list[Term] = []   # -v + b <= 0, i.e. v >= b
    uppers: list[Term] = []   # v + a <= 0, i.e. v <= -a
    divs = [1]
    for a in norm:
        if not isinstance(a, (Atom, Dvd)) or a.term.coeff(v) == 0:
            continue
        rest = tsub(a.term, tscale(a.term.coeff(v), tvar(v)))
        if isinstance(a, Dvd):
            divs.append(a.d)
        elif a.term.coeff(v) == 1:
            uppers.append(rest)
        else:
            lowers.append(rest)
    d = lcm(*divs) if len(divs) > 1 else 1
    use_lower = len(lowers) <= len(uppers)
    bounds = lowers if use_lower else uppers
    work.charge((len(bounds) + 1) * d)

    whole = land(*norm)
    rest_only = land(*(a for a in norm
                       if not (isinstance(a, Atom) and a.term.coeff(v) != 0)))
    out: list[Formula] = []
    seen: set[frozenset[int]] = set()

    def emit(c: Formula) -> None:
        if c is FALSE:
            return
        k = _cube_key(c)
        if k not in seen and _cube_feasible(c, work):
            seen.add(k)
            out.append(c)

    # infinite disjunct: sound only when no bound literal forces v from the
    # chosen side (such a literal is false in the limit and kills the cube)
    if not bounds:
        for j in range(d):
            emit(substitute(rest_only, {v: tconst(j if use_lower else -j)}))
    for b in bounds:
        for j in range(d):
            t = b + j if use_lower else tscale(-1, b) - j
            emit(substitute(whole, {v: t}))
    return out


def _pick_var(cube: Formula, among: set[Variable]) -> Variable:
    """Cheapest variable to eliminate next (fewest bound literals)."""
    counts: dict[Variable, int] = {}
    for a in _cube_atoms(cube):
        if isinstance(a, (Atom, Dvd)):
            for u in a.term.vars():
                if u in among:
                    counts[u] = counts.get(u, 0) + (3 if isinstance(a, Dvd) else 1)
    return min(counts, key=lambda v: (counts[v], v.sort_key))


def _cube_sat(cube: Formula, vs: set[Variable], work: _Work) -> bool:
    if cube is TRUE:
        return True
    if cube is FALSE:
        return False
    live = vs & set(free_vars(cube))
    if not live:
        # ground literals fold at construction, so this cannot happen
        raise AssertionError(f"ground cube did not fold: {cube!r}")
    v = _pick_var(cube, live)
    for child in _elim_cube(v, cube, work):
        if _cube_sat(child, live - {v}, work):
            return True
    return False


# ---------------------------------------------------------------------------
# Full quantifier elimination


_qe_cache: dict[int, Formula] = {}


def qe(f: Formula, budget: int | None = None) -> Formula:
    """Quantifier-free equivalent of f."""
    work = _Work(budget if budget is not None else _DEFAULT_BUDGET)
    return _qe(f, work)


def _exists_qf(v: Variable, body: Formula, work: _Work) -> Formula:
    cubes = _dnf(nnf(body), work)
    out = []
    for c in cubes:
        out.extend(_elim_cube(v, c, work))
    return lor(*_reduce_cubes(out))


def _qe(f: Formula, work: _Work) -> Formula:
    got = _qe_cache.get(id(f))
    if got is not None:
        return got
    if isinstance(f, And):
        out = land(*(_qe(a, work) for a in f.args))
    elif isinstance(f, Or):
        out = lor(*(_qe(a, work) for a in f.args))
    elif isinstance(f, Not):
        out = lnot(_qe(f.arg, work))
    elif isinstance(f, Quant):
        body = _qe(f.body, work)
        if f.q == "exists":
            out = _exists_qf(f.v, body, work)
        else:
            out = lnot(_exists_qf(f.v, lnot(body), work))
    else:
        out = f
    _qe_cache[id(f)] = out
    return out


# ---------------------------------------------------------------------------
# Satisfiability and models


def _univariate_solve(f: Formula, x: Variable) -> int | None:
    """A satisfying integer for a QF formula whose only free variable is x."""
    atoms: list = []

    def collect(g: Formula) -> None:
        if isinstance(g, (And, Or)):
            for a in g.args:
                collect(a)
        elif isinstance(g, (Atom, Dvd)) and g.term.coeff(x) != 0:
            atoms.append(g)

    collect(f)
    thresholds: set[int] = set()
    period = 1
    for a in atoms:
        c = a.term.coeff(x)
        rest = tsub(a.term, tscale(c, tvar(x)))
        if rest.coeffs:
            raise ValueError("not univariate")
        if isinstance(a, Dvd):
            period = lcm(period, a.d)
        else:
            q = -rest.const // c
            thresholds.update((q - 1, q, q + 1))
    candidates: set[int] = set(range(-period, period + 1))
    for t0 in thresholds:
        candidates.update(range(t0 - period, t0 + period + 1))
    for c in sorted(candidates, key=lambda n: (abs(n), n)):
        if evaluate(f, {x: c}):
            return c
    return None


def _model_of_cube(cube: Formula, work: _Work) -> dict[Variable, int]:
    """A model of a satisfiable cube, by per-variable projection."""
    fvs = sorted(free_vars(cube), key=lambda v: v.sort_key)
    levels: list[Formula] = [cube]  # levels[i] has free vars fvs[:n-i]
    cur = [cube]
    for v in reversed(fvs[1:]):
        nxt = []
        for c in cur:
            nxt.extend(_elim_cube(v, c, work))
        cur = nxt
        levels.append(lor(*cur))
    # levels[i] is over fvs[: n - i]; walk outward assigning values
    val: dict[Variable, int] = {}
    for i, v in enumerate(fvs):
        h = substitute(levels[len(fvs) - 1 - i], {u: tconst(val[u]) for u in val})
        if v in free_vars(h):
            c = _univariate_solve(h, v)
            assert c is not None, "projection chain must stay satisfiable"
            val[v] = c
        else:
            val[v] = 0
    return val


def decide(f: Formula, budget: int | None = None) -> bool:
    """Truth of the existential closure of f."""
    return get_model(f, budget) is not None


def _eval_cost(f: Formula, cap: int) -> int:
    """Rough cost of one bounded evaluation: node count, with quantifiers
    weighted by their range width.  Stops counting at cap."""
    cost = 0
    stack = [(f, 1)]
    while stack and cost <= cap:
        g, w = stack.pop()
        cost += w
        if isinstance(g, (And, Or)):
            stack.extend((a, w) for a in g.args)
        elif isinstance(g, Not):
            stack.append((g.arg, w))
        elif isinstance(g, Quant):
            stack.append((g.body, w * 25))
    return cost


def get_model(f: Formula, budget: int | None = None,
              rng: random.Random | None = None) -> dict[Variable, int] | None:
    """A model of f over its free variables, or None if unsatisfiable."""
    fvs = sorted(free_vars(f), key=lambda v: v.sort_key)

    # cheap first: concrete guesses, trusted only when bounded evaluation
    # of the quantifiers is exact; skipped when evaluation itself is dear
    if _eval_cost(f, 2000) <= 2000:
        guesses: list[dict[Variable, int]] = [{v: 0 for v in fvs}]
        r = rng or random.Random(0)
        for _ in range(4):
            guesses.append({v: r.randint(-4, 4) for v in fvs})
        for g in guesses:
            try:
                verdict, exact = evaluate_flagged(f, g, (-12, 12))
            except Exception:
                break
            if verdict and exact:
                return g

    work = _Work(budget if budget is not None else _DEFAULT_BUDGET)
    g0 = nnf(_qe(f, work))
    vs = set(free_vars(g0))
    for cube in _dnf(g0, work):
        if not vs & set(free_vars(cube)):
            if cube is TRUE:
                return {v: 0 for v in fvs}
            continue
        if _cube_sat(cube, vs, work):
            model = _model_of_cube(cube, work)
            model.update({v: 0 for v in fvs if v not in model})
            return model
    return None
