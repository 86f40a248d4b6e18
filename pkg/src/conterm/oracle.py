"""Reference machinery for tests: ground truth at small scale.

Provides three independent checks used by the test suite:

* `accepts_lasso` — Büchi membership of ultimately periodic words in the
  language of an ω-regular expression (standard Thompson-style automaton,
  product with the lasso's finite shape, accepting-SCC search);
* `enumerate_lassos` — all stem+cycle words of bounded total length in a CFG;
* `bounded_exec` — concrete breadth-first execution of a labeled program,
  certifying nontermination only by an exact state repetition.

Everything here is deliberately naive; it is the yardstick the analysis is
measured against, so it shares no code with the analysis itself.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Hashable, Iterable

from . import presburger
from .logic import (
    Formula, Variable, eq, evaluate, free_vars, land, leq, lnot, lor,
    substitute, tconst, tvar,
)
from .pathexpr import (
    Cfg, Letter, Omega, OmegaCat, OmegaPlus, OmegaRegExpr, Plus, Cat, Star,
    RegExpr, ONE, ZERO, sccs_topological,
)

__all__ = ["LassoWord", "BuchiAutomaton", "buchi_of", "accepts_lasso",
           "enumerate_lassos", "ExecResult", "bounded_exec"]

Edge = tuple[Hashable, Hashable]


@dataclass(frozen=True)
class LassoWord:
    """The ultimately periodic word stem · cycle^ω over CFG edges."""
    stem: tuple[Edge, ...]
    cycle: tuple[Edge, ...]

    def __post_init__(self):
        assert self.cycle, "cycle must be nonempty"


# ---------------------------------------------------------------------------
# Büchi automata from ω-regular expressions


@dataclass
class BuchiAutomaton:
    transitions: dict[int, list[tuple[Edge | None, int]]]  # None = ε
    initial: int
    accepting: frozenset[int]


class _Builder:
    def __init__(self):
        self.n = 0
        self.trans: dict[int, list[tuple[Edge | None, int]]] = {}

    def state(self) -> int:
        self.n += 1
        self.trans[self.n - 1] = []
        return self.n - 1

    def edge(self, s: int, a: Edge | None, t: int) -> None:
        self.trans[s].append((a, t))

    def nfa(self, e: RegExpr) -> tuple[int, int]:
        """Thompson fragment (start, accept) for a finite regular expression."""
        s, t = self.state(), self.state()
        if e is ZERO:
            pass
        elif e is ONE:
            self.edge(s, None, t)
        elif isinstance(e, Letter):
            self.edge(s, e.edge, t)
        elif isinstance(e, Plus):
            for part in (e.a, e.b):
                ps, pt = self.nfa(part)
                self.edge(s, None, ps)
                self.edge(pt, None, t)
        elif isinstance(e, Cat):
            as_, at = self.nfa(e.a)
            bs, bt = self.nfa(e.b)
            self.edge(s, None, as_)
            self.edge(at, None, bs)
            self.edge(bt, None, t)
        else:
            assert isinstance(e, Star)
            ps, pt = self.nfa(e.a)
            self.edge(s, None, ps)
            self.edge(pt, None, ps)
            self.edge(s, None, t)
            self.edge(pt, None, t)
        return s, t

    def buchi(self, f: OmegaRegExpr) -> tuple[int, set[int]]:
        if isinstance(f, Omega):
            loop = self.state()
            s, t = self.nfa(f.a)
            self.edge(loop, None, s)
            self.edge(t, None, loop)
            return loop, {loop}
        if isinstance(f, OmegaCat):
            s, t = self.nfa(f.a)
            fi, facc = self.buchi(f.f)
            self.edge(t, None, fi)
            return s, facc
        assert isinstance(f, OmegaPlus)
        init = self.state()
        ai, aacc = self.buchi(f.f)
        bi, bacc = self.buchi(f.g)
        self.edge(init, None, ai)
        self.edge(init, None, bi)
        return init, aacc | bacc


def buchi_of(f: OmegaRegExpr) -> BuchiAutomaton:
    b = _Builder()
    init, acc = b.buchi(f)
    return BuchiAutomaton(b.trans, init, frozenset(acc))


def accepts_lasso(f: OmegaRegExpr, w: LassoWord) -> bool:
    """Membership of stem·cycle^ω, via an accepting cycle of the product of
    the automaton with the lasso's positions.  An accepting cycle must both
    contain an accepting state and consume at least one letter (ε-only loops
    read no input and accept nothing)."""
    aut = buchi_of(f)
    word = list(w.stem) + list(w.cycle)
    nstem, total = len(w.stem), len(w.stem) + len(w.cycle)

    def advance(pos: int) -> int:
        nxt = pos + 1
        return nstem if nxt == total else nxt

    # product nodes (state, pos); edges tagged with whether a letter was read
    start = (aut.initial, 0 if word else 0)
    succ: dict[tuple[int, int], list[tuple[tuple[int, int], bool]]] = {}
    stack = [start]
    seen = {start}
    while stack:
        node = stack.pop()
        q, pos = node
        outs = []
        for a, t in aut.transitions.get(q, ()):
            if a is None:
                outs.append(((t, pos), False))
            elif pos < total and a == word[pos]:
                outs.append(((t, advance(pos)), True))
        succ[node] = outs
        for nxt, _ in outs:
            if nxt not in seen:
                seen.add(nxt)
                stack.append(nxt)

    plain = {n: [m for m, _ in outs] for n, outs in succ.items()}
    for comp in sccs_topological(list(seen), plain):
        cset = set(comp)
        nontrivial = len(comp) > 1 or any(m in cset for m in plain[comp[0]])
        if not nontrivial:
            continue
        has_letter = any(read and m in cset
                         for n in comp for m, read in succ[n])
        has_accept = any(q in aut.accepting for q, _ in comp)
        if has_letter and has_accept:
            return True
    return False


# ---------------------------------------------------------------------------
# Lasso enumeration


def enumerate_lassos(g: Cfg, r: Hashable, max_total_len: int) -> set[LassoWord]:
    """All lassos stem·cycle^ω with |stem|+|cycle| ≤ max_total_len: the stem
    is any walk from r, the cycle is a simple cycle continuing it."""
    succ: dict[Hashable, list[Hashable]] = {}
    for u, v in g.edges:
        succ.setdefault(u, []).append(v)

    out: set[LassoWord] = set()

    def cycles_from(w0: Hashable, budget: int):
        # simple cycles at w0 of length ≤ budget
        path: list[Edge] = []
        inner: set[Hashable] = set()

        def go(u: Hashable):
            for v in succ.get(u, ()):
                if v == w0:
                    yield tuple(path + [(u, v)])
                elif v not in inner and len(path) + 1 < budget:
                    inner.add(v)
                    path.append((u, v))
                    yield from go(v)
                    path.pop()
                    inner.discard(v)

        yield from go(w0)

    def stems(u: Hashable, stem: list[Edge]):
        budget = max_total_len - len(stem)
        if budget >= 1:
            for cyc in cycles_from(u, budget):
                out.add(LassoWord(tuple(stem), cyc))
        if budget > 1:
            for v in succ.get(u, ()):
                stem.append((u, v))
                stems(v, stem)
                stem.pop()

    stems(r, [])
    return out


# ---------------------------------------------------------------------------
# Bounded concrete execution


@dataclass(frozen=True)
class ExecResult:
    kind: str  # "terminated" | "immortal" | "depth"
    witness: tuple | None = None  # lasso of concrete configurations
    range_exceeded: bool = False


def _successor_values(formula: Formula, variables, state: dict,
                      lo: int, hi: int, cap: int = 64):
    """Post-states of one edge from a concrete pre-state, by model
    enumeration of the primed variables within [lo, hi]."""
    from .logic import primed
    pvs = [primed(v) for v in variables]
    inst = substitute(formula, {v: tconst(state[v]) for v in variables
                                if v in free_vars(formula)})
    box = land(*(land(leq(tconst(lo), tvar(p)), leq(tvar(p), tconst(hi)))
                 for p in pvs))
    g = land(inst, box)
    out = []
    overflow = False
    for _ in range(cap):
        m = presburger.get_model(g)
        if m is None:
            break
        vals = tuple(m.get(p, 0) for p in pvs)
        out.append(vals)
        g = land(g, lnot(land(*(eq(tvar(p), tconst(c))
                                for p, c in zip(pvs, vals)))))
    else:
        overflow = True
    # did the box cut off genuine successors?
    if not overflow and presburger.get_model(land(inst, lnot(box))) is not None:
        overflow = True
    return out, overflow


def bounded_exec(program, s0: dict, depth: int = 50,
                 value_range: tuple[int, int] = (-8, 8),
                 max_stack: int = 4) -> ExecResult:
    """Breadth-first exploration of the concrete configuration graph.

    `program` is either a labeled CFG (attributes cfg, labels, ctx) or an
    interprocedural program (attributes graph/procedures/entry/exit/...).
    A repeated configuration along a run is a genuine immortality witness;
    exhausting the depth or the value range is inconclusive.
    """
    lo, hi = value_range
    if hasattr(program, "procedures"):
        return _exec_interproc(program, s0, depth, lo, hi, max_stack)
    ctx = program.ctx
    variables = ctx.variables
    state0 = tuple(s0[v] for v in variables)
    start = (program.cfg.root, state0)

    succ_cache: dict[tuple, tuple] = {}
    seen: dict[tuple, int] = {start: 0}
    parents: dict[tuple, tuple | None] = {start: None}
    frontier = [start]
    range_flag = False
    graph_succ: dict[tuple, list[tuple]] = {}
    d = 0
    depth_hit = False
    while frontier and d < depth:
        nxt = []
        for cfgv, vals in frontier:
            node = (cfgv, vals)
            outs = []
            sdict = dict(zip(variables, vals))
            for (u, v) in program.cfg.edges:
                if u != cfgv:
                    continue
                key = ((u, v), vals)
                got = succ_cache.get(key)
                if got is None:
                    got = _successor_values(program.labels[(u, v)].formula,
                                            variables, sdict, lo, hi)
                    succ_cache[key] = got
                posts, overflow = got
                range_flag = range_flag or overflow
                for pvals in posts:
                    outs.append((v, pvals))
            graph_succ[node] = outs
            for m in outs:
                if m not in seen:
                    seen[m] = d + 1
                    parents[m] = node
                    nxt.append(m)
        frontier = nxt
        d += 1
    if frontier:
        depth_hit = True

    witness = _find_cycle(graph_succ)
    if witness is not None:
        return ExecResult("immortal", witness)
    if depth_hit or range_flag:
        return ExecResult("depth", range_exceeded=range_flag)
    return ExecResult("terminated")


def _find_cycle(graph_succ: dict) -> tuple | None:
    """A cycle within the explored region (successors of unexplored frontier
    nodes are unknown and never followed)."""
    explored = set(graph_succ)
    for comp in sccs_topological(list(explored),
                                 {n: [m for m in graph_succ[n] if m in explored]
                                  for n in graph_succ}):
        cset = set(comp)
        if len(comp) > 1 or comp[0] in [m for m in graph_succ[comp[0]]
                                        if m in explored]:
            return tuple(comp)
    return None


def _exec_interproc(p, s0: dict, depth: int, lo: int, hi: int,
                    max_stack: int) -> ExecResult:
    """Stack-based execution: call edges push (return vertex, saved locals)
    and havoc callee locals within a small candidate set; exits pop."""
    gvars = tuple(p.global_vars)
    lvars = tuple(p.local_vars)
    variables = tuple(p.ctx.variables)
    entry = dict(p.entry)
    exit_of = {v: name for name, v in p.exit.items()}
    main = p.main
    state0 = tuple(s0[v] for v in variables)
    start = (entry[main], (), state0)

    def local_choices(vals):
        # candidate initial valuations for callee locals (an
        # under-approximation of havoc; sound for witness detection)
        sdict = dict(zip(variables, vals))
        cands = {tuple(sdict[v] for v in lvars), tuple(0 for _ in lvars)}
        return cands

    succ_cache: dict[tuple, tuple] = {}
    seen = {start}
    frontier = [start]
    graph_succ: dict[tuple, list[tuple]] = {}
    range_flag = False
    d = 0
    depth_hit = False
    while frontier and d < depth:
        nxt = []
        for node in frontier:
            vtx, stack, vals = node
            outs = []
            sdict = dict(zip(variables, vals))
            for (u, v), lab in p.edge_labels.items():
                if u != vtx:
                    continue
                if isinstance(lab, str):  # call edge
                    if len(stack) >= max_stack:
                        depth_hit = True
                        continue
                    saved = tuple(sdict[x] for x in lvars)
                    for init_locals in local_choices(vals):
                        ndict = dict(sdict)
                        ndict.update(zip(lvars, init_locals))
                        outs.append((entry[lab], stack + ((v, saved),),
                                     tuple(ndict[x] for x in variables)))
                else:
                    key = ((u, v), vals)
                    got = succ_cache.get(key)
                    if got is None:
                        got = _successor_values(lab.formula, variables, sdict,
                                                lo, hi)
                        succ_cache[key] = got
                    posts, overflow = got
                    range_flag = range_flag or overflow
                    for pvals in posts:
                        outs.append((v, stack, pvals))
            if vtx in exit_of and stack:
                ret, saved = stack[-1]
                ndict = dict(sdict)
                ndict.update(zip(lvars, saved))
                outs.append((ret, stack[:-1],
                             tuple(ndict[x] for x in variables)))
            graph_succ[node] = outs
            for m in outs:
                if m not in seen:
                    seen.add(m)
                    nxt.append(m)
        frontier = nxt
        d += 1
    if frontier:
        depth_hit = True
    witness = _find_cycle(graph_succ)
    if witness is not None:
        return ExecResult("immortal", witness)
    if depth_hit or range_flag:
        return ExecResult("depth", range_exceeded=range_flag)
    return ExecResult("terminated")
