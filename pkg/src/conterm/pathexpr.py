"""Path expressions and ω-path expressions over control flow graphs.

Two algorithms compute an ω-regular expression recognizing the infinite
edge-paths out of the root: a cubic state-elimination procedure over small
path graphs (`solve_dense`) and a dominator-tree-driven procedure
(`omega_path_expr`) that decomposes the graph into single-entry components
and stitches them together through a compressed weighted forest.

Expressions are hash-consed: structurally identical nodes are the same
object, so interpreters can memoize by identity.  The tables are global and
single-threaded by design (one analysis context per thread).
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, Hashable, Iterable

__all__ = [
    "Cfg", "PathGraph", "RegExpr", "Letter", "Plus", "Cat", "Star",
    "OmegaRegExpr", "Omega", "OmegaCat", "OmegaPlus",
    "ZERO", "ONE", "OMEGA_ZERO",
    "letter", "rplus", "rcat", "rstar", "omega", "ocat", "oplus",
    "dominator_tree", "CompressedForest", "solve_dense",
    "sibling_graph", "component_graph",
    "SparseSolver", "omega_path_expr", "finite_path_expr",
    "sccs_topological", "expr_str", "omega_str",
    "dot_cfg", "dot_domtree", "dot_expr",
]

Vertex = Hashable
Edge = tuple[Vertex, Vertex]


# ---------------------------------------------------------------------------
# Graphs


@dataclass(frozen=True)
class Cfg:
    """A rooted control flow graph; edges double as expression letters."""
    vertices: tuple[Vertex, ...]
    edges: tuple[Edge, ...]
    root: Vertex

    def __post_init__(self):
        vs = set(self.vertices)
        assert self.root in vs
        assert all(u in vs and v in vs for u, v in self.edges)

    def successors(self, u: Vertex) -> list[Vertex]:
        return [w for s, w in self.edges if s == u]


@dataclass(frozen=True)
class PathGraph:
    """A graph whose edges carry regular expressions over an underlying CFG."""
    vertices: tuple[Vertex, ...]
    edges: tuple[tuple[Vertex, "RegExpr", Vertex], ...]


# ---------------------------------------------------------------------------
# Hash-consed regular expressions


class RegExpr:
    __slots__ = ()


class _RZero(RegExpr):
    __slots__ = ()

    def __repr__(self):
        return "0"


class _ROne(RegExpr):
    __slots__ = ()

    def __repr__(self):
        return "1"


class Letter(RegExpr):
    __slots__ = ("edge",)

    def __repr__(self):
        return f"Letter({self.edge!r})"


class Plus(RegExpr):
    __slots__ = ("a", "b")


class Cat(RegExpr):
    __slots__ = ("a", "b")


class Star(RegExpr):
    __slots__ = ("a",)


ZERO = _RZero()
ONE = _ROne()

_rcache: dict[tuple, RegExpr] = {}


def _intern(cls, key: tuple, **attrs) -> RegExpr:
    node = _rcache.get(key)
    if node is None:
        node = cls.__new__(cls)
        for k, v in attrs.items():
            object.__setattr__(node, k, v)
        _rcache[key] = node
    return node


def letter(edge: Edge) -> RegExpr:
    return _intern(Letter, ("letter", edge), edge=edge)


def rplus(a: RegExpr, b: RegExpr) -> RegExpr:
    if a is ZERO:
        return b
    if b is ZERO or a is b:
        return a
    return _intern(Plus, ("plus", id(a), id(b)), a=a, b=b)


def rcat(a: RegExpr, b: RegExpr) -> RegExpr:
    if a is ZERO or b is ZERO:
        return ZERO
    if a is ONE:
        return b
    if b is ONE:
        return a
    return _intern(Cat, ("cat", id(a), id(b)), a=a, b=b)


def rstar(a: RegExpr) -> RegExpr:
    if a is ZERO or a is ONE:
        return ONE
    return _intern(Star, ("star", id(a)), a=a)


# ---------------------------------------------------------------------------
# ω-regular expressions


class OmegaRegExpr:
    __slots__ = ()


class Omega(OmegaRegExpr):
    __slots__ = ("a",)


class OmegaCat(OmegaRegExpr):
    __slots__ = ("a", "f")  # a: RegExpr prefix, f: OmegaRegExpr


class OmegaPlus(OmegaRegExpr):
    __slots__ = ("f", "g")


def omega(a: RegExpr) -> OmegaRegExpr:
    return _intern(Omega, ("omega", id(a)), a=a)


OMEGA_ZERO = omega(ZERO)  # the empty ω-language


def ocat(a: RegExpr, f: OmegaRegExpr) -> OmegaRegExpr:
    if a is ZERO or f is OMEGA_ZERO:
        return OMEGA_ZERO
    if a is ONE:
        return f
    return _intern(OmegaCat, ("ocat", id(a), id(f)), a=a, f=f)


def oplus(f: OmegaRegExpr, g: OmegaRegExpr) -> OmegaRegExpr:
    if f is OMEGA_ZERO:
        return g
    if g is OMEGA_ZERO or f is g:
        return f
    return _intern(OmegaPlus, ("oplus", id(f), id(g)), f=f, g=g)


# ---------------------------------------------------------------------------
# Rendering (for humans and DOT dumps)


def _letter_name(e: RegExpr, names) -> str:
    if names is not None:
        return str(names(e.edge)) if callable(names) else str(names[e.edge])
    u, v = e.edge
    return f"<{u},{v}>"


def expr_str(e: RegExpr, names=None) -> str:
    def go(x: RegExpr, prec: int) -> str:
        if x is ZERO:
            return "0"
        if x is ONE:
            return "1"
        if isinstance(x, Letter):
            return _letter_name(x, names)
        if isinstance(x, Star):
            return go(x.a, 3) + "*"
        if isinstance(x, Cat):
            s = go(x.a, 2) + go(x.b, 2)
            return f"({s})" if prec > 2 else s
        assert isinstance(x, Plus)
        s = go(x.a, 1) + " + " + go(x.b, 1)
        return f"({s})" if prec > 1 else s
    return go(e, 0)


def omega_str(f: OmegaRegExpr, names=None) -> str:
    if isinstance(f, Omega):
        return expr_str(f.a, names) if f.a is ZERO else f"({expr_str(f.a, names)})^w"
    if isinstance(f, OmegaCat):
        return f"({expr_str(f.a, names)}){omega_str(f.f, names)}"
    assert isinstance(f, OmegaPlus)
    return f"{omega_str(f.f, names)} + {omega_str(f.g, names)}"


# ---------------------------------------------------------------------------
# Dominators


def _sort_key(v: Vertex):
    return (str(type(v).__name__), str(v))


def reachable(g: Cfg) -> set[Vertex]:
    seen = {g.root}
    stack = [g.root]
    succ: dict[Vertex, list[Vertex]] = {}
    for u, v in g.edges:
        succ.setdefault(u, []).append(v)
    while stack:
        u = stack.pop()
        for v in succ.get(u, ()):
            if v not in seen:
                seen.add(v)
                stack.append(v)
    return seen


def prune_unreachable(g: Cfg) -> Cfg:
    live = reachable(g)
    if len(live) == len(g.vertices):
        return g
    dead = [v for v in g.vertices if v not in live]
    warnings.warn(f"pruning unreachable vertices: {dead}", stacklevel=3)
    return Cfg(tuple(v for v in g.vertices if v in live),
               tuple((u, v) for u, v in g.edges if u in live and v in live),
               g.root)


def immediate_dominators(g: Cfg) -> dict[Vertex, Vertex]:
    """Iterative dataflow over reverse postorder; root maps to itself."""
    g = prune_unreachable(g)
    succ: dict[Vertex, list[Vertex]] = {v: [] for v in g.vertices}
    pred: dict[Vertex, list[Vertex]] = {v: [] for v in g.vertices}
    for u, v in g.edges:
        succ[u].append(v)
        pred[v].append(u)

    order: list[Vertex] = []
    seen: set[Vertex] = set()

    def dfs(u: Vertex) -> None:
        seen.add(u)
        for w in succ[u]:
            if w not in seen:
                dfs(w)
        order.append(u)

    dfs(g.root)
    rpo = list(reversed(order))  # root first
    rpo_index = {v: i for i, v in enumerate(rpo)}

    idom: dict[Vertex, Vertex] = {g.root: g.root}

    def intersect(a: Vertex, b: Vertex) -> Vertex:
        while a is not b and a != b:
            while rpo_index[a] > rpo_index[b]:
                a = idom[a]
            while rpo_index[b] > rpo_index[a]:
                b = idom[b]
        return a

    changed = True
    while changed:
        changed = False
        for v in rpo[1:]:
            ps = [p for p in pred[v] if p in idom]
            new = ps[0]
            for p in ps[1:]:
                new = intersect(new, p)
            if idom.get(v) != new:
                idom[v] = new
                changed = True
    return idom


def dominator_tree(g: Cfg) -> dict[Vertex, set[Vertex]]:
    """Children map of the dominator tree (reachable vertices only)."""
    idom = immediate_dominators(g)
    children: dict[Vertex, set[Vertex]] = {v: set() for v in idom}
    for v, d in idom.items():
        if v != g.root:
            children[d].add(v)
    return children


# ---------------------------------------------------------------------------
# Compressed weighted forest


class CompressedForest:
    """Union-find-like forest whose edges carry regular-expression weights.

    `eval(v)` is the concatenation of weights along the root-to-v path;
    path compression keeps the per-vertex weight equal to that product.
    """

    def __init__(self, vertices: Iterable[Vertex]):
        self._parent: dict[Vertex, Vertex | None] = {v: None for v in vertices}
        self._weight: dict[Vertex, RegExpr] = {v: ONE for v in self._parent}

    def link(self, u: Vertex, e: RegExpr, v: Vertex) -> None:
        assert self._parent[u] is None, "link target must currently be a root"
        self._parent[u] = v
        self._weight[u] = e

    def find(self, v: Vertex) -> Vertex:
        p = self._parent[v]
        if p is None:
            return v
        root = self.find(p)
        if self._parent[p] is not None:  # p was compressed below the root
            self._weight[v] = rcat(self._weight[p], self._weight[v])
            self._parent[v] = root
        elif p != root:  # pragma: no cover - p is the root here by induction
            raise AssertionError
        return root

    def eval(self, v: Vertex) -> RegExpr:
        root = self.find(v)
        return ONE if v == root else self._weight[v]


# ---------------------------------------------------------------------------
# Dense elimination (Algorithm over a small path graph)


def solve_dense(h: PathGraph, r: Vertex) -> tuple[OmegaRegExpr,
                                                  dict[Vertex, RegExpr]]:
    """State elimination on a path graph rooted at r.

    Returns the ω-expression recognizing the infinite paths from r together
    with a map sending each vertex v to an expression for the finite r→v
    paths.  The elimination order is the vertex order of h.
    """
    vs = [r] + [v for v in h.vertices if v != r]
    pe: dict[tuple[Vertex, Vertex], RegExpr] = {}

    def get(u, v):
        return pe.get((u, v), ZERO)

    for u, e, v in h.edges:
        pe[(u, v)] = rplus(get(u, v), e)

    n = len(vs) - 1
    for i in range(n, 0, -1):
        vi = vs[i]
        loop = rstar(get(vi, vi))
        for j in range(i - 1, -1, -1):
            vj = vs[j]
            if get(vj, vi) is ZERO:
                continue
            eji = rcat(get(vj, vi), loop)
            for k in range(n, 0, -1):
                if k == i:
                    continue
                vk = vs[k]
                pe[(vj, vk)] = rplus(get(vj, vk), rcat(eji, get(vi, vk)))

    pe_omega = OMEGA_ZERO
    for i in range(1, n + 1):
        vi = vs[i]
        pe_omega = oplus(pe_omega, ocat(get(r, vi), omega(get(vi, vi))))
    # a cycle at the root itself (possible only when r has incoming edges)
    pe_omega = oplus(pe_omega, omega(get(r, r)))

    pe_map = {r: rstar(get(r, r))}
    for i in range(1, n + 1):
        vi = vs[i]
        pe_map[vi] = rcat(get(r, vi), rstar(get(vi, vi)))
    return pe_omega, pe_map


# ---------------------------------------------------------------------------
# Strongly connected components (Tarjan, iterative) in topological order


def sccs_topological(vertices: list[Vertex],
                     succ: dict[Vertex, list[Vertex]]) -> list[list[Vertex]]:
    index: dict[Vertex, int] = {}
    low: dict[Vertex, int] = {}
    on_stack: set[Vertex] = set()
    stack: list[Vertex] = []
    out: list[list[Vertex]] = []
    counter = [0]

    def strongconnect(v0: Vertex) -> None:
        work = [(v0, iter(succ.get(v0, ())))]
        index[v0] = low[v0] = counter[0]
        counter[0] += 1
        stack.append(v0)
        on_stack.add(v0)
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if w not in index:
                    index[w] = low[w] = counter[0]
                    counter[0] += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(succ.get(w, ()))))
                    advanced = True
                    break
                if w in on_stack:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                pv = work[-1][0]
                low[pv] = min(low[pv], low[v])
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.append(w)
                    if w == v:
                        break
                out.append(comp)

    for v in vertices:
        if v not in index:
            strongconnect(v)
    # Tarjan emits components in reverse topological order
    out.reverse()
    return [sorted(c, key=_sort_key) for c in out]


# ---------------------------------------------------------------------------
# Sparse solver (dominator-tree recursion)


def sibling_graph(v: Vertex, g: Cfg, children: dict[Vertex, set[Vertex]],
                  forest: CompressedForest) -> dict[Vertex, list[Vertex]]:
    """Edges ⟨find(u), c⟩ over children(v), from CFG edges ⟨u, c⟩."""
    kids = children.get(v, set())
    succ: dict[Vertex, list[Vertex]] = {c: [] for c in sorted(kids, key=_sort_key)}
    seen: set[Edge] = set()
    for u, c in g.edges:
        if c not in kids or u not in forest._parent:
            continue
        fu = forest.find(u)
        if fu in kids and (fu, c) not in seen:
            seen.add((fu, c))
            succ[fu].append(c)
    for c in succ:
        succ[c].sort(key=_sort_key)
    return succ


def component_graph(component: list[Vertex], v: Vertex, g: Cfg,
                    forest: CompressedForest,
                    letter_of: Callable[[Edge], RegExpr]) -> PathGraph:
    """Path graph over C ∪ {v}, complete for the paths entering C."""
    cset = set(component)
    edges = []
    for w, u in g.edges:
        if u in cset and w in forest._parent:
            edges.append((forest.find(w), rcat(forest.eval(w), letter_of((w, u))), u))
    return PathGraph((v, *component), tuple(edges))


@dataclass
class SparseSolver:
    """One run of the dominator-tree ω-path-expression algorithm."""
    graph: Cfg
    letter_of: Callable[[Edge], RegExpr] = letter
    omega_expr: OmegaRegExpr = field(init=False)

    def __post_init__(self):
        g = prune_unreachable(self.graph)
        if any(v == g.root for _, v in g.edges):
            # fresh virtual root, transparent to interpretation
            vroot = ("__virtual_root__", g.root)
            old_root, user_letter = g.root, self.letter_of
            g = Cfg((vroot, *g.vertices), ((vroot, old_root), *g.edges), vroot)
            self.letter_of = (lambda e: ONE if e == (vroot, old_root)
                              else user_letter(e))
        self.graph = g
        self.children = dominator_tree(g)
        self.forest = CompressedForest(self.children)
        self.omega_expr = self._solve(g.root)

    def _solve(self, v: Vertex) -> OmegaRegExpr:
        child_omega = {c: self._solve(c)
                       for c in sorted(self.children.get(v, ()), key=_sort_key)}
        succ = sibling_graph(v, self.graph, self.children, self.forest)
        pe_omega = OMEGA_ZERO
        for comp in sccs_topological(list(succ), succ):
            gc = component_graph(comp, v, self.graph, self.forest, self.letter_of)
            c_omega, c_pe = solve_dense(gc, v)
            pe_omega = oplus(pe_omega, c_omega)
            for u in comp:
                self.forest.link(u, c_pe[u], v)
                pe_omega = oplus(pe_omega, ocat(c_pe[u], child_omega[u]))
        return pe_omega

    def path_to(self, v: Vertex) -> RegExpr:
        """Expression recognizing the finite root→v paths (Zero if pruned)."""
        if v not in self.forest._parent:
            return ZERO
        return self.forest.eval(v)


def omega_path_expr(g: Cfg, r: Vertex | None = None) -> OmegaRegExpr:
    if r is not None and r != g.root:
        g = Cfg(g.vertices, g.edges, r)
    return SparseSolver(g).omega_expr


def finite_path_expr(g: Cfg, r: Vertex, v: Vertex) -> RegExpr:
    if r != g.root:
        g = Cfg(g.vertices, g.edges, r)
    return SparseSolver(g).path_to(v)


# ---------------------------------------------------------------------------
# DOT export


def _dot_id(v: Vertex) -> str:
    return '"' + str(v).replace('"', r'\"') + '"'


def dot_cfg(g: Cfg, edge_label=None) -> str:
    lines = ["digraph cfg {", f"  root={_dot_id(g.root)};"]
    for v in g.vertices:
        shape = "doublecircle" if v == g.root else "circle"
        lines.append(f"  {_dot_id(v)} [shape={shape}];")
    for u, v in g.edges:
        lab = f' [label="{edge_label((u, v))}"]' if edge_label else ""
        lines.append(f"  {_dot_id(u)} -> {_dot_id(v)}{lab};")
    lines.append("}")
    return "\n".join(lines)


def dot_domtree(children: dict[Vertex, set[Vertex]]) -> str:
    lines = ["digraph domtree {"]
    for v in children:
        lines.append(f"  {_dot_id(v)};")
    for v, cs in children.items():
        for c in sorted(cs, key=_sort_key):
            lines.append(f"  {_dot_id(v)} -> {_dot_id(c)};")
    lines.append("}")
    return "\n".join(lines)


def dot_expr(f: OmegaRegExpr | RegExpr, names=None) -> str:
    """The expression DAG with shared nodes rendered once."""
    lines = ["digraph expr {"]
    ids: dict[int, str] = {}

    def node(x) -> str:
        key = id(x)
        if key in ids:
            return ids[key]
        nid = f"n{len(ids)}"
        ids[key] = nid
        if x is ZERO:
            label, kids = "0", []
        elif x is ONE:
            label, kids = "1", []
        elif isinstance(x, Letter):
            label, kids = _letter_name(x, names), []
        elif isinstance(x, Star):
            label, kids = "*", [x.a]
        elif isinstance(x, Cat):
            label, kids = ".", [x.a, x.b]
        elif isinstance(x, Plus):
            label, kids = "+", [x.a, x.b]
        elif isinstance(x, Omega):
            label, kids = "ω", [x.a]
        elif isinstance(x, OmegaCat):
            label, kids = ".ω", [x.a, x.f]
        else:
            assert isinstance(x, OmegaPlus)
            label, kids = "+ω", [x.f, x.g]
        lines.append(f'  {nid} [label="{label}"];')
        for kid in kids:
            lines.append(f"  {nid} -> {node(kid)};")
        return nid

    node(f)
    lines.append("}")
    return "\n".join(lines)
