"""Path expressions over rooted graphs, verified against enumeration."""
import random
from functools import lru_cache

from conftest import random_cfg
from conterm.pathexpr import (
    Cat, Cfg, Letter, ONE, Plus, Star, ZERO, dominator_tree, dot_cfg,
    dot_domtree, dot_expr, expr_str, finite_path_expr, immediate_dominators,
    letter, omega, omega_path_expr, omega_str, oplus, rcat, rplus, rstar,
)

# Worked example graph: a=(1,2) b=(1,4) c=(2,2) d=(2,3) e=(4,3) f=(3,5)
# g=(5,4); reference expression (a c* d + b e)(f g e)^w + a c^w
EX_EDGES = {"a": (1, 2), "b": (1, 4), "c": (2, 2), "d": (2, 3),
            "e": (4, 3), "f": (3, 5), "g": (5, 4)}
EX_CFG = Cfg((1, 2, 3, 4, 5), tuple(EX_EDGES.values()), 1)


def matches(e, word: tuple) -> bool:
    """Finite-word membership for a regular expression over edges."""
    @lru_cache(maxsize=None)
    def go(x, i, j):
        if x is ZERO:
            return False
        if x is ONE:
            return i == j
        if isinstance(x, Letter):
            return j == i + 1 and word[i] == x.edge
        if isinstance(x, Plus):
            return go(x.a, i, j) or go(x.b, i, j)
        if isinstance(x, Cat):
            return any(go(x.a, i, m) and go(x.b, m, j)
                       for m in range(i, j + 1))
        assert isinstance(x, Star)
        if i == j:
            return True
        return any(go(x.a, i, m) and go(x, m, j) for m in range(i + 1, j + 1))

    return go(e, 0, len(word))


def all_paths(g: Cfg, r, max_len: int):
    """Every edge-path from r of length <= max_len, by target vertex."""
    succ = {}
    for (u, v) in g.edges:
        succ.setdefault(u, []).append((u, v))
    out = {v: set() for v in g.vertices}
    frontier = [((), r)]
    out[r].add(())
    for _ in range(max_len):
        nxt = []
        for path, at in frontier:
            for e in succ.get(at, ()):
                p2 = path + (e,)
                out[e[1]].add(p2)
                nxt.append((p2, e[1]))
        frontier = nxt
    return out


class TestConstructorLaws:
    def test_hash_consing(self):
        a, b = letter(("u", "v")), letter(("v", "u"))
        assert letter(("u", "v")) is a
        assert rcat(a, b) is rcat(a, b)

    def test_units(self):
        a = letter((0, 1))
        assert rplus(a, ZERO) is a and rplus(ZERO, a) is a
        assert rcat(a, ONE) is a and rcat(ONE, a) is a
        assert rcat(a, ZERO) is ZERO
        assert rstar(ZERO) is ONE and rstar(ONE) is ONE
        assert oplus(omega(ZERO), omega(a)) is omega(a)


class TestDominators:
    def test_worked_example(self):
        idom = immediate_dominators(EX_CFG)
        assert idom == {1: 1, 2: 1, 3: 1, 4: 1, 5: 3}

    def test_tree_shape(self):
        tree = dominator_tree(EX_CFG)
        assert tree[1] == {2, 3, 4} and tree[3] == {5}

    def test_diamond(self):
        g = Cfg((0, 1, 2, 3), ((0, 1), (0, 2), (1, 3), (2, 3)), 0)
        assert immediate_dominators(g) == {0: 0, 1: 0, 2: 0, 3: 0}

    def test_random_agrees_with_definition(self):
        rng = random.Random(11)
        for _ in range(20):
            g = random_cfg(rng, rng.randint(2, 7))
            idom = immediate_dominators(g)
            paths = all_paths(g, g.root, 2 * len(g.vertices))
            for v, d in idom.items():
                # the immediate dominator lies on every sampled path to v
                for p in paths[v]:
                    through = {g.root} | {e[1] for e in p}
                    assert d in through, (g, v, d, p)


class TestFinitePathExpr:
    def test_worked_example_targets(self):
        pe = finite_path_expr(EX_CFG, 1, 2)
        # paths from 1 to 2 are a c^n
        assert matches(pe, (EX_EDGES["a"],))
        assert matches(pe, (EX_EDGES["a"], EX_EDGES["c"], EX_EDGES["c"]))
        assert not matches(pe, (EX_EDGES["b"],))

    def test_random_graphs_language_equality(self):
        rng = random.Random(23)
        for _ in range(15):
            g = random_cfg(rng, rng.randint(2, 6))
            max_len = 5
            paths = all_paths(g, g.root, max_len)
            universe = list(g.edges)
            for v in g.vertices:
                pe = finite_path_expr(g, g.root, v)
                for p in paths[v]:
                    assert matches(pe, p), (g, v, p)
                # random non-paths / wrong-target words must be rejected
                for _ in range(10):
                    w = tuple(rng.choice(universe)
                              for _ in range(rng.randint(0, max_len)))
                    assert matches(pe, w) == (w in paths[v]), (g, v, w)


class TestRendering:
    def test_expr_str_named(self):
        e = rcat(letter(EX_EDGES["a"]), rstar(letter(EX_EDGES["c"])))
        inv = {v: k for k, v in EX_EDGES.items()}
        assert expr_str(e, inv) == "ac*"

    def test_omega_str(self):
        f = omega(letter(("u", "v")))
        assert omega_str(f) == "(<u,v>)^w"

    def test_dot_outputs_are_dot(self):
        assert dot_cfg(EX_CFG).startswith("digraph")
        assert dot_domtree(dominator_tree(EX_CFG)).startswith("digraph")
        assert dot_expr(omega_path_expr(EX_CFG)).startswith("digraph")
