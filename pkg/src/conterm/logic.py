"""Linear integer arithmetic: variables, terms, formulas.

Terms are kept in a linear normal form (sorted coefficient vector plus an
integer constant).  Variables, terms and formulas are interned, so structural
equality is pointer equality and they can be used as dict keys cheaply.
Semantic equivalence always goes through the solver.

The formula grammar is: comparisons of linear terms, and/or/not, integer
quantifiers, and the constants true/false.  Strict inequality is encoded on
construction (t1 < t2 becomes t1 + 1 <= t2).  An internal divisibility atom
exists because quantifier elimination introduces one; it is printed to SMT-LIB
as an explicit existential and never appears in user-facing input.
"""
from __future__ import annotations

import itertools
import re
from math import gcd
from typing import Iterable, Iterator, Mapping

__all__ = [
    "Variable", "Term", "Formula", "Atom", "Dvd", "And", "Or", "Not", "Quant",
    "TRUE", "FALSE", "var", "primed", "unprimed", "is_primed", "fresh",
    "tvar", "tconst", "tadd", "tsub", "tscale",
    "leq", "lt", "geq", "gt", "eq", "land", "lor", "lnot", "implies",
    "exists", "forall", "exists_all", "forall_all", "dvd",
    "free_vars", "substitute", "rename", "evaluate", "evaluate_flagged",
    "to_smtlib", "parse_smtlib", "EvalError", "ParseError",
]

_fresh_counter = itertools.count()


def _next_fresh() -> int:
    # itertools.count is effectively atomic under the GIL
    return next(_fresh_counter)


# ---------------------------------------------------------------------------
# Variables


class Variable:
    """An integer-valued variable.  Interned: same (name, kind) is the same object."""

    __slots__ = ("name", "kind")
    _cache: dict[tuple[str, str], "Variable"] = {}

    KINDS = ("program", "primed", "skolem", "parameter")

    def __new__(cls, name: str, kind: str = "program"):
        key = (name, kind)
        v = cls._cache.get(key)
        if v is None:
            if kind not in cls.KINDS:
                raise ValueError(f"bad variable kind {kind!r}")
            v = object.__new__(cls)
            object.__setattr__(v, "name", name)
            object.__setattr__(v, "kind", kind)
            cls._cache[key] = v
        return v

    def __setattr__(self, *a):  # pragma: no cover - defensive
        raise AttributeError("Variable is immutable")

    def __repr__(self):
        return self.name

    @property
    def sort_key(self) -> tuple[str, str]:
        return (self.name, self.kind)


def var(name: str, kind: str = "program") -> Variable:
    return Variable(name, kind)


def primed(v: Variable) -> Variable:
    """The primed copy of a program variable (fixed bijection by name)."""
    assert v.kind == "program", v
    return Variable(v.name + "'", "primed")


def unprimed(v: Variable) -> Variable:
    assert v.kind == "primed" and v.name.endswith("'"), v
    return Variable(v.name[:-1], "program")


def is_primed(v: Variable) -> bool:
    return v.kind == "primed"


def fresh(base: str, kind: str = "skolem") -> Variable:
    """A globally fresh variable.  '.' is reserved for generated names."""
    return Variable(f"{base}.{_next_fresh()}", kind)


# ---------------------------------------------------------------------------
# Terms (linear normal form)


class Term:
    """A linear term: sum of coeff*var plus a constant.  Interned."""

    __slots__ = ("coeffs", "const")
    _cache: dict[tuple, "Term"] = {}

    def __new__(cls, coeffs: tuple[tuple[Variable, int], ...], const: int):
        key = (coeffs, const)
        t = cls._cache.get(key)
        if t is None:
            t = object.__new__(cls)
            object.__setattr__(t, "coeffs", coeffs)
            object.__setattr__(t, "const", const)
            cls._cache[key] = t
        return t

    def __setattr__(self, *a):  # pragma: no cover - defensive
        raise AttributeError("Term is immutable")

    # convenience operators used pervasively in the analyzer
    def __add__(self, other):
        return tadd(self, other if isinstance(other, Term) else tconst(other))

    def __sub__(self, other):
        return tadd(self, tscale(-1, other if isinstance(other, Term) else tconst(other)))

    def __rsub__(self, other):
        return tadd(tconst(other), tscale(-1, self))

    __radd__ = __add__

    def __mul__(self, n: int):
        return tscale(n, self)

    __rmul__ = __mul__

    def __neg__(self):
        return tscale(-1, self)

    def vars(self) -> set[Variable]:
        return {v for v, _ in self.coeffs}

    def coeff(self, v: Variable) -> int:
        for u, c in self.coeffs:
            if u is v:
                return c
        return 0

    def __repr__(self):
        parts = [f"{c}*{v.name}" for v, c in self.coeffs]
        parts.append(str(self.const))
        return " + ".join(parts)


def _mk_term(d: dict[Variable, int], const: int) -> Term:
    coeffs = tuple(sorted(((v, c) for v, c in d.items() if c != 0),
                          key=lambda p: p[0].sort_key))
    return Term(coeffs, const)


def tvar(v: Variable) -> Term:
    return Term(((v, 1),), 0)


def tconst(n: int) -> Term:
    return Term((), n)


def tadd(*terms) -> Term:
    d: dict[Variable, int] = {}
    const = 0
    for t in terms:
        if not isinstance(t, Term):
            t = tconst(t)
        const += t.const
        for v, c in t.coeffs:
            d[v] = d.get(v, 0) + c
    return _mk_term(d, const)


def tscale(n: int, t: Term) -> Term:
    if n == 0:
        return tconst(0)
    return Term(tuple((v, n * c) for v, c in t.coeffs), n * t.const)


def tsub(a: Term, b: Term) -> Term:
    return tadd(a, tscale(-1, b))


def term_subst(t: Term, binding: Mapping[Variable, Term]) -> Term:
    d: dict[Variable, int] = {}
    const = t.const
    for v, c in t.coeffs:
        r = binding.get(v)
        if r is None:
            d[v] = d.get(v, 0) + c
        else:
            const += c * r.const
            for u, cu in r.coeffs:
                d[u] = d.get(u, 0) + c * cu
    return _mk_term(d, const)


def term_eval(t: Term, val: Mapping[Variable, int]) -> int:
    try:
        return t.const + sum(c * val[v] for v, c in t.coeffs)
    except KeyError as e:
        raise EvalError(f"valuation missing variable {e.args[0]}") from None


# ---------------------------------------------------------------------------
# Formulas


class EvalError(Exception):
    pass


class Formula:
    """Base class; all nodes interned, equality is identity."""
    __slots__ = ()

    def __and__(self, other):
        return land(self, other)

    def __or__(self, other):
        return lor(self, other)

    def __invert__(self):
        return lnot(self)


_formula_cache: dict[tuple, Formula] = {}


def _intern(cls, key, build):
    full = (cls.__name__,) + key
    f = _formula_cache.get(full)
    if f is None:
        f = build()
        _formula_cache[full] = f
    return f


def setattr_ok(obj, name, value):
    object.__setattr__(obj, name, value)


class _Const(Formula):
    __slots__ = ("value",)

    def __init__(self, value: bool):
        setattr_ok(self, "value", value)

    def __repr__(self):
        return "true" if self.value else "false"


TRUE = _Const(True)
FALSE = _Const(False)


class Atom(Formula):
    """t <= 0 (op 'le') or t = 0 (op 'eq'), t in canonical form."""
    __slots__ = ("op", "term")

    def __init__(self, op: str, term: Term):
        setattr_ok(self, "op", op)
        setattr_ok(self, "term", term)

    def __repr__(self):
        return f"({self.term} {'<=' if self.op == 'le' else '='} 0)"


class Dvd(Formula):
    """d | t (or its negation).  Internal: produced by quantifier elimination."""
    __slots__ = ("d", "term", "neg")

    def __init__(self, d: int, term: Term, neg: bool):
        setattr_ok(self, "d", d)
        setattr_ok(self, "term", term)
        setattr_ok(self, "neg", neg)

    def __repr__(self):
        return f"({'¬' if self.neg else ''}{self.d} | {self.term})"


class And(Formula):
    __slots__ = ("args",)

    def __init__(self, args: tuple[Formula, ...]):
        setattr_ok(self, "args", args)

    def __repr__(self):
        return "(and " + " ".join(map(repr, self.args)) + ")"


class Or(Formula):
    __slots__ = ("args",)

    def __init__(self, args: tuple[Formula, ...]):
        setattr_ok(self, "args", args)

    def __repr__(self):
        return "(or " + " ".join(map(repr, self.args)) + ")"


class Not(Formula):
    __slots__ = ("arg",)

    def __init__(self, arg: Formula):
        setattr_ok(self, "arg", arg)

    def __repr__(self):
        return f"(not {self.arg!r})"


class Quant(Formula):
    __slots__ = ("q", "v", "body")

    def __init__(self, q: str, v: Variable, body: Formula):
        setattr_ok(self, "q", q)
        setattr_ok(self, "v", v)
        setattr_ok(self, "body", body)

    def __repr__(self):
        return f"({self.q} {self.v.name}. {self.body!r})"


# -- smart constructors ------------------------------------------------------


def _atom_le(t: Term) -> Formula:
    if not t.coeffs:
        return TRUE if t.const <= 0 else FALSE
    g = 0
    for _, c in t.coeffs:
        g = gcd(g, abs(c))
    if g > 1:
        # g*s + c <= 0  <=>  s + ceil(c/g) <= 0  (integer tightening)
        t = Term(tuple((v, c // g) for v, c in t.coeffs), -((-t.const) // g))
    return _intern(Atom, ("le", t), lambda: Atom("le", t))


def _atom_eq(t: Term) -> Formula:
    if not t.coeffs:
        return TRUE if t.const == 0 else FALSE
    g = 0
    for _, c in t.coeffs:
        g = gcd(g, abs(c))
    if t.const % g != 0:
        return FALSE
    if g > 1:
        t = Term(tuple((v, c // g) for v, c in t.coeffs), t.const // g)
    if t.coeffs[0][1] < 0:  # sign-canonical
        t = tscale(-1, t)
    return _intern(Atom, ("eq", t), lambda: Atom("eq", t))


def leq(a: Term | int, b: Term | int) -> Formula:
    a = a if isinstance(a, Term) else tconst(a)
    b = b if isinstance(b, Term) else tconst(b)
    return _atom_le(tsub(a, b))


def lt(a, b) -> Formula:
    return leq(tadd(a, tconst(1)), b)


def geq(a, b) -> Formula:
    return leq(b, a)


def gt(a, b) -> Formula:
    return lt(b, a)


def eq(a: Term | int, b: Term | int) -> Formula:
    a = a if isinstance(a, Term) else tconst(a)
    b = b if isinstance(b, Term) else tconst(b)
    return _atom_eq(tsub(a, b))


def dvd(d: int, t: Term, neg: bool = False) -> Formula:
    assert d != 0
    d = abs(d)
    if d == 1:
        return FALSE if neg else TRUE
    coeffs = tuple((v, c % d) for v, c in t.coeffs if c % d != 0)
    t = Term(tuple(sorted(coeffs, key=lambda p: p[0].sort_key)), t.const % d)
    if not t.coeffs:
        holds = t.const % d == 0
        if neg:
            holds = not holds
        return TRUE if holds else FALSE
    return _intern(Dvd, (d, t, neg), lambda: Dvd(d, t, neg))


def land(*fs: Formula) -> Formula:
    flat: list[Formula] = []
    seen: set[int] = set()
    for f in fs:
        if f is TRUE:
            continue
        if f is FALSE:
            return FALSE
        sub = f.args if isinstance(f, And) else (f,)
        for g in sub:
            if id(g) not in seen:
                seen.add(id(g))
                flat.append(g)
    if not flat:
        return TRUE
    if len(flat) == 1:
        return flat[0]
    args = tuple(flat)
    return _intern(And, (tuple(map(id, args)),), lambda: And(args))


def lor(*fs: Formula) -> Formula:
    flat: list[Formula] = []
    seen: set[int] = set()
    for f in fs:
        if f is FALSE:
            continue
        if f is TRUE:
            return TRUE
        sub = f.args if isinstance(f, Or) else (f,)
        for g in sub:
            if id(g) not in seen:
                seen.add(id(g))
                flat.append(g)
    if not flat:
        return FALSE
    if len(flat) == 1:
        return flat[0]
    args = tuple(flat)
    return _intern(Or, (tuple(map(id, args)),), lambda: Or(args))


def lnot(f: Formula) -> Formula:
    if f is TRUE:
        return FALSE
    if f is FALSE:
        return TRUE
    if isinstance(f, Not):
        return f.arg
    if isinstance(f, Atom):
        if f.op == "le":                      # ¬(t<=0)  ==  -t+1 <= 0
            return _atom_le(tadd(tscale(-1, f.term), tconst(1)))
        # ¬(t=0)  ==  t<=-1  or  t>=1
        return lor(_atom_le(tadd(f.term, tconst(1))),
                   _atom_le(tadd(tscale(-1, f.term), tconst(1))))
    if isinstance(f, Dvd):
        return dvd(f.d, f.term, not f.neg)
    return _intern(Not, (id(f),), lambda: Not(f))


def implies(a: Formula, b: Formula) -> Formula:
    return lor(lnot(a), b)


def _quant(q: str, v: Variable, body: Formula) -> Formula:
    if v not in free_vars(body):
        return body
    # canonical bound-variable freshening: bound vars are distinct from
    # one another and from every free variable.
    w = fresh(v.name.split(".")[0], "skolem")
    body = substitute(body, {v: tvar(w)})
    return _intern(Quant, (q, w, id(body)), lambda: Quant(q, w, body))


def exists(v: Variable, body: Formula) -> Formula:
    return _quant("exists", v, body)


def forall(v: Variable, body: Formula) -> Formula:
    return _quant("forall", v, body)


def exists_all(vs: Iterable[Variable], body: Formula) -> Formula:
    for v in reversed(list(vs)):
        body = exists(v, body)
    return body


def forall_all(vs: Iterable[Variable], body: Formula) -> Formula:
    for v in reversed(list(vs)):
        body = forall(v, body)
    return body


# ---------------------------------------------------------------------------
# Free variables / substitution


_fv_cache: dict[int, frozenset] = {}


def free_vars(f: Formula) -> frozenset[Variable]:
    fv = _fv_cache.get(id(f))
    if fv is not None:
        return fv
    if isinstance(f, (Atom, Dvd)):
        fv = frozenset(f.term.vars())
    elif isinstance(f, (And, Or)):
        fv = frozenset().union(*(free_vars(a) for a in f.args)) if f.args else frozenset()
    elif isinstance(f, Not):
        fv = free_vars(f.arg)
    elif isinstance(f, Quant):
        fv = free_vars(f.body) - {f.v}
    else:
        fv = frozenset()
    _fv_cache[id(f)] = fv
    return fv


def substitute(f: Formula, binding: Mapping[Variable, Term]) -> Formula:
    """Parallel capture-avoiding substitution of terms for free variables."""
    binding = {v: t for v, t in binding.items() if t is not tvar(v)}
    if not binding:
        return f
    memo: dict[int, Formula] = {}

    def go(g: Formula, b: Mapping[Variable, Term]) -> Formula:
        if not (free_vars(g) & b.keys()):
            return g
        key = id(g)
        if b is binding:
            got = memo.get(key)
            if got is not None:
                return got
        if isinstance(g, Atom):
            t = term_subst(g.term, b)
            out = _atom_le(t) if g.op == "le" else _atom_eq(t)
        elif isinstance(g, Dvd):
            out = dvd(g.d, term_subst(g.term, b), g.neg)
        elif isinstance(g, And):
            out = land(*(go(a, b) for a in g.args))
        elif isinstance(g, Or):
            out = lor(*(go(a, b) for a in g.args))
        elif isinstance(g, Not):
            out = lnot(go(g.arg, b))
        elif isinstance(g, Quant):
            b2 = {v: t for v, t in b.items() if v is not g.v}
            captured = any(g.v in t.vars() for t in b2.values())
            v, body = g.v, g.body
            if captured:  # defensive; fresh bound names make this rare
                w = fresh(v.name.split(".")[0], "skolem")
                body = substitute(body, {v: tvar(w)})
                v = w
            body2 = go(body, b2)
            out = _intern(Quant, (g.q, v, id(body2)), lambda: Quant(g.q, v, body2)) \
                if v in free_vars(body2) else body2
        else:
            out = g
        if b is binding:
            memo[key] = out
        return out

    return go(f, binding)


def rename(f: Formula, mapping: Mapping[Variable, Variable]) -> Formula:
    return substitute(f, {v: tvar(w) for v, w in mapping.items()})


# ---------------------------------------------------------------------------
# Bounded evaluation (test oracle)


def evaluate_flagged(f: Formula, val: Mapping[Variable, int],
                     quant_range: tuple[int, int] = (-8, 8)) -> tuple[bool, bool]:
    """Truth of f under val, quantifiers bounded to quant_range.

    Returns (verdict, exact): exact is False when enlarging the range could
    change the verdict (an unwitnessed exists / an unrefuted forall).
    """
    lo, hi = quant_range
    exact = True

    def go(g: Formula, v: Mapping[Variable, int]) -> bool:
        nonlocal exact
        if g is TRUE:
            return True
        if g is FALSE:
            return False
        if isinstance(g, Atom):
            x = term_eval(g.term, v)
            return x <= 0 if g.op == "le" else x == 0
        if isinstance(g, Dvd):
            holds = term_eval(g.term, v) % g.d == 0
            return not holds if g.neg else holds
        if isinstance(g, And):
            return all(go(a, v) for a in g.args)
        if isinstance(g, Or):
            return any(go(a, v) for a in g.args)
        if isinstance(g, Not):
            return not go(g.arg, v)
        if isinstance(g, Quant):
            v2 = dict(v)
            for n in range(lo, hi + 1):
                v2[g.v] = n
                sub = go(g.body, v2)
                if g.q == "exists" and sub:
                    return True
                if g.q == "forall" and not sub:
                    return False
            exact = False
            return g.q == "forall"
        raise EvalError(f"cannot evaluate {g!r}")

    return go(f, val), exact


def evaluate(f: Formula, val: Mapping[Variable, int],
             quant_range: tuple[int, int] = (-8, 8)) -> bool:
    return evaluate_flagged(f, val, quant_range)[0]


# ---------------------------------------------------------------------------
# SMT-LIB 2 subset: printing


_SIMPLE_SYM = re.compile(r"[A-Za-z~!@$%^&*_+=<>.?/-][A-Za-z0-9~!@$%^&*_+=<>.?/-]*$")


def _sym(name: str) -> str:
    return name if _SIMPLE_SYM.match(name) else "|" + name + "|"


def _term_smt(t: Term) -> str:
    parts = []
    for v, c in t.coeffs:  # coeffs already sorted -> deterministic
        s = _sym(v.name)
        if c == 1:
            parts.append(s)
        elif c == -1:
            parts.append(f"(- {s})")
        elif c < 0:
            parts.append(f"(* (- {-c}) {s})")
        else:
            parts.append(f"(* {c} {s})")
    if t.const or not parts:
        parts.append(str(t.const) if t.const >= 0 else f"(- {-t.const})")
    if len(parts) == 1:
        return parts[0]
    return "(+ " + " ".join(parts) + ")"


def to_smtlib(f: Formula) -> str:
    """Deterministic SMT-LIB 2 text (args of and/or sorted)."""
    if f is TRUE:
        return "true"
    if f is FALSE:
        return "false"
    if isinstance(f, Atom):
        op = "<=" if f.op == "le" else "="
        return f"({op} {_term_smt(f.term)} 0)"
    if isinstance(f, Dvd):
        # ".divz" is reserved (generated names are always base.N), so the
        # bound symbol can never capture a variable of the term.
        z = _sym(".divz")
        body = f"(exists (({z} Int)) (= {_term_smt(f.term)} (* {f.d} {z})))"
        return f"(not {body})" if f.neg else body
    if isinstance(f, (And, Or)):
        op = "and" if isinstance(f, And) else "or"
        return f"({op} " + " ".join(sorted(to_smtlib(a) for a in f.args)) + ")"
    if isinstance(f, Not):
        return f"(not {to_smtlib(f.arg)})"
    if isinstance(f, Quant):
        return f"({f.q} (({_sym(f.v.name)} Int)) {to_smtlib(f.body)})"
    raise ValueError(f"unprintable formula {f!r}")


# ---------------------------------------------------------------------------
# SMT-LIB 2 subset: parsing


class ParseError(Exception):
    pass


_TOKEN = re.compile(r"""\s*(?:(\()|(\))|(\|[^|]*\|)|([^\s()|]+))""")


def tokenize_sexp(text: str) -> Iterator[str]:
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            rest = text[pos:].strip()
            if not rest:
                return
            raise ParseError(f"bad character at {pos}: {rest[:10]!r}")
        pos = m.end()
        tok = m.group(1) or m.group(2) or m.group(3) or m.group(4)
        yield tok


def read_sexp(tokens: list[str], i: int = 0):
    """Parse one s-expression from tokens[i:]; returns (tree, next_index)."""
    if i >= len(tokens):
        raise ParseError("unexpected end of input")
    t = tokens[i]
    if t == "(":
        out = []
        i += 1
        while i < len(tokens) and tokens[i] != ")":
            node, i = read_sexp(tokens, i)
            out.append(node)
        if i >= len(tokens):
            raise ParseError("missing ')'")
        return out, i + 1
    if t == ")":
        raise ParseError("unexpected ')'")
    if t.startswith("|"):
        t = t[1:-1]
    return t, i + 1


def _resolve(name: str, env: Mapping[str, Variable] | None,
             auto: bool) -> Variable:
    if env is not None and name in env:
        return env[name]
    if not auto:
        raise ParseError(f"unknown symbol {name!r}")
    if name.endswith("'"):
        return Variable(name, "primed")
    return Variable(name, "program")


def _parse_term(node, env, auto) -> Term:
    if isinstance(node, str):
        if re.match(r"^-?\d+$", node):
            return tconst(int(node))
        return tvar(_resolve(node, env, auto))
    head = node[0]
    args = node[1:]
    if head == "+":
        return tadd(*(_parse_term(a, env, auto) for a in args))
    if head == "-":
        if len(args) == 1:
            return tscale(-1, _parse_term(args[0], env, auto))
        first = _parse_term(args[0], env, auto)
        return tadd(first, *(tscale(-1, _parse_term(a, env, auto)) for a in args[1:]))
    if head == "*":
        terms = [_parse_term(a, env, auto) for a in args]
        consts = [t for t in terms if not t.coeffs]
        lins = [t for t in terms if t.coeffs]
        if len(lins) > 1:
            raise ParseError("nonlinear product")
        k = 1
        for c in consts:
            k *= c.const
        return tscale(k, lins[0]) if lins else tconst(k)
    raise ParseError(f"bad term head {head!r}")


def _parse_formula(node, env: dict[str, Variable], auto: bool) -> Formula:
    if isinstance(node, str):
        if node == "true":
            return TRUE
        if node == "false":
            return FALSE
        raise ParseError(f"bad formula symbol {node!r}")
    head, args = node[0], node[1:]
    if head in ("and", "or"):
        parts = [_parse_formula(a, env, auto) for a in args]
        return land(*parts) if head == "and" else lor(*parts)
    if head == "not":
        (a,) = args
        return lnot(_parse_formula(a, env, auto))
    if head == "=>":
        f = _parse_formula(args[-1], env, auto)
        for a in reversed(args[:-1]):
            f = implies(_parse_formula(a, env, auto), f)
        return f
    if head in ("exists", "forall"):
        decls, body = args
        bound = []
        env2 = dict(env)
        for d in decls:
            name, sort = d
            if sort != "Int":
                raise ParseError(f"unsupported sort {sort!r}")
            v = Variable(name, "parameter")
            env2[name] = v
            bound.append(v)
        f = _parse_formula(body, env2, auto)
        mk = exists if head == "exists" else forall
        for v in reversed(bound):
            f = mk(v, f)
        return f
    if head in ("<=", "<", ">=", ">", "="):
        ts = [_parse_term(a, env, auto) for a in args]
        ops = {"<=": leq, "<": lt, ">=": geq, ">": gt, "=": eq}
        return land(*(ops[head](ts[i], ts[i + 1]) for i in range(len(ts) - 1)))
    raise ParseError(f"bad formula head {head!r}")


def parse_smtlib(text: str, env: Mapping[str, Variable] | None = None,
                 auto_declare: bool = True) -> Formula:
    """Parse one formula from SMT-LIB 2 text.

    Unknown symbols become program variables (primed if the name ends with
    an apostrophe) unless auto_declare is False.
    """
    tokens = list(tokenize_sexp(text))
    node, i = read_sexp(tokens)
    if i != len(tokens):
        raise ParseError("trailing tokens after formula")
    return _parse_formula(node, dict(env or {}), auto_declare)
