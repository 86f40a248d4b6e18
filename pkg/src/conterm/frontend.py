"""Input formats for the analyzer.

Two concrete syntaxes, both lowered to an interprocedural program:

* a structured mini-language::

      globals: g, r;
      proc main {
        vars: n;
        n := g;
        while (n > 0) { n := n - 1; }
      }

  with statements ``x := t``, ``assume(phi)``, ``havoc x``, ``call p``,
  ``if (phi) {...} else {...}``, ``while (phi) {...}`` and ``halt``.  A file
  without any ``proc`` is a bare statement list, the body of an implicit
  ``main``.  Conditions compile to assume-labeled branch edges; ``halt``
  jumps to a sink vertex with no successors.

* a raw labeled graph, with edges carrying SMT-LIB transition formulas::

      graph {
        vertices a b c;
        root a;
        globals x;
        edge a b "(and (= x' (+ x 1)))";
        call-edge b c main;
        entry main a;
        exit main c;
      }

Right-hand sides and conditions must be linear over the integers; anything
else is rejected with a positioned error (use ``havoc`` for the rest).
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field

from .logic import (
    Formula, Term, TRUE, land, lnot, lor, leq, lt, geq, gt, eq, tvar, tconst,
    var, primed, free_vars, parse_smtlib, ParseError,
)
from .tf import VarContext
from .interp import InterProcProgram

__all__ = [
    "Assign", "Assume", "Havoc", "Call", "Halt", "If", "While",
    "Procedure", "SourceProgram", "FrontendError",
    "parse", "lower", "load",
]


class FrontendError(Exception):
    """Syntax or well-formedness error, with source position when known."""

    def __init__(self, message: str, line: int | None = None,
                 col: int | None = None):
        if line is not None:
            message = f"{line}:{col}: {message}"
        super().__init__(message)
        self.line = line
        self.col = col


# ---------------------------------------------------------------------------
# Abstract syntax
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Assign:
    name: str
    term: Term


@dataclass(frozen=True)
class Assume:
    guard: Formula


@dataclass(frozen=True)
class Havoc:
    name: str


@dataclass(frozen=True)
class Call:
    proc: str


@dataclass(frozen=True)
class Halt:
    pass


@dataclass(frozen=True)
class If:
    cond: Formula
    then: tuple
    orelse: tuple = ()


@dataclass(frozen=True)
class While:
    cond: Formula
    body: tuple


Stmt = Assign | Assume | Havoc | Call | Halt | If | While


@dataclass(frozen=True)
class Procedure:
    name: str
    local_names: tuple[str, ...]
    body: tuple


@dataclass(frozen=True)
class SourceProgram:
    global_names: tuple[str, ...]
    procedures: tuple[Procedure, ...]
    main: str
    raw: "RawGraph | None" = None


@dataclass(frozen=True)
class RawGraph:
    vertices: tuple[str, ...]
    root: str
    edges: tuple  # (u, v, smtlib text) triples
    call_edges: tuple  # (u, v, proc) triples
    entry: dict
    exit: dict
    global_names: tuple[str, ...]
    local_names: tuple[str, ...]


# ---------------------------------------------------------------------------
# Tokenizer
# ---------------------------------------------------------------------------

_TOKEN = re.compile(r"""
    (?P<ws>\s+|\#[^\n]*|//[^\n]*)
  | (?P<num>\d+)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<str>"(?:[^"\\]|\\.)*")
  | (?P<op>:=|<=|>=|==|!=|&&|\|\||[-+*<>=!(){},;:])
""", re.VERBOSE)

_KEYWORDS = {"proc", "vars", "globals", "locals", "assume", "havoc", "call",
             "halt", "if", "else", "while", "true", "false", "and", "or",
             "not", "graph", "vertices", "root", "edge", "entry", "exit"}


@dataclass(frozen=True)
class _Tok:
    kind: str  # "num" | "name" | "str" | "op" | "eof"
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list[_Tok]:
    out, pos, line, bol = [], 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise FrontendError(f"unexpected character {text[pos]!r}",
                                line, pos - bol + 1)
        kind = m.lastgroup
        chunk = m.group()
        if kind != "ws":
            out.append(_Tok(kind, chunk, line, pos - bol + 1))
        line += chunk.count("\n")
        if "\n" in chunk:
            bol = pos + chunk.rindex("\n") + 1
        pos = m.end()
    out.append(_Tok("eof", "<end of input>", line, pos - bol + 1))
    return out


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0

    # -- token plumbing -----------------------------------------------------

    @property
    def cur(self) -> _Tok:
        return self.toks[self.i]

    def _fail(self, msg: str):
        t = self.cur
        raise FrontendError(f"{msg}, got {t.text!r}", t.line, t.col)

    def take(self, text: str) -> _Tok:
        t = self.cur
        if t.text != text:
            self._fail(f"expected {text!r}")
        self.i += 1
        return t

    def accept(self, text: str) -> bool:
        if self.cur.text == text:
            self.i += 1
            return True
        return False

    def name(self, what: str = "a name") -> str:
        t = self.cur
        if t.kind != "name" or t.text in _KEYWORDS:
            self._fail(f"expected {what}")
        self.i += 1
        return t.text

    # -- program structure --------------------------------------------------

    def program(self) -> SourceProgram:
        if self.cur.text == "graph":
            raw = self.raw_graph()
            if self.cur.kind != "eof":
                self._fail("expected end of input")
            return SourceProgram(raw.global_names, (), "main", raw=raw)
        global_names: list[str] = []
        procs: list[Procedure] = []
        loose: list[Stmt] = []
        while self.cur.kind != "eof":
            if self.accept("globals"):
                self.take(":")
                global_names.extend(self.name_list())
                self.accept(";")
            elif self.cur.text == "proc":
                procs.append(self.proc())
            else:
                loose.append(self.stmt())
        if loose and procs:
            raise FrontendError(
                "statements outside procedures are only allowed when the "
                "whole file is a bare main body")
        if loose:
            procs.append(Procedure("main", (), tuple(loose)))
        if not procs:
            raise FrontendError("empty program")
        names = [p.name for p in procs]
        if len(set(names)) != len(names):
            raise FrontendError("duplicate procedure name")
        if "main" in names:
            main = "main"
        elif len(procs) == 1:
            main = procs[0].name
        else:
            raise FrontendError(
                "multiple procedures but none is named 'main'")
        return SourceProgram(tuple(global_names), tuple(procs), main)

    def name_list(self) -> list[str]:
        out = [self.name()]
        while self.accept(","):
            out.append(self.name())
        return out

    def proc(self) -> Procedure:
        self.take("proc")
        pname = self.name("a procedure name")
        self.take("{")
        local_names: tuple[str, ...] = ()
        if self.accept("vars"):
            self.take(":")
            local_names = tuple(self.name_list())
            self.take(";")
        body = []
        while not self.accept("}"):
            body.append(self.stmt())
        return Procedure(pname, local_names, tuple(body))

    # -- statements ---------------------------------------------------------

    def block(self) -> tuple:
        if self.accept("{"):
            out = []
            while not self.accept("}"):
                out.append(self.stmt())
            return tuple(out)
        return (self.stmt(),)

    def stmt(self) -> Stmt:
        t = self.cur
        if self.accept("assume"):
            self.take("(")
            g = self.formula()
            self.take(")")
            self.accept(";")
            return Assume(g)
        if self.accept("havoc"):
            out = Havoc(self.name())
            self.accept(";")
            return out
        if self.accept("call"):
            out = Call(self.name("a procedure name"))
            self.accept(";")
            return out
        if self.accept("halt"):
            self.accept(";")
            return Halt()
        if self.accept("if"):
            self.take("(")
            c = self.formula()
            self.take(")")
            then = self.block()
            orelse = self.block() if self.accept("else") else ()
            return If(c, then, orelse)
        if self.accept("while"):
            self.take("(")
            c = self.formula()
            self.take(")")
            return While(c, self.block())
        if t.kind == "name" and t.text not in _KEYWORDS:
            lhs = self.name()
            self.take(":=")
            rhs = self.term()
            self.accept(";")
            return Assign(lhs, rhs)
        self._fail("expected a statement")

    # -- conditions (precedence: or < and < not < comparison) ---------------

    def formula(self) -> Formula:
        f = self.formula_and()
        while self.cur.text in ("or", "||"):
            self.i += 1
            f = lor(f, self.formula_and())
        return f

    def formula_and(self) -> Formula:
        f = self.formula_not()
        while self.cur.text in ("and", "&&"):
            self.i += 1
            f = land(f, self.formula_not())
        return f

    def formula_not(self) -> Formula:
        if self.cur.text in ("not", "!"):
            self.i += 1
            return lnot(self.formula_not())
        if self.accept("true"):
            return TRUE
        if self.accept("false"):
            return lnot(TRUE)
        if self.cur.text == "(":
            # lookahead: parenthesized formula vs parenthesized term
            save = self.i
            self.i += 1
            try:
                f = self.formula()
                self.take(")")
                return f
            except FrontendError:
                self.i = save
        return self.comparison()

    _CMP = {"<": lt, "<=": leq, ">": gt, ">=": geq, "==": eq, "=": eq}

    def comparison(self) -> Formula:
        a = self.term()
        op = self.cur.text
        if op == "!=":
            self.i += 1
            return lnot(eq(a, self.term()))
        if op not in self._CMP:
            self._fail("expected a comparison operator")
        self.i += 1
        return self._CMP[op](a, self.term())

    # -- linear terms -------------------------------------------------------

    def term(self) -> Term:
        t = self.term_atom()
        while self.cur.text in ("+", "-"):
            op = self.cur.text
            self.i += 1
            rhs = self.term_atom()
            t = t + rhs if op == "+" else t - rhs
        return t

    def term_atom(self) -> Term:
        t = self.cur
        if self.accept("-"):
            return -self.term_atom()
        if t.kind == "num":
            self.i += 1
            k = int(t.text)
            if self.accept("*"):
                return k * self._term_factor()
            return tconst(k)
        prod = self._term_factor()
        if self.cur.text == "*":
            self._fail("nonlinear product (only constant * variable "
                       "is linear)")
        return prod

    def _term_factor(self) -> Term:
        t = self.cur
        if t.kind == "num":
            self.i += 1
            return tconst(int(t.text))
        if t.kind == "name" and t.text not in _KEYWORDS:
            self.i += 1
            return tvar(var(t.text))
        if self.accept("("):
            inner = self.term()
            self.take(")")
            return inner
        self._fail("expected a variable or constant")

    # -- raw graph format ---------------------------------------------------

    def raw_graph(self) -> RawGraph:
        self.take("graph")
        self.take("{")
        vertices: list[str] = []
        edges, call_edges = [], []
        entry: dict = {}
        exit_: dict = {}
        root = None
        global_names: list[str] = []
        local_names: list[str] = []
        while not self.accept("}"):
            if self.accept("vertices"):
                while self.cur.text != ";":
                    vertices.append(self.name("a vertex"))
                self.take(";")
            elif self.accept("root"):
                root = self.name("a vertex")
                self.take(";")
            elif self.accept("edge"):
                u, v = self.name("a vertex"), self.name("a vertex")
                t = self.cur
                if t.kind != "str":
                    self._fail("expected a quoted SMT-LIB formula")
                self.i += 1
                edges.append((u, v, t.text[1:-1], t.line, t.col))
                self.take(";")
            elif self.accept("call"):
                self.take("-")
                self.take("edge")
                u, v = self.name("a vertex"), self.name("a vertex")
                call_edges.append((u, v, self.name("a procedure name")))
                self.take(";")
            elif self.accept("entry"):
                p, u = self.name("a procedure name"), self.name("a vertex")
                entry[p] = u
                self.take(";")
            elif self.accept("exit"):
                p, u = self.name("a procedure name"), self.name("a vertex")
                exit_[p] = u
                self.take(";")
            elif self.accept("globals"):
                global_names.extend(self.name_list())
                self.take(";")
            elif self.accept("locals"):
                local_names.extend(self.name_list())
                self.take(";")
            else:
                self._fail("expected a graph declaration")
        if root is None:
            raise FrontendError("graph has no root")
        return RawGraph(tuple(vertices), root, tuple(edges),
                        tuple(call_edges), entry, exit_,
                        tuple(global_names), tuple(local_names))


def parse(text: str) -> SourceProgram:
    """Parse either input format into an abstract syntax tree."""
    return _Parser(text).program()


# ---------------------------------------------------------------------------
# Lowering to an interprocedural program
# ---------------------------------------------------------------------------

def _collect_names(stmts, into: set[str]) -> None:
    for s in stmts:
        if isinstance(s, Assign):
            into.add(s.name)
            into.update(v.name for v in s.term.vars())
        elif isinstance(s, Assume):
            into.update(v.name for v in free_vars(s.guard))
        elif isinstance(s, Havoc):
            into.add(s.name)
        elif isinstance(s, If):
            into.update(v.name for v in free_vars(s.cond))
            _collect_names(s.then, into)
            _collect_names(s.orelse, into)
        elif isinstance(s, While):
            into.update(v.name for v in free_vars(s.cond))
            _collect_names(s.body, into)


class _Lowerer:
    def __init__(self, ast: SourceProgram, ctx: VarContext):
        self.ast = ast
        self.ctx = ctx
        self.vertices: list[str] = []
        self.edges: dict = {}
        self.counter = 0
        self.sink: str | None = None
        self.proc_names = {p.name for p in ast.procedures}

    def vertex(self, name: str | None = None) -> str:
        v = name if name is not None else f"v{self.counter}"
        self.counter += 1
        self.vertices.append(v)
        return v

    def edge(self, u: str, v: str, label) -> None:
        if (u, v) in self.edges:
            # parallel edges collapse by choice
            old = self.edges[u, v]
            if isinstance(old, str) or isinstance(label, str):
                raise FrontendError(
                    f"parallel call edge {u} -> {v} cannot be merged")
            label = self.ctx.tf(lor(old.formula, label.formula))
        self.edges[u, v] = label

    def frame(self, but: frozenset[str] = frozenset()) -> Formula:
        return land(*(eq(tvar(primed(v)), tvar(v))
                      for v in self.ctx.variables if v.name not in but))

    def halt_sink(self) -> str:
        if self.sink is None:
            self.sink = self.vertex("halt")
        return self.sink

    def stmt_edge(self, s: Stmt, u: str, v: str) -> None:
        """A single-edge statement from u to v."""
        if isinstance(s, Assign):
            self.edge(u, v, self.ctx.tf(land(
                eq(tvar(primed(var(s.name))), s.term),
                self.frame(frozenset([s.name])))))
        elif isinstance(s, Assume):
            self.edge(u, v, self.ctx.tf(land(s.guard, self.frame())))
        elif isinstance(s, Havoc):
            self.edge(u, v, self.ctx.tf(self.frame(frozenset([s.name]))))
        elif isinstance(s, Call):
            if s.proc not in self.proc_names:
                raise FrontendError(f"call to unknown procedure {s.proc!r}")
            self.edge(u, v, s.proc)
        else:
            raise AssertionError(s)

    def seq(self, stmts, u: str, v: str) -> None:
        """Lower a statement sequence so its last edge lands exactly on v."""
        stmts = list(stmts)
        for k, s in enumerate(stmts):
            last = k == len(stmts) - 1
            if isinstance(s, Halt):
                # fuse: whatever led here already ends at u; one identity
                # edge into the sink, and the rest of the sequence is dead
                self.edge(u, self.halt_sink(), self.ctx.tf(self.frame()))
                return
            if (not last and isinstance(stmts[k + 1], Halt)
                    and not isinstance(s, (If, While))):
                self.stmt_edge(s, u, self.halt_sink())
                return
            w = v if last else self.vertex()
            if isinstance(s, If):
                self.seq((Assume(s.cond), *s.then), u, w)
                self.seq((Assume(lnot(s.cond)), *s.orelse), u, w)
            elif isinstance(s, While):
                if s.cond is not TRUE:
                    self.stmt_edge(Assume(lnot(s.cond)), u, w)
                body = s.body if s.cond is TRUE else (Assume(s.cond),
                                                      *s.body)
                if body:
                    self.seq(body, u, u)
                else:
                    self.edge(u, u, self.ctx.tf(self.frame()))
            else:
                self.stmt_edge(s, u, w)
            u = w


def lower(ast: SourceProgram) -> InterProcProgram:
    """Compile an AST to an interprocedural control flow program.

    Structured control flow becomes assume-labeled branch edges; a loop head
    gets a [guard] edge into the body and a [not guard] edge past it;
    assignments conjoin an equality frame on untouched variables; havoc
    drops its variable from the frame; halt jumps to a shared sink.
    Unreachable intermediate vertices are pruned (procedure entries and
    exits are kept).
    """
    if ast.raw is not None:
        return _lower_raw(ast.raw)
    names: set[str] = set(ast.global_names)
    for p in ast.procedures:
        names.update(p.local_names)
        _collect_names(p.body, names)
    local_names = {n for p in ast.procedures for n in p.local_names}
    overlap = local_names & set(ast.global_names)
    if overlap:
        raise FrontendError(f"{sorted(overlap)[0]!r} is both global and "
                            "local")
    ctx = VarContext.of_names(*sorted(names))
    low = _Lowerer(ast, ctx)
    entry, exit_ = {}, {}
    for p in ast.procedures:
        entry[p.name] = low.vertex(f"{p.name}.entry")
        exit_[p.name] = low.vertex(f"{p.name}.exit")
    for p in ast.procedures:
        low.seq(p.body, entry[p.name], exit_[p.name])
    keep = _reachable(low.vertices, low.edges, entry[ast.main])
    keep.update(entry.values())
    keep.update(exit_.values())
    return InterProcProgram(
        vertices=tuple(v for v in low.vertices if v in keep),
        edge_labels={e: l for e, l in low.edges.items()
                     if e[0] in keep and e[1] in keep},
        procedures=tuple(p.name for p in ast.procedures),
        entry=entry, exit=exit_, main=ast.main, ctx=ctx,
        global_vars=tuple(v for v in ctx.variables
                          if v.name not in local_names),
        local_vars=tuple(v for v in ctx.variables
                         if v.name in local_names))


def _reachable(vertices, edges, root) -> set:
    succ: dict = {v: [] for v in vertices}
    for (u, v) in edges:
        succ[u].append(v)
    seen, todo = {root}, [root]
    while todo:
        for w in succ[todo.pop()]:
            if w not in seen:
                seen.add(w)
                todo.append(w)
    return seen


def _lower_raw(raw: RawGraph) -> InterProcProgram:
    names = set(raw.global_names) | set(raw.local_names)
    parsed = []
    for (u, v, text, line, col) in raw.edges:
        try:
            f = parse_smtlib(text)
        except ParseError as exc:
            raise FrontendError(f"bad edge formula: {exc}", line, col)
        for x in free_vars(f):
            base = x.name.rstrip("'")
            names.add(base)
        parsed.append((u, v, f))
    ctx = VarContext.of_names(*sorted(names))
    vertices = list(raw.vertices)
    for (u, v, *_rest) in (*raw.edges, *raw.call_edges):
        for w in (u, v):
            if w not in vertices:
                vertices.append(w)
    edge_labels: dict = {}
    for (u, v, f) in parsed:
        edge_labels[u, v] = ctx.tf(f)
    for (u, v, p) in raw.call_edges:
        edge_labels[u, v] = p
    entry = dict(raw.entry)
    exit_ = dict(raw.exit)
    if entry:
        missing = set(entry) ^ set(exit_)
        if missing:
            raise FrontendError(
                f"procedure {sorted(missing)[0]!r} needs both an entry and "
                "an exit")
        if "main" in entry:
            main = "main"
        elif len(entry) == 1:
            main = next(iter(entry))
        else:
            raise FrontendError("multiple procedures but no 'main'")
    else:
        main = "main"
        entry = {"main": raw.root}
        sink = "exit"
        while sink in vertices:
            sink += "_"
        vertices.append(sink)
        exit_ = {"main": sink}
    local_set = set(raw.local_names)
    return InterProcProgram(
        vertices=tuple(vertices), edge_labels=edge_labels,
        procedures=tuple(sorted(entry)), entry=entry, exit=exit_,
        main=main, ctx=ctx,
        global_vars=tuple(v for v in ctx.variables
                          if v.name not in local_set),
        local_vars=tuple(v for v in ctx.variables if v.name in local_set))


def load(text: str) -> InterProcProgram:
    """Parse and lower in one step."""
    return lower(parse(text))
