"""A small SMT-LIB 2 server for quantified linear integer arithmetic.

Reads commands from stdin, answers on stdout.  Supported commands:
set-logic, set-option, declare-fun, declare-const, assert, check-sat,
get-value, get-model, push, pop, reset, echo, exit.

Run as `python3 -m conterm.smtserver`.  Decisions are exact (Presburger
engine); a per-query work budget makes pathological queries answer `unknown`.
"""
from __future__ import annotations

import sys

from . import presburger
from .logic import Variable, land, tokenize_sexp, read_sexp, _parse_formula, _sym

__all__ = ["main"]


def _read_command(stream) -> list | str | None:
    """Read one paren-balanced s-expression (possibly spanning lines)."""
    buf = ""
    depth = 0
    while True:
        line = stream.readline()
        if not line:
            return None if not buf.strip() else _finish(buf)
        buf += line
        depth = buf.count("(") - buf.count(")")
        if depth <= 0 and buf.strip():
            return _finish(buf)


def _finish(buf: str):
    tree, _ = read_sexp(list(tokenize_sexp(buf)))
    return tree


def _fmt_int(n: int) -> str:
    return str(n) if n >= 0 else f"(- {-n})"


def main(argv: list[str] | None = None) -> int:
    env: dict[str, Variable] = {}
    stack: list[list] = [[]]  # assertion levels
    decl_stack: list[list[str]] = [[]]
    last_model: dict[Variable, int] | None = None

    while True:
        try:
            cmd = _read_command(sys.stdin)
        except Exception:
            print("(error \"parse error\")", flush=True)
            continue
        if cmd is None:
            return 0
        if not isinstance(cmd, list) or not cmd:
            print("(error \"bad command\")", flush=True)
            continue
        head = cmd[0]
        try:
            if head == "exit":
                return 0
            elif head in ("set-logic", "set-option", "set-info"):
                pass  # silent, like stock solvers without :print-success
            elif head in ("declare-fun", "declare-const"):
                name = cmd[1]
                if head == "declare-fun" and cmd[2] != []:
                    print("(error \"only 0-ary Int symbols\")", flush=True)
                    continue
                env[name] = Variable(name, "primed" if name.endswith("'") else "program")
                decl_stack[-1].append(name)
            elif head == "assert":
                f = _parse_formula(cmd[1], env, auto=False)
                stack[-1].append(f)
            elif head == "push":
                n = int(cmd[1]) if len(cmd) > 1 else 1
                for _ in range(n):
                    stack.append([])
                    decl_stack.append([])
            elif head == "pop":
                n = int(cmd[1]) if len(cmd) > 1 else 1
                for _ in range(n):
                    if len(stack) > 1:
                        stack.pop()
                        for name in decl_stack.pop():
                            env.pop(name, None)
            elif head == "reset":
                env.clear()
                stack[:] = [[]]
                decl_stack[:] = [[]]
                last_model = None
            elif head == "echo":
                print(cmd[1], flush=True)
            elif head == "check-sat":
                f = land(*(a for level in stack for a in level))
                try:
                    last_model = presburger.get_model(f)
                except presburger.BudgetExceeded:
                    last_model = None
                    print("unknown", flush=True)
                    continue
                except RecursionError:
                    last_model = None
                    print("unknown", flush=True)
                    continue
                print("sat" if last_model is not None else "unsat", flush=True)
            elif head == "get-value":
                if last_model is None:
                    print("(error \"no model\")", flush=True)
                    continue
                parts = []
                for name in cmd[1]:
                    v = env.get(name)
                    n = last_model.get(v, 0) if v is not None else 0
                    parts.append(f"({_sym(name)} {_fmt_int(n)})")
                print("(" + " ".join(parts) + ")", flush=True)
            elif head == "get-model":
                if last_model is None:
                    print("(error \"no model\")", flush=True)
                    continue
                parts = [f"(define-fun {_sym(v.name)} () Int {_fmt_int(n)})"
                         for v, n in sorted(last_model.items(), key=lambda p: p[0].sort_key)]
                print("(" + " ".join(parts) + ")", flush=True)
            else:
                print(f"(error \"unsupported command {head}\")", flush=True)
        except Exception as e:  # keep serving
            print(f"(error \"{type(e).__name__}\")", flush=True)


if __name__ == "__main__":
    sys.exit(main())
