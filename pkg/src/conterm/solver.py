"""Satisfiability, entailment, and bound search over LIA formulas.

Two interchangeable backends:

* in-process (default): calls the Presburger engine directly;
* subprocess: speaks SMT-LIB 2 over the stdin/stdout of a child process
  (one process per solver session, queries isolated by push/pop).  The
  bundled server `python3 -m conterm.smtserver` implements the protocol with
  the same engine, and any SMT-LIB 2 solver supporting quantified LIA works.

Unknown is never success; every caller applies its own conservative default.
"""
from __future__ import annotations

import random
import subprocess
import sys
import threading
import time
from dataclasses import dataclass, field

from . import presburger
from .logic import (
    Formula, Term, Variable, evaluate, free_vars, land, lnot, geq, eq,
    to_smtlib, tokenize_sexp, read_sexp, _sym,
)

__all__ = ["SolverConfig", "SatResult", "Entailment", "Bound", "Solver"]


@dataclass(frozen=True)
class SolverConfig:
    executable: tuple[str, ...] | None = None  # None = in-process engine
    timeout_ms: int = 10_000
    budget_ms: int = 600_000
    seed: int = 0
    magnitude_cap: int = 2 ** 32
    qe_budget: int = 400_000
    validate_models: bool = False  # re-evaluate every model (slow, for tests)

    def __post_init__(self):
        if self.timeout_ms <= 0:
            raise ValueError("timeout must be positive")
        if self.budget_ms < self.timeout_ms:
            raise ValueError("budget must cover at least one query")


@dataclass(frozen=True)
class SatResult:
    kind: str  # "sat" | "unsat" | "unknown"
    model: dict[Variable, int] | None = None
    reason: str = ""

    @property
    def is_sat(self) -> bool:
        return self.kind == "sat"

    @property
    def is_unsat(self) -> bool:
        return self.kind == "unsat"

    @property
    def is_unknown(self) -> bool:
        return self.kind == "unknown"


@dataclass(frozen=True)
class Entailment:
    kind: str  # "yes" | "no" | "unknown"
    counter_model: dict[Variable, int] | None = None

    @property
    def is_yes(self) -> bool:
        return self.kind == "yes"


@dataclass(frozen=True)
class Bound:
    kind: str  # "finite" | "unbounded" | "unknown"
    value: int | None = None
    vacuous: bool = False


class Solver:
    """One solver session; confined to a single thread."""

    def __init__(self, config: SolverConfig | None = None):
        self.config = config or SolverConfig()
        self._rng = random.Random(self.config.seed)
        self._spent_ms = 0.0
        self._proc: subprocess.Popen | None = None
        self.stats = {"queries": 0, "unknowns": 0}

    # -- lifecycle ----------------------------------------------------------

    def close(self) -> None:
        if self._proc is not None:
            try:
                self._proc.stdin.write("(exit)\n")
                self._proc.stdin.flush()
            except Exception:
                pass
            self._proc.kill()
            self._proc = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    # -- core queries -------------------------------------------------------

    def is_sat(self, f: Formula) -> SatResult:
        self.stats["queries"] += 1
        if self._spent_ms > self.config.budget_ms:
            self.stats["unknowns"] += 1
            return SatResult("unknown", reason="global budget exhausted")
        t0 = time.monotonic()
        try:
            if self.config.executable is None:
                res = self._is_sat_local(f)
            else:
                res = self._is_sat_process(f)
        finally:
            self._spent_ms += (time.monotonic() - t0) * 1000.0
        if res.is_unknown:
            self.stats["unknowns"] += 1
        if (self.config.validate_models and res.is_sat
                and res.model is not None and _is_qf(f)):
            assert evaluate(f, res.model), "solver returned a bogus model"
        return res

    def entails(self, f: Formula, g: Formula) -> Entailment:
        res = self.is_sat(land(f, lnot(g)))
        if res.is_unsat:
            return Entailment("yes")
        if res.is_sat:
            return Entailment("no", res.model)
        return Entailment("unknown")

    def equivalent(self, f: Formula, g: Formula) -> Entailment:
        a = self.entails(f, g)
        if not a.is_yes:
            return a
        return self.entails(g, f)

    def sup_bound(self, f: Formula, t: Term) -> Bound:
        """Supremum of t over models of f, by doubling + binary search."""
        base = self.is_sat(f)
        if base.is_unsat:
            return Bound("unbounded", vacuous=True)
        if base.is_unknown:
            return Bound("unknown")
        cap = self.config.magnitude_cap

        def sat_ge(b: int) -> SatResult:
            return self.is_sat(land(f, geq(t, b)))

        top = sat_ge(cap)
        if top.is_sat:
            return Bound("unbounded")
        if top.is_unknown:
            return Bound("unknown")

        # a known satisfiable level for t
        lo = None
        if base.model is not None and all(v in base.model for v in t.vars()):
            from .logic import term_eval
            lo = term_eval(t, base.model)
        if lo is None:
            g = -1
            while g >= -cap:
                r = sat_ge(g)
                if r.is_unknown:
                    return Bound("unknown")
                if r.is_sat:
                    lo = g
                    break
                g *= 2
            if lo is None:
                return Bound("unknown")  # supremum below -cap

        hi = max(lo + 1, 1)
        while hi < cap:
            r = sat_ge(hi)
            if r.is_unknown:
                return Bound("unknown")
            if r.is_unsat:
                break
            lo, hi = hi, hi * 2
        hi = min(hi, cap)
        # invariant: sat at lo, unsat at hi
        while hi - lo > 1:
            mid = (lo + hi) // 2
            r = sat_ge(mid)
            if r.is_unknown:
                return Bound("unknown")
            if r.is_sat:
                lo = mid
            else:
                hi = mid
        return Bound("finite", lo)

    # -- in-process backend -------------------------------------------------

    def _is_sat_local(self, f: Formula) -> SatResult:
        try:
            model = presburger.get_model(f, self.config.qe_budget, rng=self._rng)
        except presburger.BudgetExceeded:
            return SatResult("unknown", reason="engine budget exceeded")
        except RecursionError:
            return SatResult("unknown", reason="formula too deep")
        if model is None:
            return SatResult("unsat")
        return SatResult("sat", model)

    # -- subprocess backend -------------------------------------------------

    def _spawn(self) -> None:
        self._proc = subprocess.Popen(
            list(self.config.executable), stdin=subprocess.PIPE,
            stdout=subprocess.PIPE, stderr=subprocess.DEVNULL, text=True)
        self._send("(set-logic LIA)")

    def _send(self, line: str) -> None:
        assert self._proc is not None
        self._proc.stdin.write(line + "\n")
        self._proc.stdin.flush()

    def _read_line_with_timeout(self) -> str | None:
        proc = self._proc
        out: list[str] = []

        def reader():
            out.append(proc.stdout.readline())

        th = threading.Thread(target=reader, daemon=True)
        th.start()
        th.join(self.config.timeout_ms / 1000.0)
        if th.is_alive():
            proc.kill()
            self._proc = None
            return None
        return out[0] if out and out[0] else None

    def _is_sat_process(self, f: Formula) -> SatResult:
        fvs = sorted(free_vars(f), key=lambda v: v.sort_key)
        try:
            if self._proc is None or self._proc.poll() is not None:
                self._spawn()
            self._send("(push 1)")
            for v in fvs:
                self._send(f"(declare-fun {_sym(v.name)} () Int)")
            self._send(f"(assert {to_smtlib(f)})")
            self._send("(check-sat)")
            verdict = self._read_line_with_timeout()
            if verdict is None:
                return SatResult("unknown", reason="solver timeout")
            verdict = verdict.strip()
            if verdict == "unsat":
                self._send("(pop 1)")
                return SatResult("unsat")
            if verdict != "sat":
                self._send("(pop 1)")
                return SatResult("unknown", reason=f"solver said {verdict!r}")
            model: dict[Variable, int] = {}
            if fvs:
                names = " ".join(_sym(v.name) for v in fvs)
                self._send(f"(get-value ({names}))")
                line = self._read_line_with_timeout()
                if line is None:
                    return SatResult("unknown", reason="solver timeout")
                tree, _ = read_sexp(list(tokenize_sexp(line)))
                by_name = {v.name: v for v in fvs}
                for entry in tree:
                    name, valnode = entry
                    model[by_name[name]] = _parse_int(valnode)
            self._send("(pop 1)")
            return SatResult("sat", model)
        except (BrokenPipeError, OSError):
            self._proc = None
            return SatResult("unknown", reason="solver process died")


def _parse_int(node) -> int:
    if isinstance(node, str):
        return int(node)
    if isinstance(node, list) and node and node[0] == "-":
        return -_parse_int(node[1])
    raise ValueError(f"bad integer value {node!r}")


def _is_qf(f: Formula) -> bool:
    from .logic import And, Or, Not, Quant
    stack = [f]
    while stack:
        g = stack.pop()
        if isinstance(g, Quant):
            return False
        if isinstance(g, (And, Or)):
            stack.extend(g.args)
        elif isinstance(g, Not):
            stack.append(g.arg)
    return True


def default_server_command() -> tuple[str, ...]:
    """Command line for the bundled SMT-LIB server."""
    return (sys.executable, "-m", "conterm.smtserver")
