"""Command-line driver: parse a program, infer a termination precondition,
report a verdict.

Verdicts
    TERMINATING   the precondition is valid — every initial state is mortal
    CONDITIONAL   the precondition is satisfiable but not valid
    UNKNOWN       the precondition is unsatisfiable, or the solver could
                  not classify it within budget

Exit codes: 0 TERMINATING, 2 CONDITIONAL, 3 UNKNOWN, 1 error.

The JSON report (``--format json``) is an object with keys:
    ``input``      the input path as given
    ``verdict``    one of the three verdict strings
    ``precondition``  the final precondition as SMT-LIB 2 text
    ``loops``      list of ``{"expression", "precondition"}`` objects, one
                   per ω-iteration node of the analyzed path expression, in
                   evaluation order
    ``operator``   the operator expression used
    ``dumps``      object with any of ``cfg``, ``domtree``, ``pathexpr``,
                   ``phasegraph`` (present only when requested)
Reports are deterministic: identical inputs and seeds give identical bytes.
"""
from __future__ import annotations

import argparse
import json
import shlex
import sys
from dataclasses import dataclass, field

from . import presburger
from .logic import Formula, TRUE, to_smtlib
from .solver import Solver, SolverConfig
from .frontend import FrontendError, load
from .interp import AnalysisResult, ConfigError, analyze_proc, build_icfg
from .mp import (DEFAULT_OPERATOR, OperatorSyntaxError, direction_predicates,
                 parse_operator, phase_transition_graph)
from .pathexpr import (dominator_tree, dot_cfg, dot_domtree, expr_str,
                       omega_path_expr, omega_str)

__all__ = ["RunConfig", "run", "main"]

VERDICT_EXIT = {"TERMINATING": 0, "CONDITIONAL": 2, "UNKNOWN": 3}


@dataclass
class RunConfig:
    inputs: list[str]
    operator: str = DEFAULT_OPERATOR
    solver: SolverConfig = field(default_factory=SolverConfig)
    dump_cfg: bool = False
    dump_domtree: bool = False
    dump_pathexpr: bool = False
    dump_phase_graph: bool = False
    format: str = "text"  # "text" | "json"


def _verdict(res: AnalysisResult, solver: Solver) -> str:
    pre = res.precondition.formula
    valid = solver.entails(TRUE, pre)
    if valid.is_yes:
        return "TERMINATING"
    sat = solver.is_sat(pre)
    if sat.is_sat:
        # includes the case where validity came back unknown: present the
        # weaker claim rather than an unverified TERMINATING
        return "CONDITIONAL"
    return "UNKNOWN"


def _pretty(f: Formula, cfg: RunConfig) -> str:
    # reported formulas read better quantifier-free, when affordable
    try:
        f = presburger.simplify_formula(
            presburger.qe(f, cfg.solver.qe_budget))
    except (presburger.BudgetExceeded, RecursionError):
        pass
    return to_smtlib(f)


def _analyze_one(path: str, cfg: RunConfig) -> tuple[dict, int]:
    text = sys.stdin.read() if path == "-" else open(path).read()
    program = load(text)
    op = parse_operator(cfg.operator)
    solver = Solver(cfg.solver)
    res = analyze_proc(program, program.main, op, solver)
    verdict = _verdict(res, solver)
    report = {
        "input": path,
        "verdict": verdict,
        "precondition": _pretty(res.precondition.formula, cfg),
        "loops": [{"expression": expr_str(li.body_expr),
                   "precondition": _pretty(li.precondition.formula, cfg)}
                  for li in res.loops],
        "operator": cfg.operator,
    }
    dumps = {}
    if cfg.dump_cfg or cfg.dump_domtree or cfg.dump_pathexpr:
        icfg, interproc = build_icfg(program)
        if cfg.dump_cfg:
            dumps["cfg"] = dot_cfg(icfg)
        if cfg.dump_domtree:
            dumps["domtree"] = dot_domtree(dominator_tree(icfg))
        if cfg.dump_pathexpr:
            dumps["pathexpr"] = omega_str(omega_path_expr(icfg))
    if cfg.dump_phase_graph:
        dumps["phasegraph"] = "\n".join(
            _dot_phase(li, solver) for li in res.loops)
    if dumps:
        report["dumps"] = dumps
    return report, VERDICT_EXIT[verdict]


def _dot_phase(li, solver: Solver) -> str:
    pg = phase_transition_graph(li.body, list(direction_predicates(li.body.ctx)),
                                solver)
    lines = ["digraph phase {"]
    for i, cell in enumerate(pg.cells):
        lines.append(f'  "{i}" [label="{to_smtlib(cell.formula)}"];')
    lines.append('  "s" [shape=point];')
    for (u, v) in pg.cfg.edges:
        lines.append(f'  "{u}" -> "{v}";')
    lines.append("}")
    return "\n".join(lines)


def _print_text(report: dict, out) -> None:
    print(f"{report['input']}: {report['verdict']}", file=out)
    print(f"  precondition: {report['precondition']}", file=out)
    for k, li in enumerate(report["loops"]):
        print(f"  loop {k}: ({li['expression']})^w", file=out)
        print(f"    precondition: {li['precondition']}", file=out)
    for name, text in report.get("dumps", {}).items():
        print(f"  -- {name} --", file=out)
        print(text, file=out)


def run(cfg: RunConfig, out=None, err=None) -> int:
    """Analyze every input; return the worst exit status."""
    out = sys.stdout if out is None else out
    err = sys.stderr if err is None else err
    status = 0
    reports = []
    for path in cfg.inputs:
        try:
            report, code = _analyze_one(path, cfg)
        except (FrontendError, ConfigError, OperatorSyntaxError,
                OSError) as exc:
            print(f"error: {path}: {exc}", file=err)
            return 1
        reports.append(report)
        status = max(status, code)
    if cfg.format == "json":
        doc = reports[0] if len(reports) == 1 else reports
        json.dump(doc, out, indent=2)
        out.write("\n")
    else:
        for report in reports:
            _print_text(report, out)
    return status


def _parse_args(argv) -> RunConfig:
    ap = argparse.ArgumentParser(
        prog="conterm",
        description="Conditional termination analysis for integer programs.")
    ap.add_argument("inputs", nargs="+", metavar="FILE",
                    help="program file (mini-language or raw graph); "
                         "'-' reads stdin")
    ap.add_argument("--operator", default=DEFAULT_OPERATOR,
                    help="mortal precondition operator expression "
                         "(default: %(default)s)")
    ap.add_argument("--solver", default="local",
                    help="'local' for the in-process engine, or a command "
                         "line for an SMT-LIB 2 subprocess")
    ap.add_argument("--timeout-ms", type=int, default=10_000,
                    help="per-query solver timeout (default: %(default)s)")
    ap.add_argument("--budget-ms", type=int, default=600_000,
                    help="whole-run solver budget (default: %(default)s)")
    ap.add_argument("--seed", type=int, default=0,
                    help="solver randomization seed (default: %(default)s)")
    ap.add_argument("--format", choices=("text", "json"), default="text")
    ap.add_argument("--dump-cfg", action="store_true",
                    help="emit the (interprocedural) CFG as DOT")
    ap.add_argument("--dump-domtree", action="store_true",
                    help="emit the dominator tree as DOT")
    ap.add_argument("--dump-pathexpr", action="store_true",
                    help="emit the computed omega-path expression")
    ap.add_argument("--dump-phase-graph", action="store_true",
                    help="emit each loop's phase transition graph as DOT")
    ns = ap.parse_args(argv)
    executable = None if ns.solver == "local" else tuple(
        shlex.split(ns.solver))
    solver = SolverConfig(executable=executable, timeout_ms=ns.timeout_ms,
                          budget_ms=ns.budget_ms, seed=ns.seed)
    return RunConfig(inputs=ns.inputs, operator=ns.operator, solver=solver,
                     dump_cfg=ns.dump_cfg, dump_domtree=ns.dump_domtree,
                     dump_pathexpr=ns.dump_pathexpr,
                     dump_phase_graph=ns.dump_phase_graph, format=ns.format)


def main(argv=None) -> int:
    try:
        cfg = _parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 1
    try:
        return run(cfg)
    except OperatorSyntaxError as exc:
        print(f"error: bad --operator: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
