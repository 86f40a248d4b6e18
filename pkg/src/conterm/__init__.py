"""Compositional conditional-termination analysis for integer programs.

The analyzer computes, for each program, a *mortal precondition*: a formula
over the initial state whose models are guaranteed to have no infinite run.
It works by solving an ω-regular path-expression over the control flow
graph and interpreting it bottom-up — finite subexpressions as transition
formulas, ω-subexpressions through a configurable mortal precondition
operator.

Typical use::

    from conterm import load, analyze_proc, parse_operator, Solver
    from conterm import DEFAULT_OPERATOR

    program = load(open("loop.ct").read())
    solver = Solver()
    result = analyze_proc(program, program.main,
                          parse_operator(DEFAULT_OPERATOR), solver)
    print(result.precondition.formula)
"""

from .logic import (
    Variable, Term, Formula, TRUE, FALSE, var, primed, tvar, tconst,
    land, lor, lnot, implies, leq, lt, geq, gt, eq, exists, forall,
    free_vars, substitute, evaluate, to_smtlib, parse_smtlib,
)
from .tf import (
    VarContext, TransitionFormula, StateFormula, tf_identity, tf_zero,
    tf_choice, compose, wp, pre_states, post_states, exp, star,
)
from .solver import Solver, SolverConfig, SatResult, Entailment
from .pathexpr import (
    Cfg, RegExpr, OmegaRegExpr, omega_path_expr, finite_path_expr,
    expr_str, omega_str,
)
from .mp import (
    MpOperator, DEFAULT_OPERATOR, parse_operator, as_function,
    mp_llrf, mp_exp, mp_phase, combine_or, combine_ordered,
    direction_predicates, phase_transition_graph,
)
from .interp import (
    LabeledCfg, InterProcProgram, ClosureConfig, AnalysisResult, LoopInfo,
    analyze, analyze_proc, eval_dag, build_icfg, compute_summaries,
    closure_rho, ordering_predicates,
)
from .frontend import parse, lower, load, FrontendError

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
